//! Closed-form bounds on `Δ` for exponential and algebraic decay of
//! correlations, and for product states.

use super::{b_constants, delta_estimate, lemma_c_constants, parameter_violations, table_constants, ConstantTable, LemmaConstants, ModelParams};
use crate::error::{invalid, Result};
use crate::states::{DecayModel, PrefactorConvention};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremVariant {
    /// `α(ℓ) = L₀e^{−ℓ/ξ}`, rate `(log N)^{2D}/√N`.
    Exponential,
    /// `α(ℓ) = L₀ℓ^{−(D+β)}` with the support prefactor, `β > D + 1`.
    Algebraic,
    /// `α(ℓ) = L₀ℓ^{−(D+β)}` without the support prefactor, `β > D`.
    AlgebraicStrong,
    /// Product states.
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    pub holds: bool,
}

fn pre(name: impl Into<String>, holds: bool) -> Precondition {
    Precondition { name: name.into(), holds }
}

/// A bound together with the parameters it was evaluated at and every precondition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub variant: TheoremVariant,
    pub n: usize,
    pub ell: Option<u64>,
    pub m: Option<u64>,
    pub k: Option<u64>,
    pub epsilon: Option<f64>,
    /// `Ω` of the recipe.
    pub omega: f64,
    pub esseen_c: f64,
    pub table: Option<ConstantTable>,
    pub constants: Option<LemmaConstants>,
    /// The closed-form value of the bound on `Δ`.
    pub delta_bound: f64,
    /// The `N`-dependence the bound is stated with; `prefactor = delta_bound / rate`.
    pub rate: f64,
    pub prefactor: f64,
    /// The `Δ` estimate from the lemma constants at the integer `(ℓ, M, K)` and the recipe `Ω`, when `Ω` is inside the window.
    pub lemma_estimate: Option<f64>,
    /// Variant-specific named quantities (`B₇`, `δ`, `ω*`, ...).
    pub quantities: BTreeMap<String, f64>,
    pub preconditions: Vec<Precondition>,
    pub applicable: bool,
}

fn lemma_preconditions(p: &ModelParams, ell: u64, m: u64, k: u64) -> Vec<Precondition> {
    let v = parameter_violations(p, ell, m, k);
    ["ℓ > 1", "K > 1", "ℓ − M ≥ 1", "2RℓK ≤ N"].iter().map(|name| pre(*name, !v.iter().any(|s| s.starts_with(name)))).collect()
}

/// Shared tail of every report: table, lemma constants, window and sign checks.
#[allow(clippy::too_many_arguments)]
fn finish(
    p: &ModelParams,
    variant: TheoremVariant,
    (ell, m, k): (u64, u64, u64),
    epsilon: Option<f64>,
    omega: f64,
    esseen_c: f64,
    delta_bound: f64,
    rate: f64,
    quantities: BTreeMap<String, f64>,
    mut preconditions: Vec<Precondition>,
) -> Result<BoundReport> {
    preconditions.extend(lemma_preconditions(p, ell, m, k));
    let table = table_constants(p, ell, m, k)?;
    let constants = lemma_c_constants(p, &table).ok();
    preconditions.push(pre("c₁ < 1/2", constants.as_ref().is_some_and(|c| c.c1 < 0.5)));
    preconditions.push(pre("Ω ≤ min{Ω₁, Ω₂, Ω₃}", omega > 0.0 && omega <= table.omega_max()));
    preconditions.push(pre("σ_H² ≥ c₀E²N", p.variance_ok()));
    preconditions.push(pre("Δ bound ≥ 0", delta_bound >= 0.0));
    let lemma_estimate = constants.as_ref().and_then(|c| delta_estimate(c, &table, omega, esseen_c).ok());
    let applicable = preconditions.iter().all(|c| c.holds);
    Ok(BoundReport {
        variant,
        n: p.n,
        ell: Some(ell),
        m: Some(m),
        k: Some(k),
        epsilon,
        omega,
        esseen_c,
        table: Some(table),
        constants,
        delta_bound,
        rate,
        prefactor: delta_bound / rate,
        lemma_estimate,
        quantities,
        preconditions,
        applicable,
    })
}

/// `(ℓ, M, K)` from a real shell width: `ℓ = ⌈x⌉ + 1`, `M = max(1, ⌊(ℓ − 1)/2⌋)`, `K = ⌊log₂ N⌋`.
pub fn round_recipe(width: f64, n: usize) -> (u64, u64, u64) {
    let ell = width.ceil().max(0.0) as u64 + 1;
    let m = ((ell - 1) / 2).max(1);
    let k = (n as f64).log2().floor() as u64;
    (ell, m, k)
}

/// Closed-form bound for exponential decay.
pub struct ExponentialInputs {
    pub n: f64,
    pub d: f64,
    pub c_d: f64,
    pub r: f64,
    pub c0: f64,
    pub l0: f64,
    pub xi: f64,
    pub b2: f64,
    pub b4: f64,
    pub b5: f64,
    pub b6: f64,
    pub b7: f64,
    pub esseen_c: f64,
}

pub fn exponential_closed_form(x: &ExponentialInputs) -> f64 {
    let ExponentialInputs { n, d, c_d, r, c0, l0, xi, b2, b4, b5, b6, b7, esseen_c } = *x;
    let l = n.ln();
    let t1 = esseen_c / b7;
    let t2 = 6.0 * c_d * l0 * xi.powf(d) / ((2.0 * PI * c0 * r.powf(d - 1.0)) * l.powf(d + 1.0) * n.powf(1.5));
    let t3 = 6f64.sqrt() * b4 * (2.0 * xi).powf(2.0 * d) / (PI.sqrt() * c0.powf(1.5) * r.powf(2.0 * d));
    let t4 = 8.0 / PI
        * (16.0 * xi * l0 / (c0.sqrt() * l.powf(2.0 * d - 2.0)) + 2.0 * b2 * (2.0 * xi).powf(d) / (c0 * r.powf(d) * LN_2.powf(d - 1.0) * n.sqrt()))
        * ((1.0 + b7.ln()) / l + (0.5 - 2.0 * d * l.ln() / l));
    let t5 = 8.0 * b7 * b5 * (2.0 * xi).powf(2.5 * d) / (PI * c0.powf(1.5) * r.powf(2.5 * d) * l.powf(1.5 * d));
    let t6_log = (8.0 * b7 * b6 / (PI * c0.powf(1.5))).ln() - (xi * LN_2 / (2.0 * r) - 0.5) * l - (d / 2.0) * (xi / (2.0 * r) * l + 5.0) * l.ln();
    let t6 = if b6 > 0.0 { t6_log.exp() } else { 0.0 };
    l.powf(2.0 * d) / n.sqrt() * (t1 + t2 + t3 + t4 + t5 + t6)
}

/// Closed-form bound for algebraic decay; `strong` selects the variant without the support prefactor.
pub struct AlgebraicInputs {
    pub n: f64,
    pub d: f64,
    pub c_d: f64,
    pub r: f64,
    pub c0: f64,
    pub l0: f64,
    pub beta: f64,
    pub delta: f64,
    pub b2: f64,
    pub b4: f64,
    pub b5: f64,
    pub b6: f64,
    pub b7: f64,
    pub esseen_c: f64,
    pub strong: bool,
}

pub fn algebraic_closed_form(x: &AlgebraicInputs) -> f64 {
    let AlgebraicInputs { n, d, c_d, r, c0, l0, beta, delta, b2, b4, b5, b6, b7, esseen_c, strong } = *x;
    let ln_n = n.ln();
    let t1 = esseen_c / b7;
    let t2 = n.powf(-((beta + 2.0 * d) * delta - 0.5)) * 6.0 * c_d * l0 * (2.0 * r).powf(d - 1.0) / (2.0 * beta * PI * c0 * (2.0 * r).powf(beta));
    let t3 = 6f64.sqrt() * b4 * 2f64.powf(2.0 * d) / (PI.sqrt() * c0.powf(1.5));
    let g = 8.0 * (1.0 + b7.ln()) / PI + 8.0 / PI * (0.5 - 2.0 * delta * d) * ln_n;
    let t4 = if strong {
        n.powf(-((beta + 3.0 * d) * delta - 1.0)) * g * 4.0 * l0 / (c0.sqrt() * r.powf(beta + d))
    } else {
        n.powf(-((beta + 3.0 * d - 1.0) * delta - 1.0)) * g * 16.0 * r * l0 / (c0.sqrt() * r.powf(beta + d))
    };
    let t5 = n.log2().powf(d - 1.0) / n.powf(0.5 + delta * d) * g * 2.0 * b2 * 2f64.powf(d) / c0;
    let t6 = n.powf(-1.5 * d * delta) * 8.0 * b5 * b7 * 2f64.powf(2.5 * d) / (PI * c0.powf(1.5));
    let nd = n.powf(delta);
    let t7 = if b6 > 0.0 {
        ((8.0 * b6 * b7 / c0.powf(1.5)).ln() - nd / 2.0 * LN_2 - (0.5 + delta * d * (4.0 + 0.5 * (nd / 2.0 - 3.0))) * ln_n).exp()
    } else {
        0.0
    };
    (t1 + t2 + t3 + t4 + t5 + t6 + t7) / n.powf(0.5 - 2.0 * delta * d)
}

/// The theorem bound for the decay model in `p`, with `ε` selecting `δ` for the algebraic variants.
pub fn theorem_bound(p: &ModelParams, variant: TheoremVariant, epsilon: f64, esseen_c: f64) -> Result<BoundReport> {
    p.validate()?;
    if !(esseen_c > 0.0) {
        return invalid("the smoothing constant C must be positive");
    }
    let [gamma, _, _, _, _, b2, _, b4, b5, b6] = b_constants(p)?;
    let d = p.d.max(1) as f64;
    let r = p.r_eff();
    let c0 = p.c0;
    let nf = p.n as f64;
    let ln_n = nf.ln();
    let mut quantities = BTreeMap::new();
    match (variant, p.decay) {
        (TheoremVariant::Exponential, DecayModel::Exponential { l0, xi }) => {
            let b7 = (c0.sqrt() * LN_2.powf((d - 1.0) / 2.0) * r.powf(d / 2.0) / (2.0 * gamma * (2.0 * xi).powf(d / 2.0)))
                .min(c0.sqrt() * LN_2.powf(d - 1.0) * r.powf(d) / (2.0 * b2 * (2.0 * xi).powf(d)))
                .min(c0.powf(1.5) * r.powf(2.0 * d) / (4.0 * b4 * (2.0 * xi).powf(2.0 * d)));
            let params = round_recipe(xi / r * ln_n, p.n);
            let omega = b7 * nf.sqrt() / ln_n.powf(2.0 * d);
            let delta_bound = exponential_closed_form(&ExponentialInputs { n: nf, d, c_d: p.c_d, r, c0, l0, xi, b2, b4, b5, b6, b7, esseen_c });
            quantities.insert("B7".into(), b7);
            let preconditions = vec![
                pre("N > e²", nf > std::f64::consts::E.powi(2)),
                pre("N > 4ξ(log N)²/log 2", nf > 4.0 * xi * ln_n * ln_n / LN_2),
                pre("N > ⌊e^{2R/ξ}⌋", nf > (2.0 * r / xi).exp().floor()),
            ];
            let rate = ln_n.powf(2.0 * d) / nf.sqrt();
            finish(p, variant, params, None, omega, esseen_c, delta_bound, rate, quantities, preconditions)
        }
        (TheoremVariant::Algebraic | TheoremVariant::AlgebraicStrong, DecayModel::Algebraic { l0, beta, .. }) => {
            let strong = variant == TheoremVariant::AlgebraicStrong;
            let shift = if strong { 0.0 } else { 1.0 };
            let base = beta + 3.0 * d - shift;
            let eps_max = (beta - d - shift) / (2.0 * base);
            if !(epsilon >= 0.0 && epsilon < eps_max) {
                return invalid(format!("ε = {epsilon} outside [0, {eps_max})"));
            }
            let delta = 1.0 / base + epsilon / (2.0 * d);
            let b7 = (c0.sqrt() * LN_2.powf((d - 1.0) / 2.0) / (2.0 * gamma)).min(c0.sqrt() * LN_2.powf(d - 1.0) / (2.0 * b2)).min(c0.powf(1.5) / (4.0 * b4));
            let params = round_recipe(nf.powf(delta), p.n);
            let omega = b7 * nf.powf(0.5 - 2.0 * delta * d);
            let delta_bound = algebraic_closed_form(&AlgebraicInputs { n: nf, d, c_d: p.c_d, r, c0, l0, beta, delta, b2, b4, b5, b6, b7, esseen_c, strong });
            let stated_exponent = 0.5 * (beta - d) / base;
            let rate = if epsilon > 0.0 { nf.powf(-(stated_exponent - epsilon)) } else { ln_n * nf.powf(-stated_exponent) };
            quantities.insert("B7_tilde".into(), b7);
            quantities.insert("delta".into(), delta);
            quantities.insert("stated_rate_exponent".into(), stated_exponent - epsilon);
            quantities.insert("proof_prefactor_exponent".into(), 0.5 - 2.0 * delta * d);
            let mut preconditions = vec![
                pre(format!("N > ⌊2^{{{base}}}⌋"), nf > 2f64.powf(base).floor()),
                pre("N > 4RN^δ log N/log 2", nf > 4.0 * r * nf.powf(delta) * ln_n / LN_2),
                pre("N > ⌊2^{1/δ}⌋", nf > 2f64.powf(1.0 / delta).floor()),
            ];
            if strong {
                preconditions.push(pre("decay without support prefactor", p.convention == PrefactorConvention::Without));
            }
            finish(p, variant, params, Some(epsilon), omega, esseen_c, delta_bound, rate, quantities, preconditions)
        }
        (TheoremVariant::Product, _) => product_bound(p, esseen_c),
        _ => invalid(format!("{variant:?} bound needs the matching decay model, got {:?}", p.decay)),
    }
}

/// Product-state bound `(C + 4B̃₁)/(C′√N)`.
pub fn product_bound(p: &ModelParams, esseen_c: f64) -> Result<BoundReport> {
    p.validate()?;
    let d = p.d.max(1) as i32;
    let r2d = p.r_eff().powi(2 * d);
    let omega_star = 1.0 / (2.0 * std::f64::consts::E.powi(2) * r2d * (r2d + 1.0) * p.e);
    let b1_tilde = (p.c0.sqrt() * omega_star * p.e).powi(-3);
    let sqrt_n = (p.n as f64).sqrt();
    let c_prime = (omega_star * p.sigma_h / (2.0 * sqrt_n)).min(1.0 / (4.0 * b1_tilde));
    let delta_bound = (esseen_c + 4.0 * b1_tilde) / (c_prime * sqrt_n);
    let mut quantities = BTreeMap::new();
    quantities.insert("omega_star".into(), omega_star);
    quantities.insert("B1_tilde".into(), b1_tilde);
    quantities.insert("C_prime".into(), c_prime);
    let preconditions = vec![pre("product state", p.product_state), pre("σ_H² ≥ c₀E²N", p.variance_ok())];
    let applicable = preconditions.iter().all(|c| c.holds);
    Ok(BoundReport {
        variant: TheoremVariant::Product,
        n: p.n,
        ell: None,
        m: None,
        k: None,
        epsilon: None,
        omega: c_prime * sqrt_n,
        esseen_c,
        table: None,
        constants: None,
        delta_bound,
        rate: 1.0 / sqrt_n,
        prefactor: delta_bound * sqrt_n,
        lemma_estimate: None,
        quantities,
        preconditions,
        applicable,
    })
}
