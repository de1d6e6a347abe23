//! Constant pipeline: constant-table entries, the lemma constants `c₁..c₅`, the
//! frequency windows, the envelope on `|φ − e^{−ω²/2}|` and the `Δ` estimate.

pub mod sums;
pub mod theorem;

pub use sums::{c_alpha, hurwitz_zeta, s_series};
pub use theorem::{product_bound, theorem_bound, BoundReport, Precondition, TheoremVariant};

use crate::error::{invalid, Error, Result};
use crate::states::{DecayModel, PrefactorConvention};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Inputs shared by every bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub d: u32,
    pub c_d: f64,
    pub r: usize,
    pub e: f64,
    pub c0: f64,
    pub sigma_h: f64,
    pub decay: DecayModel,
    pub convention: PrefactorConvention,
    /// Terms pairwise commute (sets `B₆ = 0`).
    pub commuting: bool,
    pub product_state: bool,
}

impl ModelParams {
    /// Largest admissible `c₀ = σ_H²/(E²N)`.
    pub fn measured_c0(sigma_h: f64, e: f64, n: usize) -> f64 {
        sigma_h * sigma_h / (e * e * n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.c_d > 0.0) || !(self.e > 0.0) || !(self.c0 > 0.0) || !(self.sigma_h > 0.0) {
            return invalid("N, c_D, E, c₀ and σ_H must be positive");
        }
        Ok(())
    }

    /// `σ_H² ≥ c₀E²N`, up to rounding.
    pub fn variance_ok(&self) -> bool {
        self.sigma_h * self.sigma_h >= self.c0 * self.e * self.e * self.n as f64 * (1.0 - 1e-12)
    }

    /// `R` with `R = 0` read as `1`; every constant below scales with powers of `R`.
    pub fn r_eff(&self) -> f64 {
        self.r.max(1) as f64
    }

    fn ball(&self) -> f64 {
        self.c_d * (2.0 * self.r_eff()).powi(self.d as i32)
    }
}

/// `Γ = max{4c_D(2R)^D, 2c_D²(2R)^D}`.
pub fn gamma_constant(c_d: f64, r: f64, d: u32) -> f64 {
    let cube = (2.0 * r).powi(d as i32);
    (4.0 * c_d * cube).max(2.0 * c_d * c_d * cube)
}

/// constant-table entries and the frequency windows at fixed `(ℓ, M, K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantTable {
    pub gamma: f64,
    pub s_dm1: f64,
    pub s_2dm1: f64,
    pub s_3dm1: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub b6: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub ell: u64,
    pub m: u64,
    pub k: u64,
}

impl ConstantTable {
    /// `min{Ω₁, Ω₂, Ω₃}`.
    pub fn omega_max(&self) -> f64 {
        self.omega1.min(self.omega2).min(self.omega3)
    }
}

/// The `(ℓ, M, K)`-independent part of the constant table: `Γ, s_·, B₁..B₆`.
fn b_constants(p: &ModelParams) -> Result<[f64; 10]> {
    let d = p.d.max(1);
    let ball = p.ball();
    let gamma = gamma_constant(p.c_d, p.r_eff(), d);
    let (s1, s2, s3) = (s_series(d - 1), s_series(2 * (d - 1)), s_series(3 * (d - 1)));
    let b1 = (ball + 2f64.sqrt() * gamma).powi(2);
    let b2 = 2.0 * (ball + gamma);
    let b3 = 2.0 * (ball + 2f64.powf((d as f64 - 1.0) / 2.0) * gamma);
    let b4 = b1 + b3 * b3 * (1.0 + 2.0 * s2);
    let b5 = 12.0 * b2 * b2 * p.r_eff().powf(d as f64 / 2.0) * (1.0 + c_alpha(&p.decay, p.c_d, d, 1)?).sqrt() * s3;
    let b6 = if p.commuting { 0.0 } else { gamma * gamma * s1 };
    Ok([gamma, s1, s2, s3, b1, b2, b3, b4, b5, b6])
}

/// Every constant-table entry at `(ℓ, M, K)`; `Ω₃` takes the smaller value stated with the envelope.
pub fn table_constants(p: &ModelParams, ell: u64, m: u64, k: u64) -> Result<ConstantTable> {
    p.validate()?;
    let [gamma, s_dm1, s_2dm1, s_3dm1, b1, b2, b3, b4, b5, b6] = b_constants(p)?;
    let d = p.d.max(1) as f64;
    let (l, kk) = (ell as f64, k as f64);
    let omega1 = p.sigma_h / (2.0 * p.e * gamma * l.powf(d / 2.0) * kk.powf((d - 1.0) / 2.0));
    let omega2 = p.sigma_h / (2.0 * b2 * p.e * l.powf(d) * kk.powf(d - 1.0));
    let omega3 = p.c0 * p.sigma_h / (4.0 * b4 * p.e * l.powf(2.0 * d));
    Ok(ConstantTable { gamma, s_dm1, s_2dm1, s_3dm1, b1, b2, b3, b4, b5, b6, omega1, omega2, omega3, ell, m, k })
}

/// `c₁..c₅`; `c3_tilde = c₃/(4Rℓ)` under the convention without the support prefactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c3_tilde: Option<f64>,
    pub c4: f64,
    pub c5: f64,
}

impl LemmaConstants {
    /// The `c₃` that enters the envelope and the `Δ` estimate.
    pub fn c3_effective(&self) -> f64 {
        self.c3_tilde.unwrap_or(self.c3)
    }

    pub fn zero() -> Self {
        Self { c1: 0.0, c2: 0.0, c3: 0.0, c3_tilde: None, c4: 0.0, c5: 0.0 }
    }
}

/// Constraint failures of `(ℓ, M, K)` against `ℓ > 1, K > 1, ℓ − M ≥ 1, 2RℓK ≤ N`.
pub fn parameter_violations(p: &ModelParams, ell: u64, m: u64, k: u64) -> Vec<String> {
    let mut out = Vec::new();
    if ell <= 1 {
        out.push(format!("ℓ > 1 fails (ℓ = {ell})"));
    }
    if k <= 1 {
        out.push(format!("K > 1 fails (K = {k})"));
    }
    if ell < m + 1 {
        out.push(format!("ℓ − M ≥ 1 fails (ℓ = {ell}, M = {m})"));
    }
    let span = 2.0 * p.r_eff() * ell as f64 * k as f64;
    if span > p.n as f64 {
        out.push(format!("2RℓK ≤ N fails (2RℓK = {span}, N = {})", p.n));
    }
    out
}

pub fn lemma_c_constants(p: &ModelParams, table: &ConstantTable) -> Result<LemmaConstants> {
    let (ell, m, k) = (table.ell, table.m, table.k);
    let failed: Vec<String> = parameter_violations(p, ell, m, k).into_iter().filter(|v| v.starts_with("ℓ − M") || v.starts_with("2Rℓ")).collect();
    if !failed.is_empty() {
        return Err(Error::WindowViolation(failed));
    }
    let d = p.d.max(1);
    let df = d as f64;
    let r = p.r_eff();
    let (l, kk, mm, n) = (ell as f64, k as f64, m as f64, p.n as f64);
    let two_r = 2 * r as u64;
    let c1 = ((2.0 * r).powi(d as i32) / p.c0) * c_alpha(&p.decay, p.c_d, d, (two_r * (ell - 1)).max(1))?;
    let c2 = table.b4 / p.c0.powf(1.5) * l.powf(2.0 * df) / n.sqrt();
    let c3 = 8.0 * r / p.c0.sqrt() * n.sqrt() * l * p.decay.alpha((two_r * (ell - m - 1)) as f64);
    let c3_tilde = (p.convention == PrefactorConvention::Without).then(|| c3 / (4.0 * r * l));
    let c4 = table.b2 / p.c0 * l.powf(df) * kk.powf(df - 1.0) / 2f64.powf(kk - 1.0);
    let c5 = (table.b5 * l.powf(2.5 * df) / n + table.b6 / (2f64.powf(mm) * l.powf(df / 2.0 * (mm - 3.0)) * n.sqrt())) / p.c0.powf(1.5);
    Ok(LemmaConstants { c1, c2, c3, c3_tilde, c4, c5 })
}

/// `e^{−ω²/6}ω²(c₁/2 + c₂ω/3) + 4(c₄ + c₅ω)(1 − e^{−ω²/4}) + c₃ min{8/ω, ω}` with the effective `c₃`.
pub fn envelope_formula(omega: f64, c: &LemmaConstants) -> f64 {
    let w2 = omega * omega;
    let tail = if omega > 0.0 { (8.0 / omega).min(omega) } else { 0.0 };
    (-w2 / 6.0).exp() * w2 * (c.c1 / 2.0 + c.c2 * omega / 3.0) - 4.0 * (c.c4 + c.c5 * omega) * (-w2 / 4.0).exp_m1() + c.c3_effective() * tail
}

/// The envelope on `|φ(ω) − e^{−ω²/2}|`, inside `ω ∈ [0, min Ω]` and for `c₁ < 1/2`.
pub fn phi_envelope(omega: f64, c: &LemmaConstants, table: &ConstantTable) -> Result<f64> {
    if c.c1 >= 0.5 {
        return Err(Error::EnvelopeInapplicable { c1: c.c1 });
    }
    if !(omega >= 0.0) || omega > table.omega_max() {
        return Err(Error::WindowViolation(vec![format!("ω = {omega} outside [0, {}]", table.omega_max())]));
    }
    Ok(envelope_formula(omega, c))
}

/// `C/Ω + 6c₁/(2π) + √6c₂/√π + (8/π)(c₃ + c₄)(1 + log Ω) + 8c₅Ω/π`.
pub fn delta_formula(c: &LemmaConstants, omega: f64, esseen_c: f64) -> f64 {
    esseen_c / omega
        + 6.0 * c.c1 / (2.0 * PI)
        + 6f64.sqrt() * c.c2 / PI.sqrt()
        + 8.0 / PI * (c.c3_effective() + c.c4) * (1.0 + omega.ln())
        + 8.0 * c.c5 * omega / PI
}

/// [`delta_formula`] for `Ω ∈ (0, min Ω]`.
pub fn delta_estimate(c: &LemmaConstants, table: &ConstantTable, omega: f64, esseen_c: f64) -> Result<f64> {
    if !(omega > 0.0) || omega > table.omega_max() {
        return Err(Error::WindowViolation(vec![format!("Ω = {omega} outside (0, {}]", table.omega_max())]));
    }
    Ok(delta_formula(c, omega, esseen_c))
}

/// Base `Γℓ^{D/2}m^{(D−1)/2}E/σ_H` of the bound `‖R^∞ − R^M‖ ≤ 2(base·ω)^{M+1}`.
pub fn truncation_rate(p: &ModelParams, gamma: f64, ell: u64, m: u64) -> f64 {
    let d = p.d.max(1) as f64;
    gamma * (ell as f64).powf(d / 2.0) * (m as f64).powf((d - 1.0) / 2.0) * p.e / p.sigma_h
}
