//! Acceptance criteria, one test per criterion. Each test prints a single
//! `[PASS]` or `[FAIL]` line (visible with `--nocapture`) and asserts it.
//! Reference values come from oracles written here, independent of the crate.

use be_lab::bounds::{lemma_c_constants, table_constants, theorem_bound, ModelParams, TheoremVariant};
use be_lab::decomposition::{verify_ode_residual, LemmaContext, LemmaParams};
use be_lab::esseen::{DEFAULT_ESSEEN_C, DEFAULT_QUADRATURE_TOL};
use be_lab::harness::{
    cluster_suite, evaluate_instance, fit_power_law, run_sweep, suite_domination, suite_esseen, ClusterSuiteConfig, EsseenSweep, ModelFamily, PathChoice,
    StateFamily, SweepConfig,
};
use be_lab::spectral::{
    characteristic_eigen_sum, characteristic_evolution, cumulant_window_check, fast_commuting_measure, kolmogorov_distance, spectral_measure, standardized_dense,
    SpectralMeasure,
};
use be_lab::states::{DecayModel, PrefactorConvention};
use std::f64::consts::{LN_2, PI};
use std::time::Instant;

fn verdict(id: u32, title: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn config(model: ModelFamily, state: StateFamily, n_list: Vec<usize>, path: PathChoice) -> SweepConfig {
    let mut c = SweepConfig::new(model, state, n_list);
    c.path = path;
    c.esseen = EsseenSweep::disabled();
    c
}

fn gaussian_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y / std::f64::consts::SQRT_2)
}

/// Kolmogorov distance of a sum of `m` fair ±1 variables, standardized, to the
/// standard normal. The pmf is built outward from the mode and normalized.
fn binomial_delta(m: usize) -> f64 {
    let mut p = vec![0.0f64; m + 1];
    let mode = m / 2;
    p[mode] = 1.0;
    for k in mode..m {
        p[k + 1] = p[k] * (m - k) as f64 / (k + 1) as f64;
    }
    for k in (1..=mode).rev() {
        p[k - 1] = p[k] * k as f64 / (m - k + 1) as f64;
    }
    let total: f64 = p.iter().sum();
    let sd = (m as f64).sqrt();
    let mut below = 0.0;
    let mut delta = 0.0f64;
    for (k, w) in p.iter().enumerate() {
        let x = (2.0 * k as f64 - m as f64) / sd;
        let g = gaussian_cdf(x);
        let above = below + w / total;
        delta = delta.max((below - g).abs()).max((above - g).abs());
        below = above;
    }
    delta
}

#[test]
fn criterion_01_zz_chain_scaling_fast_path() {
    let ns: Vec<usize> = (8..=16).step_by(2).map(|k| 1usize << k).collect();
    let cfg = config(ModelFamily::ZzChain { coupling: 1.0, periodic: false }, StateFamily::MaximallyMixed, ns.clone(), PathChoice::FastCommuting);
    let t = Instant::now();
    let result = run_sweep(&cfg).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let fit = result.fit.clone().expect("fit over five sizes");
    let last = result.rows.last().unwrap();
    let scaled = last.delta.unwrap() * (last.n as f64).sqrt();
    let oracle_gap = result.rows.iter().map(|r| (r.delta.unwrap() - binomial_delta(r.n - 1)).abs()).fold(0.0, f64::max);
    let pass = (fit.slope + 0.5).abs() <= 0.05 && (scaled - 0.40).abs() <= 0.05 && elapsed < 60.0 && oracle_gap <= 1e-10;
    verdict(1, "ZZ chain, I/2^N, N = 2^8..2^16", pass, format!("slope = {:.4}, Δ√N(2^16) = {scaled:.4}, max |Δ − binomial oracle| = {oracle_gap:.1e}, {elapsed:.1} s", fit.slope));
}

#[test]
fn criterion_02_tfim_critical_exact_path() {
    let cfg = config(ModelFamily::Tfim { g: 1.0, periodic: false }, StateFamily::MaximallyMixed, (4..=12).collect(), PathChoice::Exact);
    let t = Instant::now();
    let result = run_sweep(&cfg).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let deltas: Vec<(usize, f64)> = result.rows.iter().map(|r| (r.n, r.delta.expect("row evaluated"))).collect();
    let decreasing = deltas.windows(2).all(|w| w[1].1 < w[0].1);
    let scaled: Vec<f64> = deltas.iter().map(|(n, d)| d * (*n as f64).sqrt()).collect();
    let ratio = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
    let first_rise = deltas.windows(2).find(|w| w[1].1 >= w[0].1).map(|w| format!(", Δ({}) = {:.5} ≤ Δ({}) = {:.5}", w[0].0, w[0].1, w[1].0, w[1].1)).unwrap_or_default();
    let pass = decreasing && ratio <= 2.0 && elapsed < 300.0;
    verdict(2, "TFIM g = 1, I/2^N, N = 4..12", pass, format!("strictly decreasing = {decreasing}{first_rise}, max/min Δ√N = {ratio:.3}, {elapsed:.1} s"));
}

#[test]
fn criterion_03_single_qubit_closed_form() {
    let cfg = config(ModelFamily::Field { h: 1.0 }, StateFamily::MaximallyMixed, vec![1], PathChoice::Exact);
    let ev = evaluate_instance(&cfg, 1).unwrap();
    let delta = kolmogorov_distance(&ev.standardized.measure);
    let expected = 0.8413447460685429 - 0.5;
    let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
    let curve = characteristic_eigen_sum(&ev.standardized.measure, &grid).unwrap();
    let phi_gap = grid.iter().zip(&curve.values).map(|(w, v)| (v.re - w.cos()).abs().max(v.im.abs())).fold(0.0, f64::max);
    let pass = (delta - expected).abs() <= 1e-9 && phi_gap <= 1e-12;
    verdict(3, "ρ = I/2, H = Z", pass, format!("Δ = {delta:.16}, |Δ − (Φ(1) − ½)| = {:.1e}, max |φ − cos ω| = {phi_gap:.1e}", (delta - expected).abs()));
}

#[test]
fn criterion_04_ode_residual() {
    let grid: Vec<f64> = (0..20).map(|i| 2.0 * i as f64 / 19.0).collect();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, model) in [("ZZ", ModelFamily::ZzChain { coupling: 1.0, periodic: false }), ("TFIM", ModelFamily::Tfim { g: 1.0, periodic: false })] {
        let h = model.build(6, 0).unwrap();
        let rho = StateFamily::MaximallyMixed.build(&h).unwrap();
        let ctx = LemmaContext::new(&h, &rho).unwrap();
        let rep = verify_ode_residual(&ctx, LemmaParams::new(2, 1, 1), &grid).unwrap();
        pass &= rep.holds && rep.points.len() == 20;
        details.push(format!("{name} N=6 max residual {:.1e}", rep.max_residual));
    }
    verdict(4, "ODE residual, (ℓ, M, K) = (2, 1, 1), 20 ω", pass, details.join(", "));
}

#[test]
fn criterion_05_envelope_and_estimate_domination() {
    let reports = suite_domination(DEFAULT_ESSEEN_C, 10).unwrap();
    let checked: usize = reports.iter().map(|r| r.checked.len()).sum();
    let skipped: usize = reports.iter().map(|r| r.not_applicable.len()).sum();
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let pass = violations == 0 && checked + skipped > 0;
    verdict(
        5,
        "phi_envelope ≥ |φ − e^{−ω²/2}|, delta_estimate ≥ Δ",
        pass,
        format!("{} instances, {checked} (ℓ, M, K) with nonempty window, {skipped} not applicable, {violations} violations", reports.len()),
    );
}

#[test]
fn criterion_06_cluster_certificates() {
    let cfg = ClusterSuiteConfig::default();
    assert_eq!((cfg.instances, cfg.max_sites, cfg.n_max, cfg.order, cfg.grid_points), (100, 6, 5, 6, 10));
    let t = Instant::now();
    let rep = cluster_suite(&cfg).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let checks: usize = rep.instances.iter().map(|i| i.derivative_checks + i.support_checks + i.window_checks).sum();
    let pass = rep.violations == 0 && rep.instances.len() == 100 && rep.instances.iter().all(|i| i.window_checks == 10 && i.sites <= 6) && elapsed < 180.0;
    verdict(6, "random 2-local pairs, n ≤ 5, M ≤ 6", pass, format!("{} instances, {checks} checks, {} violations, {elapsed:.1} s", rep.instances.len(), rep.violations));
}

#[test]
fn criterion_07_esseen_inequality() {
    let reports = suite_esseen(DEFAULT_ESSEEN_C, DEFAULT_QUADRATURE_TOL).unwrap();
    let failing: Vec<&str> = reports.iter().filter(|(_, r)| !r.holds || r.omega_sweep.len() != 5).map(|(l, _)| l.as_str()).collect();
    let worst = reports.iter().map(|(_, r)| r.c_min).fold(0.0, f64::max);
    verdict(7, "Δ ≤ esseen_rhs, C = 3.05, Ω ∈ {1, 2, 5, 10, √N}", failing.is_empty(), format!("{} measures, largest required C = {worst:.3}, failing {failing:?}", reports.len()));
}

#[test]
fn criterion_08_cumulant_window() {
    let mut pass = true;
    let mut details = Vec::new();
    for n in [16usize, 64, 256] {
        let cfg = config(ModelFamily::Field { h: 1.0 }, StateFamily::MaximallyMixed, vec![n], PathChoice::FastCommuting);
        let ev = evaluate_instance(&cfg, n).unwrap();
        let (e, r, d) = (ev.params.e, ev.params.r, ev.params.d);
        let w_star = be_lab::spectral::omega_star(r, d, e);
        let edge = w_star * ev.raw.std() / 2.0;
        let grid: Vec<f64> = (0..=400).map(|i| edge * i as f64 / 400.0).collect();
        let points = cumulant_window_check(&ev.raw, n, e, r, d, &grid).unwrap();
        let in_window = points.iter().filter(|p| p.in_window).count();
        let violations = points.iter().filter(|p| p.violation).count();
        let worst = points.iter().filter(|p| p.in_window && p.omega > 0.0).map(|p| p.lhs / p.rhs).fold(0.0, f64::max);
        pass &= violations == 0 && in_window >= 400;
        details.push(format!("N={n}: {in_window} points, max lhs/rhs {worst:.2e}"));
    }
    verdict(8, "|log φ + ω²/2| ≤ (2N/σ³)(ω/ω*)³, binomial family", pass, details.join(", "));
}

fn max_atom_gap(a: &SpectralMeasure, b: &SpectralMeasure) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = a.atoms().iter().fold(1.0f64, |m, x| m.max(x.0.abs()));
    a.atoms().iter().zip(b.atoms()).map(|(x, y)| ((x.0 - y.0).abs() / scale).max((x.1 - y.1).abs())).fold(0.0, f64::max)
}

#[test]
fn criterion_09_path_agreement() {
    let grid: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
    let mut path_gap = 0.0f64;
    for seed in 0..20u64 {
        let state = if seed % 2 == 0 { StateFamily::Tilted { theta: 0.2 + 0.1 * seed as f64 } } else { StateFamily::Gibbs { beta: 0.1 * seed as f64 } };
        let mut cfg = config(ModelFamily::RandomTwoLocal, state, vec![3], PathChoice::Exact);
        cfg.seed = seed;
        let ev = evaluate_instance(&cfg, 3).unwrap();
        let h = cfg.model.build(3, seed).unwrap();
        let rho = cfg.state.build(&h).unwrap();
        let h_hat = standardized_dense(&h.dense().unwrap(), ev.standardized.mu_h, ev.standardized.sigma_h);
        let sum = characteristic_eigen_sum(&ev.standardized.measure, &grid).unwrap();
        let evo = characteristic_evolution(&rho, &h_hat, &grid).unwrap();
        path_gap = sum.values.iter().zip(&evo.values).map(|(a, b)| (a - b).norm()).fold(path_gap, f64::max);
    }
    let models = [ModelFamily::ZzChain { coupling: 1.0, periodic: false }, ModelFamily::ZzChain { coupling: 0.5, periodic: true }, ModelFamily::Field { h: 0.7 }];
    let states = [StateFamily::MaximallyMixed, StateFamily::BasisZero, StateFamily::Tilted { theta: 0.9 }];
    let mut fast_gap = 0.0f64;
    let mut compared = 0;
    for model in models {
        for state in states {
            for n in [3usize, 6, 9, 12] {
                let h = model.build(n, 0).unwrap();
                let rho = state.build(&h).unwrap();
                let fast = fast_commuting_measure(&h, &rho).unwrap();
                let exact = spectral_measure(&h.dense().unwrap(), &rho).unwrap();
                fast_gap = fast_gap.max(max_atom_gap(&fast, &exact));
                compared += 1;
            }
        }
    }
    let pass = path_gap <= 1e-8 && fast_gap <= 1e-12;
    verdict(9, "eigen_sum vs evolution, fast vs spectral", pass, format!("20 random 3-qubit models: max |Δφ| = {path_gap:.1e}; {compared} commuting instances: max atom gap = {fast_gap:.1e}"));
}

/// constant-table entries and lemma constants transcribed from their definitions.
struct Oracle {
    gamma: f64,
    b: [f64; 6],
    omega: [f64; 3],
    c: [f64; 5],
    c3_tilde: f64,
}

fn s_direct(p: i32) -> f64 {
    (0..4000).rev().map(|m| ((m + 2) as f64).powi(p) / 2f64.powi(m)).sum()
}

fn c_alpha_direct(decay: &DecayModel, c_d: f64, d: i32, from: u64) -> f64 {
    let terms = |r: u64| -> f64 {
        let alpha = match *decay {
            DecayModel::Uncorrelated => 0.0,
            DecayModel::Exponential { l0, xi } => l0 * (-(r as f64) / xi).exp(),
            DecayModel::Algebraic { .. } => unreachable!("algebraic C_α uses tabulated zeta values"),
        };
        alpha * ((r + 1) as f64).powi(d - 1)
    };
    let mut total = 0.0;
    let mut r = from;
    loop {
        let t = terms(r);
        total += t;
        if t <= 1e-20 * total || t == 0.0 {
            return c_d * total;
        }
        r += 1;
    }
}

const ZETA_5: f64 = 1.036_927_755_143_369_926_331_365_486_457_034_168_057;
const ZETA_7: f64 = 1.008_349_277_381_922_826_839_797_549_849_796_759_600;

fn zeta(s: u32) -> f64 {
    match s {
        4 => PI.powi(4) / 90.0,
        5 => ZETA_5,
        6 => PI.powi(6) / 945.0,
        7 => ZETA_7,
        8 => PI.powi(8) / 9450.0,
        _ => unreachable!("zeta({s}) not tabulated"),
    }
}

/// `C_α(1)` for `α(r) = L₀r^{−(D+β)}` and `D ∈ {1, 2}`, integer `β`.
fn c_alpha_algebraic_one(c_d: f64, l0: f64, beta: u32, d: u32) -> f64 {
    match d {
        1 => c_d * l0 * zeta(1 + beta),
        2 => c_d * l0 * (zeta(1 + beta) + zeta(2 + beta)),
        _ => unreachable!(),
    }
}

fn oracle(p: &ModelParams, ell: u64, m: u64, k: u64, c_alpha_one: f64) -> Oracle {
    let d = p.d as i32;
    let df = d as f64;
    let r = p.r as f64;
    let ball = p.c_d * (2.0 * r).powi(d);
    let gamma = (4.0 * p.c_d * (2.0 * r).powi(d)).max(2.0 * p.c_d * p.c_d * (2.0 * r).powi(d));
    let b1 = (ball + 2f64.sqrt() * gamma).powi(2);
    let b2 = 2.0 * (ball + gamma);
    let b3 = 2.0 * (ball + 2f64.powf((df - 1.0) / 2.0) * gamma);
    let b4 = b1 + b3 * b3 * (1.0 + 2.0 * s_direct(2 * (d - 1)));
    let b5 = 12.0 * b2 * b2 * r.powf(df / 2.0) * (1.0 + c_alpha_one).sqrt() * s_direct(3 * (d - 1));
    let b6 = if p.commuting { 0.0 } else { gamma * gamma * s_direct(d - 1) };
    let (l, kk, mm, n) = (ell as f64, k as f64, m as f64, p.n as f64);
    let omega1 = p.sigma_h / (2.0 * p.e * gamma * l.powf(df / 2.0) * kk.powf((df - 1.0) / 2.0));
    let omega2 = p.sigma_h / (2.0 * b2 * p.e * l.powf(df) * kk.powf(df - 1.0));
    let omega3 = p.c0 * p.sigma_h / (4.0 * b4 * p.e * l.powf(2.0 * df));
    let alpha = |x: f64| match p.decay {
        DecayModel::Uncorrelated => 0.0,
        DecayModel::Exponential { l0, xi } => l0 * (-x / xi).exp(),
        DecayModel::Algebraic { .. } => unreachable!(),
    };
    let c1 = (2.0 * r).powi(d) / p.c0 * c_alpha_direct(&p.decay, p.c_d, d, 2 * p.r as u64 * (ell - 1));
    let c2 = b4 / p.c0.powf(1.5) * l.powf(2.0 * df) / n.sqrt();
    let c3 = 8.0 * r / p.c0.sqrt() * n.sqrt() * l * alpha(2.0 * r * (l - mm - 1.0));
    let c4 = b2 / p.c0 * l.powf(df) * kk.powf(df - 1.0) / 2f64.powf(kk - 1.0);
    let c5 = (b5 * l.powf(2.0 * df + df / 2.0) / n + b6 / (2f64.powf(mm) * l.powf(df / 2.0 * (mm - 3.0)) * n.sqrt())) / p.c0.powf(1.5);
    Oracle { gamma, b: [b1, b2, b3, b4, b5, b6], omega: [omega1, omega2, omega3], c: [c1, c2, c3, c4, c5], c3_tilde: c3 / (4.0 * r * l) }
}

struct Case {
    p: ModelParams,
    lmk: (u64, u64, u64),
}

fn table_cases() -> Vec<Case> {
    let rows: [(usize, u32, f64, usize, f64, f64, f64, Option<f64>, bool, (u64, u64, u64)); 10] = [
        (64, 1, 2.0, 1, 1.0, 0.5, 6.0, Some(1.0), false, (2, 1, 2)),
        (200, 1, 2.0, 2, 1.5, 0.3, 9.0, Some(0.7), true, (3, 1, 3)),
        (1000, 2, 4.0, 1, 1.0, 0.8, 30.0, Some(2.0), false, (4, 2, 5)),
        (4096, 2, 4.5, 1, 0.7, 0.2, 40.0, None, false, (5, 3, 7)),
        (512, 3, 6.0, 1, 2.0, 0.4, 25.0, Some(0.5), true, (2, 1, 4)),
        (10_000, 1, 2.0, 3, 1.0, 0.9, 95.0, Some(3.5), false, (6, 2, 9)),
        (128, 1, 1.0, 1, 1.0, 1.0, 11.0, Some(1.2), false, (8, 7, 3)),
        (2048, 3, 7.5, 2, 0.5, 0.6, 18.0, None, true, (3, 2, 6)),
        (777, 2, 4.0, 2, 1.3, 0.45, 22.0, Some(4.0), false, (4, 1, 8)),
        (300, 1, 2.0, 1, 3.0, 0.15, 21.0, Some(0.3), false, (10, 4, 12)),
    ];
    rows.iter()
        .map(|&(n, d, c_d, r, e, c0, sigma_h, xi, commuting, lmk)| Case {
            p: ModelParams {
                n,
                d,
                c_d,
                r,
                e,
                c0,
                sigma_h,
                decay: xi.map_or(DecayModel::Uncorrelated, |xi| DecayModel::Exponential { l0: 1.3, xi }),
                convention: if commuting { PrefactorConvention::Without } else { PrefactorConvention::WithMinSupport },
                commuting,
                product_state: xi.is_none(),
            },
            lmk,
        })
        .collect()
}

fn oracle_for(case: &Case) -> Oracle {
    let one = c_alpha_direct(&case.p.decay, case.p.c_d, case.p.d as i32, 1);
    oracle(&case.p, case.lmk.0, case.lmk.1, case.lmk.2, one)
}

/// Exponential-decay bound, term by term as printed.
#[allow(clippy::too_many_arguments)]
fn del_exp(n: f64, d: f64, c_d: f64, r: f64, c0: f64, l0: f64, xi: f64, b: &[f64; 6], b7: f64, c: f64) -> (f64, f64) {
    let [_, b2, _, b4, b5, b6] = *b;
    let ln = n.ln();
    let terms = [
        c / b7,
        6.0 * c_d * l0 * xi.powf(d) / ((2.0 * PI * c0 * r.powf(d - 1.0)) * ln.powf(d + 1.0) * n.powf(1.5)),
        6f64.sqrt() * b4 * (2.0 * xi).powf(2.0 * d) / (PI.sqrt() * c0.powf(1.5) * r.powf(2.0 * d)),
        8.0 / PI
            * (16.0 * xi * l0 / (c0.sqrt() * ln.powf(2.0 * d - 2.0)) + 2.0 * b2 * (2.0 * xi).powf(d) / (c0 * r.powf(d) * LN_2.powf(d - 1.0) * n.sqrt()))
            * ((1.0 + b7.ln()) / ln + (0.5 - 2.0 * d * ln.ln() / ln)),
        8.0 * b7 * b5 * (2.0 * xi).powf(5.0 * d / 2.0) / (PI * c0.powf(1.5) * r.powf(5.0 * d / 2.0) * ln.powf(3.0 * d / 2.0)),
        8.0 * b7 * b6 / (PI * c0.powf(1.5) * n.powf(xi * LN_2 / (2.0 * r) - 0.5) * ln.powf(d / 2.0 * (xi / (2.0 * r) * ln + 5.0))),
    ];
    let pre = ln.powf(2.0 * d) / n.sqrt();
    (pre * terms.iter().sum::<f64>(), pre * terms.iter().map(|t| t.abs()).sum::<f64>())
}

/// Algebraic-decay bound as printed; `strong` selects the variant without the support prefactor.
#[allow(clippy::too_many_arguments)]
fn del_alg(n: f64, d: f64, c_d: f64, r: f64, c0: f64, l0: f64, beta: f64, delta: f64, b: &[f64; 6], b7: f64, c: f64, strong: bool) -> (f64, f64) {
    let [_, b2, _, b4, b5, b6] = *b;
    let ln = n.ln();
    let g = 8.0 * (1.0 + b7.ln()) / PI + 8.0 / PI * (0.5 - 2.0 * delta * d) * ln;
    let fourth = if strong {
        g * 4.0 * l0 / (c0.sqrt() * r.powf(beta + d)) / n.powf((beta + 3.0 * d) * delta - 1.0)
    } else {
        g * 16.0 * r * l0 / (c0.sqrt() * r.powf(beta + d)) / n.powf((beta + 3.0 * d - 1.0) * delta - 1.0)
    };
    let nd = n.powf(delta);
    let terms = [
        c / b7,
        6.0 * c_d * l0 * (2.0 * r).powf(d - 1.0) / (2.0 * beta * PI * c0 * (2.0 * r).powf(beta)) / n.powf((beta + 2.0 * d) * delta - 0.5),
        6f64.sqrt() * b4 * 2f64.powf(2.0 * d) / (PI.sqrt() * c0.powf(1.5)),
        fourth,
        n.log2().powf(d - 1.0) / n.powf(0.5 + delta * d) * g * 2.0 * b2 * 2f64.powf(d) / c0,
        8.0 * b5 * b7 * 2f64.powf(5.0 * d / 2.0) / (PI * c0.powf(1.5)) / n.powf(3.0 * d * delta / 2.0),
        8.0 * b6 * b7 / (c0.powf(1.5) * 2f64.powf(nd / 2.0) * n.powf(0.5 + delta * d * (4.0 + 0.5 * (nd / 2.0 - 3.0)))),
    ];
    let pre = 1.0 / n.powf(0.5 - 2.0 * delta * d);
    (pre * terms.iter().sum::<f64>(), pre * terms.iter().map(|t| t.abs()).sum::<f64>())
}

fn closed_form_cases() -> (f64, f64, f64) {
    let c = DEFAULT_ESSEEN_C;
    let mut exp_gap = 0.0f64;
    for i in 0..10 {
        let (d, r) = (1 + (i % 2) as u32, 1 + (i % 3));
        let xi = 0.8 + 0.35 * i as f64;
        let p = ModelParams {
            n: 1000 * (i + 1) * (i + 1),
            d,
            c_d: 2.0 * d as f64,
            r,
            e: 1.0,
            c0: 0.3 + 0.05 * i as f64,
            sigma_h: 1.0,
            decay: DecayModel::Exponential { l0: 0.5 + 0.2 * i as f64, xi },
            convention: PrefactorConvention::WithMinSupport,
            commuting: i % 4 == 3,
            product_state: false,
        };
        let mut p = p;
        p.sigma_h = (p.c0 * p.n as f64).sqrt();
        let one = c_alpha_direct(&p.decay, p.c_d, d as i32, 1);
        let o = oracle(&p, 2, 1, 2, one);
        let (df, rf) = (d as f64, r as f64);
        let l0 = 0.5 + 0.2 * i as f64;
        let b7 = (p.c0.sqrt() * LN_2.powf((df - 1.0) / 2.0) * rf.powf(df / 2.0) / (2.0 * o.gamma * (2.0 * xi).powf(df / 2.0)))
            .min(p.c0.sqrt() * LN_2.powf(df - 1.0) * rf.powf(df) / (2.0 * o.b[1] * (2.0 * xi).powf(df)))
            .min(p.c0 * p.c0.sqrt() * rf.powf(2.0 * df) / (4.0 * o.b[3] * (2.0 * xi).powf(2.0 * df)));
        let (value, scale) = del_exp(p.n as f64, df, p.c_d, rf, p.c0, l0, xi, &o.b, b7, c);
        let got = theorem_bound(&p, TheoremVariant::Exponential, 0.0, c).unwrap().delta_bound;
        exp_gap = exp_gap.max((got - value).abs() / scale);
    }
    let mut gaps = [0.0f64; 2];
    for (slot, strong) in [(0usize, false), (1, true)] {
        for i in 0..10 {
            let d = 1 + (i % 2) as u32;
            let beta = if d == 1 { 3 + (i % 5) as u32 } else { 4 + (i % 3) as u32 };
            let df = d as f64;
            let shift = if strong { 0.0 } else { 1.0 };
            let base = beta as f64 + 3.0 * df - shift;
            let eps_max = (beta as f64 - df - shift) / (2.0 * base);
            let epsilon = eps_max * (i as f64) / 10.0;
            let l0 = 0.4 + 0.15 * i as f64;
            let r = 1 + i % 2;
            let mut p = ModelParams {
                n: 5000 + 40_000 * i,
                d,
                c_d: 2.0 * df,
                r,
                e: 1.0,
                c0: 0.25 + 0.05 * i as f64,
                sigma_h: 1.0,
                decay: DecayModel::Algebraic { l0, beta: beta as f64, d },
                convention: if strong { PrefactorConvention::Without } else { PrefactorConvention::WithMinSupport },
                commuting: i % 3 == 2,
                product_state: false,
            };
            p.sigma_h = (p.c0 * p.n as f64).sqrt();
            let o = oracle(&ModelParams { decay: DecayModel::Uncorrelated, ..p.clone() }, 2, 1, 2, c_alpha_algebraic_one(p.c_d, l0, beta, d));
            let delta = 1.0 / base + epsilon / (2.0 * df);
            let b7 = (p.c0.sqrt() * LN_2.powf((df - 1.0) / 2.0) / (2.0 * o.gamma)).min(p.c0.sqrt() * LN_2.powf(df - 1.0) / (2.0 * o.b[1])).min(p.c0 * p.c0.sqrt() / (4.0 * o.b[3]));
            let (value, scale) = del_alg(p.n as f64, df, p.c_d, r as f64, p.c0, l0, beta as f64, delta, &o.b, b7, c, strong);
            let variant = if strong { TheoremVariant::AlgebraicStrong } else { TheoremVariant::Algebraic };
            let got = theorem_bound(&p, variant, epsilon, c).unwrap().delta_bound;
            gaps[slot] = gaps[slot].max((got - value).abs() / scale);
        }
    }
    (exp_gap, gaps[0], gaps[1])
}

#[test]
fn criterion_10_constants_and_closed_forms() {
    let tol = 1e-12;
    let mut table_gap = 0.0f64;
    let mut c_gap = 0.0f64;
    for case in table_cases() {
        let (ell, m, k) = case.lmk;
        let o = oracle_for(&case);
        let t = table_constants(&case.p, ell, m, k).unwrap();
        let got = [t.gamma, t.b1, t.b2, t.b3, t.b4, t.b5, t.b6, t.omega1, t.omega2, t.omega3];
        let want = [o.gamma, o.b[0], o.b[1], o.b[2], o.b[3], o.b[4], o.b[5], o.omega[0], o.omega[1], o.omega[2]];
        for (g, w) in got.iter().zip(&want) {
            table_gap = table_gap.max(if *w == 0.0 { g.abs() } else { (g - w).abs() / w.abs() });
        }
        let c = lemma_c_constants(&case.p, &t).unwrap();
        let c3_want = if case.p.convention == PrefactorConvention::Without { o.c3_tilde } else { o.c[2] };
        for (g, w) in [c.c1, c.c2, c.c3, c.c4, c.c5, c.c3_effective()].iter().zip([o.c[0], o.c[1], o.c[2], o.c[3], o.c[4], c3_want]) {
            c_gap = c_gap.max(if w == 0.0 { g.abs() } else { (g - w).abs() / w.abs() });
        }
    }
    let (exp_gap, alg_gap, strong_gap) = closed_form_cases();
    let pass = [table_gap, c_gap, exp_gap, alg_gap, strong_gap].iter().all(|g| *g <= tol);
    verdict(
        10,
        "constant table, c₁..c₅ and the closed-form bounds vs transcriptions",
        pass,
        format!("relative gaps: table {table_gap:.1e}, c₁..c₅ {c_gap:.1e}, exponential {exp_gap:.1e}, algebraic {alg_gap:.1e}, algebraic (strong) {strong_gap:.1e}"),
    );
}

#[test]
fn fit_of_oracle_binomial_has_slope_minus_half() {
    let points: Vec<(f64, f64)> = [255usize, 1023, 4095, 16383].iter().map(|&m| ((m + 1) as f64, binomial_delta(m))).collect();
    let fit = fit_power_law(&points).unwrap();
    assert!((fit.slope + 0.5).abs() < 0.01, "{}", fit.slope);
}
