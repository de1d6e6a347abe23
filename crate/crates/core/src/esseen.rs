//! Esseen's smoothing inequality `Δ ≤ C/Ω + (2/π)∫₀^Ω |φ(ω) − e^{−ω²/2}|/ω dω`
//! and the band-limited filter kernel behind it.

use crate::error::{invalid, Result};
use crate::spectral::{kolmogorov_distance, CharacteristicCurve, SpectralMeasure};
use crate::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `24/(π√(2π)) ≈ 3.0474`, rounded up.
pub const DEFAULT_ESSEEN_C: f64 = 3.05;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-9;
const MAX_DEPTH: u32 = 48;
const MAX_PANELS: usize = 1 << 16;

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// `k̂(ω) = 1 − |ω|` on `[−1, 1]`, zero outside.
pub fn kernel_k_hat(omega: f64) -> f64 {
    (1.0 - omega.abs()).max(0.0)
}

/// `K(y) = (1/2π)(sin(y/2)/(y/2))²`, the inverse transform of `k̂`.
pub fn kernel_k(y: f64) -> f64 {
    sinc(y / 2.0).powi(2) / (2.0 * PI)
}

/// Normalized filter `H(y) = (3π/2) K(y/2)² = (3/8π)(sin(y/4)/(y/4))⁴`.
pub fn kernel_h(y: f64) -> f64 {
    3.0 / (8.0 * PI) * sinc(y / 4.0).powi(4)
}

/// `ĥ(ω) = (k̂∗k̂)(2ω)/∫k̂²`, i.e. `(3/2)B(2ω)` with `B` the centered cubic B-spline.
pub fn kernel_h_hat(omega: f64) -> f64 {
    let t = (2.0 * omega).abs();
    let b = if t <= 1.0 {
        2.0 / 3.0 - t * t + t * t * t / 2.0
    } else if t < 2.0 {
        (2.0 - t).powi(3) / 6.0
    } else {
        0.0
    };
    1.5 * b
}

/// `(K(x), H(x), k̂(x), ĥ(x))` at a common argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValues {
    pub k: f64,
    pub h: f64,
    pub k_hat: f64,
    pub h_hat: f64,
}

pub fn kernel_values(x: f64) -> KernelValues {
    KernelValues { k: kernel_k(x), h: kernel_h(x), k_hat: kernel_k_hat(x), h_hat: kernel_h_hat(x) }
}

/// `∫_{−∞}^{∞} y^p H(y) dy` for `p ∈ {0, 1}` (with `|y|` for `p = 1`), by
/// quadrature on `[0, L]` plus the averaged `sin⁴` tail.
fn kernel_moment(p: i32, tol: f64) -> f64 {
    let l = 4.0 * PI * 2000.0;
    let body = adaptive_simpson(&|y: f64| y.powi(p) * kernel_h(y), 0.0, l, tol, 4000);
    // Beyond L: H(y) ≈ (3/8π)·256·sin⁴(y/4)/y⁴ with ⟨sin⁴⟩ = 3/8.
    let amp = 3.0 / (8.0 * PI) * 256.0 * 0.375;
    let tail = amp * l.powi(p - 3) / (3 - p) as f64;
    2.0 * (body + tail)
}

/// `∫H`, which is 1 for the normalized filter.
pub fn kernel_mass() -> f64 {
    kernel_moment(0, 1e-12)
}

/// First absolute moment `b = ∫|y|H(y) dy` (equal to `12 ln 2/π`).
pub fn kernel_first_moment() -> f64 {
    kernel_moment(1, 1e-12)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`, starting from `panels`
/// equal panels, each refined to its share of `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, if k + 1 == panels { b } else { a + (k + 1) as f64 * h });
            let xm = 0.5 * (x0 + x1);
            let (f0, fm, f1) = (f(x0), f(xm), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, MAX_DEPTH)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// A characteristic function that can be evaluated anywhere on its domain.
pub trait CharFn {
    fn phi(&self, omega: f64) -> Complex64;
    /// Largest `ω` at which `phi` is defined.
    fn max_omega(&self) -> f64 {
        f64::INFINITY
    }
    /// Highest frequency present, used to pick the initial quadrature panels.
    fn bandwidth(&self) -> f64 {
        1.0
    }
}

impl CharFn for SpectralMeasure {
    fn phi(&self, omega: f64) -> Complex64 {
        self.characteristic(omega)
    }

    fn bandwidth(&self) -> f64 {
        self.atoms().iter().filter(|a| a.1 >= 1e-14).fold(1.0, |m, a| m.max(a.0.abs()))
    }
}

/// Piecewise-linear interpolation of the sampled values, with `φ(0) = 1`
/// as an extra node.
impl CharFn for CharacteristicCurve {
    fn phi(&self, omega: f64) -> Complex64 {
        let w = omega.abs();
        let k = self.grid.partition_point(|&g| g <= w);
        let node = |i: usize| -> (f64, Complex64) {
            let v = self.values[i];
            (self.grid[i].abs(), if self.grid[i] < 0.0 { v.conj() } else { v })
        };
        let (lo, hi) = match k {
            0 => ((0.0, Complex64::new(1.0, 0.0)), node(0)),
            k if k == self.grid.len() => (node(k - 1), node(k - 1)),
            k => (node(k - 1), node(k)),
        };
        let (lo, hi) = if lo.0 > w { ((0.0, Complex64::new(1.0, 0.0)), lo) } else { (lo, hi) };
        let v = if hi.0 > lo.0 { lo.1 + (hi.1 - lo.1) * ((w - lo.0) / (hi.0 - lo.0)) } else { lo.1 };
        if omega < 0.0 {
            v.conj()
        } else {
            v
        }
    }

    fn max_omega(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }

    fn bandwidth(&self) -> f64 {
        let spacing = self.grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if spacing.is_finite() {
            PI / spacing
        } else {
            1.0
        }
    }
}

/// Constant `C`, cutoff `Ω` and quadrature tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsseenConfig {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub quadrature_tol: f64,
}

impl EsseenConfig {
    pub fn new(c: f64, omega: f64, quadrature_tol: f64) -> Result<Self> {
        let cfg = Self { c, omega, quadrature_tol };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_omega(omega: f64) -> Result<Self> {
        Self::new(DEFAULT_ESSEEN_C, omega, DEFAULT_QUADRATURE_TOL)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return invalid("Esseen constant C must be positive");
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return invalid("cutoff Ω must be positive");
        }
        if !(self.quadrature_tol > 0.0 && self.quadrature_tol <= 1e-3) {
            return invalid("quadrature tolerance must lie in (0, 1e-3]");
        }
        Ok(())
    }
}

/// `|φ(ω) − e^{−ω²/2}|/ω`, continued by its limit 0 at `ω = 0`.
pub fn esseen_integrand(phi: &dyn CharFn, omega: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    (phi.phi(omega) - Complex64::new((-omega * omega / 2.0).exp(), 0.0)).norm() / omega
}

/// `(2/π)∫₀^Ω |φ(ω) − e^{−ω²/2}|/ω dω`.
pub fn esseen_integral(phi: &dyn CharFn, omega: f64, tol: f64) -> Result<f64> {
    if phi.max_omega() < omega {
        return invalid(format!("characteristic function known up to {} but Ω = {omega}", phi.max_omega()));
    }
    let panels = ((4.0 * omega * (phi.bandwidth() + 1.0)).ceil() as usize).clamp(16, MAX_PANELS);
    Ok(2.0 / PI * adaptive_simpson(&|w| esseen_integrand(phi, w), 0.0, omega, tol * PI / 2.0, panels))
}

/// Right-hand side of Esseen's inequality.
pub fn esseen_rhs(phi: &dyn CharFn, config: &EsseenConfig) -> Result<f64> {
    config.validate()?;
    Ok(config.c / config.omega + esseen_integral(phi, config.omega, config.quadrature_tol)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsseenPoint {
    pub omega: f64,
    pub rhs: f64,
}

/// Outcome of checking `Δ ≤ RHS` across a sweep of cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsseenReport {
    pub delta: f64,
    pub omega_sweep: Vec<EsseenPoint>,
    pub min_rhs: f64,
    pub holds: bool,
    #[serde(rename = "C")]
    pub c: f64,
    /// Smallest `C ≥ 0` for which the inequality holds at every swept `Ω`.
    pub c_min: f64,
}

/// Computes `Δ` for a standardized measure and the Esseen RHS at each `Ω`.
pub fn verify_esseen(measure: &SpectralMeasure, omegas: &[f64], c: f64, quadrature_tol: f64) -> Result<EsseenReport> {
    let delta = kolmogorov_distance(measure);
    let mut sweep = Vec::with_capacity(omegas.len());
    let mut c_min = 0.0f64;
    for &omega in omegas {
        let cfg = EsseenConfig::new(c, omega, quadrature_tol)?;
        let integral = esseen_integral(measure, omega, quadrature_tol)?;
        c_min = c_min.max((delta - integral) * omega);
        sweep.push(EsseenPoint { omega, rhs: cfg.c / omega + integral });
    }
    let min_rhs = sweep.iter().map(|p| p.rhs).fold(f64::INFINITY, f64::min);
    Ok(EsseenReport { delta, holds: sweep.iter().all(|p| delta <= p.rhs), omega_sweep: sweep, min_rhs, c, c_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{characteristic_eigen_sum, gaussian_cdf};
    use proptest::prelude::*;

    struct Gaussian;
    impl CharFn for Gaussian {
        fn phi(&self, omega: f64) -> Complex64 {
            Complex64::new((-omega * omega / 2.0).exp(), 0.0)
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_k_hat(0.0), 1.0);
        assert_eq!(kernel_k_hat(1.0), 0.0);
        assert_eq!(kernel_k_hat(-1.0), 0.0);
        assert!((kernel_k(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert_eq!(kernel_h_hat(0.0), 1.0);
        let v = kernel_values(0.5);
        assert_eq!((v.k_hat, v.h_hat), (0.5, kernel_h_hat(0.5)));
    }

    #[test]
    fn h_hat_matches_numerical_convolution() {
        // (k̂∗k̂)(2ω) / ∫k̂², ∫k̂² = 2/3.
        for &w in &[0.0, 0.1, 0.3, 0.5, 0.7, 0.95, 1.2] {
            let t = 2.0 * w;
            let conv = adaptive_simpson(&|u| kernel_k_hat(t - u) * kernel_k_hat(u), -1.0, 1.0, 1e-13, 64);
            assert!((conv / (2.0 / 3.0) - kernel_h_hat(w)).abs() < 1e-10, "ω = {w}");
        }
    }

    #[test]
    fn h_is_the_inverse_transform_of_h_hat() {
        for &y in &[0.0, 0.7, 3.0, 11.0] {
            let inv = adaptive_simpson(&|w| kernel_h_hat(w) * (w * y).cos(), -1.0, 1.0, 1e-13, 64) / (2.0 * PI);
            assert!((inv - kernel_h(y)).abs() < 1e-11, "y = {y}");
        }
    }

    #[test]
    fn kernel_mass_and_moment() {
        assert!((kernel_mass() - 1.0).abs() < 1e-8);
        assert!((kernel_first_moment() - 12.0 * 2f64.ln() / PI).abs() < 1e-6);
    }

    #[test]
    fn gaussian_rhs_is_c_over_omega() {
        let cfg = EsseenConfig::with_omega(2.0).unwrap();
        assert!((esseen_rhs(&Gaussian, &cfg).unwrap() - DEFAULT_ESSEEN_C / 2.0).abs() < 1e-15);
        let doubled = EsseenConfig::with_omega(4.0).unwrap();
        assert!((esseen_rhs(&Gaussian, &doubled).unwrap() * 2.0 - esseen_rhs(&Gaussian, &cfg).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn single_spin_inequality() {
        let m = SpectralMeasure::from_atoms(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let rhs = esseen_rhs(&m, &EsseenConfig::with_omega(1.0).unwrap()).unwrap();
        assert!(rhs >= gaussian_cdf(1.0) - 0.5);
        // Independent oracle: fixed-step Simpson on cos ω.
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |w: f64| if w == 0.0 { 0.0 } else { (w.cos() - (-w * w / 2.0).exp()).abs() / w };
        let simpson: f64 = (0..n).map(|k| {
            let a = k as f64 * h;
            h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h))
        }).sum();
        assert!((rhs - DEFAULT_ESSEEN_C - 2.0 / PI * simpson).abs() < 1e-9);
    }

    #[test]
    fn curve_input_and_coverage() {
        let m = SpectralMeasure::from_atoms(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let grid: Vec<f64> = (1..=2000).map(|k| k as f64 * 1e-3).collect();
        let curve = characteristic_eigen_sum(&m, &grid).unwrap();
        let cfg = EsseenConfig::with_omega(2.0).unwrap();
        let exact = esseen_rhs(&m, &cfg).unwrap();
        assert!((esseen_rhs(&curve, &cfg).unwrap() - exact).abs() < 1e-6);
        assert!(esseen_rhs(&curve, &EsseenConfig::with_omega(3.0).unwrap()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EsseenConfig::new(0.0, 1.0, 1e-6).is_err());
        assert!(EsseenConfig::new(1.0, -1.0, 1e-6).is_err());
        assert!(EsseenConfig::new(1.0, 1.0, 1e-2).is_err());
    }

    #[test]
    fn verify_examples() {
        let atom = SpectralMeasure::from_atoms(&[0.0], &[1.0]).unwrap();
        let omegas = [0.5, 1.0, 2.0, 5.0, 10.0, 50.0];
        let r = verify_esseen(&atom, &omegas, DEFAULT_ESSEEN_C, 1e-9).unwrap();
        assert_eq!(r.delta, 0.5);
        assert!(r.holds);

        let bonds = 100;
        let mut row = vec![1.0f64];
        for _ in 0..bonds {
            let mut next = vec![0.0; row.len() + 1];
            for (k, &c) in row.iter().enumerate() {
                next[k] += c / 2.0;
                next[k + 1] += c / 2.0;
            }
            row = next;
        }
        let values: Vec<f64> = (0..=bonds).map(|k| (2.0 * k as f64 - bonds as f64) / (bonds as f64).sqrt()).collect();
        let binom = SpectralMeasure::from_atoms(&values, &row).unwrap();
        let omegas: Vec<f64> = (0..=9).map(|k| 1.0 + k as f64).collect();
        let r = verify_esseen(&binom, &omegas, DEFAULT_ESSEEN_C, 1e-9).unwrap();
        assert!(r.holds && r.c_min <= DEFAULT_ESSEEN_C);
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("C").is_some() && json.get("min_rhs").is_some());

        let fine: Vec<f64> = (-4000..=4000).map(|k| k as f64 * 1e-3).collect();
        let dens: Vec<f64> = fine.iter().map(|y| gaussian_cdf(y + 5e-4) - gaussian_cdf(y - 5e-4)).collect();
        let total: f64 = dens.iter().sum();
        let dens: Vec<f64> = dens.iter().map(|d| d / total).collect();
        let g = SpectralMeasure::from_atoms(&fine, &dens).unwrap();
        let r = verify_esseen(&g, &[1.0, 5.0], DEFAULT_ESSEEN_C, 1e-8).unwrap();
        assert!(r.delta < 1e-3 && r.holds);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn quadrature_converges_under_refinement(atoms in proptest::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 2..6), omega in 0.5f64..8.0) {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let (v, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().map(|(e, p)| (e, p / total)).unzip();
            let m = SpectralMeasure::from_atoms(&v, &w).unwrap();
            let coarse = esseen_integral(&m, omega, 1e-4).unwrap();
            let fine = esseen_integral(&m, omega, 1e-8).unwrap();
            let finest = esseen_integral(&m, omega, 1e-11).unwrap();
            prop_assert!((fine - finest).abs() <= 1e-7);
            prop_assert!((coarse - finest).abs() <= 1e-3);
        }

        #[test]
        fn kernel_nonnegative(y in -1e4f64..1e4, w in -3.0f64..3.0) {
            prop_assert!(kernel_h(y) >= 0.0);
            let hh = kernel_h_hat(w);
            prop_assert!((0.0..=1.0).contains(&hh));
            if w.abs() >= 1.0 {
                prop_assert_eq!(hh, 0.0);
            }
        }
    }
}
