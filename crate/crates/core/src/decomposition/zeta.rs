//! `ζ(ω) = e^{iω(X+Y)}e^{−iωX}e^{−iωY}`, its Taylor coefficients at 0 and the
//! cluster-expansion certificates for them.

use crate::error::{invalid, Result};
use crate::lattice::{dimension_certificate, Lattice};
use crate::linalg::expm;
use crate::operator_algebra::{support_of, HamiltonianModel};
use crate::{Complex64, Matrix};
use serde::{Deserialize, Serialize};

fn i_pow(k: usize) -> Complex64 {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)][k % 4]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `ζ(ω)` as a product of three matrix exponentials.
pub fn zeta_exact(x: &Matrix, y: &Matrix, omega: f64) -> Result<Matrix> {
    if x.rows() != y.rows() || !x.is_square() || !y.is_square() {
        return invalid("ζ needs square matrices of equal dimension");
    }
    let i_w = Complex64::new(0.0, omega);
    let sum = x + y;
    Ok(expm(&sum.scale(i_w)).matmul(&expm(&x.scale(-i_w))).matmul(&expm(&y.scale(-i_w))))
}

/// Taylor coefficients `ζ^{(n)}(0)`, `n = 0..=M`.
#[derive(Clone, Debug)]
pub struct ConjugationSeries {
    derivatives: Vec<Matrix>,
}

impl ConjugationSeries {
    pub fn order(&self) -> usize {
        self.derivatives.len() - 1
    }

    /// `ζ^{(n)}(0)`.
    pub fn derivative(&self, n: usize) -> &Matrix {
        &self.derivatives[n]
    }

    pub fn derivatives(&self) -> &[Matrix] {
        &self.derivatives
    }

    /// `ζ^M(ω) = Σ_{n≤M} ωⁿ/n! ζ^{(n)}(0)`.
    pub fn eval(&self, omega: f64) -> Matrix {
        self.eval_derivative(0, omega)
    }

    /// `∂^k_ω ζ^M(ω)`.
    pub fn eval_derivative(&self, k: usize, omega: f64) -> Matrix {
        let dim = self.derivatives[0].rows();
        let mut out = Matrix::zeros(dim, dim);
        for (n, d) in self.derivatives.iter().enumerate().skip(k) {
            let c = omega.powi((n - k) as i32) / factorial(n - k);
            if c != 0.0 {
                out.axpy(Complex64::new(c, 0.0), d);
            }
        }
        out
    }
}

/// Builds `ζ^{(n)}(0)` for `n ≤ M` from
/// `ζ^{(n+1)}(0) = Σ_{k=1}^n Σ_{m=1}^k n!/((n−k)!(k−m)!m!) i^{k+1} ζ^{(n−k)}(0) [Y,[X,Y]_m]_{k−m}`.
pub fn zeta_truncated(x: &Matrix, y: &Matrix, order: usize) -> Result<ConjugationSeries> {
    if x.rows() != y.rows() || !x.is_square() || !y.is_square() {
        return invalid("ζ needs square matrices of equal dimension");
    }
    let dim = x.rows();
    // nested[m][p] = [Y,[X,Y]_m]_p for m ≥ 1, m + p ≤ order − 1.
    let max_k = order.saturating_sub(1);
    let mut nested: Vec<Vec<Matrix>> = vec![Vec::new(); max_k + 1];
    let mut xy = y.clone();
    for m in 1..=max_k {
        xy = x.commutator(&xy);
        let mut cur = xy.clone();
        nested[m].push(cur.clone());
        for _ in 1..=max_k - m {
            cur = y.commutator(&cur);
            nested[m].push(cur.clone());
        }
    }
    let mut derivatives = vec![Matrix::identity(dim)];
    if order >= 1 {
        derivatives.push(Matrix::zeros(dim, dim));
    }
    for n in 1..order {
        let mut next = Matrix::zeros(dim, dim);
        let nf = factorial(n);
        for k in 1..=n {
            let mut inner = Matrix::zeros(dim, dim);
            for (m, row) in nested.iter().enumerate().take(k + 1).skip(1) {
                let coeff = nf / (factorial(n - k) * factorial(k - m) * factorial(m));
                inner.axpy(Complex64::new(coeff, 0.0), &row[k - m]);
            }
            next.axpy(i_pow(k + 1), &derivatives[n - k].matmul(&inner));
        }
        derivatives.push(next);
    }
    Ok(ConjugationSeries { derivatives })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub n: usize,
    pub norm: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    pub order: usize,
    pub support: Vec<usize>,
    pub claimed: Vec<usize>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub omega: f64,
    /// `‖ζ^M(ω)‖` against `2(1 − 2^{−(M+1)})` and the geometric-sum bound.
    pub norm: f64,
    pub norm_bound: f64,
    pub geometric_bound: f64,
    /// `‖ζ(ω) − ζ^M(ω)‖` against `2(rate·ω)^{M+1}`.
    pub tail: f64,
    pub tail_bound: f64,
    /// `‖∂^k ζ^M(ω)‖` for `k = 1..=M` against `2·k!·rate^k`.
    pub derivative_norms: Vec<f64>,
    pub derivative_bounds: Vec<f64>,
    pub ok: bool,
}

/// Lemma-level constants and the measured quantities they bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub b: f64,
    pub r: usize,
    pub d: u32,
    pub c_d: f64,
    /// `C_{X∩Y} = |supp [X, Y]|`.
    pub commutator_support: Vec<usize>,
    pub lambda: f64,
    pub gamma: f64,
    /// `2λ√γ`.
    pub rate: f64,
    pub order: usize,
    pub derivative_checks: Vec<DerivativeCheck>,
    pub support_checks: Vec<SupportCheck>,
    pub window_checks: Vec<WindowCheck>,
    pub violations: usize,
}

/// Sites within `radius` of `set`; empty when the radius is negative.
fn neighbourhood(lattice: &Lattice, set: &[usize], radius: i64) -> Vec<usize> {
    if radius < 0 || set.is_empty() {
        return Vec::new();
    }
    (0..lattice.n_sites()).filter(|&i| set.iter().any(|&s| lattice.distance(i, s) as i64 <= radius)).collect()
}

const CERT_REL_TOL: f64 = 1e-10;

/// Checks the derivative-norm, support and window claims for `ζ` built from
/// two local Hamiltonians on the same lattice.
///
/// `n_max` bounds the derivative orders checked, `order` is the truncation `M`
/// used for the support and window checks; window checks are run at the grid
/// points inside `[0, 1/(2·rate))`.
pub fn cluster_certificates(x: &HamiltonianModel, y: &HamiltonianModel, n_max: usize, order: usize, omega_grid: &[f64]) -> Result<ClusterReport> {
    let lattice = x.lattice();
    if y.n_sites() != x.n_sites() || y.local_dim() != x.local_dim() {
        return invalid("X and Y must live on the same register");
    }
    let (xm, ym) = (x.dense()?, y.dense()?);
    let n = x.n_sites();
    let d_loc = x.local_dim();
    let b = x.e().max(y.e());
    // R = 0 makes (2R)^D vanish and every bound degenerate, so R is clamped to 1.
    let r = x.r().max(y.r()).max(1);
    let cert = dimension_certificate(lattice);
    let (d, c_d) = (cert.d, cert.c_d);
    let commutator_support = support_of(&xm.commutator(&ym), n, d_loc);
    let ball = c_d * ((2 * r) as f64).powi(d as i32);
    let lambda = 2.0 * ball * b;
    let gamma = if ball > 0.0 { (commutator_support.len() as f64 / (4.0 * ball)).max(1.0) } else { 1.0 };
    let rate = 2.0 * lambda * gamma.sqrt();

    let top = n_max.max(order);
    let series = zeta_truncated(&xm, &ym, top)?;
    let mut violations = 0;

    let derivative_checks: Vec<DerivativeCheck> = (0..=n_max)
        .map(|k| {
            let norm = series.derivative(k).spectral_norm();
            let bound = rate.powi(k as i32) * factorial(k);
            let ok = norm <= bound * (1.0 + CERT_REL_TOL) + 1e-12;
            DerivativeCheck { n: k, norm, bound, ok }
        })
        .collect();

    let support_checks: Vec<SupportCheck> = (0..=order)
        .map(|m| {
            let mut support: Vec<usize> = (2..=m).flat_map(|k| support_of(series.derivative(k), n, d_loc)).collect();
            support.sort_unstable();
            support.dedup();
            let claimed = neighbourhood(lattice, &commutator_support, 2 * r as i64 * (m as i64 - 2));
            let ok = support.iter().all(|s| claimed.binary_search(s).is_ok());
            SupportCheck { order: m, support, claimed, ok }
        })
        .collect();

    let truncated = ConjugationSeries { derivatives: series.derivatives[..=order].to_vec() };
    let mut window_checks = Vec::new();
    for &w in omega_grid.iter().filter(|&&w| w >= 0.0 && w * 2.0 * rate < 1.0) {
        let zm = truncated.eval(w);
        let norm = zm.spectral_norm();
        let xw = rate * w;
        let norm_bound = 2.0 * (1.0 - 0.5f64.powi(order as i32 + 1));
        let geometric_bound = if xw < 1.0 { (1.0 - xw.powi(order as i32 + 1)) / (1.0 - xw) } else { f64::INFINITY };
        let tail = (&zeta_exact(&xm, &ym, w)? - &zm).spectral_norm();
        let tail_bound = 2.0 * xw.powi(order as i32 + 1);
        let derivative_norms: Vec<f64> = (1..=order).map(|k| truncated.eval_derivative(k, w).spectral_norm()).collect();
        let derivative_bounds: Vec<f64> = (1..=order).map(|k| 2.0 * factorial(k) * rate.powi(k as i32)).collect();
        let slack = |v: f64, bound: f64| v <= bound * (1.0 + CERT_REL_TOL) + 1e-12;
        let ok = slack(norm, norm_bound)
            && slack(norm, geometric_bound)
            && slack(tail, tail_bound)
            && derivative_norms.iter().zip(&derivative_bounds).all(|(&v, &bd)| slack(v, bd));
        window_checks.push(WindowCheck { omega: w, norm, norm_bound, geometric_bound, tail, tail_bound, derivative_norms, derivative_bounds, ok });
    }
    violations += derivative_checks.iter().filter(|c| !c.ok).count();
    violations += support_checks.iter().filter(|c| !c.ok).count();
    violations += window_checks.iter().filter(|c| !c.ok).count();
    Ok(ClusterReport {
        b,
        r,
        d,
        c_d,
        commutator_support,
        lambda,
        gamma,
        rate,
        order,
        derivative_checks,
        support_checks,
        window_checks,
        violations,
    })
}
