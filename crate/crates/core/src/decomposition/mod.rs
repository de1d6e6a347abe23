//! Shell decomposition of a standardized local Hamiltonian around an anchor,
//! the operators built from it, and the exact assembly of the differential
//! equation `φ' = (−ω + η)φ + ν` for the characteristic function.

pub mod zeta;

pub use zeta::{cluster_certificates, zeta_exact, zeta_truncated, ClusterReport, ConjugationSeries, DerivativeCheck, SupportCheck, WindowCheck};

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{eigh, hermitian_exp, Eigh};
use crate::operator_algebra::HamiltonianModel;
use crate::states::QuantumState;
use crate::{Complex64, Matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Centered per-anchor terms `ĥ_j = h_j − ⟨h_j⟩` of a model in a fixed state,
/// with `Ĥ = Σ_j ĥ_j / σ_H`.
#[derive(Clone, Debug)]
pub struct LemmaContext {
    lattice: Lattice,
    r: usize,
    e: f64,
    rho: Matrix,
    centered: Vec<(usize, Matrix)>,
    sigma_h: f64,
    h_hat: Matrix,
    h_eig: Eigh<f64>,
    weights: Vec<f64>,
}

impl LemmaContext {
    pub fn new(model: &HamiltonianModel, state: &QuantumState) -> Result<Self> {
        if state.n_sites() != model.n_sites() || state.local_dim() != model.local_dim() {
            return invalid("state and Hamiltonian live on different registers");
        }
        if !model.is_hermitian() {
            return invalid("Hamiltonian terms must be Hermitian");
        }
        let n = model.n_sites();
        let rho = state.density_matrix()?;
        let dim = rho.rows();
        let mut centered = Vec::with_capacity(model.anchored_terms().len());
        let mut sum = Matrix::zeros(dim, dim);
        for (anchor, op) in model.anchored_terms() {
            let mut h = op.embed(n)?;
            let mean = rho.trace_product(&h).re;
            for i in 0..dim {
                h[(i, i)] -= Complex64::new(mean, 0.0);
            }
            sum = &sum + &h;
            centered.push((*anchor, h));
        }
        let variance = rho.trace_product(&sum.matmul(&sum)).re;
        if !(variance > 1e-24) {
            return Err(Error::DegenerateSpectrum);
        }
        let sigma_h = variance.sqrt();
        let h_hat = sum.scale_real(1.0 / sigma_h);
        let h_eig = eigh(&h_hat)?;
        let v = &h_eig.vectors;
        let weights = (0..dim)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..dim {
                    let mut row = Complex64::new(0.0, 0.0);
                    for b in 0..dim {
                        row += rho[(a, b)] * v[(b, k)];
                    }
                    acc += v[(a, k)].conj() * row;
                }
                acc.re
            })
            .collect();
        Ok(Self { lattice: model.lattice().clone(), r: model.r(), e: model.e(), rho, centered, sigma_h, h_hat, h_eig, weights })
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    /// Standardized Hamiltonian `Ĥ`.
    pub fn h_hat(&self) -> &Matrix {
        &self.h_hat
    }

    pub fn rho(&self) -> &Matrix {
        &self.rho
    }

    /// `(j, ĥ_j)` in anchor order, unnormalized.
    pub fn centered_terms(&self) -> &[(usize, Matrix)] {
        &self.centered
    }

    /// `⟨A⟩_ρ`.
    pub fn expect(&self, a: &Matrix) -> Complex64 {
        self.rho.trace_product(a)
    }

    /// `φ(ω) = Σ p_n e^{iωe_n}` and `φ'(ω) = Σ p_n (ie_n) e^{iωe_n}` on the eigenbasis of `Ĥ`.
    pub fn phi_and_derivative(&self, omega: f64) -> (Complex64, Complex64) {
        let mut phi = Complex64::new(0.0, 0.0);
        let mut dphi = Complex64::new(0.0, 0.0);
        for (&e, &p) in self.h_eig.values.iter().zip(&self.weights) {
            let ph = Complex64::new(0.0, omega * e).exp() * p;
            phi += ph;
            dphi += ph * Complex64::new(0.0, e);
        }
        (phi, dphi)
    }
}

/// Shell width `ℓ`, truncation order `M` and number of shells `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub ell: usize,
    pub order: usize,
    pub k: usize,
}

impl LemmaParams {
    pub fn new(ell: usize, order: usize, k: usize) -> Self {
        Self { ell, order, k }
    }

    /// Every failed constraint, by name.
    pub fn violations(&self, r: usize, n_sites: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.ell <= 1 {
            out.push(format!("ℓ > 1 fails (ℓ = {})", self.ell));
        }
        if self.ell < self.order + 1 {
            out.push(format!("ℓ − M ≥ 1 fails (ℓ = {}, M = {})", self.ell, self.order));
        }
        if self.k == 0 {
            out.push("K ≥ 1 fails".to_string());
        }
        if 2 * r * self.ell * self.k > n_sites {
            out.push(format!("2RℓK ≤ N fails (2RℓK = {}, N = {})", 2 * r * self.ell * self.k, n_sites));
        }
        out
    }

    pub fn validate(&self, r: usize, n_sites: usize) -> Result<()> {
        let v = self.violations(r, n_sites);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::WindowViolation(v))
        }
    }
}

/// Layers `Ĥ_j(m)` for `m = 1..=K` and tails `z_j(m)` for `m = 0..=K`.
#[derive(Clone, Debug)]
pub struct ShellDecomposition {
    pub j: usize,
    pub ell: usize,
    pub r: usize,
    pub layers: Vec<Matrix>,
    pub tails: Vec<Matrix>,
    /// Anchors of the terms in each layer.
    pub layer_anchors: Vec<Vec<usize>>,
}

impl ShellDecomposition {
    pub fn k(&self) -> usize {
        self.layers.len()
    }

    /// `‖Σ_m Ĥ(m) + z(K) − Ĥ‖_max`.
    pub fn telescoping_defect(&self) -> f64 {
        let mut acc = self.tails[self.k()].clone();
        for l in &self.layers {
            acc = &acc + l;
        }
        (&acc - &self.tails[0]).max_abs()
    }
}

/// Shell index of a term anchored at distance `d`: 1 for `d ≤ 2Rℓ`, else
/// `⌈d/(2Rℓ)⌉`; `None` when the width is zero and `d > 0`.
fn shell_index(d: usize, width: usize) -> Option<usize> {
    if d == 0 {
        Some(1)
    } else if width == 0 {
        None
    } else {
        Some(d.div_ceil(width).max(1))
    }
}

pub fn shell_hamiltonians(ctx: &LemmaContext, j: usize, ell: usize, k: usize) -> Result<ShellDecomposition> {
    let n = ctx.n_sites();
    if j >= n {
        return invalid("anchor outside the lattice");
    }
    let mut failed = Vec::new();
    if ell <= 1 {
        failed.push(format!("ℓ > 1 fails (ℓ = {ell})"));
    }
    if k == 0 {
        failed.push("K ≥ 1 fails".to_string());
    }
    if 2 * ctx.r * ell * k > n {
        failed.push(format!("2RℓK ≤ N fails (2RℓK = {}, N = {n})", 2 * ctx.r * ell * k));
    }
    if !failed.is_empty() {
        return Err(Error::WindowViolation(failed));
    }
    let width = 2 * ctx.r * ell;
    let dim = ctx.h_hat.rows();
    let inv = 1.0 / ctx.sigma_h;
    let mut layers = vec![Matrix::zeros(dim, dim); k];
    let mut tails = vec![Matrix::zeros(dim, dim); k + 1];
    let mut layer_anchors = vec![Vec::new(); k];
    for (anchor, h) in &ctx.centered {
        let shell = shell_index(ctx.lattice.distance(*anchor, j), width);
        if let Some(s) = shell.filter(|&s| s <= k) {
            layers[s - 1].axpy(Complex64::new(inv, 0.0), h);
            layer_anchors[s - 1].push(*anchor);
        }
        for (m, tail) in tails.iter_mut().enumerate().skip(1) {
            if shell.map_or(true, |s| s > m) {
                tail.axpy(Complex64::new(inv, 0.0), h);
            }
        }
    }
    tails[0] = ctx.h_hat.clone();
    Ok(ShellDecomposition { j, ell, r: ctx.r, layers, tails, layer_anchors })
}

/// `(R^M_m, S^M_m)` as series: `ζ` with `(X, Y) = (−z(m−1), z(m))` and `(−z(m), Ĥ)`.
pub fn rs_series(decomp: &ShellDecomposition, m: usize, order: usize) -> Result<(ConjugationSeries, ConjugationSeries)> {
    if m == 0 || m > decomp.k() {
        return invalid(format!("shell index m = {m} outside 1..={}", decomp.k()));
    }
    let r = zeta_truncated(&decomp.tails[m - 1].scale_real(-1.0), &decomp.tails[m], order)?;
    let s = zeta_truncated(&decomp.tails[m].scale_real(-1.0), &decomp.tails[0], order)?;
    Ok((r, s))
}

/// `(R^M_m(ω), S^M_m(ω))`.
pub fn rs_truncations(decomp: &ShellDecomposition, m: usize, order: usize, omega: f64) -> Result<(Matrix, Matrix)> {
    if !(omega >= 0.0) {
        return invalid("ω must be nonnegative");
    }
    let (r, s) = rs_series(decomp, m, order)?;
    Ok((r.eval(omega), s.eval(omega)))
}

/// As [`rs_truncations`], rejecting `ω > Ω₁`.
pub fn rs_truncations_checked(decomp: &ShellDecomposition, m: usize, order: usize, omega: f64, omega_1: f64) -> Result<(Matrix, Matrix)> {
    if omega > omega_1 {
        return Err(Error::WindowViolation(vec![format!("ω = {omega} exceeds Ω₁ = {omega_1}")]));
    }
    rs_truncations(decomp, m, order, omega)
}

/// The ω-independent part of one anchor's terms.
#[derive(Clone, Debug)]
struct AnchorPlan {
    j: usize,
    rho_h: Matrix,
    decomp: ShellDecomposition,
    /// Eigendecompositions of `z(m)`, `m = 1..=K`.
    tail_eigs: Vec<Eigh<f64>>,
    layer_eigs: Vec<Eigh<f64>>,
    /// Eigendecompositions of `Ĥ − z(m)`, `m = 1..=K`.
    inner_eigs: Vec<Eigh<f64>>,
    series: Vec<(ConjugationSeries, ConjugationSeries)>,
}

/// Per-anchor operators, `m = 1..=K` in each vector.
#[derive(Clone, Debug)]
pub struct AnchorTerms {
    pub j: usize,
    pub xi: Vec<Matrix>,
    pub big_xi: Vec<Matrix>,
    pub gamma: Vec<Matrix>,
    pub big_gamma: Vec<Matrix>,
    pub eta: [Complex64; 3],
    pub nu: [Complex64; 5],
}

#[derive(Clone, Debug)]
pub struct LemmaTermSet {
    pub params: LemmaParams,
    pub omega: f64,
    pub anchors: Vec<AnchorTerms>,
    pub eta: Complex64,
    pub nu: Complex64,
    pub phi: Complex64,
    pub dphi: Complex64,
}

impl LemmaTermSet {
    /// `|φ' − (−ω + η)φ − ν|`.
    pub fn residual(&self) -> f64 {
        (self.dphi - (Complex64::new(-self.omega, 0.0) + self.eta) * self.phi - self.nu).norm()
    }
}

/// Everything in the lemma that does not depend on `ω`.
#[derive(Clone, Debug)]
pub struct LemmaPlan<'a> {
    ctx: &'a LemmaContext,
    params: LemmaParams,
    anchors: Vec<AnchorPlan>,
}

impl<'a> LemmaPlan<'a> {
    pub fn new(ctx: &'a LemmaContext, params: LemmaParams) -> Result<Self> {
        params.validate(ctx.r, ctx.n_sites())?;
        let anchors = ctx
            .centered
            .par_iter()
            .map(|(j, h)| {
                let decomp = shell_hamiltonians(ctx, *j, params.ell, params.k)?;
                let tail_eigs = decomp.tails[1..].iter().map(eigh).collect::<Result<Vec<_>>>()?;
                let layer_eigs = decomp.layers.iter().map(eigh).collect::<Result<Vec<_>>>()?;
                let inner_eigs = decomp.tails[1..].iter().map(|z| eigh(&(&decomp.tails[0] - z))).collect::<Result<Vec<_>>>()?;
                let series = (1..=params.k).map(|m| rs_series(&decomp, m, params.order)).collect::<Result<Vec<_>>>()?;
                Ok(AnchorPlan { j: *j, rho_h: ctx.rho.matmul(h), decomp, tail_eigs, layer_eigs, inner_eigs, series })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ctx, params, anchors })
    }

    pub fn params(&self) -> LemmaParams {
        self.params
    }

    pub fn decomposition(&self, j: usize) -> Option<&ShellDecomposition> {
        self.anchors.iter().find(|a| a.j == j).map(|a| &a.decomp)
    }

    pub fn eval(&self, omega: f64) -> LemmaTermSet {
        let e_h = hermitian_exp(&self.ctx.h_eig, omega);
        let e_h_rho = e_h.matmul(&self.ctx.rho);
        let anchors: Vec<AnchorTerms> = self.anchors.par_iter().map(|a| self.anchor_terms(a, omega, &e_h, &e_h_rho)).collect();
        let scale = Complex64::new(0.0, 1.0 / self.ctx.sigma_h);
        let eta = scale * anchors.iter().flat_map(|a| a.eta).sum::<Complex64>();
        let nu = scale * anchors.iter().flat_map(|a| a.nu).sum::<Complex64>();
        let (phi, dphi) = self.ctx.phi_and_derivative(omega);
        LemmaTermSet { params: self.params, omega, anchors, eta, nu, phi, dphi }
    }

    fn anchor_terms(&self, a: &AnchorPlan, omega: f64, e_h: &Matrix, e_h_rho: &Matrix) -> AnchorTerms {
        let k = self.params.k;
        let dim = a.rho_h.rows();
        let id = Matrix::identity(dim);
        let one = Complex64::new(1.0, 0.0);
        let ex = |m: &Matrix| self.ctx.expect(m);
        let identity_series = self.params.order == 0;
        // e_z[m] = e^{iωz(m)}, m = 0..=K.
        let mut e_z = vec![e_h.clone()];
        e_z.extend(a.tail_eigs.iter().map(|e| hermitian_exp(e, omega)));

        let mut xi = Vec::with_capacity(k);
        let mut big_xi = Vec::with_capacity(k);
        let mut gamma = Vec::with_capacity(k);
        let mut big_gamma = Vec::with_capacity(k);
        for m in 1..=k {
            let (r, s) = &a.series[m - 1];
            let layer = hermitian_exp(&a.layer_eigs[m - 1], omega);
            let lr = if identity_series { layer } else { layer.matmul(&r.eval(omega)) };
            big_xi.push(&e_z[m - 1] - &lr.matmul(&e_z[m]));
            xi.push(&lr - &id);
            let inner = hermitian_exp(&a.inner_eigs[m - 1], -omega);
            let is = if identity_series { inner } else { inner.matmul(&s.eval(omega)) };
            big_gamma.push(&e_z[m] - &is.matmul(e_h));
            gamma.push(&is - &id);
        }
        // q[m] = ρ ĥ P_m with P_m = ξ¹⋯ξ^m, so ⟨ĥ P_m A⟩ = Tr(q[m] A).
        let mut q = vec![a.rho_h.clone()];
        for x in &xi {
            let next = q.last().unwrap().matmul(x);
            q.push(next);
        }
        let hp: Vec<Complex64> = q.iter().map(Matrix::trace).collect();
        let i_w = Complex64::new(0.0, omega);
        let gamma_mean: Vec<Complex64> = gamma.iter().map(ex).collect();
        let phi = ex(e_h);

        let eta1 = q[0].trace_product(&xi[0]) - i_w * q[0].trace_product(&a.decomp.layers[0]);
        let eta2 = -i_w * q[0].trace_product(&a.decomp.tails[1]);
        let eta3 = if k == 1 { -hp[1] } else { hp[1] * gamma_mean[1] + (2..k).map(|m| hp[m] * (one + gamma_mean[m])).sum::<Complex64>() };

        let nu1 = q[k].trace_product(&e_z[k]);
        let nu2: Complex64 = (1..=k).map(|m| q[m - 1].trace_product(&big_xi[m - 1])).sum();
        let nu3: Complex64 = (0..k).map(|m| q[m].trace_product(&e_z[m + 1]) - hp[m] * ex(&e_z[m + 1])).sum();
        let nu4: Complex64 = (1..k).map(|m| hp[m] * ex(&big_gamma[m])).sum();
        // ⟨γ e^{iωĤ}⟩ = Tr(e^{iωĤ} ρ γ).
        let nu5: Complex64 = (1..k).map(|m| hp[m] * (e_h_rho.trace_product(&gamma[m]) - gamma_mean[m] * phi)).sum();
        AnchorTerms { j: a.j, xi, big_xi, gamma, big_gamma, eta: [eta1, eta2, eta3], nu: [nu1, nu2, nu3, nu4, nu5] }
    }
}

/// Every operator and scalar of the lemma at one `ω`.
pub fn lemma_terms(ctx: &LemmaContext, params: LemmaParams, omega: f64) -> Result<LemmaTermSet> {
    Ok(LemmaPlan::new(ctx, params)?.eval(omega))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub omega: f64,
    pub residual: f64,
    pub dphi_abs: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub params: LemmaParams,
    pub max_residual: f64,
    pub points: Vec<ResidualPoint>,
    pub holds: bool,
}

/// Relative pass threshold of the ODE residual.
pub const ODE_RESIDUAL_TOL: f64 = 1e-8;

/// `max_ω |φ' − (−ω + η)φ − ν|` over the grid.
pub fn verify_ode_residual(ctx: &LemmaContext, params: LemmaParams, omega_grid: &[f64]) -> Result<ResidualReport> {
    let plan = LemmaPlan::new(ctx, params)?;
    let points: Vec<ResidualPoint> = omega_grid
        .iter()
        .map(|&w| {
            let t = plan.eval(w);
            let residual = t.residual();
            let dphi_abs = t.dphi.norm();
            ResidualPoint { omega: w, residual, dphi_abs, ok: residual <= ODE_RESIDUAL_TOL * (1.0 + dphi_abs) }
        })
        .collect();
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let holds = points.iter().all(|p| p.ok);
    Ok(ResidualReport { params, max_residual, points, holds })
}
