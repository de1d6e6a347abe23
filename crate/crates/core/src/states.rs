//! Quantum states, expectation values and correlation-decay fits.

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{eigh, eigvalsh};
use crate::operator_algebra::{hilbert_dim, pauli_matrix, HamiltonianModel, LocalOperator};
use crate::{Complex64, Matrix};
use serde::{Deserialize, Serialize};

const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum StateRepr {
    Product(Vec<Matrix>),
    Dense(Matrix),
    /// Gibbs state of a commuting model, kept alongside its dense matrix.
    CommutingGibbs { beta: f64, rho: Matrix },
}

#[derive(Clone, Debug)]
pub struct QuantumState {
    repr: StateRepr,
    n_sites: usize,
    local_dim: usize,
}

fn validate_density(rho: &Matrix, what: &str) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState(format!("{what} is not square")));
    }
    if rho.hermitian_defect() > TRACE_TOL {
        return Err(Error::InvalidState(format!("{what} is not Hermitian")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidState(format!("{what} has trace {tr}")));
    }
    let min = eigvalsh(rho)?.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::InvalidState(format!("{what} has negative eigenvalue {min}")));
    }
    Ok(())
}

/// `Tr_{others} ρ` for a dense `ρ` on `n_sites` sites, keeping ascending `keep`.
fn partial_trace(rho: &Matrix, n_sites: usize, local_dim: usize, keep: &[usize]) -> Matrix {
    let traced: Vec<usize> = (0..n_sites).filter(|s| keep.binary_search(s).is_err()).collect();
    let strides: Vec<usize> = (0..n_sites).map(|s| local_dim.pow((n_sites - 1 - s) as u32)).collect();
    let index = |sites: &[usize], mut x: usize| -> usize {
        let mut idx = 0;
        for &s in sites.iter().rev() {
            idx += (x % local_dim) * strides[s];
            x /= local_dim;
        }
        idx
    };
    let out_dim = local_dim.pow(keep.len() as u32);
    let traced_dim = local_dim.pow(traced.len() as u32);
    let kept_offsets: Vec<usize> = (0..out_dim).map(|i| index(keep, i)).collect();
    let traced_offsets: Vec<usize> = (0..traced_dim).map(|t| index(&traced, t)).collect();
    Matrix::from_fn(out_dim, out_dim, |i, j| {
        traced_offsets.iter().map(|&t| rho[(kept_offsets[i] + t, kept_offsets[j] + t)]).sum()
    })
}

impl QuantumState {
    /// Product of single-site density matrices, one per site.
    pub fn product(factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidState("product state needs at least one factor".into()));
        }
        let local_dim = factors[0].rows();
        for (i, f) in factors.iter().enumerate() {
            if f.rows() != local_dim {
                return Err(Error::InvalidState("factors have different local dimensions".into()));
            }
            validate_density(f, &format!("factor {i}"))?;
        }
        let n_sites = factors.len();
        Ok(Self { repr: StateRepr::Product(factors), n_sites, local_dim })
    }

    /// `I/d^N`.
    pub fn maximally_mixed(n_sites: usize, local_dim: usize) -> Self {
        let f = Matrix::identity(local_dim).scale_real(1.0 / local_dim as f64);
        Self { repr: StateRepr::Product(vec![f; n_sites]), n_sites, local_dim }
    }

    /// `|0…0⟩⟨0…0|` in the computational basis.
    pub fn basis_zero(n_sites: usize, local_dim: usize) -> Self {
        let mut f = Matrix::zeros(local_dim, local_dim);
        f[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { repr: StateRepr::Product(vec![f; n_sites]), n_sites, local_dim }
    }

    pub fn dense(rho: Matrix, n_sites: usize, local_dim: usize) -> Result<Self> {
        if rho.rows() != hilbert_dim(n_sites, local_dim)? {
            return Err(Error::InvalidState("density matrix dimension does not match the register".into()));
        }
        validate_density(&rho, "density matrix")?;
        Ok(Self { repr: StateRepr::Dense(rho), n_sites, local_dim })
    }

    /// Pure state `|ψ⟩⟨ψ|` from an unnormalized vector.
    pub fn pure(psi: &[Complex64], n_sites: usize, local_dim: usize) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let rho = Matrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Self::dense(rho, n_sites, local_dim)
    }

    /// Gibbs state of a commuting model, `e^{−βH}/Z`.
    pub fn commuting_gibbs(model: &HamiltonianModel, beta: f64) -> Result<Self> {
        if !model.is_commuting()? {
            return invalid("commuting Gibbs state requested for a non-commuting model");
        }
        let rho = gibbs_matrix(&model.dense()?, beta)?;
        Ok(Self { repr: StateRepr::CommutingGibbs { beta, rho }, n_sites: model.n_sites(), local_dim: model.local_dim() })
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn is_product(&self) -> bool {
        matches!(self.repr, StateRepr::Product(_))
    }

    /// True for `I/d^N` (checked entrywise to `1e−15`).
    pub fn is_maximally_mixed(&self) -> bool {
        let close = |m: &Matrix| {
            let d = m.rows() as f64;
            (m - &Matrix::identity(m.rows()).scale_real(1.0 / d)).max_abs() <= 1e-15
        };
        match &self.repr {
            StateRepr::Product(f) => f.iter().all(close),
            StateRepr::Dense(rho) | StateRepr::CommutingGibbs { rho, .. } => close(rho),
        }
    }

    /// Single-site factors of a product state.
    pub fn factors(&self) -> Option<&[Matrix]> {
        match &self.repr {
            StateRepr::Product(f) => Some(f),
            _ => None,
        }
    }

    /// Full density matrix.
    pub fn density_matrix(&self) -> Result<Matrix> {
        match &self.repr {
            StateRepr::Product(f) => {
                hilbert_dim(self.n_sites, self.local_dim)?;
                Ok(f.iter().skip(1).fold(f[0].clone(), |acc, x| acc.kron(x)))
            }
            StateRepr::Dense(rho) | StateRepr::CommutingGibbs { rho, .. } => Ok(rho.clone()),
        }
    }

    /// Reduced density matrix on ascending `sites`.
    pub fn reduced(&self, sites: &[usize]) -> Result<Matrix> {
        if sites.windows(2).any(|w| w[0] >= w[1]) || sites.iter().any(|&s| s >= self.n_sites) {
            return invalid("reduced-state sites must be ascending and inside the register");
        }
        match &self.repr {
            StateRepr::Product(f) => Ok(sites.iter().fold(Matrix::identity(1), |acc, &s| acc.kron(&f[s]))),
            StateRepr::Dense(rho) | StateRepr::CommutingGibbs { rho, .. } => Ok(partial_trace(rho, self.n_sites, self.local_dim, sites)),
        }
    }

    /// `⟨A⟩_ρ` for a local operator.
    pub fn expect(&self, op: &LocalOperator) -> Result<Complex64> {
        if op.local_dim() != self.local_dim {
            return invalid("operator and state have different local dimensions");
        }
        Ok(op.trace_against(&self.reduced(op.support())?))
    }

    /// `⟨A⟩_ρ` for a matrix on the full space.
    pub fn expect_dense(&self, a: &Matrix) -> Result<Complex64> {
        match &self.repr {
            StateRepr::Dense(rho) | StateRepr::CommutingGibbs { rho, .. } => Ok(rho.trace_product(a)),
            StateRepr::Product(_) => Ok(self.density_matrix()?.trace_product(a)),
        }
    }
}

fn gibbs_matrix(h: &Matrix, beta: f64) -> Result<Matrix> {
    if !(beta >= 0.0) {
        return invalid("inverse temperature must be nonnegative");
    }
    let eig = eigh(h)?;
    let e0 = eig.values.first().copied().unwrap_or(0.0);
    let w: Vec<f64> = eig.values.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let n = w.len();
    let v = &eig.vectors;
    let mut rho = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * (w[k] / z)).sum());
    // Symmetrize away rounding.
    rho = (&rho + &rho.adjoint()).scale_real(0.5);
    Ok(rho)
}

/// `ρ = e^{−βH}/Tr e^{−βH}` for a dense Hamiltonian on `n_sites` sites.
pub fn gibbs_state(h: &Matrix, beta: f64, n_sites: usize, local_dim: usize) -> Result<QuantumState> {
    if h.rows() != hilbert_dim(n_sites, local_dim)? {
        return invalid("Hamiltonian dimension does not match the register");
    }
    QuantumState::dense(gibbs_matrix(h, beta)?, n_sites, local_dim)
}

/// `|⟨AB⟩ − ⟨A⟩⟨B⟩|` by exact traces.
pub fn connected_correlator(rho: &QuantumState, a: &LocalOperator, b: &LocalOperator) -> Result<f64> {
    let ab = a.mul(b)?;
    Ok((rho.expect(&ab)? - rho.expect(a)? * rho.expect(b)?).norm())
}

/// Which prefactor multiplies `α` in the decay condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorConvention {
    /// `‖A‖‖B‖ min{|𝒜|,|ℬ|} α(d)`.
    #[default]
    WithMinSupport,
    /// `‖A‖‖B‖ α(d)`.
    Without,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModelKind {
    Exponential,
    Algebraic,
}

/// Correlation-decay function `α(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DecayModel {
    /// `α ≡ 0`.
    Uncorrelated,
    /// `L₀ e^{−r/ξ}`.
    Exponential { l0: f64, xi: f64 },
    /// `L₀ r^{−(D+β)}`; `d` is the lattice dimension entering the exponent.
    Algebraic { l0: f64, beta: f64, d: u32 },
}

impl DecayModel {
    /// `α(r)`. At `r = 0` both decaying models return `L₀`.
    pub fn alpha(&self, r: f64) -> f64 {
        match *self {
            DecayModel::Uncorrelated => 0.0,
            DecayModel::Exponential { l0, xi } => l0 * (-r.max(0.0) / xi).exp(),
            DecayModel::Algebraic { l0, beta, d } => l0 * r.max(1.0).powf(-(d as f64 + beta)),
        }
    }

    pub fn l0(&self) -> f64 {
        match *self {
            DecayModel::Uncorrelated => 0.0,
            DecayModel::Exponential { l0, .. } | DecayModel::Algebraic { l0, .. } => l0,
        }
    }
}

/// Upper-envelope decay fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Largest relative excess of a sample over the least-squares curve, before inflating `L₀`.
    pub residual: f64,
    pub convention: PrefactorConvention,
    /// `(distance, envelope)` samples that entered the fit.
    pub envelope: Vec<(usize, f64)>,
}

impl DecayFit {
    /// JSON view `{model, L0, xi_or_beta, residual, convention}`.
    pub fn summary_json(&self) -> serde_json::Value {
        let (name, shape) = match self.model {
            DecayModel::Uncorrelated => ("uncorrelated", serde_json::Value::Null),
            DecayModel::Exponential { xi, .. } => ("exponential", xi.into()),
            DecayModel::Algebraic { beta, .. } => ("algebraic", beta.into()),
        };
        serde_json::json!({
            "model": name,
            "L0": self.model.l0(),
            "xi_or_beta": shape,
            "residual": self.residual,
            "convention": self.convention,
        })
    }
}

/// Single-site Pauli observables on every site.
pub fn single_site_paulis(n_sites: usize) -> Vec<LocalOperator> {
    (0..n_sites)
        .flat_map(|s| ['X', 'Y', 'Z'].into_iter().map(move |p| LocalOperator::single_site(s, pauli_matrix(p).expect("valid label")).expect("qubit")))
        .collect()
}

const ZERO_ENVELOPE: f64 = 1e-14;

/// Fits an upper envelope `α` to the normalized connected correlators of all
/// disjoint probe pairs.
pub fn fit_alpha(
    rho: &QuantumState,
    lattice: &Lattice,
    probes: &[LocalOperator],
    kind: DecayModelKind,
    convention: PrefactorConvention,
) -> Result<DecayFit> {
    let mut env: Vec<Option<f64>> = Vec::new();
    let norms: Vec<f64> = probes.iter().map(LocalOperator::norm).collect();
    for (i, a) in probes.iter().enumerate() {
        for (j, b) in probes.iter().enumerate().skip(i + 1) {
            if a.support().is_empty() || b.support().is_empty() {
                continue;
            }
            let d = lattice.set_distance(a.support(), b.support())?;
            if d == 0 {
                continue;
            }
            let prefactor = match convention {
                PrefactorConvention::WithMinSupport => a.support().len().min(b.support().len()) as f64,
                PrefactorConvention::Without => 1.0,
            };
            let value = connected_correlator(rho, a, b)? / (norms[i] * norms[j] * prefactor);
            if env.len() <= d {
                env.resize(d + 1, None);
            }
            env[d] = Some(env[d].map_or(value, |m: f64| m.max(value)));
        }
    }
    let samples: Vec<(usize, f64)> = env.iter().enumerate().filter_map(|(d, v)| v.map(|v| (d, v))).collect();
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!("{} distinct distances sampled, need at least 3", samples.len())));
    }
    let positive: Vec<(usize, f64)> = samples.iter().copied().filter(|&(_, v)| v > ZERO_ENVELOPE).collect();
    if positive.is_empty() {
        return Ok(DecayFit { model: DecayModel::Uncorrelated, residual: 0.0, convention, envelope: samples });
    }
    if positive.len() < 2 {
        return Err(Error::InsufficientData("fewer than two distances carry nonzero correlations".into()));
    }
    let d_lat = crate::lattice::dimension_certificate(lattice).d;
    let xs: Vec<f64> = positive
        .iter()
        .map(|&(d, _)| match kind {
            DecayModelKind::Exponential => d as f64,
            DecayModelKind::Algebraic => (d as f64).ln(),
        })
        .collect();
    let ys: Vec<f64> = positive.iter().map(|&(_, v)| v.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    if slope >= 0.0 {
        return Err(Error::InsufficientData("correlation envelope does not decay with distance".into()));
    }
    let fitted = |x: f64| (intercept + slope * x).exp();
    let residual = positive.iter().zip(&xs).map(|(&(_, v), &x)| (v / fitted(x) - 1.0).max(0.0)).fold(0.0, f64::max);
    let model = match kind {
        DecayModelKind::Exponential => {
            let xi = -1.0 / slope;
            let l0 = samples.iter().map(|&(d, v)| v * (d as f64 / xi).exp()).fold(0.0, f64::max);
            DecayModel::Exponential { l0, xi }
        }
        DecayModelKind::Algebraic => {
            let p = -slope;
            let l0 = samples.iter().map(|&(d, v)| v * (d as f64).powf(p)).fold(0.0, f64::max);
            DecayModel::Algebraic { l0, beta: p - d_lat as f64, d: d_lat }
        }
    };
    Ok(DecayFit { model, residual, convention, envelope: samples })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
