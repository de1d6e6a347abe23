//! Spectral measures `F_H`, standardization, the Kolmogorov distance to the
//! Gaussian and the characteristic function.

mod fast;

pub use fast::fast_commuting_measure;

use crate::error::{invalid, Error, Result};
use crate::linalg::{eigh, eigvalsh, expm};
use crate::states::{QuantumState, StateRepr};
use crate::{Complex64, Matrix};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Eigenvalues closer than this multiple of `‖H‖` are merged into one atom.
pub const MERGE_REL_TOL: f64 = 1e-10;
/// Atoms whose weight does not exceed this are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-15;
const NEGATIVE_WEIGHT_TOL: f64 = 1e-12;

/// Discrete law `{(e_n, p_n)}` with strictly increasing `e_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
    mean: f64,
    std: f64,
    merge_tol: f64,
}

impl SpectralMeasure {
    /// Builds a measure from unsorted eigenvalue/weight pairs, merging values
    /// closer than `MERGE_REL_TOL · max|e|`.
    pub fn from_atoms(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() || values.is_empty() {
            return invalid("values and weights must be nonempty and of equal length");
        }
        if let Some(w) = weights.iter().find(|&&w| w < -NEGATIVE_WEIGHT_TOL || !w.is_finite()) {
            return Err(Error::InvalidState(format!("negative or non-finite weight {w}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite eigenvalue");
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let merge_tol = MERGE_REL_TOL * scale;
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().map(|w| w.max(0.0))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        let mut i = 0;
        while i < pairs.len() {
            let mut j = i + 1;
            while j < pairs.len() && pairs[j].0 - pairs[j - 1].0 < merge_tol {
                j += 1;
            }
            let cluster = &pairs[i..j];
            let e = cluster.iter().map(|p| p.0).sum::<f64>() / cluster.len() as f64;
            let w: f64 = cluster.iter().map(|p| p.1).sum();
            if w > WEIGHT_FLOOR {
                atoms.push((e, w));
            }
            i = j;
        }
        if atoms.is_empty() {
            return Err(Error::InvalidState("measure carries no weight".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("weights sum to {total}")));
        }
        for a in &mut atoms {
            a.1 /= total;
        }
        let mean = atoms.iter().map(|&(e, w)| e * w).sum::<f64>();
        let var = atoms.iter().map(|&(e, w)| w * (e - mean) * (e - mean)).sum::<f64>();
        Ok(Self { atoms, mean, std: var.sqrt(), merge_tol })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    /// Absolute merge threshold that was applied.
    pub fn merge_tol(&self) -> f64 {
        self.merge_tol
    }

    /// Right-continuous `F(y) = Σ_{e_n ≤ y} p_n`.
    pub fn cdf(&self, y: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 <= y);
        self.atoms[..k].iter().map(|a| a.1).sum::<f64>().min(1.0)
    }

    /// `Σ_n p_n e^{iωe_n}`, with `φ(0) = 1` exactly.
    pub fn characteristic(&self, omega: f64) -> Complex64 {
        if omega == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        self.atoms.iter().map(|&(e, w)| Complex64::new((omega * e).cos() * w, (omega * e).sin() * w)).sum()
    }

    /// CSV with columns `eigenvalue,weight`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eigenvalue", "weight"])?;
        for &(e, p) in &self.atoms {
            out.write_record([format!("{e:.16e}"), format!("{p:.16e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Applies a single-site operator to the row index of `mat` in place.
fn apply_site(f: &Matrix, site: usize, n_sites: usize, d: usize, mat: &mut Matrix) {
    let stride = d.pow((n_sites - 1 - site) as u32);
    let cols = mat.cols();
    let dim = mat.rows();
    let mut buf = vec![Complex64::new(0.0, 0.0); d * cols];
    for base in (0..dim).filter(|i| (i / stride) % d == 0) {
        for x in 0..d {
            let row = mat.row(base + x * stride);
            buf[x * cols..(x + 1) * cols].copy_from_slice(row);
        }
        for x in 0..d {
            let out = mat.row_mut(base + x * stride);
            out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for y in 0..d {
                let c = f[(x, y)];
                if c != Complex64::new(0.0, 0.0) {
                    for (o, b) in out.iter_mut().zip(&buf[y * cols..(y + 1) * cols]) {
                        *o += c * b;
                    }
                }
            }
        }
    }
}

/// Diagonal of a state in the computational basis.
fn state_diagonal(rho: &QuantumState) -> Result<Vec<f64>> {
    match rho.repr() {
        StateRepr::Product(factors) => {
            let d = rho.local_dim();
            let dim = crate::operator_algebra::hilbert_dim(rho.n_sites(), d)?;
            let mut diag = vec![1.0; dim];
            for (i, p) in diag.iter_mut().enumerate() {
                let mut idx = i;
                for f in factors.iter().rev() {
                    *p *= f[(idx % d, idx % d)].re;
                    idx /= d;
                }
            }
            Ok(diag)
        }
        StateRepr::Dense(m) | StateRepr::CommutingGibbs { rho: m, .. } => Ok(m.diag().iter().map(|z| z.re).collect()),
    }
}

/// Exact spectral measure of `H` in state `ρ` by full diagonalization.
pub fn spectral_measure(h: &Matrix, rho: &QuantumState) -> Result<SpectralMeasure> {
    if !h.is_square() {
        return invalid("Hamiltonian must be square");
    }
    let dim = h.rows();
    if dim != crate::operator_algebra::hilbert_dim(rho.n_sites(), rho.local_dim())? {
        return invalid("Hamiltonian and state dimensions differ");
    }
    let scale = h.max_abs();
    if h.hermitian_defect() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return invalid("Hamiltonian is not Hermitian");
    }
    let off_diagonal_zero = (0..dim).all(|i| h.row(i).iter().enumerate().all(|(j, z)| i == j || *z == Complex64::new(0.0, 0.0)));
    if off_diagonal_zero {
        let values: Vec<f64> = h.diag().iter().map(|z| z.re).collect();
        return SpectralMeasure::from_atoms(&values, &state_diagonal(rho)?);
    }
    if rho.is_maximally_mixed() {
        let values = eigvalsh(h)?;
        return SpectralMeasure::from_atoms(&values, &vec![1.0 / dim as f64; dim]);
    }
    let eig = eigh(h)?;
    let mut rv = eig.vectors.clone();
    match rho.repr() {
        StateRepr::Product(factors) => {
            for (s, f) in factors.iter().enumerate() {
                apply_site(f, s, rho.n_sites(), rho.local_dim(), &mut rv);
            }
        }
        StateRepr::Dense(m) | StateRepr::CommutingGibbs { rho: m, .. } => rv = m.matmul(&eig.vectors),
    }
    let mut weights = vec![0.0; dim];
    for i in 0..dim {
        let (v, w) = (eig.vectors.row(i), rv.row(i));
        for (n, p) in weights.iter_mut().enumerate() {
            *p += (v[n].conj() * w[n]).re;
        }
    }
    SpectralMeasure::from_atoms(&eig.values, &weights)
}

/// Result of standardizing a measure.
#[derive(Clone, Debug)]
pub struct Standardized {
    pub measure: SpectralMeasure,
    /// `σ_H² ≥ c₀E²N`.
    pub variance_ok: bool,
    pub mu_h: f64,
    pub sigma_h: f64,
}

/// Maps atoms to `(e − μ_H)/σ_H` and checks the variance assumption
/// `σ_H² ≥ c₀E²N`.
pub fn standardize(measure: &SpectralMeasure, c0: f64, e: f64, n_sites: usize) -> Result<Standardized> {
    let (mu, sigma) = (measure.mean, measure.std);
    if !(sigma > 0.0) || sigma <= 1e-12 * measure.atoms.iter().fold(0.0f64, |m, a| m.max(a.0.abs())) {
        return Err(Error::DegenerateSpectrum);
    }
    let values: Vec<f64> = measure.atoms.iter().map(|a| (a.0 - mu) / sigma).collect();
    let weights: Vec<f64> = measure.atoms.iter().map(|a| a.1).collect();
    let standardized = SpectralMeasure::from_atoms(&values, &weights)?;
    let variance_ok = sigma * sigma >= c0 * e * e * n_sites as f64;
    Ok(Standardized { measure: standardized, variance_ok, mu_h: mu, sigma_h: sigma })
}

/// Dense `Ĥ = (H − μ_H)/σ_H`.
pub fn standardized_dense(h: &Matrix, mu: f64, sigma: f64) -> Matrix {
    let n = h.rows();
    (h - &Matrix::identity(n).scale_real(mu)).scale_real(1.0 / sigma)
}

/// Standard normal CDF via the complementary error function.
pub fn gaussian_cdf(y: f64) -> f64 {
    if y == f64::NEG_INFINITY {
        return 0.0;
    }
    if y == f64::INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(-y / std::f64::consts::SQRT_2)
}

/// `sup_y |F(y) − G(y)|`, attained at an atom or its left limit.
pub fn kolmogorov_distance(measure: &SpectralMeasure) -> f64 {
    let mut before = 0.0;
    let mut sup = 0.0f64;
    for &(e, w) in &measure.atoms {
        let g = gaussian_cdf(e);
        let after = before + w;
        sup = sup.max((before - g).abs()).max((after - g).abs());
        before = after;
    }
    sup
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharPath {
    EigenSum,
    Evolution,
}

/// `φ(ω)` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCurve {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub path: CharPath,
}

impl CharacteristicCurve {
    /// CSV with columns `omega,re_phi,im_phi`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["omega", "re_phi", "im_phi"])?;
        for (o, v) in self.grid.iter().zip(&self.values) {
            out.write_record([format!("{o:.16e}"), format!("{:.16e}", v.re), format!("{:.16e}", v.im)])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|w| !w.is_finite()) {
        return invalid("ω grid must be finite and strictly increasing");
    }
    Ok(())
}

/// `φ(ω) = Σ_n p_n e^{iωe_n}` from the atoms of a measure.
pub fn characteristic_eigen_sum(measure: &SpectralMeasure, grid: &[f64]) -> Result<CharacteristicCurve> {
    check_grid(grid)?;
    Ok(CharacteristicCurve { grid: grid.to_vec(), values: grid.iter().map(|&w| measure.characteristic(w)).collect(), path: CharPath::EigenSum })
}

/// `φ(ω) = Tr(ρ e^{iωĤ})` by explicit matrix exponentials.
pub fn characteristic_evolution(rho: &QuantumState, h_hat: &Matrix, grid: &[f64]) -> Result<CharacteristicCurve> {
    check_grid(grid)?;
    let rho_m = rho.density_matrix()?;
    if rho_m.rows() != h_hat.rows() {
        return invalid("state and Hamiltonian dimensions differ");
    }
    let values = grid.iter().map(|&w| rho_m.trace_product(&expm(&h_hat.scale(Complex64::new(0.0, w))))).collect();
    Ok(CharacteristicCurve { grid: grid.to_vec(), values, path: CharPath::Evolution })
}

/// One grid point of the cumulant-window check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantWindowPoint {
    pub omega: f64,
    /// `|log φ_Ĥ(ω) + ω²/2|` with the continuous branch of the logarithm.
    pub lhs: f64,
    /// `(2N/σ_H³)(ω/ω*)³`.
    pub rhs: f64,
    /// `ω ≤ ω*σ_H/2`.
    pub in_window: bool,
    pub violation: bool,
}

/// `ω* = 1/(2e²R^{2D}(R^{2D}+1)E)`; `R` is taken to be at least 1.
pub fn omega_star(r: usize, d: u32, e: f64) -> f64 {
    let r2d = (r.max(1) as f64).powi(2 * d as i32);
    1.0 / (2.0 * std::f64::consts::E.powi(2) * r2d * (r2d + 1.0) * e)
}

/// Compares `|log φ_Ĥ + ω²/2|` with the cubic cumulant bound along `grid`.
///
/// `measure` is the unstandardized measure of `H`. The logarithm is unwrapped
/// along the grid from `log φ(0) = 0`, so the grid should start at 0 and be
/// fine enough that the phase moves by less than π per step.
pub fn cumulant_window_check(measure: &SpectralMeasure, n_sites: usize, e: f64, r: usize, d: u32, grid: &[f64]) -> Result<Vec<CumulantWindowPoint>> {
    check_grid(grid)?;
    if grid.first().is_some_and(|&w| w < 0.0) {
        return invalid("ω grid must be nonnegative");
    }
    let sigma = measure.std;
    if !(sigma > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    let w_star = omega_star(r, d, e);
    let mut phase = 0.0;
    let mut prev_arg = 0.0;
    Ok(grid
        .iter()
        .map(|&w| {
            let phi = measure.characteristic(w / sigma) * Complex64::from_polar(1.0, -w * measure.mean / sigma);
            let arg = phi.arg();
            let mut step = arg - prev_arg;
            step -= (step / std::f64::consts::TAU).round() * std::f64::consts::TAU;
            phase += step;
            prev_arg = arg;
            let log_phi = Complex64::new(phi.norm().ln(), phase);
            let lhs = (log_phi + w * w / 2.0).norm();
            let rhs = 2.0 * n_sites as f64 / sigma.powi(3) * (w / w_star).powi(3);
            let in_window = w <= w_star * sigma / 2.0;
            CumulantWindowPoint { omega: w, lhs, rhs, in_window, violation: in_window && lhs > rhs }
        })
        .collect())
}
