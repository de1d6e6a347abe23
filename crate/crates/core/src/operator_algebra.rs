//! Local operators, their embedding into the full Hilbert space, and
//! Hamiltonians assembled from anchored terms.

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::{Complex64, Matrix};
use serde::{Deserialize, Serialize};

/// Default cap on the full Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

/// Active dimension cap, overridable through `BE_LAB_DIM_CAP`.
pub fn dim_cap() -> usize {
    std::env::var("BE_LAB_DIM_CAP").ok().and_then(|s| s.trim().parse().ok()).filter(|&c| c > 0).unwrap_or(DEFAULT_DIM_CAP)
}

/// `local_dim^n_sites`, checked against the cap.
pub fn hilbert_dim(n_sites: usize, local_dim: usize) -> Result<usize> {
    let cap = dim_cap();
    let mut dim = 1usize;
    for _ in 0..n_sites {
        dim = dim.checked_mul(local_dim).filter(|&d| d <= cap).ok_or(Error::ResourceLimit { dim: saturating_pow(local_dim, n_sites), cap })?;
    }
    Ok(dim)
}

fn saturating_pow(base: usize, exp: usize) -> usize {
    (0..exp).fold(1usize, |acc, _| acc.saturating_mul(base))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit Pauli matrix for `I`, `X`, `Y` or `Z`.
pub fn pauli_matrix(label: char) -> Result<Matrix> {
    let (a, b, cc, d) = match label.to_ascii_uppercase() {
        'I' => (c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)),
        'X' => (c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)),
        'Y' => (c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)),
        'Z' => (c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)),
        other => return invalid(format!("unknown Pauli label '{other}'")),
    };
    Ok(Matrix::from_vec(2, 2, vec![a, b, cc, d]))
}

/// Operator acting on an ordered set of sites, identity elsewhere.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    support: Vec<usize>,
    block: Matrix,
    local_dim: usize,
}

impl LocalOperator {
    /// Builds an operator from a block on `support` (strictly ascending sites).
    pub fn new(support: Vec<usize>, block: Matrix, local_dim: usize) -> Result<Self> {
        if local_dim < 2 {
            return invalid("local dimension must be at least 2");
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("support sites must be distinct and ascending");
        }
        let expected = saturating_pow(local_dim, support.len());
        if !block.is_square() || block.dim() != expected {
            return invalid(format!("block is {}x{}, support needs {expected}", block.rows(), block.cols()));
        }
        Ok(Self { support, block, local_dim })
    }

    /// Scalar multiple of the identity (empty support).
    pub fn scalar(value: Complex64, local_dim: usize) -> Self {
        Self { support: Vec::new(), block: Matrix::from_diag(&[value]), local_dim }
    }

    /// Pauli string `coeff · P₁ ⊗ P₂ ⊗ …` with `label[k]` acting on `sites[k]`.
    pub fn pauli(label: &str, sites: &[usize], coeff: f64) -> Result<Self> {
        let chars: Vec<char> = label.chars().collect();
        if chars.len() != sites.len() {
            return invalid(format!("Pauli label '{label}' has {} letters for {} sites", chars.len(), sites.len()));
        }
        let mut pairs: Vec<(usize, char)> = sites.iter().copied().zip(chars).collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("Pauli string repeats a site");
        }
        let mut block = Matrix::from_diag(&[c(coeff, 0.0)]);
        for &(_, ch) in &pairs {
            block = block.kron(&pauli_matrix(ch)?);
        }
        Self::new(pairs.into_iter().map(|p| p.0).collect(), block, 2)
    }

    pub fn single_site(site: usize, block: Matrix) -> Result<Self> {
        let d = block.rows();
        Self::new(vec![site], block, d)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn block(&self) -> &Matrix {
        &self.block
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.block.hermitian_defect() <= tol * self.block.max_abs().max(1.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.block.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.block[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    /// Spectral norm of the operator.
    pub fn norm(&self) -> f64 {
        self.block.spectral_norm()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { support: self.support.clone(), block: self.block.scale(s), local_dim: self.local_dim }
    }

    pub fn adjoint(&self) -> Self {
        Self { support: self.support.clone(), block: self.block.adjoint(), local_dim: self.local_dim }
    }

    /// The block re-expressed on a superset of the support.
    pub fn block_on(&self, support: &[usize]) -> Result<Matrix> {
        if self.support.iter().any(|s| support.binary_search(s).is_err()) {
            return invalid("target support does not contain the operator's support");
        }
        let positions: Vec<usize> = self.support.iter().map(|s| support.binary_search(s).expect("checked")).collect();
        Ok(embed_block(&self.block, &positions, support.len(), self.local_dim))
    }

    fn union_support(&self, other: &Self) -> Result<Vec<usize>> {
        if self.local_dim != other.local_dim {
            return invalid("operators have different local dimensions");
        }
        let mut u: Vec<usize> = self.support.iter().chain(&other.support).copied().collect();
        u.sort_unstable();
        u.dedup();
        Ok(u)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let u = self.union_support(other)?;
        let block = self.block_on(&u)?.matmul(&other.block_on(&u)?);
        Self::new(u, block, self.local_dim)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let u = self.union_support(other)?;
        let block = &self.block_on(&u)? + &other.block_on(&u)?;
        Self::new(u, block, self.local_dim)
    }

    /// `[self, other]` on the union of supports.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let u = self.union_support(other)?;
        let a = self.block_on(&u)?;
        let b = other.block_on(&u)?;
        Self::new(u, a.commutator(&b), self.local_dim)
    }

    /// Drops every site on which the operator acts as the identity.
    pub fn reduced(&self) -> Self {
        let trivial = trivial_sites(&self.block, self.support.len(), self.local_dim, support_tolerance(&self.block));
        if trivial.is_empty() {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.support.len()).filter(|p| !trivial.contains(p)).collect();
        let block = partial_trace_keep(&self.block, self.support.len(), self.local_dim, &keep);
        Self { support: keep.iter().map(|&p| self.support[p]).collect(), block, local_dim: self.local_dim }
    }

    /// Dense matrix on the full Hilbert space of `n_sites` sites.
    pub fn embed(&self, n_sites: usize) -> Result<Matrix> {
        let dim = hilbert_dim(n_sites, self.local_dim)?;
        let mut out = Matrix::zeros(dim, dim);
        self.embed_add(n_sites, Complex64::new(1.0, 0.0), &mut out)?;
        Ok(out)
    }

    /// `out += s · embed(self)`.
    pub fn embed_add(&self, n_sites: usize, s: Complex64, out: &mut Matrix) -> Result<()> {
        if self.support.iter().any(|&x| x >= n_sites) {
            return invalid("operator support outside the lattice");
        }
        let dim = hilbert_dim(n_sites, self.local_dim)?;
        if out.dim() != dim {
            return invalid("target matrix has the wrong dimension");
        }
        accumulate_embedding(&self.block, &self.support, n_sites, self.local_dim, s, out);
        Ok(())
    }

    /// Expectation value against a density matrix on exactly these sites.
    pub fn trace_against(&self, rho_support: &Matrix) -> Complex64 {
        self.block.trace_product(rho_support)
    }
}

/// `[A, B]_n` with `[A, B]_0 = B`; the result carries its exact support.
pub fn nested_commutator(a: &LocalOperator, b: &LocalOperator, n: usize) -> Result<LocalOperator> {
    let mut cur = b.reduced();
    for _ in 0..n {
        cur = a.commutator(&cur)?.reduced();
    }
    Ok(cur)
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    a.spectral_norm()
}

/// Tolerance for support detection: `1e−12` times a cheap upper bound on `‖A‖`.
pub fn support_tolerance(a: &Matrix) -> f64 {
    let inf = (0..a.rows()).map(|i| a.row(i).iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
    1e-12 * (a.norm_one() * inf).sqrt()
}

/// Sites (as positions among `n_sites`) on which `a` acts non-trivially.
pub fn support_of(a: &Matrix, n_sites: usize, local_dim: usize) -> Vec<usize> {
    let tol = support_tolerance(a);
    let trivial = trivial_sites(a, n_sites, local_dim, tol);
    (0..n_sites).filter(|s| !trivial.contains(s)).collect()
}

/// Positions at which `a` factorizes as `A' ⊗ 𝕀`, i.e. commutes with every matrix unit.
fn trivial_sites(a: &Matrix, n_sites: usize, local_dim: usize, tol: f64) -> Vec<usize> {
    let dim = a.dim();
    (0..n_sites)
        .filter(|&s| {
            let stride = saturating_pow(local_dim, n_sites - 1 - s);
            for r in 0..dim {
                let dr = (r / stride) % local_dim;
                let r0 = r - dr * stride;
                let row = a.row(r);
                for (col, x) in row.iter().enumerate() {
                    let dc = (col / stride) % local_dim;
                    if dr != dc {
                        if x.norm() > tol {
                            return false;
                        }
                    } else {
                        let c0 = col - dc * stride;
                        if (*x - a[(r0, c0)]).norm() > tol {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect()
}

/// Normalized partial trace `d^{-t} Tr_traced(a)` keeping the positions in `keep`.
fn partial_trace_keep(a: &Matrix, n_sites: usize, local_dim: usize, keep: &[usize]) -> Matrix {
    let traced: Vec<usize> = (0..n_sites).filter(|p| !keep.contains(p)).collect();
    let out_dim = saturating_pow(local_dim, keep.len());
    let traced_dim = saturating_pow(local_dim, traced.len());
    let strides: Vec<usize> = (0..n_sites).map(|s| saturating_pow(local_dim, n_sites - 1 - s)).collect();
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut idx = 0;
        let mut k = kept_idx;
        for &site in keep.iter().rev() {
            idx += (k % local_dim) * strides[site];
            k /= local_dim;
        }
        let mut t = traced_idx;
        for &site in traced.iter().rev() {
            idx += (t % local_dim) * strides[site];
            t /= local_dim;
        }
        idx
    };
    let norm = 1.0 / traced_dim as f64;
    Matrix::from_fn(out_dim, out_dim, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..traced_dim {
            acc += a[(compose(i, t), compose(j, t))];
        }
        acc * norm
    })
}

/// Embeds a block sitting at `positions` of a `total`-site register.
fn embed_block(block: &Matrix, positions: &[usize], total: usize, local_dim: usize) -> Matrix {
    let dim = saturating_pow(local_dim, total);
    let mut out = Matrix::zeros(dim, dim);
    accumulate_embedding(block, positions, total, local_dim, Complex64::new(1.0, 0.0), &mut out);
    out
}

fn accumulate_embedding(block: &Matrix, positions: &[usize], total: usize, local_dim: usize, s: Complex64, out: &mut Matrix) {
    let dim = out.dim();
    let k = positions.len();
    let strides: Vec<usize> = positions.iter().map(|&p| saturating_pow(local_dim, total - 1 - p)).collect();
    let bdim = block.dim();
    // Offset of each local basis state within the full index.
    let offsets: Vec<usize> = (0..bdim)
        .map(|loc| {
            let mut idx = 0;
            let mut x = loc;
            for q in (0..k).rev() {
                idx += (x % local_dim) * strides[q];
                x /= local_dim;
            }
            idx
        })
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        let mut loc_r = 0;
        let mut base = r;
        for q in 0..k {
            let digit = (r / strides[q]) % local_dim;
            loc_r = loc_r * local_dim + digit;
            base -= digit * strides[q];
        }
        let brow = block.row(loc_r);
        let orow = out.row_mut(r);
        for (loc_c, &b) in brow.iter().enumerate() {
            if b != zero {
                orow[base + offsets[loc_c]] += s * b;
            }
        }
    }
}

/// A Pauli-string term as written in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub anchor: usize,
    pub pauli: String,
    pub sites: Vec<usize>,
    pub coeff: f64,
}

impl PauliTerm {
    pub fn to_term(&self) -> Result<Term> {
        Ok(Term { anchor: self.anchor, op: LocalOperator::pauli(&self.pauli, &self.sites, self.coeff)? })
    }
}

/// A local term with the site it is anchored at.
#[derive(Clone, Debug)]
pub struct Term {
    pub anchor: usize,
    pub op: LocalOperator,
}

/// `H = Σ_j h_j` with locality radius `R` and term bound `E`.
///
/// Terms sharing an anchor are summed into a single `h_j`; `E` bounds the
/// norm of those per-anchor sums.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    lattice: Lattice,
    local_dim: usize,
    anchored: Vec<(usize, LocalOperator)>,
    r: usize,
    e: f64,
}

/// Assembles a Hamiltonian model; see [`HamiltonianModel`].
pub fn build_hamiltonian(terms: &[Term], lattice: &Lattice) -> Result<HamiltonianModel> {
    HamiltonianModel::new(terms, lattice)
}

impl HamiltonianModel {
    pub fn new(terms: &[Term], lattice: &Lattice) -> Result<Self> {
        let n = lattice.n_sites();
        let local_dim = terms.first().map_or(2, |t| t.op.local_dim);
        let mut by_anchor: std::collections::BTreeMap<usize, LocalOperator> = std::collections::BTreeMap::new();
        for t in terms {
            if t.op.local_dim != local_dim {
                return invalid("terms have inconsistent local dimensions");
            }
            if t.anchor >= n || t.op.support.iter().any(|&s| s >= n) {
                return invalid("term anchor or support outside the lattice");
            }
            match by_anchor.get_mut(&t.anchor) {
                Some(op) => *op = op.add(&t.op)?,
                None => {
                    by_anchor.insert(t.anchor, t.op.clone());
                }
            }
        }
        let grouped: Vec<(usize, LocalOperator)> = by_anchor.into_iter().collect();
        let r = grouped.iter().flat_map(|(a, op)| op.support.iter().map(move |&s| lattice.distance(*a, s))).max().unwrap_or(0);
        let e = grouped.iter().map(|(_, op)| op.norm()).fold(0.0, f64::max);
        Ok(Self { lattice: lattice.clone(), local_dim, anchored: grouped, r, e })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Per-anchor terms `(j, h_j)`, sorted by anchor.
    pub fn anchored_terms(&self) -> &[(usize, LocalOperator)] {
        &self.anchored
    }

    /// Locality radius `R`.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Term bound `E`.
    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn is_hermitian(&self) -> bool {
        self.anchored.iter().all(|(_, op)| op.is_hermitian(1e-14))
    }

    /// True when every pair of terms commutes.
    pub fn is_commuting(&self) -> Result<bool> {
        if self.is_diagonal() {
            return Ok(true);
        }
        let mut at_site: Vec<Vec<usize>> = vec![Vec::new(); self.n_sites()];
        for (i, (_, op)) in self.anchored.iter().enumerate() {
            for &s in &op.support {
                at_site[s].push(i);
            }
        }
        for (i, (_, a)) in self.anchored.iter().enumerate() {
            let mut overlapping: Vec<usize> = a.support.iter().flat_map(|&s| at_site[s].iter().copied()).filter(|&j| j > i).collect();
            overlapping.sort_unstable();
            overlapping.dedup();
            for b in overlapping.iter().map(|&j| &self.anchored[j].1) {
                let comm = a.commutator(b)?;
                if comm.block.max_abs() > 1e-12 * (a.norm() * b.norm()).max(1e-300) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// True when every term is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.anchored.iter().all(|(_, op)| op.is_diagonal())
    }

    /// Dense `H = Σ_j embed(h_j)`.
    pub fn dense(&self) -> Result<Matrix> {
        let n = self.n_sites();
        let dim = hilbert_dim(n, self.local_dim)?;
        let mut h = Matrix::zeros(dim, dim);
        for (_, op) in &self.anchored {
            op.embed_add(n, Complex64::new(1.0, 0.0), &mut h)?;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigvalsh;
    use proptest::prelude::*;

    fn op(label: &str, sites: &[usize]) -> LocalOperator {
        LocalOperator::pauli(label, sites, 1.0).unwrap()
    }

    #[test]
    fn z_on_first_of_two_sites() {
        let z = op("Z", &[0]).embed(2).unwrap();
        let d: Vec<f64> = z.diag().iter().map(|x| x.re).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0]);
        assert!((&z - &Matrix::from_real_diag(&d)).max_abs() == 0.0);
    }

    #[test]
    fn identity_block_embeds_to_identity() {
        let id = LocalOperator::new(vec![1], Matrix::identity(2), 2).unwrap();
        assert_eq!(id.embed(3).unwrap(), Matrix::identity(8));
    }

    #[test]
    fn embedding_is_multiplicative_on_disjoint_supports() {
        let lhs = op("X", &[0]).embed(2).unwrap().matmul(&op("Z", &[1]).embed(2).unwrap());
        let rhs = op("XZ", &[0, 1]).embed(2).unwrap();
        assert!((&lhs - &rhs).max_abs() < 1e-15);
        let unsorted = op("ZX", &[1, 0]).embed(2).unwrap();
        assert!((&unsorted - &rhs).max_abs() < 1e-15);
    }

    #[test]
    fn field_sum_spectrum() {
        let lattice = Lattice::chain(3).unwrap();
        let terms: Vec<Term> = (0..3).map(|i| Term { anchor: i, op: op("Z", &[i]) }).collect();
        let h = build_hamiltonian(&terms, &lattice).unwrap();
        let mut vals = eigvalsh(&h.dense().unwrap()).unwrap();
        vals.iter_mut().for_each(|v| *v = v.round());
        assert_eq!(vals, vec![-3.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 3.0]);
    }

    #[test]
    fn zz_chain_spectrum_values() {
        let lattice = Lattice::chain(3).unwrap();
        let terms: Vec<Term> = (0..2).map(|i| Term { anchor: i, op: op("ZZ", &[i, i + 1]) }).collect();
        let h = build_hamiltonian(&terms, &lattice).unwrap();
        assert_eq!((h.r(), h.e()), (1, 1.0));
        let mut vals: Vec<i64> = eigvalsh(&h.dense().unwrap()).unwrap().iter().map(|v| v.round() as i64).collect();
        vals.dedup();
        assert_eq!(vals, vec![-2, 0, 2]);
        assert!(h.is_commuting().unwrap());
    }

    #[test]
    fn norms() {
        assert!((op("Z", &[0]).norm() - 1.0).abs() < 1e-14);
        let two = LocalOperator::new(vec![0], Matrix::identity(2).scale_real(2.0), 2).unwrap();
        assert!((two.norm() - 2.0).abs() < 1e-14);
        let mixed = op("ZZ", &[0, 1]).add(&op("X", &[0])).unwrap();
        assert!((mixed.norm() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nested_commutators_of_paulis() {
        let x = op("X", &[0]);
        let y = op("Y", &[0]);
        let c0 = nested_commutator(&x, &y, 0).unwrap();
        assert!((&c0.block - y.block()).max_abs() < 1e-15);
        let c1 = nested_commutator(&x, &y, 1).unwrap();
        let expected1 = op("Z", &[0]).scale(Complex64::new(0.0, 2.0));
        assert!((&c1.block - &expected1.block).max_abs() < 1e-14);
        let c2 = nested_commutator(&x, &y, 2).unwrap();
        assert!((&c2.block - &y.scale(Complex64::new(4.0, 0.0)).block).max_abs() < 1e-14);
    }

    #[test]
    fn support_reduction_drops_identity_factors() {
        // [X0, Z0 Z1] = -2i Y0 Z1 acts on both; [X0, Z1 Z2] = 0 acts nowhere.
        let a = op("X", &[0]).commutator(&op("ZZ", &[1, 2])).unwrap().reduced();
        assert!(a.support().is_empty() || a.block.max_abs() < 1e-15);
        let b = op("X", &[0]).commutator(&op("ZZ", &[0, 1])).unwrap().reduced();
        assert_eq!(b.support(), &[0, 1]);
        let c = op("ZI", &[3, 5]).reduced();
        assert_eq!(c.support(), &[3]);
    }

    #[test]
    fn non_hermitian_and_mixed_dims_rejected() {
        let lattice = Lattice::chain(2).unwrap();
        let qutrit = LocalOperator::new(vec![0], Matrix::identity(3), 3).unwrap();
        let terms = vec![Term { anchor: 0, op: op("Z", &[0]) }, Term { anchor: 1, op: qutrit }];
        assert!(build_hamiltonian(&terms, &lattice).is_err());
    }

    #[test]
    fn dim_cap_enforced() {
        assert!(matches!(hilbert_dim(200, 2), Err(Error::ResourceLimit { .. })));
    }

    fn tfim_sum(n: usize) -> LocalOperator {
        let mut h = LocalOperator::scalar(Complex64::new(0.0, 0.0), 2);
        for i in 0..n {
            if i + 1 < n {
                h = h.add(&op("ZZ", &[i, i + 1])).unwrap();
            }
            h = h.add(&op("X", &[i])).unwrap();
        }
        h
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn commutator_support_grows_by_at_most_two_r_per_order(n in 3usize..=8, site in 0usize..8, order in 0usize..=4) {
            let site = site % n;
            let lattice = Lattice::chain(n).unwrap();
            let h = tfim_sum(n);
            let z = op("Z", &[site]);
            let hsupp: Vec<usize> = (0..n).collect();
            for &s in nested_commutator(&z, &h, order).unwrap().support() {
                prop_assert!(lattice.set_distance(&[s], &hsupp).unwrap() <= 2 * order);
            }
            // Seeded at a single site, the growth is measured from that site (R = 1).
            for &s in nested_commutator(&h, &z, order).unwrap().support() {
                prop_assert!(lattice.distance(s, site) <= 2 * order);
            }
        }

        #[test]
        fn built_hamiltonians_are_hermitian(n in 2usize..=6, g in -2.0f64..2.0) {
            let lattice = Lattice::chain(n).unwrap();
            let mut terms = Vec::new();
            for i in 0..n {
                if i + 1 < n { terms.push(Term { anchor: i, op: op("ZZ", &[i, i + 1]) }); }
                terms.push(Term { anchor: i, op: LocalOperator::pauli("X", &[i], g).unwrap() });
                terms.push(Term { anchor: i, op: LocalOperator::pauli("Y", &[i], 0.3).unwrap() });
            }
            let h = build_hamiltonian(&terms, &lattice).unwrap().dense().unwrap();
            prop_assert!(h.hermitian_defect() <= 1e-14 * h.spectral_norm());
        }
    }
}
