//! Exact energy law of a diagonal Hamiltonian under a product state.
//!
//! Energies are placed on a common grid `offset + q·k`. The law is the sum
//! over all entries of a product of transfer matrices whose entries are
//! polynomials in the grid variable; the product is formed by divide and
//! conquer with FFT convolution, so `N = 2^16` chains take well under a
//! second.

use super::SpectralMeasure;
use crate::error::{invalid, Error, Result};
use crate::operator_algebra::HamiltonianModel;
use crate::states::QuantumState;
use crate::Complex64;
use rustfft::FftPlanner;

/// Largest transfer-matrix side `d^m` accepted.
const MAX_STATES: usize = 1 << 8;
/// Largest number of grid levels accepted.
const MAX_LEVELS: usize = 1 << 26;
const DIRECT_CONV_WORK: usize = 1 << 12;

/// `Σ_k c[k] z^{shift+k}`; an empty `c` is the zero polynomial.
#[derive(Clone, Debug, Default)]
struct Poly {
    shift: i64,
    c: Vec<f64>,
}

impl Poly {
    fn monomial(k: i64, w: f64) -> Self {
        Self { shift: k, c: vec![w] }
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn add_assign(&mut self, other: &Poly) {
        if other.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = other.clone();
            return;
        }
        let lo = self.shift.min(other.shift);
        let hi = (self.shift + self.c.len() as i64).max(other.shift + other.c.len() as i64);
        let mut c = vec![0.0; (hi - lo) as usize];
        for (src, shift) in [(&self.c, self.shift), (&other.c, other.shift)] {
            let off = (shift - lo) as usize;
            for (d, s) in c[off..off + src.len()].iter_mut().zip(src) {
                *d += s;
            }
        }
        *self = Self { shift: lo, c };
    }

    fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::default();
        }
        Poly { shift: self.shift + other.shift, c: convolve(&self.c, &other.c) }
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 || a.len() * b.len() <= DIRECT_CONV_WORK {
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            if x != 0.0 {
                for (o, &y) in out[i..i + b.len()].iter_mut().zip(b) {
                    *o += x * y;
                }
            }
        }
        return out;
    }
    let n = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // Pack both inputs into one complex transform.
    let mut z: Vec<Complex64> = (0..n).map(|i| Complex64::new(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0))).collect();
    fwd.process(&mut z);
    let mut prod = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zk = z[k];
        let zc = z[(n - k) % n].conj();
        let fa = (zk + zc) * 0.5;
        let fb = (zk - zc) * Complex64::new(0.0, -0.5);
        prod[k] = fa * fb;
    }
    inv.process(&mut prod);
    let scale = 1.0 / n as f64;
    prod[..len].iter().map(|z| z.re * scale).collect()
}

/// Square matrix of polynomials.
#[derive(Clone, Debug)]
struct PolyMatrix {
    n: usize,
    e: Vec<Poly>,
}

impl PolyMatrix {
    fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        let n = self.n;
        let mut e = vec![Poly::default(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.e[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.e[k * n + j];
                    if !b.is_zero() {
                        e[i * n + j].add_assign(&a.mul(b));
                    }
                }
            }
        }
        PolyMatrix { n, e }
    }
}

fn product_range(mats: &[PolyMatrix]) -> PolyMatrix {
    match mats.len() {
        1 => mats[0].clone(),
        len => {
            let (l, r) = mats.split_at(len / 2);
            let (a, b) = rayon::join(|| product_range(l), || product_range(r));
            a.mul(&b)
        }
    }
}

/// Approximate gcd of two nonnegative reals.
fn real_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.max(b), a.min(b));
    while b > tol {
        let r = (a - b * (a / b).round()).abs();
        a = b;
        b = r;
    }
    a
}

/// A diagonal term reduced to integer grid levels.
struct GridTerm {
    support: Vec<usize>,
    levels: Vec<i64>,
}

struct Grid {
    offset: f64,
    q: f64,
    terms: Vec<GridTerm>,
}

fn energy_grid(model: &HamiltonianModel) -> Result<Grid> {
    let mut raw: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for (_, op) in model.anchored_terms() {
        let diag = op.block().diag();
        if diag.iter().any(|z| z.im.abs() > 1e-12 * op.norm().max(1.0)) {
            return invalid("diagonal term has non-real entries");
        }
        raw.push((op.support().to_vec(), diag.iter().map(|z| z.re).collect()));
    }
    let scale = raw.iter().flat_map(|t| t.1.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-9 * scale;
    let mut offset = 0.0;
    let mut q = 0.0f64;
    let mut residues: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    for (_, vals) in &raw {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        offset += lo;
        let r: Vec<f64> = vals.iter().map(|v| v - lo).collect();
        for &x in &r {
            if x > tol {
                q = if q == 0.0 { x } else { real_gcd(q, x, tol) };
            }
        }
        residues.push(r);
    }
    if q == 0.0 {
        q = 1.0;
    }
    let mut total_levels = 0usize;
    let mut terms = Vec::with_capacity(raw.len());
    for ((support, _), r) in raw.into_iter().zip(residues) {
        let levels: Vec<i64> = r.iter().map(|x| (x / q).round() as i64).collect();
        if r.iter().zip(&levels).any(|(x, &k)| (x - k as f64 * q).abs() > tol) {
            return invalid("term energies are not commensurate on a common grid");
        }
        total_levels = total_levels.saturating_add(levels.iter().copied().max().unwrap_or(0) as usize);
        terms.push(GridTerm { support, levels });
    }
    if total_levels > MAX_LEVELS {
        return Err(Error::ResourceLimit { dim: total_levels, cap: MAX_LEVELS });
    }
    Ok(Grid { offset, q, terms })
}

/// Index of the term block entry for a configuration given as a site lookup.
fn term_level(t: &GridTerm, d: usize, config: impl Fn(usize) -> usize) -> i64 {
    let idx = t.support.iter().fold(0, |acc, &s| acc * d + config(s));
    t.levels[idx]
}

/// Energy law of a Hamiltonian whose terms are diagonal in the computational
/// basis, in a product state. Only the diagonals of the state factors enter.
pub fn fast_commuting_measure(model: &HamiltonianModel, rho: &QuantumState) -> Result<SpectralMeasure> {
    if !model.is_diagonal() {
        if !model.is_commuting()? {
            return invalid("fast path needs mutually commuting terms");
        }
        return invalid("fast path needs terms diagonal in the computational basis");
    }
    let factors = rho.factors().ok_or_else(|| Error::InvalidParameter("fast path needs a product state".into()))?;
    let n = model.n_sites();
    let d = model.local_dim();
    if rho.n_sites() != n || rho.local_dim() != d {
        return invalid("state and model registers differ");
    }
    let marg: Vec<Vec<f64>> = factors.iter().map(|f| f.diag().iter().map(|z| z.re).collect()).collect();
    let grid = energy_grid(model)?;
    let law = match pinned_prefix(&grid.terms, n, d) {
        Some(p) => pinned_law(&marg, &grid.terms, n, d, p)?,
        None => chain_law(&marg, &grid.terms, n, d)?,
    };
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (k, &w) in law.c.iter().enumerate() {
        if w > 0.0 {
            values.push(grid.offset + grid.q * (law.shift + k as i64) as f64);
            weights.push(w);
        }
    }
    SpectralMeasure::from_atoms(&values, &weights)
}

/// Largest gap between the first and last site of any term, ignoring sites below `p`.
fn memory(terms: &[GridTerm], p: usize) -> usize {
    terms
        .iter()
        .filter_map(|t| {
            let mut free = t.support.iter().filter(|&&s| s >= p);
            let lo = *free.next()?;
            Some(free.last().map_or(0, |&hi| hi - lo))
        })
        .max()
        .unwrap_or(0)
}

fn fits(d: usize, m: usize) -> bool {
    d.checked_pow(m as u32).is_some_and(|s| s <= MAX_STATES)
}

/// Smallest prefix `0..p` whose pinning brings the window within bounds, when
/// the unpinned window is too large (wrap-around terms on rings).
fn pinned_prefix(terms: &[GridTerm], n: usize, d: usize) -> Option<usize> {
    let m = memory(terms, 0);
    if m == 0 || m >= n || fits(d, m) {
        return None;
    }
    (1..n).take_while(|&p| fits(d, p)).find(|&p| fits(d, memory(terms, p)))
}

/// Sum over configurations of sites `0..p` of the law with those sites fixed.
fn pinned_law(marg: &[Vec<f64>], terms: &[GridTerm], n: usize, d: usize, p: usize) -> Result<Poly> {
    let mut law = Poly::default();
    for c in 0..d.pow(p as u32) {
        let pin = |s: usize| (c / d.pow((p - 1 - s) as u32)) % d;
        let w: f64 = (0..p).map(|s| marg[s][pin(s)]).product();
        if w == 0.0 {
            continue;
        }
        let reduced: Vec<GridTerm> = terms.iter().map(|t| reduce_term(t, d, p, pin)).collect();
        let mut pinned_marg = marg.to_vec();
        for (s, m) in pinned_marg.iter_mut().enumerate().take(p) {
            *m = (0..d).map(|x| if x == pin(s) { 1.0 } else { 0.0 }).collect();
        }
        let mut part = chain_law(&pinned_marg, &reduced, n, d)?;
        part.c.iter_mut().for_each(|v| *v *= w);
        law.add_assign(&part);
    }
    Ok(law)
}

/// `t` with its sites below `p` fixed by `pin`.
fn reduce_term(t: &GridTerm, d: usize, p: usize, pin: impl Fn(usize) -> usize) -> GridTerm {
    let free: Vec<usize> = t.support.iter().copied().filter(|&s| s >= p).collect();
    let levels = (0..d.pow(free.len() as u32))
        .map(|f| {
            let digit = |s: usize| match free.iter().position(|&x| x == s) {
                Some(i) => (f / d.pow((free.len() - 1 - i) as u32)) % d,
                None => pin(s),
            };
            term_level(t, d, digit)
        })
        .collect();
    GridTerm { support: free, levels }
}

/// Law of an open arrangement of terms, shifted by the constant terms.
fn chain_law(marg: &[Vec<f64>], terms: &[GridTerm], n: usize, d: usize) -> Result<Poly> {
    let mut by_last: Vec<Vec<&GridTerm>> = vec![Vec::new(); n];
    let mut constant = 0i64;
    for t in terms {
        match t.support.last() {
            Some(&hi) => by_last[hi].push(t),
            None => constant += t.levels[0],
        }
    }
    let m = memory(terms, 0);
    let mut law = if m == 0 {
        site_product(marg, &by_last, d)
    } else if m >= n {
        brute_force(marg, terms, n, d)?
    } else {
        transfer_product(marg, &by_last, n, d, m)?
    };
    law.shift += constant;
    Ok(law)
}

/// All terms act on single sites: the law is a product of per-site polynomials.
fn site_product(marg: &[Vec<f64>], by_last: &[Vec<&GridTerm>], d: usize) -> Poly {
    let polys: Vec<PolyMatrix> = marg
        .iter()
        .zip(by_last)
        .map(|(p, terms)| {
            let mut poly = Poly::default();
            for (x, &w) in p.iter().enumerate().take(d) {
                if w != 0.0 {
                    let k: i64 = terms.iter().map(|t| t.levels[x]).sum();
                    poly.add_assign(&Poly::monomial(k, w));
                }
            }
            PolyMatrix { n: 1, e: vec![poly] }
        })
        .collect();
    product_range(&polys).e.swap_remove(0)
}

fn brute_force(marg: &[Vec<f64>], terms: &[GridTerm], n: usize, d: usize) -> Result<Poly> {
    let dim = crate::operator_algebra::hilbert_dim(n, d)?;
    let mut law = Poly::default();
    for i in 0..dim {
        let digit = |s: usize| (i / d.pow((n - 1 - s) as u32)) % d;
        let w: f64 = (0..n).map(|s| marg[s][digit(s)]).product();
        if w != 0.0 {
            let k: i64 = terms.iter().filter(|t| !t.support.is_empty()).map(|t| term_level(t, d, digit)).sum();
            law.add_assign(&Poly::monomial(k, w));
        }
    }
    Ok(law)
}

/// Sites `0..m` form the initial window; each later site `s` contributes a
/// transfer matrix from window `(s−m..s)` to window `(s−m+1..=s)`.
fn transfer_product(marg: &[Vec<f64>], by_last: &[Vec<&GridTerm>], n: usize, d: usize, m: usize) -> Result<Poly> {
    let states = d.checked_pow(m as u32).filter(|&s| s <= MAX_STATES).ok_or(Error::ResourceLimit { dim: d.saturating_pow(m as u32), cap: MAX_STATES })?;
    // Initial vector over configurations of sites 0..m.
    let mut init = vec![Poly::default(); states];
    for (c, slot) in init.iter_mut().enumerate() {
        let digit = |s: usize| (c / d.pow((m - 1 - s) as u32)) % d;
        let w: f64 = (0..m).map(|s| marg[s][digit(s)]).product();
        if w != 0.0 {
            let k: i64 = (0..m).flat_map(|s| by_last[s].iter()).map(|t| term_level(t, d, digit)).sum();
            *slot = Poly::monomial(k, w);
        }
    }
    let mats: Vec<PolyMatrix> = (m..n)
        .map(|s| {
            let mut e = vec![Poly::default(); states * states];
            for a in 0..states {
                for x in 0..d {
                    let w = marg[s][x];
                    if w == 0.0 {
                        continue;
                    }
                    // Window sites s−m..=s, site s is the last digit.
                    let full = a * d + x;
                    let digit = |site: usize| (full / d.pow((s - site) as u32)) % d;
                    let k: i64 = by_last[s].iter().map(|t| term_level(t, d, digit)).sum();
                    let b = full % states;
                    e[a * states + b] = Poly::monomial(k, w);
                }
            }
            PolyMatrix { n: states, e }
        })
        .collect();
    let prod = product_range(&mats);
    let mut law = Poly::default();
    for (a, v) in init.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        for b in 0..states {
            let entry = &prod.e[a * states + b];
            if !entry.is_zero() {
                law.add_assign(&v.mul(entry));
            }
        }
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::operator_algebra::{build_hamiltonian, LocalOperator, Term};
    use crate::spectral::spectral_measure;
    use crate::Matrix;
    use proptest::prelude::*;

    fn model(n: usize, terms: Vec<(usize, &str, Vec<usize>, f64)>) -> HamiltonianModel {
        let lattice = Lattice::chain(n).unwrap();
        let terms: Vec<Term> = terms.into_iter().map(|(a, p, s, c)| Term { anchor: a, op: LocalOperator::pauli(p, &s, c).unwrap() }).collect();
        build_hamiltonian(&terms, &lattice).unwrap()
    }

    fn assert_same(a: &SpectralMeasure, b: &SpectralMeasure, tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.atoms().iter().zip(b.atoms()) {
            assert!((x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() < tol, "{x:?} vs {y:?}");
        }
    }

    #[test]
    fn convolution_paths_agree() {
        let a: Vec<f64> = (0..300).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        let b: Vec<f64> = (0..200).map(|i| ((i * 13) % 7) as f64 / 7.0).collect();
        let fast = convolve(&a, &b);
        let mut direct = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                direct[i + j] += x * y;
            }
        }
        for (x, y) in fast.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn field_sum_is_binomial() {
        let n = 20;
        let m = model(n, (0..n).map(|i| (i, "Z", vec![i], 1.0)).collect());
        let law = fast_commuting_measure(&m, &QuantumState::maximally_mixed(n, 2)).unwrap();
        assert_eq!(law.len(), n + 1);
        let mut binom = 1.0f64;
        for (k, &(e, w)) in law.atoms().iter().enumerate() {
            assert_eq!(e, 2.0 * k as f64 - n as f64);
            assert!((w - binom / 2f64.powi(n as i32)).abs() < 1e-15);
            binom = binom * (n - k) as f64 / (k + 1) as f64;
        }
    }

    #[test]
    fn single_term_law() {
        let m = model(2, vec![(0, "ZZ", vec![0, 1], 0.5)]);
        let law = fast_commuting_measure(&m, &QuantumState::maximally_mixed(2, 2)).unwrap();
        assert_eq!(law.atoms(), &[(-0.5, 0.5), (0.5, 0.5)]);
    }

    #[test]
    fn zz_chain_matches_dense() {
        let n = 12;
        let m = model(n, (0..n - 1).map(|i| (i, "ZZ", vec![i, i + 1], 1.0)).collect());
        let rho = QuantumState::maximally_mixed(n, 2);
        assert_same(&fast_commuting_measure(&m, &rho).unwrap(), &spectral_measure(&m.dense().unwrap(), &rho).unwrap(), 1e-12);
    }

    #[test]
    fn non_commuting_rejected() {
        let m = model(2, vec![(0, "X", vec![0], 1.0), (1, "ZZ", vec![0, 1], 1.0)]);
        assert!(matches!(fast_commuting_measure(&m, &QuantumState::maximally_mixed(2, 2)), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn large_chain_is_fast() {
        let n = 1 << 16;
        let m = model(n, (0..n - 1).map(|i| (i, "ZZ", vec![i, i + 1], 1.0)).collect());
        let law = fast_commuting_measure(&m, &QuantumState::maximally_mixed(n, 2)).unwrap();
        assert!((law.variance() - (n - 1) as f64).abs() < 1e-6 * n as f64);
    }

    #[test]
    fn ring_wraps_through_pinned_sites() {
        let n = 11;
        let lattice = Lattice::ring(n).unwrap();
        let mut terms: Vec<Term> = (0..n).map(|i| Term { anchor: i, op: LocalOperator::pauli("ZZ", &[i, (i + 1) % n], 1.0 + 0.5 * (i % 3) as f64).unwrap() }).collect();
        terms.extend((0..n).map(|i| Term { anchor: i, op: LocalOperator::pauli("ZZ", &[i, (i + 2) % n], -0.5).unwrap() }));
        terms.push(Term { anchor: 3, op: LocalOperator::pauli("Z", &[3], 1.5).unwrap() });
        let m = build_hamiltonian(&terms, &lattice).unwrap();
        let rho = QuantumState::product((0..n).map(|s| bloch_diag(0.1 + 0.07 * s as f64)).collect()).unwrap();
        assert_same(&fast_commuting_measure(&m, &rho).unwrap(), &spectral_measure(&m.dense().unwrap(), &rho).unwrap(), 1e-12);
    }

    fn bloch_diag(p: f64) -> Matrix {
        Matrix::from_real_diag(&[p, 1.0 - p])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_dense_on_random_commuting_models(
            n in 3usize..8,
            couplings in proptest::collection::vec(-2i32..=2, 24),
            probs in proptest::collection::vec(0.0f64..1.0, 8),
            range in 1usize..4,
        ) {
            // Diagonal terms on windows of up to `range` sites plus fields, all half-integer.
            let mut terms = Vec::new();
            let mut k = 0;
            for i in 0..n {
                terms.push((i, "Z".to_string(), vec![i], couplings[k % 24] as f64 * 0.5));
                k += 1;
                let j = (i + range).min(n - 1);
                if j > i {
                    terms.push((i, "Z".repeat(2), vec![i, j], couplings[k % 24] as f64));
                    k += 1;
                }
            }
            let terms: Vec<(usize, &str, Vec<usize>, f64)> = terms.iter().map(|(a, p, s, c)| (*a, p.as_str(), s.clone(), *c)).collect();
            let m = model(n, terms);
            let rho = QuantumState::product((0..n).map(|s| bloch_diag(probs[s])).collect()).unwrap();
            let fast = fast_commuting_measure(&m, &rho).unwrap();
            let dense = spectral_measure(&m.dense().unwrap(), &rho).unwrap();
            assert_same(&fast, &dense, 1e-12);
        }
    }
}
