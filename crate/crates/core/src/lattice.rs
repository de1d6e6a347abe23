//! Finite metric lattices and their dimension certificate.

use crate::error::{invalid, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Chain,
    Ring,
    Grid,
    Custom,
}

/// A finite set of sites with an integer-valued metric.
///
/// Chains, rings and grids evaluate distances from coordinates; custom
/// lattices keep an explicit distance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpec", into = "LatticeSpec")]
pub struct Lattice {
    kind: LatticeKind,
    extents: Vec<usize>,
    wrap: bool,
    n: usize,
    table: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LatticeSpec {
    kind: LatticeKind,
    #[serde(default)]
    extents: Vec<usize>,
    #[serde(default)]
    wrap: bool,
    #[serde(rename = "N", default)]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<Vec<Vec<u32>>>,
}

impl TryFrom<LatticeSpec> for Lattice {
    type Error = Error;
    fn try_from(spec: LatticeSpec) -> Result<Self> {
        let lattice = match spec.kind {
            LatticeKind::Custom => {
                let metric = spec.metric.ok_or_else(|| Error::InvalidParameter("custom lattice needs a metric".into()))?;
                Lattice::custom(&metric)?
            }
            kind => Lattice::build(kind, &spec.extents, spec.wrap)?,
        };
        if let Some(n) = spec.n {
            if n != lattice.n {
                return invalid(format!("declared N = {n} but extents give {}", lattice.n));
            }
        }
        Ok(lattice)
    }
}

impl From<Lattice> for LatticeSpec {
    fn from(l: Lattice) -> Self {
        let metric = l.table.as_ref().map(|t| t.chunks(l.n).map(<[u32]>::to_vec).collect());
        LatticeSpec { kind: l.kind, extents: l.extents, wrap: l.wrap, n: Some(l.n), metric }
    }
}

impl Lattice {
    /// Builds a chain, ring or (optionally periodic) grid.
    pub fn build(kind: LatticeKind, extents: &[usize], wrap: bool) -> Result<Self> {
        if extents.is_empty() || extents.contains(&0) {
            return invalid("lattice extents must be nonempty and positive");
        }
        let wrap = match kind {
            LatticeKind::Chain | LatticeKind::Ring if extents.len() != 1 => {
                return invalid("chains and rings take exactly one extent");
            }
            LatticeKind::Chain if wrap => return invalid("a wrapped chain is a ring"),
            LatticeKind::Chain => false,
            LatticeKind::Ring => true,
            LatticeKind::Grid => wrap,
            LatticeKind::Custom => return invalid("custom lattices are built from a metric table"),
        };
        let n = extents.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e));
        let n = n.ok_or_else(|| Error::InvalidParameter("lattice too large".into()))?;
        Ok(Self { kind, extents: extents.to_vec(), wrap, n, table: None })
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::build(LatticeKind::Chain, &[n], false)
    }

    pub fn ring(n: usize) -> Result<Self> {
        Self::build(LatticeKind::Ring, &[n], true)
    }

    /// Lattice from an explicit distance table; validated as a metric with
    /// zero diagonal, symmetry and the triangle inequality.
    pub fn custom(metric: &[Vec<u32>]) -> Result<Self> {
        let n = metric.len();
        if n == 0 {
            return invalid("custom metric must have at least one site");
        }
        if metric.iter().any(|row| row.len() != n) {
            return invalid("custom metric must be square");
        }
        for i in 0..n {
            if metric[i][i] != 0 {
                return invalid(format!("d({i},{i}) must be 0"));
            }
            for j in 0..n {
                if metric[i][j] != metric[j][i] {
                    return invalid(format!("metric not symmetric at ({i},{j})"));
                }
                for k in 0..n {
                    if metric[i][k] > metric[i][j] + metric[j][k] {
                        return invalid(format!("triangle inequality fails for ({i},{j},{k})"));
                    }
                }
            }
        }
        let table = metric.iter().flatten().copied().collect();
        Ok(Self { kind: LatticeKind::Custom, extents: vec![n], wrap: false, n, table: Some(table) })
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn wrap(&self) -> bool {
        self.wrap
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// Geometric dimension used for the certificate exponent.
    pub fn geometric_dimension(&self) -> u32 {
        match self.kind {
            LatticeKind::Grid => self.extents.iter().filter(|&&e| e > 1).count().max(1) as u32,
            _ => 1,
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        if let Some(t) = &self.table {
            return t[i * self.n + j] as usize;
        }
        let (mut a, mut b) = (i, j);
        let mut total = 0;
        for &len in self.extents.iter().rev() {
            let (xa, xb) = (a % len, b % len);
            a /= len;
            b /= len;
            let delta = xa.abs_diff(xb);
            total += if self.wrap { delta.min(len - delta) } else { delta };
        }
        total
    }

    /// Minimum pairwise distance between two nonempty site sets.
    pub fn set_distance(&self, a: &[usize], b: &[usize]) -> Result<usize> {
        if a.is_empty() || b.is_empty() {
            return invalid("set distance needs nonempty sets");
        }
        if a.iter().chain(b).any(|&s| s >= self.n) {
            return invalid("site index outside the lattice");
        }
        Ok(a.iter().flat_map(|&i| b.iter().map(move |&j| self.distance(i, j))).min().expect("nonempty"))
    }

    /// Largest distance between any pair of sites.
    pub fn diameter(&self) -> usize {
        (0..self.n).into_par_iter().map(|i| (0..self.n).map(|j| self.distance(i, j)).max().unwrap_or(0)).max().unwrap_or(0)
    }

    fn shell_counts(&self, j: usize) -> Vec<usize> {
        let mut counts = Vec::new();
        for i in 0..self.n {
            let d = self.distance(i, j);
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] += 1;
        }
        counts
    }
}

/// Certified dimension constant: every shell satisfies `count ≤ c_D ℓ^{D−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub d: u32,
    pub c_d: f64,
    /// Entry `ℓ−1` is the largest shell size at distance `ℓ` over all centers.
    pub max_shell_counts: Vec<usize>,
}

impl DimensionCertificate {
    /// Re-checks the shell inequality against a lattice by exhaustive count.
    pub fn holds_for(&self, lattice: &Lattice) -> bool {
        (0..lattice.n_sites()).all(|j| {
            lattice.shell_counts(j).iter().enumerate().skip(1).all(|(l, &c)| c as f64 <= self.c_d * (l as f64).powi(self.d as i32 - 1) * (1.0 + 1e-12))
        })
    }
}

/// Tightest `c_D` at the lattice's geometric dimension.
pub fn dimension_certificate(lattice: &Lattice) -> DimensionCertificate {
    certificate_for_dimension(lattice, lattice.geometric_dimension())
}

/// Tightest `c_D` for a prescribed exponent `D ≥ 1`, by exhaustive shell counts.
pub fn certificate_for_dimension(lattice: &Lattice, d: u32) -> DimensionCertificate {
    let d = d.max(1);
    let max_counts = one_dimensional_shells(lattice).unwrap_or_else(|| exhaustive_shells(lattice));
    let c_d = max_counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 / ((k + 1) as f64).powi(d as i32 - 1))
        .fold(0.0, f64::max);
    DimensionCertificate { d, c_d: if c_d > 0.0 { c_d } else { 1.0 }, max_shell_counts: max_counts }
}

fn exhaustive_shells(lattice: &Lattice) -> Vec<usize> {
    let per_site: Vec<Vec<usize>> = (0..lattice.n_sites()).into_par_iter().map(|j| lattice.shell_counts(j)).collect();
    let depth = per_site.iter().map(Vec::len).max().unwrap_or(1);
    let mut max_counts = vec![0usize; depth.saturating_sub(1)];
    for counts in &per_site {
        for (l, &c) in counts.iter().enumerate().skip(1) {
            max_counts[l - 1] = max_counts[l - 1].max(c);
        }
    }
    max_counts
}

/// Largest shells of chains and rings in closed form.
fn one_dimensional_shells(lattice: &Lattice) -> Option<Vec<usize>> {
    let n = lattice.n_sites();
    match lattice.kind() {
        LatticeKind::Chain if n >= 1 => Some((1..n).map(|l| if 2 * l < n { 2 } else { 1 }).collect()),
        LatticeKind::Ring if n >= 1 => Some((1..=n / 2).map(|l| if 2 * l < n { 2 } else { 1 }).collect()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_shells_match_exhaustive() {
        for n in 1..14 {
            for lat in [Lattice::chain(n).unwrap(), Lattice::ring(n).unwrap()] {
                assert_eq!(one_dimensional_shells(&lat).unwrap(), exhaustive_shells(&lat), "{:?} n={n}", lat.kind());
            }
        }
    }
    use proptest::prelude::*;

    #[test]
    fn elementary_distances() {
        assert_eq!(Lattice::chain(2).unwrap().distance(0, 1), 1);
        assert_eq!(Lattice::ring(4).unwrap().distance(0, 3), 1);
        let g = Lattice::build(LatticeKind::Grid, &[3, 3], false).unwrap();
        assert_eq!(g.distance(0, 8), 4);
    }

    #[test]
    fn set_distance_examples() {
        let c = Lattice::chain(8).unwrap();
        assert_eq!(c.set_distance(&[0], &[3]).unwrap(), 3);
        assert_eq!(c.set_distance(&[1, 2], &[2, 6]).unwrap(), 0);
        assert_eq!(c.set_distance(&[0, 5], &[3]).unwrap(), 2);
        assert!(c.set_distance(&[], &[3]).is_err());
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(Lattice::build(LatticeKind::Grid, &[3, 0], false).is_err());
        assert!(Lattice::build(LatticeKind::Chain, &[4], true).is_err());
    }

    #[test]
    fn certificates_of_standard_lattices() {
        let chain = dimension_certificate(&Lattice::chain(10).unwrap());
        assert_eq!((chain.d, chain.c_d), (1, 2.0));
        let ring = dimension_certificate(&Lattice::ring(8).unwrap());
        assert_eq!((ring.d, ring.c_d), (1, 2.0));
        let grid = dimension_certificate(&Lattice::build(LatticeKind::Grid, &[3, 3], false).unwrap());
        assert_eq!(grid.d, 2);
        assert_eq!(grid.max_shell_counts[0], 4);
        assert!(grid.c_d >= 4.0);
    }

    #[test]
    fn json_round_trip() {
        let g = Lattice::build(LatticeKind::Grid, &[2, 3], true).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"N\":6"));
        let back: Lattice = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"kind":"chain","extents":[4],"wrap":false,"N":5}"#;
        assert!(serde_json::from_str::<Lattice>(bad).is_err());
    }

    #[test]
    fn custom_metric_validation() {
        let ok = vec![vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]];
        assert_eq!(Lattice::custom(&ok).unwrap().distance(0, 2), 2);
        let bad = vec![vec![0, 1, 5], vec![1, 0, 1], vec![5, 1, 0]];
        assert!(Lattice::custom(&bad).is_err());
    }

    fn lattice_strategy() -> impl Strategy<Value = Lattice> {
        prop_oneof![
            (1usize..20).prop_map(|n| Lattice::chain(n).unwrap()),
            (1usize..20).prop_map(|n| Lattice::ring(n).unwrap()),
            (1usize..6, 1usize..6, any::<bool>()).prop_map(|(a, b, w)| Lattice::build(LatticeKind::Grid, &[a, b], w).unwrap()),
            (1usize..4, 1usize..4, 1usize..4).prop_map(|(a, b, c)| Lattice::build(LatticeKind::Grid, &[a, b, c], false).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn metric_axioms(l in lattice_strategy()) {
            let n = l.n_sites();
            for i in 0..n {
                prop_assert_eq!(l.distance(i, i), 0);
                for j in 0..n {
                    prop_assert_eq!(l.distance(i, j), l.distance(j, i));
                    if i != j { prop_assert!(l.distance(i, j) > 0); }
                    for k in 0..n {
                        prop_assert!(l.distance(i, k) <= l.distance(i, j) + l.distance(j, k));
                    }
                }
            }
        }

        #[test]
        fn certificate_rechecks(l in lattice_strategy()) {
            let cert = dimension_certificate(&l);
            prop_assert!(cert.holds_for(&l));
            // Tightness: shrinking c_D breaks the bound whenever some shell is nonempty.
            if n_has_shells(&l) {
                let tighter = DimensionCertificate { c_d: cert.c_d * (1.0 - 1e-9), ..cert.clone() };
                prop_assert!(!tighter.holds_for(&l));
            }
        }

        #[test]
        fn set_distance_symmetric_and_triangle(l in lattice_strategy(), a in proptest::collection::vec(0usize..64, 1..4), b in proptest::collection::vec(0usize..64, 1..4), j in 0usize..64) {
            let n = l.n_sites();
            let a: Vec<usize> = a.into_iter().map(|x| x % n).collect();
            let b: Vec<usize> = b.into_iter().map(|x| x % n).collect();
            let j = j % n;
            let ab = l.set_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, l.set_distance(&b, &a).unwrap());
            let via = l.set_distance(&a, &[j]).unwrap() + b.iter().map(|&x| l.distance(j, x)).max().unwrap();
            prop_assert!(ab <= via);
        }
    }

    fn n_has_shells(l: &Lattice) -> bool {
        l.n_sites() > 1
    }
}
