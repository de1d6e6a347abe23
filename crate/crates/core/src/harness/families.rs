//! Named model, state and decay families shared by sweeps and the CLI.
//!
//! Each family has a compact text form (`tfim:0.5`, `tilted:0.3`, `exp:1.0`)
//! used both on the command line and in JSON configs.

use crate::error::{invalid, Error, Result};
use crate::lattice::{dimension_certificate, Lattice};
use crate::operator_algebra::{build_hamiltonian, HamiltonianModel, LocalOperator, Term};
use crate::states::{gibbs_state, DecayModel, QuantumState};
use crate::{Complex64, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

fn split_param(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((name, p)) => (name, Some(p)),
        None => (s, None),
    }
}

fn parse_f64(p: Option<&str>, default: f64, what: &str) -> Result<f64> {
    match p {
        None => Ok(default),
        Some(t) => t.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::InvalidParameter(format!("{what}: cannot parse `{t}`"))),
    }
}

macro_rules! text_serde {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
    };
}

/// Hamiltonian template plus lattice shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelFamily {
    /// `h_j = J Z_j Z_{j+1}`.
    ZzChain { coupling: f64, periodic: bool },
    /// `h_j = −Z_j Z_{j+1} − g X_j`.
    Tfim { g: f64, periodic: bool },
    /// `h_j = h Z_j`: under `I/2^N` the energy is a shifted binomial.
    Field { h: f64 },
    /// Seeded random nearest-neighbour model on a chain: `XX, YY, ZZ, XZ` bonds and an `X` field, coefficients in `[−1, 1)`.
    RandomTwoLocal,
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelFamily::ZzChain { coupling, periodic } => {
                write!(f, "{}", if periodic { "zz-ring" } else { "zz-chain" })?;
                if coupling != 1.0 {
                    write!(f, ":{coupling}")?;
                }
                Ok(())
            }
            ModelFamily::Tfim { g, periodic } => write!(f, "{}:{g}", if periodic { "tfim-ring" } else { "tfim" }),
            ModelFamily::Field { h } => write!(f, "field:{h}"),
            ModelFamily::RandomTwoLocal => write!(f, "random-2local"),
        }
    }
}

impl FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = split_param(s.trim());
        let fam = match name {
            "zz-chain" => ModelFamily::ZzChain { coupling: parse_f64(p, 1.0, "coupling")?, periodic: false },
            "zz-ring" => ModelFamily::ZzChain { coupling: parse_f64(p, 1.0, "coupling")?, periodic: true },
            "tfim" => ModelFamily::Tfim { g: parse_f64(p, 1.0, "field g")?, periodic: false },
            "tfim-ring" => ModelFamily::Tfim { g: parse_f64(p, 1.0, "field g")?, periodic: true },
            "field" | "binomial" => ModelFamily::Field { h: parse_f64(p, 1.0, "field h")? },
            "random-2local" if p.is_none() => ModelFamily::RandomTwoLocal,
            _ => return invalid(format!("unknown model family `{s}` (zz-chain, zz-ring, tfim[:g], tfim-ring[:g], field[:h], random-2local)")),
        };
        if let ModelFamily::ZzChain { coupling: 0.0, .. } | ModelFamily::Field { h: 0.0 } = fam {
            return invalid("a zero coupling gives a trivial Hamiltonian");
        }
        Ok(fam)
    }
}
text_serde!(ModelFamily);

impl ModelFamily {
    pub fn lattice(&self, n: usize) -> Result<Lattice> {
        match self {
            ModelFamily::ZzChain { periodic: true, .. } | ModelFamily::Tfim { periodic: true, .. } => Lattice::ring(n),
            _ => Lattice::chain(n),
        }
    }

    /// Model on `n` sites; `seed` only matters for the random family.
    pub fn build(&self, n: usize, seed: u64) -> Result<HamiltonianModel> {
        if n < 2 && !matches!(self, ModelFamily::Field { .. }) {
            return invalid(format!("{self} needs at least 2 sites"));
        }
        let lattice = self.lattice(n)?;
        let bonds = |periodic: bool| -> Vec<(usize, usize)> {
            let count = if periodic && n > 2 { n } else { n - 1 };
            (0..count).map(|i| (i, (i + 1) % n)).collect()
        };
        let mut terms = Vec::new();
        match *self {
            ModelFamily::ZzChain { coupling, periodic } => {
                for (i, j) in bonds(periodic) {
                    terms.push(Term { anchor: i, op: LocalOperator::pauli("ZZ", &[i, j], coupling)? });
                }
            }
            ModelFamily::Tfim { g, periodic } => {
                for (i, j) in bonds(periodic) {
                    terms.push(Term { anchor: i, op: LocalOperator::pauli("ZZ", &[i, j], -1.0)? });
                }
                if g != 0.0 {
                    for i in 0..n {
                        terms.push(Term { anchor: i, op: LocalOperator::pauli("X", &[i], -g)? });
                    }
                }
            }
            ModelFamily::Field { h } => {
                for i in 0..n {
                    terms.push(Term { anchor: i, op: LocalOperator::pauli("Z", &[i], h)? });
                }
            }
            ModelFamily::RandomTwoLocal => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, n));
                for i in 0..n - 1 {
                    for p in ["XX", "YY", "ZZ", "XZ"] {
                        terms.push(Term { anchor: i, op: LocalOperator::pauli(p, &[i, i + 1], rng.gen_range(-1.0..1.0))? });
                    }
                    terms.push(Term { anchor: i, op: LocalOperator::pauli("X", &[i], rng.gen_range(-1.0..1.0))? });
                }
            }
        }
        build_hamiltonian(&terms, &lattice)
    }
}

/// Per-size seed so that rows of a sweep are independent of each other.
pub fn mix_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// State family evaluated on a given model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateFamily {
    MaximallyMixed,
    BasisZero,
    /// `⊗ |ψ⟩⟨ψ|` with `|ψ⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    Tilted { theta: f64 },
    /// `e^{−βH}/Z` of the model itself.
    Gibbs { beta: f64 },
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateFamily::MaximallyMixed => write!(f, "maximally-mixed"),
            StateFamily::BasisZero => write!(f, "basis-zero"),
            StateFamily::Tilted { theta } => write!(f, "tilted:{theta}"),
            StateFamily::Gibbs { beta } => write!(f, "gibbs:{beta}"),
        }
    }
}

impl FromStr for StateFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = split_param(s.trim());
        match (name, p) {
            ("maximally-mixed", None) => Ok(StateFamily::MaximallyMixed),
            ("basis-zero", None) => Ok(StateFamily::BasisZero),
            ("tilted", _) => Ok(StateFamily::Tilted { theta: parse_f64(p, std::f64::consts::FRAC_PI_4, "tilt angle")? }),
            ("gibbs", Some(_)) => {
                let beta = parse_f64(p, 0.0, "inverse temperature")?;
                if beta < 0.0 {
                    return invalid("inverse temperature must be nonnegative");
                }
                Ok(StateFamily::Gibbs { beta })
            }
            _ => invalid(format!("unknown state family `{s}` (maximally-mixed, basis-zero, tilted[:θ], gibbs:β)")),
        }
    }
}
text_serde!(StateFamily);

impl StateFamily {
    pub fn is_product(&self) -> bool {
        !matches!(self, StateFamily::Gibbs { .. })
    }

    pub fn build(&self, model: &HamiltonianModel) -> Result<QuantumState> {
        let n = model.n_sites();
        let d = model.local_dim();
        match *self {
            StateFamily::MaximallyMixed => Ok(QuantumState::maximally_mixed(n, d)),
            StateFamily::BasisZero => Ok(QuantumState::basis_zero(n, d)),
            StateFamily::Tilted { theta } => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                let f = Matrix::from_fn(2, 2, |i, j| {
                    let a = if i == 0 { c } else { s };
                    let b = if j == 0 { c } else { s };
                    Complex64::new(a * b, 0.0)
                });
                QuantumState::product(vec![f; n])
            }
            StateFamily::Gibbs { beta } => {
                if model.is_commuting()? {
                    QuantumState::commuting_gibbs(model, beta)
                } else {
                    gibbs_state(&model.dense()?, beta, n, d)
                }
            }
        }
    }
}

/// Correlation-decay family; the algebraic exponent picks up the lattice dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DecaySpec {
    None,
    Exponential { xi: f64, l0: f64 },
    Algebraic { beta: f64, l0: f64 },
}

impl fmt::Display for DecaySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DecaySpec::None => write!(f, "none"),
            DecaySpec::Exponential { xi, l0 } => write!(f, "exp:{xi}:{l0}"),
            DecaySpec::Algebraic { beta, l0 } => write!(f, "alg:{beta}:{l0}"),
        }
    }
}

impl FromStr for DecaySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or("");
        let first = parts.next();
        let l0 = parse_f64(parts.next(), 1.0, "L₀")?;
        if parts.next().is_some() {
            return invalid(format!("too many fields in decay `{s}`"));
        }
        if !(l0 > 0.0) {
            return invalid("L₀ must be positive");
        }
        match (name, first) {
            ("none", None) => Ok(DecaySpec::None),
            ("exp", Some(_)) => {
                let xi = parse_f64(first, 1.0, "ξ")?;
                if !(xi > 0.0) {
                    return invalid("ξ must be positive");
                }
                Ok(DecaySpec::Exponential { xi, l0 })
            }
            ("alg", Some(_)) => {
                let beta = parse_f64(first, 1.0, "β")?;
                if !(beta > 0.0) {
                    return invalid("β must be positive");
                }
                Ok(DecaySpec::Algebraic { beta, l0 })
            }
            _ => invalid(format!("unknown decay `{s}` (none, exp:ξ[:L₀], alg:β[:L₀])")),
        }
    }
}
text_serde!(DecaySpec);

impl DecaySpec {
    pub fn model(&self, d: u32) -> DecayModel {
        match *self {
            DecaySpec::None => DecayModel::Uncorrelated,
            DecaySpec::Exponential { xi, l0 } => DecayModel::Exponential { l0, xi },
            DecaySpec::Algebraic { beta, l0 } => DecayModel::Algebraic { l0, beta, d },
        }
    }
}

/// `(D, c_D)` of the model's lattice.
pub fn lattice_constants(model: &HamiltonianModel) -> (u32, f64) {
    let cert = dimension_certificate(model.lattice());
    (cert.d, cert.c_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{fast_commuting_measure, spectral_measure};

    #[test]
    fn text_forms_round_trip() {
        for s in ["zz-chain", "zz-ring:0.5", "tfim:1", "tfim-ring:0.25", "field:2", "random-2local"] {
            let m: ModelFamily = s.parse().unwrap();
            assert_eq!(m.to_string().parse::<ModelFamily>().unwrap(), m);
        }
        for s in ["maximally-mixed", "basis-zero", "tilted:0.3", "gibbs:0.5"] {
            let st: StateFamily = s.parse().unwrap();
            assert_eq!(st.to_string().parse::<StateFamily>().unwrap(), st);
        }
        for s in ["none", "exp:1.5", "alg:2:0.5"] {
            let d: DecaySpec = s.parse().unwrap();
            assert_eq!(d.to_string().parse::<DecaySpec>().unwrap(), d);
        }
        assert!("ising".parse::<ModelFamily>().is_err());
        assert!("exp:-1".parse::<DecaySpec>().is_err());
        assert!("gibbs".parse::<StateFamily>().is_err());
        let json = serde_json::to_string(&ModelFamily::Tfim { g: 0.5, periodic: true }).unwrap();
        assert_eq!(json, "\"tfim-ring:0.5\"");
    }

    #[test]
    fn families_have_expected_structure() {
        let tfim = ModelFamily::Tfim { g: 1.0, periodic: false }.build(5, 0).unwrap();
        assert_eq!(tfim.r(), 1);
        assert!((tfim.e() - 2f64.sqrt()).abs() < 1e-12);
        assert!(!tfim.is_commuting().unwrap());
        let ring = ModelFamily::ZzChain { coupling: 1.0, periodic: true }.build(5, 0).unwrap();
        assert_eq!(ring.anchored_terms().len(), 5);
        assert!(ring.is_diagonal());
        let a = ModelFamily::RandomTwoLocal.build(4, 7).unwrap().dense().unwrap();
        let b = ModelFamily::RandomTwoLocal.build(4, 7).unwrap().dense().unwrap();
        let c = ModelFamily::RandomTwoLocal.build(4, 8).unwrap().dense().unwrap();
        assert_eq!((&a - &b).max_abs(), 0.0);
        assert!((&a - &c).max_abs() > 1e-3);
    }

    #[test]
    fn tilted_state_is_pure_product() {
        let model = ModelFamily::ZzChain { coupling: 1.0, periodic: false }.build(3, 0).unwrap();
        let rho = StateFamily::Tilted { theta: 0.7 }.build(&model).unwrap();
        let dense = rho.density_matrix().unwrap();
        assert!((&dense.matmul(&dense) - &dense).max_abs() < 1e-14);
        // ⟨Z⟩ = cos θ on every site.
        let z = LocalOperator::pauli("Z", &[1], 1.0).unwrap();
        assert!((rho.expect(&z).unwrap().re - 0.7f64.cos()).abs() < 1e-14);
        let fast = fast_commuting_measure(&model, &rho).unwrap();
        let exact = spectral_measure(&model.dense().unwrap(), &rho).unwrap();
        assert!((fast.mean() - exact.mean()).abs() < 1e-12);
    }

    #[test]
    fn gibbs_state_paths() {
        let zz = ModelFamily::ZzChain { coupling: 1.0, periodic: false }.build(3, 0).unwrap();
        let st = StateFamily::Gibbs { beta: 0.4 }.build(&zz).unwrap();
        assert!(!st.is_product());
        let tfim = ModelFamily::Tfim { g: 1.0, periodic: false }.build(3, 0).unwrap();
        let st = StateFamily::Gibbs { beta: 0.4 }.build(&tfim).unwrap();
        assert!((st.density_matrix().unwrap().trace().re - 1.0).abs() < 1e-12);
    }
}
