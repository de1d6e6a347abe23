//! Empirical checks of the inequalities: the commutator-expansion
//! certificates on random 2-local pairs, envelope domination on a suite of
//! small models, and the Esseen inequality on the same suite.

use super::families::{DecaySpec, ModelFamily, StateFamily};
use super::sweep::{evaluate_instance, EsseenSweep, Evaluated, PathChoice, SweepConfig};
use crate::bounds::{lemma_c_constants, phi_envelope, table_constants, delta_estimate, LemmaConstants};
use crate::decomposition::cluster_certificates;
use crate::error::{Error, Result};
use crate::esseen::{verify_esseen, EsseenReport};
use crate::lattice::Lattice;
use crate::operator_algebra::{build_hamiltonian, HamiltonianModel, LocalOperator, Term};
use crate::spectral::kolmogorov_distance;
use crate::states::{fit_alpha, single_site_paulis, DecayModel, DecayModelKind};
use crate::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const PAULIS: [char; 3] = ['X', 'Y', 'Z'];

/// Random nearest-neighbour operator on a chain: every bond carries two
/// random two-site Pauli strings and every site one random field, with
/// coefficients uniform in `[−1, 1)`.
pub fn random_two_local_operator(n: usize, rng: &mut ChaCha8Rng) -> Result<HamiltonianModel> {
    let lattice = Lattice::chain(n)?;
    let mut terms = Vec::new();
    for i in 0..n {
        if i + 1 < n {
            for _ in 0..2 {
                let label: String = [PAULIS[rng.gen_range(0..3)], PAULIS[rng.gen_range(0..3)]].iter().collect();
                terms.push(Term { anchor: i, op: LocalOperator::pauli(&label, &[i, i + 1], rng.gen_range(-1.0..1.0))? });
            }
        }
        let label = PAULIS[rng.gen_range(0..3)].to_string();
        terms.push(Term { anchor: i, op: LocalOperator::pauli(&label, &[i], rng.gen_range(-1.0..1.0))? });
    }
    build_hamiltonian(&terms, &lattice)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSuiteConfig {
    pub instances: usize,
    pub seed: u64,
    /// Sites per instance cycle through `2..=max_sites`.
    pub max_sites: usize,
    /// Highest derivative order checked against the norm bound.
    pub n_max: usize,
    /// Truncation order `M` for the support and window checks.
    pub order: usize,
    /// Points of the `ω` grid, spread over the convergence window.
    pub grid_points: usize,
}

impl Default for ClusterSuiteConfig {
    fn default() -> Self {
        Self { instances: 100, seed: 7, max_sites: 6, n_max: 5, order: 6, grid_points: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInstance {
    pub index: usize,
    pub sites: usize,
    pub rate: f64,
    pub derivative_checks: usize,
    pub support_checks: usize,
    pub window_checks: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSuiteReport {
    pub config: ClusterSuiteConfig,
    pub instances: Vec<ClusterInstance>,
    pub violations: usize,
}

/// Runs the certificates on `instances` seeded random pairs `(X, Y)`. The
/// `ω` grid covers `[0, 1/(2·rate))` of each instance uniformly.
pub fn cluster_suite(config: &ClusterSuiteConfig) -> Result<ClusterSuiteReport> {
    if config.instances == 0 || config.max_sites < 2 || config.grid_points == 0 || config.order < 2 {
        return Err(Error::InvalidParameter("cluster suite needs instances ≥ 1, max_sites ≥ 2, order ≥ 2 and a nonempty grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut instances = Vec::with_capacity(config.instances);
    for index in 0..config.instances {
        let sites = 2 + index % (config.max_sites - 1);
        let x = random_two_local_operator(sites, &mut rng)?;
        let y = random_two_local_operator(sites, &mut rng)?;
        let probe = cluster_certificates(&x, &y, config.n_max, config.order, &[])?;
        let grid: Vec<f64> = (0..config.grid_points).map(|k| k as f64 / config.grid_points as f64 / (2.0 * probe.rate)).collect();
        let rep = cluster_certificates(&x, &y, config.n_max, config.order, &grid)?;
        instances.push(ClusterInstance {
            index,
            sites,
            rate: rep.rate,
            derivative_checks: rep.derivative_checks.len(),
            support_checks: rep.support_checks.len(),
            window_checks: rep.window_checks.len(),
            violations: rep.violations,
        });
    }
    let violations = instances.iter().map(|i| i.violations).sum();
    Ok(ClusterSuiteReport { config: config.clone(), instances, violations })
}

/// One named instance of the check suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteInstance {
    pub label: String,
    pub config: SweepConfig,
    pub n: usize,
}

fn instance(model: ModelFamily, state: StateFamily, n: usize, seed: u64) -> SuiteInstance {
    let mut config = SweepConfig::new(model, state, vec![n]);
    config.seed = seed;
    config.path = PathChoice::Exact;
    config.esseen = EsseenSweep::disabled();
    SuiteInstance { label: format!("{model} | {state} | N={n}"), config, n }
}

/// Small models spanning commuting and non-commuting terms, product and
/// correlated states.
pub fn suite_instances() -> Vec<SuiteInstance> {
    let zz = ModelFamily::ZzChain { coupling: 1.0, periodic: false };
    let zz_ring = ModelFamily::ZzChain { coupling: 1.0, periodic: true };
    let tfim = ModelFamily::Tfim { g: 1.0, periodic: false };
    let tfim_half = ModelFamily::Tfim { g: 0.5, periodic: true };
    let mm = StateFamily::MaximallyMixed;
    let tilted = StateFamily::Tilted { theta: 0.6 };
    let mut out = Vec::new();
    for n in [4, 6, 8, 10] {
        out.push(instance(zz, mm, n, 0));
        out.push(instance(tfim, mm, n, 0));
    }
    for n in [5, 7] {
        out.push(instance(zz_ring, tilted, n, 0));
        out.push(instance(tfim_half, tilted, n, 0));
    }
    out.push(instance(ModelFamily::Field { h: 1.0 }, mm, 8, 0));
    out.push(instance(tfim, StateFamily::BasisZero, 6, 0));
    for seed in [1, 2, 3] {
        out.push(instance(ModelFamily::RandomTwoLocal, tilted, 6, seed));
    }
    out.push(instance(zz, StateFamily::Gibbs { beta: 0.3 }, 8, 0));
    out.push(instance(tfim, StateFamily::Gibbs { beta: 0.2 }, 6, 0));
    out
}

/// Fitted exponential decay for correlated states (single-site Pauli probes);
/// product states keep `α ≡ 0`.
pub fn with_fitted_decay(config: &SweepConfig, n: usize) -> Result<SweepConfig> {
    let mut out = config.clone();
    if config.state.is_product() {
        return Ok(out);
    }
    let model = config.model.build(n, config.seed)?;
    let rho = config.state.build(&model)?;
    let fit = fit_alpha(&rho, model.lattice(), &single_site_paulis(n), DecayModelKind::Exponential, config.convention)?;
    out.decay = Some(match fit.model {
        DecayModel::Exponential { l0, xi } => DecaySpec::Exponential { xi, l0 },
        DecayModel::Algebraic { l0, beta, .. } => DecaySpec::Algebraic { beta, l0 },
        DecayModel::Uncorrelated => DecaySpec::None,
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationPoint {
    pub omega: f64,
    /// `|φ(ω) − e^{−ω²/2}|` of the standardized measure.
    pub exact: f64,
    pub envelope: f64,
    pub ok: bool,
}

/// Envelope and `Δ` estimate against the exact measure at fixed `(ℓ, M, K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub n: usize,
    pub ell: u64,
    pub m: u64,
    pub k: u64,
    pub omega_max: f64,
    pub constants: LemmaConstants,
    pub points: Vec<DominationPoint>,
    pub delta: f64,
    /// `(Ω, estimate)` over the cutoff grid.
    pub estimates: Vec<(f64, f64)>,
    pub violations: usize,
}

const DOMINATION_SLACK: f64 = 1e-12;

/// Compares `phi_envelope` and `delta_estimate` with the exact `|φ − e^{−ω²/2}|`
/// and `Δ` on `grid_points` frequencies in `(0, min Ω]`. An empty window
/// surfaces as a window-violation or envelope-inapplicable error.
pub fn lemma_domination(ev: &Evaluated, ell: u64, m: u64, k: u64, esseen_c: f64, grid_points: usize) -> Result<DominationReport> {
    let table = table_constants(&ev.params, ell, m, k)?;
    let constants = lemma_c_constants(&ev.params, &table)?;
    if constants.c1 >= 0.5 {
        return Err(Error::EnvelopeInapplicable { c1: constants.c1 });
    }
    let omega_max = table.omega_max();
    let measure = &ev.standardized.measure;
    let grid: Vec<f64> = (1..=grid_points.max(1)).map(|i| (omega_max * i as f64 / grid_points.max(1) as f64).min(omega_max)).collect();
    let mut points = Vec::with_capacity(grid.len());
    let mut estimates = Vec::with_capacity(grid.len());
    let delta = kolmogorov_distance(measure);
    let mut violations = 0;
    for &w in &grid {
        let exact = (measure.characteristic(w) - Complex64::new((-w * w / 2.0).exp(), 0.0)).norm();
        let envelope = phi_envelope(w, &constants, &table)?;
        let ok = exact <= envelope * (1.0 + DOMINATION_SLACK) + DOMINATION_SLACK;
        violations += usize::from(!ok);
        points.push(DominationPoint { omega: w, exact, envelope, ok });
        let est = delta_estimate(&constants, &table, w, esseen_c)?;
        violations += usize::from(delta > est * (1.0 + DOMINATION_SLACK) + DOMINATION_SLACK);
        estimates.push((w, est));
    }
    Ok(DominationReport { n: ev.params.n, ell, m, k, omega_max, constants, points, delta, estimates, violations })
}

/// Outcome of the domination check on one suite instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteDomination {
    pub label: String,
    /// Parameter triples with a nonempty window.
    pub checked: Vec<DominationReport>,
    /// `(ℓ, M, K)` and the reason each remaining triple is not applicable.
    pub not_applicable: Vec<((u64, u64, u64), String)>,
    pub violations: usize,
}

/// Every `(ℓ, M, K)` with `2 ≤ ℓ ≤ 4`, `1 ≤ M < ℓ`, `1 ≤ K ≤ 3` on every suite instance.
pub fn suite_domination(esseen_c: f64, grid_points: usize) -> Result<Vec<SuiteDomination>> {
    let mut out = Vec::new();
    for inst in suite_instances() {
        let config = with_fitted_decay(&inst.config, inst.n)?;
        let ev = evaluate_instance(&config, inst.n)?;
        let mut checked = Vec::new();
        let mut not_applicable = Vec::new();
        for ell in 2..=4u64 {
            for m in 1..ell {
                for k in 1..=3u64 {
                    match lemma_domination(&ev, ell, m, k, esseen_c, grid_points) {
                        Ok(rep) => checked.push(rep),
                        Err(e @ (Error::WindowViolation(_) | Error::EnvelopeInapplicable { .. })) => not_applicable.push(((ell, m, k), e.to_string())),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        let violations = checked.iter().map(|r| r.violations).sum();
        out.push(SuiteDomination { label: inst.label, checked, not_applicable, violations });
    }
    Ok(out)
}

/// Esseen's inequality at `Ω ∈ {1, 2, 5, 10, √N}` on every suite instance.
pub fn suite_esseen(esseen_c: f64, quadrature_tol: f64) -> Result<Vec<(String, EsseenReport)>> {
    suite_instances()
        .into_iter()
        .map(|inst| {
            let ev = evaluate_instance(&inst.config, inst.n)?;
            let omegas = [1.0, 2.0, 5.0, 10.0, (inst.n as f64).sqrt()];
            Ok((inst.label, verify_esseen(&ev.standardized.measure, &omegas, esseen_c, quadrature_tol)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esseen::{DEFAULT_ESSEEN_C, DEFAULT_QUADRATURE_TOL};

    #[test]
    fn small_cluster_suite_is_clean() {
        let cfg = ClusterSuiteConfig { instances: 8, seed: 3, max_sites: 4, ..Default::default() };
        let rep = cluster_suite(&cfg).unwrap();
        assert_eq!(rep.instances.len(), 8);
        assert_eq!(rep.violations, 0);
        assert!(rep.instances.iter().all(|i| i.window_checks == 10 && i.derivative_checks > 0));
        assert_eq!(rep.instances.iter().map(|i| i.sites).collect::<Vec<_>>(), vec![2, 3, 4, 2, 3, 4, 2, 3]);
        assert!(cluster_suite(&ClusterSuiteConfig { instances: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn random_operator_is_seeded() {
        let a = random_two_local_operator(4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap().dense().unwrap();
        let b = random_two_local_operator(4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap().dense().unwrap();
        assert_eq!((&a - &b).max_abs(), 0.0);
    }

    #[test]
    fn domination_on_product_chain() {
        let mut config = SweepConfig::new(ModelFamily::ZzChain { coupling: 1.0, periodic: false }, StateFamily::MaximallyMixed, vec![8]);
        config.esseen = EsseenSweep::disabled();
        let ev = evaluate_instance(&config, 8).unwrap();
        let rep = lemma_domination(&ev, 2, 1, 2, DEFAULT_ESSEEN_C, 10).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.constants.c1, 0.0);
        assert!(rep.omega_max > 0.0);
        // ℓ − M < 1 and 2RℓK > N are not applicable.
        assert!(matches!(lemma_domination(&ev, 2, 2, 2, DEFAULT_ESSEEN_C, 10), Err(Error::WindowViolation(_))));
        assert!(matches!(lemma_domination(&ev, 4, 1, 2, DEFAULT_ESSEEN_C, 10), Err(Error::WindowViolation(_))));
    }

    #[test]
    fn correlated_instance_gets_a_decay_fit() {
        let inst = suite_instances().into_iter().find(|i| i.label.contains("gibbs")).unwrap();
        let cfg = with_fitted_decay(&inst.config, inst.n).unwrap();
        assert!(matches!(cfg.decay, Some(DecaySpec::Exponential { .. })));
    }

    #[test]
    fn esseen_holds_on_a_suite_member() {
        let inst = &suite_instances()[1];
        let ev = evaluate_instance(&inst.config, inst.n).unwrap();
        let rep = verify_esseen(&ev.standardized.measure, &[1.0, 2.0, 5.0], DEFAULT_ESSEEN_C, DEFAULT_QUADRATURE_TOL).unwrap();
        assert!(rep.holds);
    }
}
