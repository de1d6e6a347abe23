use crate::{BoundArgs, Cli, ClusterArgs, Command, DimArgs, EsseenArgs, InstanceArgs, LatticeArg, LemmaArgs, PhiArgs, PhiMethod, SpectrumArgs, SweepArgs};
use be_lab::bounds::{product_bound, theorem_bound, BoundReport, ModelParams, TheoremVariant};
use be_lab::decomposition::{verify_ode_residual, LemmaContext, LemmaParams};
use be_lab::esseen::verify_esseen;
use be_lab::harness::{
    bound_for, cluster_suite, compute_row, evaluate_instance, lemma_domination, run_sweep, with_fitted_decay, ClusterSuiteConfig, DecaySpec, EsseenSweep,
    ModelFamily, StateFamily, SweepConfig,
};
use be_lab::lattice::{certificate_for_dimension, dimension_certificate, Lattice, LatticeKind};
use be_lab::spectral::{characteristic_eigen_sum, characteristic_evolution, standardized_dense};
use be_lab::states::{DecayModel, PrefactorConvention};
use be_lab::Error;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;
pub const EXIT_FALSIFIED: u8 = 4;

/// Result of a subcommand: JSON payload, human summary and exit code.
struct Outcome {
    json: Value,
    text: String,
    code: u8,
}

impl Outcome {
    fn new(json: Value, text: String, code: u8) -> Self {
        Self { json, text, code }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::InvalidState(_) | Error::ResourceLimit { .. } | Error::Json(_) => EXIT_INVALID,
        Error::WindowViolation(_) | Error::EnvelopeInapplicable { .. } | Error::DegenerateSpectrum | Error::InsufficientData(_) => EXIT_PRECONDITION,
        Error::NoConvergence | Error::Io(_) | Error::Csv(_) => EXIT_FAILURE,
    }
}

pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Delta(a) => delta(a),
        Command::Phi(a) => phi(a),
        Command::Esseen(a) => esseen(a),
        Command::Bound(a) => bound(a),
        Command::Sweep(a) => sweep(a),
        Command::VerifyLemma1(a) => verify_lemma1(a),
        Command::ClusterCheck(a) => cluster_check(a),
        Command::DimCert(a) => dim_cert(a),
    };
    match result {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON output"));
            } else {
                print!("{}", out.text);
            }
            out.code
        }
        Err(e) => {
            let code = exit_code(&e);
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&json!({ "error": e.to_string(), "exit_code": code })).expect("JSON output"));
            }
            eprintln!("error: {e}");
            code
        }
    }
}

fn read_config(args: &InstanceArgs) -> be_lab::Result<Option<SweepConfig>> {
    match &args.config {
        None => Ok(None),
        Some(path) => SweepConfig::from_json(&fs::read_to_string(path)?).map(Some),
    }
}

/// Config for a single instance; flags override the file, the default model is `zz-chain` in `I/2^N`.
fn instance_config(args: &InstanceArgs) -> be_lab::Result<(SweepConfig, usize)> {
    let base = read_config(args)?;
    let n = match (args.n, &base) {
        (Some(n), _) => n,
        (None, Some(cfg)) if cfg.n_list.len() == 1 => cfg.n_list[0],
        _ => return Err(Error::InvalidParameter("--n is required".into())),
    };
    let mut cfg = base.unwrap_or_else(|| SweepConfig::new(ModelFamily::ZzChain { coupling: 1.0, periodic: false }, StateFamily::MaximallyMixed, vec![n]));
    cfg.n_list = vec![n];
    apply_overrides(&mut cfg, args);
    cfg.validate()?;
    Ok((cfg, n))
}

fn apply_overrides(cfg: &mut SweepConfig, args: &InstanceArgs) {
    if let Some(m) = args.model {
        cfg.model = m;
    }
    if let Some(s) = args.state {
        cfg.state = s;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.path {
        cfg.path = p;
    }
    if args.c0.is_some() {
        cfg.c0 = args.c0;
    }
    if args.decay.is_some() {
        cfg.decay = args.decay;
    }
}

fn spectrum(a: SpectrumArgs) -> be_lab::Result<Outcome> {
    let (cfg, n) = instance_config(&a.instance)?;
    let ev = evaluate_instance(&cfg, n)?;
    let measure = if a.standardized { &ev.standardized.measure } else { &ev.raw };
    if let Some(path) = &a.out {
        measure.write_csv(fs::File::create(path)?)?;
    }
    let mut text = format!("# N = {n}, path = {}, atoms = {}, mean = {}, std = {}\n", ev.path.as_str(), measure.len(), ev.raw.mean(), ev.raw.std());
    for &(e, w) in measure.atoms() {
        let _ = writeln!(text, "{e:.16e} {w:.16e}");
    }
    let json = json!({
        "n": n,
        "path": ev.path,
        "standardized": a.standardized,
        "mean": ev.raw.mean(),
        "std": ev.raw.std(),
        "atoms": measure.atoms(),
    });
    Ok(Outcome::new(json, text, EXIT_OK))
}

fn delta(a: InstanceArgs) -> be_lab::Result<Outcome> {
    let (cfg, n) = instance_config(&a)?;
    let row = compute_row(&cfg, n)?;
    let text = format!(
        "N = {n}\npath = {}\nsigma2 = {}\nvariance_ok = {}\ndelta = {}\nesseen_rhs_min = {}\nthm_bound = {}\nbound_status = {}\n",
        row.path.map(|p| p.as_str()).unwrap_or("-"),
        fmt_opt(row.sigma2),
        row.variance_ok.map(|b| b.to_string()).unwrap_or_default(),
        fmt_opt(row.delta),
        fmt_opt(row.esseen_rhs_min),
        fmt_opt(row.thm_bound),
        row.bound_status,
    );
    Ok(Outcome::new(serde_json::to_value(&row)?, text, EXIT_OK))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_else(|| "NA".into())
}

fn phi(a: PhiArgs) -> be_lab::Result<Outcome> {
    if a.points < 2 || !(a.omega_max > 0.0) {
        return Err(Error::InvalidParameter("need --points ≥ 2 and --omega-max > 0".into()));
    }
    let (cfg, n) = instance_config(&a.instance)?;
    let ev = evaluate_instance(&cfg, n)?;
    let grid: Vec<f64> = (0..a.points).map(|i| a.omega_max * i as f64 / (a.points - 1) as f64).collect();
    let mut curves = Vec::new();
    if a.method != PhiMethod::Evolution {
        curves.push(characteristic_eigen_sum(&ev.standardized.measure, &grid)?);
    }
    if a.method != PhiMethod::EigenSum {
        let model = cfg.model.build(n, cfg.seed)?;
        let rho = cfg.state.build(&model)?;
        let h_hat = standardized_dense(&model.dense()?, ev.standardized.mu_h, ev.standardized.sigma_h);
        curves.push(characteristic_evolution(&rho, &h_hat, &grid)?);
    }
    if let Some(path) = &a.out {
        curves[0].write_csv(fs::File::create(path)?)?;
    }
    let max_gap = if curves.len() == 2 { Some(curves[0].values.iter().zip(&curves[1].values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)) } else { None };
    let mut text = String::from("# omega re_phi im_phi\n");
    for (w, v) in curves[0].grid.iter().zip(&curves[0].values) {
        let _ = writeln!(text, "{w:.16e} {:.16e} {:.16e}", v.re, v.im);
    }
    if let Some(g) = max_gap {
        let _ = writeln!(text, "# max |eigen_sum − evolution| = {g:.3e}");
    }
    Ok(Outcome::new(json!({ "n": n, "curves": curves, "max_path_gap": max_gap }), text, EXIT_OK))
}

fn esseen(a: EsseenArgs) -> be_lab::Result<Outcome> {
    let (cfg, n) = instance_config(&a.instance)?;
    let ev = evaluate_instance(&cfg, n)?;
    let omegas = if a.omegas.is_empty() { vec![1.0, 2.0, 5.0, 10.0, (n as f64).sqrt()] } else { a.omegas.clone() };
    let rep = verify_esseen(&ev.standardized.measure, &omegas, a.c, a.tol)?;
    let mut text = format!("delta = {:.16e}\n", rep.delta);
    for p in &rep.omega_sweep {
        let _ = writeln!(text, "Omega = {:<10} rhs = {:.16e} {}", p.omega, p.rhs, if rep.delta <= p.rhs { "ok" } else { "VIOLATED" });
    }
    let _ = writeln!(text, "holds = {}, C_min = {:.6e}", rep.holds, rep.c_min);
    let code = if rep.holds { EXIT_OK } else { EXIT_FALSIFIED };
    Ok(Outcome::new(serde_json::to_value(&rep)?, text, code))
}

fn report_text(rep: &BoundReport) -> String {
    let mut text = format!("variant = {:?}\nN = {}\n", rep.variant, rep.n);
    if let (Some(l), Some(m), Some(k)) = (rep.ell, rep.m, rep.k) {
        let _ = writeln!(text, "(ℓ, M, K) = ({l}, {m}, {k})");
    }
    let _ = writeln!(text, "Omega = {:.6e}\ndelta_bound = {:.16e}\nrate = {:.6e}", rep.omega, rep.delta_bound, rep.rate);
    if let Some(e) = rep.lemma_estimate {
        let _ = writeln!(text, "lemma_estimate = {e:.16e}");
    }
    text.push_str("preconditions:\n");
    for p in &rep.preconditions {
        let _ = writeln!(text, "  [{}] {}", if p.holds { "ok" } else { "FAIL" }, p.name);
    }
    let _ = writeln!(text, "applicable = {}", rep.applicable);
    text
}

fn report_outcome(rep: BoundReport) -> be_lab::Result<Outcome> {
    let code = if rep.applicable { EXIT_OK } else { EXIT_PRECONDITION };
    let text = report_text(&rep);
    Ok(Outcome::new(serde_json::to_value(&rep)?, text, code))
}

fn bound(a: BoundArgs) -> be_lab::Result<Outcome> {
    let convention: PrefactorConvention = a.convention.into();
    if a.instance.model.is_some() || a.instance.config.is_some() {
        let (mut cfg, n) = instance_config(&a.instance)?;
        cfg.convention = convention;
        cfg.epsilon = a.epsilon;
        if cfg.decay.is_none() {
            cfg = with_fitted_decay(&cfg, n)?;
        }
        let ev = evaluate_instance(&cfg, n)?;
        return match (a.ell, a.m, a.k) {
            (Some(ell), Some(m), Some(k)) => {
                let rep = lemma_domination(&ev, ell, m, k, a.c, a.points)?;
                let mut text = format!("(ℓ, M, K) = ({ell}, {m}, {k}), window (0, {:.6e}]\ndelta = {:.16e}\n", rep.omega_max, rep.delta);
                for (p, (_, est)) in rep.points.iter().zip(&rep.estimates) {
                    let _ = writeln!(text, "omega = {:.6e} exact = {:.6e} envelope = {:.6e} delta_estimate = {:.6e}", p.omega, p.exact, p.envelope, est);
                }
                let _ = writeln!(text, "violations = {}", rep.violations);
                let code = if rep.violations == 0 { EXIT_OK } else { EXIT_FALSIFIED };
                Ok(Outcome::new(serde_json::to_value(&rep)?, text, code))
            }
            (None, None, None) => match bound_for(&ev.params, a.c, a.epsilon)? {
                Some(rep) => report_outcome(rep),
                None => Err(Error::InsufficientData("correlated state without a decay model".into())),
            },
            _ => Err(Error::InvalidParameter("--ell, --m and --k go together".into())),
        };
    }
    let n = a.instance.n.ok_or_else(|| Error::InvalidParameter("--n is required".into()))?;
    let c0 = a.instance.c0.unwrap_or(0.5);
    let sigma2 = a.sigma2.unwrap_or(c0 * a.e * a.e * n as f64);
    let decay = a.instance.decay.unwrap_or(DecaySpec::None);
    let params = ModelParams {
        n,
        d: a.d,
        c_d: a.c_d,
        r: a.r,
        e: a.e,
        c0,
        sigma_h: sigma2.max(0.0).sqrt(),
        decay: decay.model(a.d),
        convention,
        commuting: a.commuting,
        product_state: decay == DecaySpec::None,
    };
    let rep = match params.decay {
        DecayModel::Uncorrelated => product_bound(&params, a.c)?,
        DecayModel::Exponential { .. } => theorem_bound(&params, TheoremVariant::Exponential, a.epsilon, a.c)?,
        DecayModel::Algebraic { .. } => {
            let v = if convention == PrefactorConvention::Without { TheoremVariant::AlgebraicStrong } else { TheoremVariant::Algebraic };
            theorem_bound(&params, v, a.epsilon, a.c)?
        }
    };
    report_outcome(rep)
}

fn sweep(a: SweepArgs) -> be_lab::Result<Outcome> {
    let mut cfg = match read_config(&a.instance)? {
        Some(cfg) => cfg,
        None => SweepConfig::new(ModelFamily::ZzChain { coupling: 1.0, periodic: false }, StateFamily::MaximallyMixed, Vec::new()),
    };
    apply_overrides(&mut cfg, &a.instance);
    if !a.n_list.is_empty() {
        cfg.n_list = a.n_list.clone();
    } else if let Some(n) = a.instance.n {
        cfg.n_list = vec![n];
    }
    if let Some(out) = &a.out {
        cfg.output.dir = Some(out.clone());
    }
    if a.no_esseen {
        cfg.esseen = EsseenSweep::disabled();
    }
    let res = run_sweep(&cfg)?;
    let mut text = String::from("N      path            Delta                  Delta*sqrtN   esseen_rhs_min  thm_bound\n");
    for r in &res.rows {
        match &r.skipped {
            Some(reason) => {
                let _ = writeln!(text, "{:<6} skipped: {reason}", r.n);
            }
            None => {
                let d = r.delta.unwrap_or(f64::NAN);
                let _ = writeln!(
                    text,
                    "{:<6} {:<15} {:<22.16e} {:<13.6} {:<15} {}",
                    r.n,
                    r.path.map(|p| p.as_str()).unwrap_or("-"),
                    d,
                    d * (r.n as f64).sqrt(),
                    r.esseen_rhs_min.map(|x| format!("{x:.6}")).unwrap_or_else(|| "NA".into()),
                    r.thm_bound.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "NA".into()),
                );
            }
        }
    }
    match (&res.fit, &res.fit_error) {
        (Some(f), _) => {
            let _ = writeln!(text, "slope = {:.6} ± {:.6} ({} points)", f.slope, f.stderr, f.points);
        }
        (None, Some(e)) => {
            let _ = writeln!(text, "fit: {e}");
        }
        _ => {}
    }
    Ok(Outcome::new(serde_json::to_value(&res)?, text, EXIT_OK))
}

fn verify_lemma1(a: LemmaArgs) -> be_lab::Result<Outcome> {
    let (cfg, n) = instance_config(&a.instance)?;
    if a.points == 0 || !(a.omega_max >= 0.0) {
        return Err(Error::InvalidParameter("need --points ≥ 1 and --omega-max ≥ 0".into()));
    }
    let model = cfg.model.build(n, cfg.seed)?;
    let rho = cfg.state.build(&model)?;
    let ctx = LemmaContext::new(&model, &rho)?;
    let grid: Vec<f64> = if a.points == 1 { vec![a.omega_max] } else { (0..a.points).map(|i| a.omega_max * i as f64 / (a.points - 1) as f64).collect() };
    let rep = verify_ode_residual(&ctx, LemmaParams::new(a.ell, a.order, a.k), &grid)?;
    let mut text = format!("(ℓ, M, K) = ({}, {}, {})\n", a.ell, a.order, a.k);
    for p in &rep.points {
        let _ = writeln!(text, "omega = {:.4} residual = {:.3e} |phi'| = {:.3e} {}", p.omega, p.residual, p.dphi_abs, if p.ok { "ok" } else { "FAIL" });
    }
    let _ = writeln!(text, "max_residual = {:.3e}\nholds = {}", rep.max_residual, rep.holds);
    let code = if rep.holds { EXIT_OK } else { EXIT_FALSIFIED };
    Ok(Outcome::new(serde_json::to_value(&rep)?, text, code))
}

fn cluster_check(a: ClusterArgs) -> be_lab::Result<Outcome> {
    let cfg = ClusterSuiteConfig { instances: a.instances, seed: a.seed, max_sites: a.max_sites, n_max: a.n_max, order: a.order, grid_points: a.grid_points };
    let rep = cluster_suite(&cfg)?;
    let checks: usize = rep.instances.iter().map(|i| i.derivative_checks + i.support_checks + i.window_checks).sum();
    let text = format!("instances = {}\nchecks = {checks}\nviolations = {}\n", rep.instances.len(), rep.violations);
    let code = if rep.violations == 0 { EXIT_OK } else { EXIT_FALSIFIED };
    Ok(Outcome::new(serde_json::to_value(&rep)?, text, code))
}

fn dim_cert(a: DimArgs) -> be_lab::Result<Outcome> {
    let lattice = match a.lattice {
        LatticeArg::Chain if a.extents.len() == 1 => Lattice::chain(a.extents[0])?,
        LatticeArg::Ring if a.extents.len() == 1 => Lattice::ring(a.extents[0])?,
        LatticeArg::Grid => Lattice::build(LatticeKind::Grid, &a.extents, a.wrap)?,
        _ => return Err(Error::InvalidParameter("chains and rings take a single extent".into())),
    };
    let cert = match a.d {
        Some(d) => certificate_for_dimension(&lattice, d),
        None => dimension_certificate(&lattice),
    };
    let holds = cert.holds_for(&lattice);
    let text = format!("sites = {}\nD = {}\nc_D = {}\nmax_shell_counts = {:?}\nholds = {holds}\n", lattice.n_sites(), cert.d, cert.c_d, cert.max_shell_counts);
    let code = if holds { EXIT_OK } else { EXIT_FALSIFIED };
    Ok(Outcome::new(json!({ "sites": lattice.n_sites(), "certificate": cert, "holds": holds }), text, code))
}
