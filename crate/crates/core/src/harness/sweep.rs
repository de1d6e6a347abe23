//! Scaling sweeps over system size, the `log Δ` vs `log N` fit and the
//! persistent artifacts (CSV, JSON, metadata).

use super::families::{lattice_constants, mix_seed, DecaySpec, ModelFamily, StateFamily};
use crate::bounds::{product_bound, theorem_bound, BoundReport, ModelParams, TheoremVariant};
use crate::error::{invalid, Error, Result};
use crate::esseen::{esseen_rhs, EsseenConfig, DEFAULT_ESSEEN_C, DEFAULT_QUADRATURE_TOL};
use crate::operator_algebra::{dim_cap, hilbert_dim};
use crate::spectral::{fast_commuting_measure, kolmogorov_distance, spectral_measure, standardize, SpectralMeasure, Standardized};
use crate::states::{DecayModel, PrefactorConvention};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    /// Fast path when the model is diagonal and the state a product, exact otherwise.
    #[default]
    Auto,
    Exact,
    FastCommuting,
}

impl std::str::FromStr for PathChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PathChoice::Auto),
            "exact" => Ok(PathChoice::Exact),
            "fast_commuting" | "fast-commuting" | "fast" => Ok(PathChoice::FastCommuting),
            _ => invalid(format!("unknown path `{s}` (auto, exact, fast_commuting)")),
        }
    }
}

/// Path a row was actually computed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathUsed {
    Exact,
    FastCommuting,
}

impl PathUsed {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathUsed::Exact => "exact",
            PathUsed::FastCommuting => "fast_commuting",
        }
    }
}

/// Esseen settings for a sweep: the RHS is minimized over `omegas`, plus `√N` when `include_sqrt_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsseenSweep {
    #[serde(rename = "C")]
    pub c: f64,
    pub quadrature_tol: f64,
    pub omegas: Vec<f64>,
    pub include_sqrt_n: bool,
}

impl Default for EsseenSweep {
    fn default() -> Self {
        Self { c: DEFAULT_ESSEEN_C, quadrature_tol: DEFAULT_QUADRATURE_TOL, omegas: vec![1.0, 2.0, 5.0, 10.0], include_sqrt_n: true }
    }
}

impl EsseenSweep {
    /// Skips the Esseen column entirely.
    pub fn disabled() -> Self {
        Self { omegas: Vec::new(), include_sqrt_n: false, ..Self::default() }
    }

    pub fn is_enabled(&self) -> bool {
        !self.omegas.is_empty() || self.include_sqrt_n
    }

    pub fn cutoffs(&self, n: usize) -> Vec<f64> {
        let mut out = self.omegas.clone();
        if self.include_sqrt_n {
            out.push((n as f64).sqrt());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for &omega in &self.omegas {
            EsseenConfig::new(self.c, omega, self.quadrature_tol)?;
        }
        EsseenConfig::new(self.c, 1.0, self.quadrature_tol).map(|_| ())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    /// Directory receiving `results.csv`, `results.json` and `metadata.json`; nothing is written when absent.
    pub dir: Option<PathBuf>,
}

/// One JSON document describing a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelFamily,
    pub state: StateFamily,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub path: PathChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub esseen: EsseenSweep,
    /// Variance constant; the largest admissible value `σ_H²/(E²N)` is used per row when absent.
    #[serde(default)]
    pub c0: Option<f64>,
    /// Decay model for the theorem bound on non-product states.
    #[serde(default)]
    pub decay: Option<DecaySpec>,
    #[serde(default)]
    pub convention: PrefactorConvention,
    /// `ε` of the algebraic variants.
    #[serde(default)]
    pub epsilon: f64,
}

impl SweepConfig {
    pub fn new(model: ModelFamily, state: StateFamily, n_list: Vec<usize>) -> Self {
        Self {
            model,
            state,
            n_list,
            path: PathChoice::Auto,
            seed: 0,
            output: OutputPaths::default(),
            esseen: EsseenSweep::default(),
            c0: None,
            decay: None,
            convention: PrefactorConvention::default(),
            epsilon: 0.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return invalid("N list is empty");
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("N list must be strictly ascending");
        }
        if self.n_list[0] == 0 {
            return invalid("N must be positive");
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0 && c0.is_finite()) {
                return invalid("c₀ must be positive");
            }
        }
        if !(self.epsilon >= 0.0) {
            return invalid("ε must be nonnegative");
        }
        self.esseen.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

/// One system size of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub path: Option<PathUsed>,
    /// Reason the row could not be computed.
    pub skipped: Option<String>,
    pub sigma2: Option<f64>,
    pub variance_ok: Option<bool>,
    pub c0: Option<f64>,
    pub delta: Option<f64>,
    pub esseen_rhs_min: Option<f64>,
    pub thm_bound: Option<f64>,
    pub bound_variant: Option<TheoremVariant>,
    /// `"ok"`, or `"not-applicable: …"` listing the failed preconditions.
    pub bound_status: String,
    pub runtime_ms: f64,
}

impl SweepRow {
    fn skipped(n: usize, reason: String, runtime_ms: f64) -> Self {
        Self {
            n,
            path: None,
            skipped: Some(reason),
            sigma2: None,
            variance_ok: None,
            c0: None,
            delta: None,
            esseen_rhs_min: None,
            thm_bound: None,
            bound_variant: None,
            bound_status: "not-applicable: row skipped".into(),
            runtime_ms,
        }
    }
}

/// Least-squares fit `log Δ = intercept + slope·log N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub fit: Option<ScalingFit>,
    /// Why the fit is absent.
    pub fit_error: Option<String>,
}

/// Standardized measure of one model instance together with the path used.
pub struct Evaluated {
    pub path: PathUsed,
    pub raw: SpectralMeasure,
    pub standardized: Standardized,
    pub params: ModelParams,
}

/// Builds the instance of size `n` and computes its standardized measure and bound inputs.
pub fn evaluate_instance(config: &SweepConfig, n: usize) -> Result<Evaluated> {
    let model = config.model.build(n, config.seed)?;
    let rho = config.state.build(&model)?;
    let fast_ok = model.is_diagonal() && rho.is_product();
    let path = match config.path {
        PathChoice::FastCommuting => PathUsed::FastCommuting,
        PathChoice::Exact => PathUsed::Exact,
        PathChoice::Auto if fast_ok => PathUsed::FastCommuting,
        PathChoice::Auto => PathUsed::Exact,
    };
    let raw = match path {
        PathUsed::FastCommuting => fast_commuting_measure(&model, &rho)?,
        PathUsed::Exact => {
            hilbert_dim(n, model.local_dim())?;
            spectral_measure(&model.dense()?, &rho)?
        }
    };
    let (d, c_d) = lattice_constants(&model);
    let sigma_h = raw.std();
    if !(sigma_h > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    let c0 = config.c0.unwrap_or_else(|| ModelParams::measured_c0(sigma_h, model.e(), n));
    let standardized = standardize(&raw, c0, model.e(), n)?;
    let decay = if rho.is_product() { DecayModel::Uncorrelated } else { config.decay.unwrap_or(DecaySpec::None).model(d) };
    let params = ModelParams {
        n,
        d,
        c_d,
        r: model.r(),
        e: model.e(),
        c0,
        sigma_h,
        decay,
        convention: config.convention,
        commuting: model.is_commuting()?,
        product_state: rho.is_product(),
    };
    Ok(Evaluated { path, raw, standardized, params })
}

/// Theorem bound matching the state and decay model: the product-state bound,
/// or the exponential/algebraic variant selected by the decay model.
pub fn bound_for(params: &ModelParams, esseen_c: f64, epsilon: f64) -> Result<Option<BoundReport>> {
    let variant = if params.product_state {
        TheoremVariant::Product
    } else {
        match params.decay {
            DecayModel::Uncorrelated => return Ok(None),
            DecayModel::Exponential { .. } => TheoremVariant::Exponential,
            DecayModel::Algebraic { .. } if params.convention == PrefactorConvention::Without => TheoremVariant::AlgebraicStrong,
            DecayModel::Algebraic { .. } => TheoremVariant::Algebraic,
        }
    };
    match variant {
        TheoremVariant::Product => product_bound(params, esseen_c).map(Some),
        v => theorem_bound(params, v, epsilon, esseen_c).map(Some),
    }
}

/// `min_Ω` of the Esseen right-hand side over the configured cutoffs.
pub fn esseen_rhs_min(measure: &SpectralMeasure, esseen: &EsseenSweep, n: usize) -> Result<Option<f64>> {
    let cutoffs = esseen.cutoffs(n);
    if cutoffs.is_empty() {
        return Ok(None);
    }
    let mut best = f64::INFINITY;
    for omega in cutoffs {
        best = best.min(esseen_rhs(measure, &EsseenConfig::new(esseen.c, omega, esseen.quadrature_tol)?)?);
    }
    Ok(Some(best))
}

/// Computes the row for a single `N`; failures become skipped rows.
pub fn evaluate_row(config: &SweepConfig, n: usize) -> SweepRow {
    let start = Instant::now();
    match compute_row(config, n) {
        Ok(mut row) => {
            row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            row
        }
        Err(e) => SweepRow::skipped(n, e.to_string(), start.elapsed().as_secs_f64() * 1e3),
    }
}

/// The row for a single `N`, with failures returned as errors.
pub fn compute_row(config: &SweepConfig, n: usize) -> Result<SweepRow> {
    let ev = evaluate_instance(config, n)?;
    let delta = kolmogorov_distance(&ev.standardized.measure);
    let rhs = esseen_rhs_min(&ev.standardized.measure, &config.esseen, n)?;
    let (thm_bound, bound_variant, bound_status) = match bound_for(&ev.params, config.esseen.c, config.epsilon) {
        Ok(Some(report)) if report.applicable => (Some(report.delta_bound), Some(report.variant), "ok".to_string()),
        Ok(Some(report)) => {
            let failed: Vec<&str> = report.preconditions.iter().filter(|p| !p.holds).map(|p| p.name.as_str()).collect();
            (None, Some(report.variant), format!("not-applicable: {}", failed.join("; ")))
        }
        Ok(None) => (None, None, "not-applicable: no decay model for a correlated state".into()),
        Err(e) => (None, None, format!("not-applicable: {e}")),
    };
    Ok(SweepRow {
        n,
        path: Some(ev.path),
        skipped: None,
        sigma2: Some(ev.params.sigma_h * ev.params.sigma_h),
        variance_ok: Some(ev.standardized.variance_ok),
        c0: Some(ev.params.c0),
        delta: Some(delta),
        esseen_rhs_min: rhs,
        thm_bound,
        bound_variant,
        bound_status,
        runtime_ms: 0.0,
    })
}

/// Runs every `N` of the config (rows are independent and evaluated in
/// parallel), sorts by `N`, fits the scaling exponent and writes the
/// artifacts when an output directory is set.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut rows: Vec<SweepRow> = config.n_list.par_iter().map(|&n| evaluate_row(config, n)).collect();
    rows.sort_by_key(|r| r.n);
    let (fit, fit_error) = match fit_scaling(&rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let result = SweepResult { rows, fit, fit_error };
    if let Some(dir) = &config.output.dir {
        write_artifacts(&result, config, dir)?;
    }
    Ok(result)
}

/// Fit over the rows with `Δ > 0`; needs at least four of them.
pub fn fit_scaling(rows: &[SweepRow]) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.delta.filter(|&d| d > 0.0).map(|d| (r.n as f64, d))).collect();
    fit_power_law(&points)
}

/// Least-squares slope of `log y` against `log x`, with its standard error.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let usable: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData(format!("scaling fit needs at least 4 rows with Δ > 0, got {}", usable.len())));
    }
    let m = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / m;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("scaling fit needs at least two distinct N".into()));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ScalingFit { slope, intercept, stderr, points: usable.len() })
}

pub const CSV_HEADER: [&str; 13] =
    ["n", "path", "status", "reason", "sigma2", "variance_ok", "c0", "delta", "delta_sqrt_n", "esseen_rhs_min", "thm_bound", "bound_status", "runtime_ms"];

/// Seventeen significant digits, so values round-trip exactly.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// CSV with a fixed header; every column except `runtime_ms` is a function of the config alone.
pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.path.map(|p| p.as_str().to_string()).unwrap_or_default(),
            if r.skipped.is_some() { "skipped".into() } else { "ok".into() },
            r.skipped.clone().unwrap_or_default(),
            opt_float(r.sigma2),
            r.variance_ok.map(|b| b.to_string()).unwrap_or_default(),
            opt_float(r.c0),
            opt_float(r.delta),
            opt_float(r.delta.map(|d| d * (r.n as f64).sqrt())),
            opt_float(r.esseen_rhs_min),
            opt_float(r.thm_bound),
            r.bound_status.clone(),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-run provenance written next to the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_sha256: String,
    pub seed: u64,
    pub crate_name: String,
    pub crate_version: String,
    pub dim_cap: usize,
    /// Seed of the random model at each `N`.
    pub row_seeds: Vec<(usize, u64)>,
    pub config: SweepConfig,
}

pub fn metadata(config: &SweepConfig) -> RunMetadata {
    RunMetadata {
        config_sha256: config.hash(),
        seed: config.seed,
        crate_name: env!("CARGO_PKG_NAME").into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        dim_cap: dim_cap(),
        row_seeds: config.n_list.iter().map(|&n| (n, mix_seed(config.seed, n))).collect(),
        config: config.clone(),
    }
}

/// Writes `results.csv`, `results.json` and `metadata.json` into `dir`.
pub fn write_artifacts(result: &SweepResult, config: &SweepConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&result.rows, fs::File::create(dir.join("results.csv"))?)?;
    fs::write(dir.join("results.json"), serde_json::to_string_pretty(result)?)?;
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&metadata(config))?)?;
    Ok(())
}
