//! Sweeps over system size, scaling fits, inequality checks and result artifacts.

pub mod checks;
pub mod families;
pub mod sweep;

pub use checks::{
    cluster_suite, lemma_domination, random_two_local_operator, suite_domination, suite_esseen, suite_instances, with_fitted_decay, ClusterInstance,
    ClusterSuiteConfig, ClusterSuiteReport, DominationPoint, DominationReport, SuiteDomination, SuiteInstance,
};
pub use families::{lattice_constants, mix_seed, DecaySpec, ModelFamily, StateFamily};
pub use sweep::{
    bound_for, compute_row, esseen_rhs_min, evaluate_instance, evaluate_row, fit_power_law, fit_scaling, fmt_float, metadata, run_sweep, write_artifacts, write_csv,
    EsseenSweep, Evaluated, OutputPaths, PathChoice, PathUsed, RunMetadata, ScalingFit, SweepConfig, SweepResult, SweepRow, CSV_HEADER,
};
