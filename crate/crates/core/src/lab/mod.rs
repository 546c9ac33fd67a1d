//! Convergence experiments: Euler ladders over partition levels, error
//! decomposition, rate fits, and comparison with theoretical exponents.
//!
//! Seeds run in parallel; results are merged in sorted seed order so that a
//! report does not depend on the order of the seed list or on scheduling.

mod config;
mod driver;
mod ladder;
mod output;
mod rates;

pub use config::{
    AcceptanceSpec, ControlSpec, DriverSpec, ErrorNorm, ErrorPoints, ExperimentConfig, LevelRange,
    OutputSpec, PartitionFamily, PerturbationSpec, RieSpec, VarExponents,
};
pub use driver::{
    coarsen_keeping_jumps, master_grid, perturbation_at, sample_driver, DriverSample,
};
pub use ladder::{
    jump_ablation, measure, run_approx_ladder, run_scheme_ladder, AblationReport, AblationSeed,
    Aggregate, ApproxReport, ApproxSeed, LadderReport, LevelRecord, SeedReport,
    AUGMENTED_CONVERGENCE_RATIO, CALIBRATION_SCALES, DYADIC_STALL_RATIO, PLATEAU_DOMINANCE,
    PLATEAU_SPREAD, VANISHING_TOP_RATIO,
};
pub use output::{
    write_levels_csv, write_plot_data, write_summary_json, LadderSummary, LEVELS_HEADER,
};
pub use rates::{fit_rate, median, theoretical_exponent, RateFamily, RateFit};
