//! Seeded samplers for driving signals and the partitions adapted to them.

mod condition;
mod eta;
mod fbm;
mod gaussian;
mod ito;
mod levy;
pub mod rng;
mod stopping;

pub use condition::{check_partition_condition, PartitionConditionReport};
pub use eta::{deterministic_eta, EtaKind};
pub use fbm::{fbm_covariance, sample_fbm, sample_fbm_vector, FbmSampler, CHOLESKY_MAX_POINTS};
pub use gaussian::{covariance_root, sample_brownian, sample_standard_brownian};
pub use ito::{sample_ito, ItoIntegrands, ItoModel};
pub use levy::{
    build_levy_partition, sample_jumps, sample_levy, ForcedJump, Jump, JumpComponent, JumpLaw,
    LevyCharacteristics, LevySample, SmallJumpPolicy, SymmetricTail,
};
pub use stopping::build_stopping_partition;
