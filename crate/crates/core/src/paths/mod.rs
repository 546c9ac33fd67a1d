//! Partitions, cadlag paths on a master grid, and piecewise-constant discretization.

mod cadlag;
pub mod io;
mod partition;

pub use cadlag::{
    discretize_piecewise_constant, gamma_path, gamma_path_on, sup_distance, CadlagPath,
};
pub(crate) use cadlag::{dist, norm};
pub use partition::{
    build_dyadic_partition, build_levy_augmented_partition, jumps_exhausted, JumpWitness,
    Partition, PartitionSequence, TIME_TOL,
};
