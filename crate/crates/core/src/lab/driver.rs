use crate::error::Result;
use crate::lab::config::{DriverSpec, ExperimentConfig, PartitionFamily, PerturbationSpec};
use crate::paths::{build_levy_augmented_partition, norm, CadlagPath, Partition};
use crate::processes::{
    build_stopping_partition, deterministic_eta, sample_brownian, sample_fbm_vector, sample_ito,
    sample_levy,
};

/// Dyadic grid of `[0, horizon]` at the reference level.
pub fn master_grid(cfg: &ExperimentConfig) -> Result<Partition> {
    Partition::dyadic(cfg.horizon, cfg.levels.reference)
}

/// One sampled driver on its master grid.
#[derive(Clone, Debug)]
pub struct DriverSample {
    pub seed: u64,
    pub path: CadlagPath,
    /// Grid-snapped jump times with the norm of each jump.
    pub jumps: Vec<(f64, f64)>,
}

impl DriverSample {
    /// Times of jumps with norm at least `2^-level`.
    pub fn large_jump_times(&self, level: u32) -> Vec<f64> {
        let threshold = (-(level as f64)).exp2();
        self.jumps
            .iter()
            .filter(|(_, size)| *size >= threshold)
            .map(|(t, _)| *t)
            .collect()
    }

    /// The level-`level` partition of `family`, a subset of the master grid.
    pub fn partition(&self, family: PartitionFamily, level: u32) -> Result<Partition> {
        let horizon = self.path.grid().horizon();
        match family {
            PartitionFamily::Dyadic => Partition::dyadic(horizon, level),
            PartitionFamily::Levy => {
                build_levy_augmented_partition(horizon, level, &self.large_jump_times(level))
            }
            PartitionFamily::Stopping => build_stopping_partition(&self.path, level),
        }
    }
}

/// Samples the configured driver for `seed`.
///
/// Levy drivers live on the master grid augmented with their jump times;
/// every other driver lives on the master grid itself.
pub fn sample_driver(cfg: &ExperimentConfig, seed: u64) -> Result<DriverSample> {
    let grid = master_grid(cfg)?;
    let (path, jumps) = match &cfg.driver {
        DriverSpec::Brownian { covariance } => (
            sample_brownian(seed, covariance, cfg.driver.dim(), &grid)?,
            vec![],
        ),
        DriverSpec::Ito { x0, model } => {
            let start = if x0.is_empty() {
                vec![0.0; model.vol.len()]
            } else {
                x0.clone()
            };
            (sample_ito(seed, model, &start, &grid)?.0, vec![])
        }
        DriverSpec::Levy { characteristics } => {
            let s = sample_levy(seed, characteristics, &grid, cfg.levels.reference)?;
            let aug = s.path.grid();
            let jumps = s
                .jumps
                .iter()
                .map(|j| {
                    (
                        aug.index_of(j.time).map_or(j.time, |i| aug.times()[i]),
                        norm(&j.size),
                    )
                })
                .collect();
            (s.path, jumps)
        }
        DriverSpec::Fbm { hurst, dim } => (sample_fbm_vector(seed, *hurst, *dim, &grid)?, vec![]),
        DriverSpec::Eta { eta } => (deterministic_eta(eta, cfg.exponents.p, &grid)?, vec![]),
    };
    Ok(DriverSample { seed, path, jumps })
}

/// The perturbation added to the driver at `level`, on the driver's grid.
pub fn perturbation_at(
    cfg: &ExperimentConfig,
    sample: &DriverSample,
    level: u32,
) -> Result<Option<CadlagPath>> {
    let grid = sample.path.grid().clone();
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(match &cfg.perturbation {
        PerturbationSpec::None => None,
        PerturbationSpec::Linear { slope } => {
            Some(CadlagPath::from_fn(grid, slope.len(), |t, out| {
                out.iter_mut().zip(slope).for_each(|(o, s)| *o = s * t)
            })?)
        }
        PerturbationSpec::Sine {
            amplitude,
            frequency,
        } => Some(CadlagPath::from_fn(grid, amplitude.len(), |t, out| {
            out.iter_mut()
                .zip(amplitude)
                .for_each(|(o, a)| *o = a * (two_pi * frequency * t).sin())
        })?),
        PerturbationSpec::LevySmallJumps => match &cfg.driver {
            DriverSpec::Levy { characteristics } => {
                let s = sample_levy(sample.seed, characteristics, &master_grid(cfg)?, level)?;
                Some(s.small_jump_residual)
            }
            _ => None,
        },
    })
}

/// Every `factor`-th grid point plus the last point and all marked jumps of `x`.
pub fn coarsen_keeping_jumps(x: &CadlagPath, factor: usize) -> Result<Partition> {
    let n = x.len();
    let t = x.grid().times();
    let times: Vec<f64> = (0..n)
        .filter(|&i| i % factor == 0 || i == n - 1 || x.is_jump(i))
        .map(|i| t[i])
        .collect();
    Partition::new(times)
}
