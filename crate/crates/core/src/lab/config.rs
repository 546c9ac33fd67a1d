use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::paths::CadlagPath;
use crate::processes::{EtaKind, ItoModel, LevyCharacteristics};
use crate::schemes::CoefficientSpec;
use crate::variation::{ControlFunction, ControlTerm};

/// Driving signal sampled once per seed on the master grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    /// Brownian motion with covariance `d x d` (row-major).
    Brownian { covariance: Vec<f64> },
    /// Ito process `x0 + int b dt + int H dW`.
    Ito {
        #[serde(default)]
        x0: Vec<f64>,
        model: ItoModel,
    },
    Levy {
        characteristics: LevyCharacteristics,
    },
    /// Fractional Brownian motion, one independent copy per coordinate.
    Fbm {
        hurst: f64,
        #[serde(default = "one_dim")]
        dim: usize,
    },
    /// A frozen deterministic path.
    Eta { eta: EtaKind },
}

fn one_dim() -> usize {
    1
}

impl DriverSpec {
    pub fn dim(&self) -> usize {
        match self {
            DriverSpec::Brownian { covariance } => {
                (covariance.len() as f64).sqrt().round() as usize
            }
            DriverSpec::Ito { model, .. } => model.vol.len(),
            DriverSpec::Levy { characteristics } => characteristics.dim(),
            DriverSpec::Fbm { dim, .. } => *dim,
            DriverSpec::Eta { .. } => 1,
        }
    }
}

/// How the level-`n` partition is built from the sampled driver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionFamily {
    Dyadic,
    /// Dyadic times plus the times of jumps of size at least `2^-n`.
    Levy,
    Stopping,
}

/// Error norm of `Y^n - Y_ref`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    /// `p'`-variation.
    #[default]
    PVariation,
    Sup,
    ThreeVariation,
}

/// Where `Y^n - Y_ref` is evaluated before the norm is taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPoints {
    /// The points of the level's partition.
    #[default]
    Partition,
    /// Every master-grid time with left limits, `Y^n` held between its points.
    MasterGrid,
}

/// Variation exponents and the free rate parameters of the rate estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarExponents {
    /// Regularity of the driver, `1 <= p < 3`.
    pub p: f64,
    /// Norm exponent of the error, `p' > p`.
    pub p_prime: f64,
    /// Regularity of the drift time and of the perturbation, `1 <= q < 2`.
    pub q: f64,
    /// Second small-jump exponent of the Levy rate, `q' > q`.
    #[serde(default)]
    pub q_prime: Option<f64>,
    /// Brownian rate parameter; defaults to `1 - 1/p + 0.01`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Slack in the Ito and semimartingale rates.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Levy rate parameter; defaults to `1 - q/2 - 0.05`.
    #[serde(default)]
    pub delta: Option<f64>,
}

fn default_epsilon() -> f64 {
    0.05
}

impl VarExponents {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(config_err("/exponents", m));
        if !(1.0..3.0).contains(&self.p) {
            return bad(format!("p = {} must lie in [1, 3)", self.p));
        }
        if !(self.p_prime > self.p) || !self.p_prime.is_finite() {
            return bad(format!(
                "p_prime = {} must exceed p = {}",
                self.p_prime, self.p
            ));
        }
        if !(1.0..2.0).contains(&self.q) {
            return bad(format!("q = {} must lie in [1, 2)", self.q));
        }
        if 1.0 / self.p + 1.0 / self.q <= 1.0 {
            return bad(format!(
                "1/p + 1/q = {} must exceed 1",
                1.0 / self.p + 1.0 / self.q
            ));
        }
        if let Some(qp) = self.q_prime {
            if !(qp > self.q) {
                return bad(format!("q_prime = {qp} must exceed q = {}", self.q));
            }
        }
        Ok(())
    }
}

/// Ladder levels `min..=max` and the master-grid level `reference`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRange {
    pub min: u32,
    pub max: u32,
    pub reference: u32,
}

/// Perturbation `phi` added to the driver increments of the approximate scheme.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    #[default]
    None,
    /// `phi_t = slope * t`, one slope per coordinate.
    Linear { slope: Vec<f64> },
    /// `phi^r_t = amplitude_r sin(2 pi frequency t)`.
    Sine { amplitude: Vec<f64>, frequency: f64 },
    /// `psi^n`, the small-jump residual of the Levy driver at level `n`.
    LevySmallJumps,
}

/// Where results go; all paths are relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub levels_csv: String,
    pub summary_json: String,
    /// Two-column `(n, log2 error)` text file; empty disables it.
    pub plot_data: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            levels_csv: "levels.csv".into(),
            summary_json: "summary.json".into(),
            plot_data: "plot.dat".into(),
        }
    }
}

/// Pass thresholds of a ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptanceSpec {
    /// The median slope passes at `theoretical - slack`.
    pub slack: f64,
    /// Fraction of seeds whose errors never increase between levels.
    pub monotone_fraction: f64,
    /// Largest allowed `max K_n / min K_n` in the error decomposition.
    pub k_ratio: f64,
}

impl Default for AcceptanceSpec {
    fn default() -> Self {
        AcceptanceSpec {
            slack: 0.1,
            monotone_fraction: 0.9,
            k_ratio: 3.0,
        }
    }
}

/// Control tested by the RIE diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    /// `c (t - s)`.
    Linear { c: f64 },
    /// `scale * ||X||^p_{p,[s,t]}` of the sampled driver.
    DriverVariation { scale: f64 },
}

impl ControlSpec {
    pub fn build(&self, x: &CadlagPath, p: f64) -> ControlFunction {
        match *self {
            ControlSpec::Linear { c } => ControlFunction::Linear { c },
            ControlSpec::DriverVariation { scale } => {
                ControlFunction::Combination(vec![ControlTerm {
                    weight: scale,
                    factors: vec![(
                        ControlFunction::QVariation {
                            path: x.clone(),
                            q: p,
                        },
                        1.0,
                    )],
                }])
            }
        }
    }
}

/// Settings of the RIE diagnostic run along the configured partition family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RieSpec {
    pub control: ControlSpec,
    /// Relative tolerance of the two uniform-convergence conditions at the finest level.
    pub rel_tol: f64,
}

impl Default for RieSpec {
    fn default() -> Self {
        RieSpec {
            control: ControlSpec::DriverVariation { scale: 2.0 },
            rel_tol: 0.05,
        }
    }
}

/// One convergence experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "unit_horizon")]
    pub horizon: f64,
    pub driver: DriverSpec,
    /// Defaults by driver: Levy partitions for Levy drivers, dyadic otherwise.
    #[serde(default)]
    pub partitions: Option<PartitionFamily>,
    pub coefficients: CoefficientSpec,
    pub y0: Vec<f64>,
    pub exponents: VarExponents,
    pub levels: LevelRange,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub norm: ErrorNorm,
    #[serde(default)]
    pub error_points: ErrorPoints,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub acceptance: AcceptanceSpec,
    #[serde(default)]
    pub rie: RieSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn unit_horizon() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Parses a JSON document; schema errors carry the JSON pointer of the offending field.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(value).map_err(|e| Error::Config {
                path: json_pointer(e.path()),
                message: e.inner().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
            path: "".into(),
            message: e.to_string(),
        })?;
        ExperimentConfig::from_value(value)
    }

    pub fn partition_family(&self) -> PartitionFamily {
        self.partitions.unwrap_or(match self.driver {
            DriverSpec::Levy { .. } => PartitionFamily::Levy,
            _ => PartitionFamily::Dyadic,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, m: String| Err(config_err(path, m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(
                "/horizon",
                format!("horizon {} must be positive", self.horizon),
            );
        }
        self.exponents.validate()?;
        let l = self.levels;
        if l.min > l.max {
            return bad("/levels", format!("min {} exceeds max {}", l.min, l.max));
        }
        if l.reference < l.max + 3 {
            return bad(
                "/levels/reference",
                format!(
                    "reference {} must be at least max + 3 = {}",
                    l.reference,
                    l.max + 3
                ),
            );
        }
        if l.reference > 24 {
            return bad(
                "/levels/reference",
                format!("reference {} exceeds the supported 24", l.reference),
            );
        }
        let positive = match self.rie.control {
            ControlSpec::Linear { c } => c,
            ControlSpec::DriverVariation { scale } => scale,
        };
        if !(positive > 0.0 && positive.is_finite()) {
            return bad(
                "/rie/control",
                format!("control weight {positive} must be positive"),
            );
        }
        if !(self.rie.rel_tol > 0.0 && self.rie.rel_tol.is_finite()) {
            return bad(
                "/rie/rel_tol",
                format!("tolerance {} must be positive", self.rie.rel_tol),
            );
        }
        if self.seeds.is_empty() {
            return bad("/seeds", "at least one seed is required".into());
        }
        let coeffs = self.coefficients.build()?;
        use crate::schemes::Coefficients;
        if coeffs.state_dim() != self.y0.len() {
            return bad(
                "/y0",
                format!(
                    "length {} but the coefficients have state dimension {}",
                    self.y0.len(),
                    coeffs.state_dim()
                ),
            );
        }
        if coeffs.driver_dim() != self.driver.dim() {
            return bad(
                "/coefficients",
                format!(
                    "driver dimension {} but the driver has {}",
                    coeffs.driver_dim(),
                    self.driver.dim()
                ),
            );
        }
        match &self.driver {
            DriverSpec::Brownian { covariance } => {
                let d = self.driver.dim();
                if d * d != covariance.len() {
                    return bad(
                        "/driver/covariance",
                        format!("{} entries is not a square matrix", covariance.len()),
                    );
                }
            }
            DriverSpec::Ito { x0, model } => {
                model.validate()?;
                if !(x0.is_empty() || x0.len() == model.vol.len()) {
                    return bad(
                        "/driver/x0",
                        format!("length {} but the model has {}", x0.len(), model.vol.len()),
                    );
                }
            }
            DriverSpec::Levy { characteristics } => characteristics.validate()?,
            DriverSpec::Fbm { hurst, dim } => {
                if !(*hurst > 0.5 && *hurst < 1.0) {
                    return bad(
                        "/driver/hurst",
                        format!("Hurst index {hurst} outside (1/2, 1)"),
                    );
                }
                if *dim == 0 {
                    return bad("/driver/dim", "dimension must be positive".into());
                }
            }
            DriverSpec::Eta { .. } => {}
        }
        let levy = matches!(self.driver, DriverSpec::Levy { .. });
        if self.partition_family() == PartitionFamily::Levy && !levy {
            return bad("/partitions", "levy partitions need a levy driver".into());
        }
        if self.perturbation == PerturbationSpec::LevySmallJumps && !levy {
            return bad(
                "/perturbation",
                "levy_small_jumps needs a levy driver".into(),
            );
        }
        let d = self.driver.dim();
        match &self.perturbation {
            PerturbationSpec::Linear { slope } if slope.len() != d => bad(
                "/perturbation/slope",
                format!("length {} but the driver has dimension {d}", slope.len()),
            ),
            PerturbationSpec::Sine { amplitude, .. } if amplitude.len() != d => bad(
                "/perturbation/amplitude",
                format!(
                    "length {} but the driver has dimension {d}",
                    amplitude.len()
                ),
            ),
            _ => Ok(()),
        }
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1")))
            }
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}
