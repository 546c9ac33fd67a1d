use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{CadlagPath, Partition};
use crate::processes::fbm::FbmSampler;
use crate::processes::rng::streams;

/// Built-in deterministic paths of prescribed Hölder regularity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaKind {
    /// `eta_t = scale * t`.
    Linear {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `eta_t = scale * sum_{j <= terms} a^j cos(b^j pi t)` with `a = b^-holder`.
    Weierstrass {
        terms: u32,
        #[serde(default = "two")]
        base: f64,
        holder: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// A fixed fBm sample; `seed` freezes it.
    Fbm {
        hurst: f64,
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl EtaKind {
    /// Hölder exponent of the path; fBm is `H - epsilon` for every `epsilon > 0`.
    pub fn holder_exponent(&self) -> f64 {
        match self {
            EtaKind::Linear { .. } => 1.0,
            EtaKind::Weierstrass { terms: 0, .. } => 1.0,
            EtaKind::Weierstrass { holder, .. } => *holder,
            EtaKind::Fbm { hurst, .. } => *hurst,
        }
    }
}

/// Deterministic scalar path on `grid` that is `1/p`-Hölder.
///
/// Identical across calls for identical arguments.
pub fn deterministic_eta(kind: &EtaKind, p: f64, grid: &Partition) -> Result<CadlagPath> {
    let alpha = kind.holder_exponent();
    let required = 1.0 / p;
    let strict = matches!(kind, EtaKind::Fbm { .. });
    if !(p.is_finite() && p >= 1.0) || alpha < required || (strict && alpha <= required) {
        return Err(Error::InvalidExponent {
            name: "eta holder",
            value: alpha,
            reason: "below 1/p",
        });
    }
    match kind {
        EtaKind::Linear { scale } => {
            CadlagPath::from_fn(grid.clone(), 1, |t, out| out[0] = scale * t)
        }
        EtaKind::Weierstrass {
            terms,
            base,
            holder,
            scale,
        } => {
            if !(*base > 1.0 && base.is_finite()) || !(*holder > 0.0 && *holder <= 1.0) {
                return Err(Error::InvalidExponent {
                    name: "weierstrass",
                    value: *base,
                    reason: "need base > 1 and holder in (0, 1]",
                });
            }
            let a = base.powf(-holder);
            CadlagPath::from_fn(grid.clone(), 1, |t, out| {
                let mut sum = 0.0;
                let mut amp = 1.0;
                let mut freq = std::f64::consts::PI;
                for _ in 0..=*terms {
                    sum += amp * (freq * t).cos();
                    amp *= a;
                    freq *= base;
                }
                out[0] = scale * sum;
            })
        }
        EtaKind::Fbm { hurst, seed, scale } => {
            let sampler = FbmSampler::new(*hurst, grid)?;
            Ok(sampler
                .sample_stream(*seed, streams::ETA_FBM)
                .scaled(*scale))
        }
    }
}
