use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::paths::{CadlagPath, Partition};
use crate::processes::gaussian::sample_standard_brownian;

/// Integrands of an Ito process `dX = b(t, W_t) dt + H(t, W_t) dW_t`.
pub trait ItoIntegrands: Sync {
    /// Dimension `d` of `X`.
    fn dim(&self) -> usize;
    /// Dimension `e` of the driving Brownian motion.
    fn noise_dim(&self) -> usize;
    fn drift(&self, t: f64, w: &[f64], out: &mut [f64]);
    /// `d x e`, row-major.
    fn diffusion(&self, t: f64, w: &[f64], out: &mut [f64]);
}

/// Bounded diagonal Ito model, one Brownian motion per coordinate:
/// `dX^r = a_r sin(W^r_t) dt + s_r (1 + m cos(W^r_t)) dW^r_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItoModel {
    /// `a_r`; empty means zero drift.
    #[serde(default)]
    pub drift: Vec<f64>,
    /// `s_r`; its length fixes the dimension.
    pub vol: Vec<f64>,
    /// `m`, with `|m| < 1` so the volatility never vanishes.
    #[serde(default)]
    pub modulation: f64,
}

impl ItoModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| config_err("/driver/model", m);
        if self.vol.is_empty() {
            return Err(bad("ito model needs at least one volatility"));
        }
        if !(self.drift.is_empty() || self.drift.len() == self.vol.len()) {
            return Err(bad("ito drift and vol lengths differ"));
        }
        if !(self.modulation.abs() < 1.0) {
            return Err(bad("ito modulation must lie in (-1, 1)"));
        }
        if self.drift.iter().chain(&self.vol).any(|v| !v.is_finite()) {
            return Err(bad("ito parameters must be finite"));
        }
        Ok(())
    }
}

impl ItoIntegrands for ItoModel {
    fn dim(&self) -> usize {
        self.vol.len()
    }

    fn noise_dim(&self) -> usize {
        self.vol.len()
    }

    fn drift(&self, _t: f64, w: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.drift.get(r).map_or(0.0, |a| a * w[r].sin());
        }
    }

    fn diffusion(&self, _t: f64, w: &[f64], out: &mut [f64]) {
        let d = self.vol.len();
        out.fill(0.0);
        for r in 0..d {
            out[r * d + r] = self.vol[r] * (1.0 + self.modulation * w[r].cos());
        }
    }
}

/// Samples `X` by left-point Euler sums on `grid`, returning `(X, W)`.
///
/// On the grid these sums are the process itself: finer levels are
/// sub-partitions of the same discrete object.
pub fn sample_ito(
    seed: u64,
    model: &dyn ItoIntegrands,
    x0: &[f64],
    grid: &Partition,
) -> Result<(CadlagPath, CadlagPath)> {
    let d = model.dim();
    let e = model.noise_dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    let w = sample_standard_brownian(seed, e, grid)?;
    let t = grid.times();
    let mut values = vec![0.0; grid.len() * d];
    values[..d].copy_from_slice(x0);
    let mut b = vec![0.0; d];
    let mut h = vec![0.0; d * e];
    for i in 0..grid.len() - 1 {
        let wi = w.value(i);
        model.drift(t[i], wi, &mut b);
        model.diffusion(t[i], wi, &mut h);
        let dt = t[i + 1] - t[i];
        let dw = w.increment(i, i + 1);
        for r in 0..d {
            let noise: f64 = (0..e).map(|c| h[r * e + c] * dw[c]).sum();
            values[(i + 1) * d + r] = values[i * d + r] + b[r] * dt + noise;
        }
    }
    Ok((CadlagPath::new(grid.clone(), d, values)?, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::gaussian::sample_standard_brownian;

    struct Constant {
        d: usize,
        drift: f64,
        diag: f64,
    }

    impl ItoIntegrands for Constant {
        fn dim(&self) -> usize {
            self.d
        }
        fn noise_dim(&self) -> usize {
            self.d
        }
        fn drift(&self, _t: f64, _w: &[f64], out: &mut [f64]) {
            out.fill(self.drift);
        }
        fn diffusion(&self, _t: f64, _w: &[f64], out: &mut [f64]) {
            out.fill(0.0);
            for i in 0..self.d {
                out[i * self.d + i] = self.diag;
            }
        }
    }

    #[test]
    fn pure_noise_is_the_brownian_motion() {
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let (x, w) = sample_ito(
            3,
            &Constant {
                d: 2,
                drift: 0.0,
                diag: 1.0,
            },
            &[0.0, 0.0],
            &grid,
        )
        .unwrap();
        assert_eq!(x, w);
        assert_eq!(w, sample_standard_brownian(3, 2, &grid).unwrap());
    }

    #[test]
    fn pure_drift_is_linear() {
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let (x, _) = sample_ito(
            3,
            &Constant {
                d: 1,
                drift: 1.0,
                diag: 0.0,
            },
            &[0.5],
            &grid,
        )
        .unwrap();
        for (i, &t) in grid.times().iter().enumerate() {
            assert!((x.value(i)[0] - 0.5 - t).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_variation_of_scaled_noise() {
        let grid = Partition::dyadic(1.0, 14).unwrap();
        let d = 3;
        let (x, _) = sample_ito(
            8,
            &Constant {
                d,
                drift: 0.0,
                diag: 2.0,
            },
            &[0.0; 3],
            &grid,
        )
        .unwrap();
        let qv: f64 = (0..grid.len() - 1)
            .map(|i| x.increment(i, i + 1).iter().map(|v| v * v).sum::<f64>())
            .sum();
        assert!((qv - 4.0 * d as f64).abs() <= 0.05 * 4.0 * d as f64, "{qv}");
    }
}
