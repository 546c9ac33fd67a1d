use nalgebra::{Cholesky, DMatrix};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::paths::{CadlagPath, Partition};
use crate::processes::rng::{gaussian, stream_rng, streams};

/// Grids up to this many points use the exact Cholesky factor.
pub const CHOLESKY_MAX_POINTS: usize = (1 << 12) + 1;

/// `Cov(B_s, B_t)` for fractional Brownian motion started at zero.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.abs().powf(h2) + t.abs().powf(h2) - (t - s).abs().powf(h2))
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::InvalidHurst(hurst));
    }
    Ok(())
}

enum Method {
    Cholesky(Vec<f64>),
    Circulant { sqrt_eigen: Vec<f64>, step: f64 },
}

/// Scalar fBm sampler for one grid; the factorization is reused across seeds.
pub struct FbmSampler {
    hurst: f64,
    grid: Partition,
    method: Method,
}

impl FbmSampler {
    /// Exact Cholesky for small grids, circulant embedding for large uniform ones.
    pub fn new(hurst: f64, grid: &Partition) -> Result<Self> {
        check_hurst(hurst)?;
        if grid.len() <= CHOLESKY_MAX_POINTS {
            FbmSampler::cholesky(hurst, grid)
        } else {
            FbmSampler::circulant(hurst, grid)
        }
    }

    pub fn cholesky(hurst: f64, grid: &Partition) -> Result<Self> {
        check_hurst(hurst)?;
        FbmSampler::cholesky_unchecked(hurst, grid)
    }

    /// Any `hurst` in `(0, 1)`; `1/2` gives Brownian motion.
    fn cholesky_unchecked(hurst: f64, grid: &Partition) -> Result<Self> {
        let t0 = grid.start();
        let u: Vec<f64> = grid.times()[1..].iter().map(|t| t - t0).collect();
        let m = u.len();
        let cov = DMatrix::from_fn(m, m, |i, j| fbm_covariance(hurst, u[i], u[j]));
        let chol = Cholesky::new(cov).ok_or(Error::InvalidCovariance)?;
        let l = chol.l();
        let mut lower = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                lower[i * m + j] = l[(i, j)];
            }
        }
        Ok(FbmSampler {
            hurst,
            grid: grid.clone(),
            method: Method::Cholesky(lower),
        })
    }

    /// Davies-Harte embedding of the increment autocovariance; needs a uniform grid.
    pub fn circulant(hurst: f64, grid: &Partition) -> Result<Self> {
        check_hurst(hurst)?;
        let n = grid.len() - 1;
        let step = grid.horizon() / n as f64;
        let uniform = grid
            .times()
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);
        if !uniform {
            return Err(Error::GridTooCoarse {
                mesh: grid.mesh(),
                required: step,
            });
        }
        let h2 = 2.0 * hurst;
        let gamma =
            |k: f64| 0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2));
        let m = 2 * n;
        let mut c: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let k = if j <= n { j } else { m - j };
                Complex::new(gamma(k as f64), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut c);
        let mut sqrt_eigen = Vec::with_capacity(m);
        for v in c {
            if v.re < -1e-8 {
                return Err(Error::InvalidCovariance);
            }
            sqrt_eigen.push((v.re.max(0.0) / m as f64).sqrt());
        }
        Ok(FbmSampler {
            hurst,
            grid: grid.clone(),
            method: Method::Circulant { sqrt_eigen, step },
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn sample(&self, seed: u64) -> CadlagPath {
        self.sample_stream(seed, streams::FBM)
    }

    pub(crate) fn sample_stream(&self, seed: u64, stream: u64) -> CadlagPath {
        let mut rng = stream_rng(seed, stream);
        let n = self.grid.len();
        let mut values = vec![0.0; n];
        match &self.method {
            Method::Cholesky(lower) => {
                let m = n - 1;
                let z: Vec<f64> = (0..m).map(|_| gaussian(&mut rng)).collect();
                for i in 0..m {
                    values[i + 1] = (0..=i).map(|j| lower[i * m + j] * z[j]).sum();
                }
            }
            Method::Circulant { sqrt_eigen, step } => {
                let m = sqrt_eigen.len();
                let mut buf: Vec<Complex<f64>> = sqrt_eigen
                    .iter()
                    .map(|&s| Complex::new(s * gaussian(&mut rng), s * gaussian(&mut rng)))
                    .collect();
                FftPlanner::new().plan_fft_forward(m).process(&mut buf);
                let scale = step.powf(self.hurst);
                for i in 1..n {
                    values[i] = values[i - 1] + scale * buf[i - 1].re;
                }
            }
        }
        CadlagPath::new(self.grid.clone(), 1, values).expect("finite samples")
    }
}

/// Fractional Brownian motion with Hurst index in `(1/2, 1)` on `grid`.
pub fn sample_fbm(seed: u64, hurst: f64, grid: &Partition) -> Result<CadlagPath> {
    Ok(FbmSampler::new(hurst, grid)?.sample(seed))
}

/// `dim` independent fBm coordinates; coordinate 0 equals [`sample_fbm`].
pub fn sample_fbm_vector(
    seed: u64,
    hurst: f64,
    dim: usize,
    grid: &Partition,
) -> Result<CadlagPath> {
    let sampler = FbmSampler::new(hurst, grid)?;
    let mut out = sampler.sample(seed);
    for c in 1..dim {
        out = out.concat(&sampler.sample_stream(seed, streams::FBM_COMPONENT_BASE + c as u64))?;
    }
    Ok(out)
}
