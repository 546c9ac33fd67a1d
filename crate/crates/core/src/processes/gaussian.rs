use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::paths::{CadlagPath, Partition};
use crate::processes::rng::{gaussian, stream_rng, streams};

/// A square root `R` with `R R^T = cov` for a symmetric PSD `d x d` matrix.
pub fn covariance_root(cov: &[f64], d: usize) -> Result<Vec<f64>> {
    if cov.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: cov.len(),
        });
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidCovariance);
    }
    let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..d {
        for j in 0..i {
            if (cov[i * d + j] - cov[j * d + i]).abs() > 1e-12 * scale {
                return Err(Error::InvalidCovariance);
            }
        }
    }
    let m = DMatrix::from_row_slice(d, d, cov);
    let eig = SymmetricEigen::new(m);
    let mut root = vec![0.0; d * d];
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-12 * scale {
            return Err(Error::InvalidCovariance);
        }
        let s = lambda.max(0.0).sqrt();
        for i in 0..d {
            root[i * d + k] = eig.eigenvectors[(i, k)] * s;
        }
    }
    Ok(root)
}

/// Brownian motion with covariance `cov` per unit time, started at zero.
///
/// One stream per seed; each step consumes `d` standard normals in order.
pub fn sample_brownian(seed: u64, cov: &[f64], d: usize, grid: &Partition) -> Result<CadlagPath> {
    sample_brownian_stream(seed, streams::BROWNIAN, cov, d, grid)
}

pub(crate) fn sample_brownian_stream(
    seed: u64,
    stream: u64,
    cov: &[f64],
    d: usize,
    grid: &Partition,
) -> Result<CadlagPath> {
    let root = covariance_root(cov, d)?;
    let mut rng = stream_rng(seed, stream);
    let t = grid.times();
    let mut values = vec![0.0; grid.len() * d];
    let mut z = vec![0.0; d];
    for i in 1..grid.len() {
        let sd = (t[i] - t[i - 1]).sqrt();
        z.iter_mut().for_each(|v| *v = gaussian(&mut rng));
        for r in 0..d {
            let inc: f64 = (0..d).map(|c| root[r * d + c] * z[c]).sum();
            values[i * d + r] = values[(i - 1) * d + r] + sd * inc;
        }
    }
    CadlagPath::new(grid.clone(), d, values)
}

/// Standard Brownian motion in `d` dimensions.
pub fn sample_standard_brownian(seed: u64, d: usize, grid: &Partition) -> Result<CadlagPath> {
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        cov[i * d + i] = 1.0;
    }
    sample_brownian(seed, &cov, d, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero_and_is_reproducible() {
        let grid = Partition::dyadic(1.0, 6).unwrap();
        let a = sample_standard_brownian(42, 2, &grid).unwrap();
        assert_eq!(a.value(0), &[0.0, 0.0]);
        assert_eq!(a, sample_standard_brownian(42, 2, &grid).unwrap());
    }

    #[test]
    fn increment_covariance_within_three_standard_errors() {
        let grid = Partition::new((0..=10_000).map(|k| k as f64 * 1e-3).collect()).unwrap();
        let cov = [2.0, 0.6, 0.6, 0.5];
        let w = sample_brownian(7, &cov, 2, &grid).unwrap();
        let dt = 1e-3;
        let n = 10_000.0;
        for (r, c) in [(0, 0), (0, 1), (1, 1)] {
            let prods: Vec<f64> = (0..10_000)
                .map(|i| {
                    let inc = w.increment(i, i + 1);
                    inc[r] * inc[c] / dt
                })
                .collect();
            let mean = prods.iter().sum::<f64>() / n;
            // Var(Z_r Z_c) = S_rr S_cc + S_rc^2 for centered Gaussians.
            let sd = (cov[r * 2 + r] * cov[c * 2 + c] + cov[r * 2 + c].powi(2)).sqrt();
            assert!(
                (mean - cov[r * 2 + c]).abs() <= 3.0 * sd / n.sqrt(),
                "({r},{c}) {mean}"
            );
        }
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let grid = Partition::dyadic(1.0, 2).unwrap();
        assert!(matches!(
            sample_brownian(0, &[1.0, 2.0, 2.0, 1.0], 2, &grid),
            Err(Error::InvalidCovariance)
        ));
        assert!(matches!(
            sample_brownian(0, &[1.0, 0.1, 0.0, 1.0], 2, &grid),
            Err(Error::InvalidCovariance)
        ));
    }
}
