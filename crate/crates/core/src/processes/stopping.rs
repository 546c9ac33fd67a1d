use crate::error::{Error, Result};
use crate::paths::{dist, CadlagPath, Partition};

/// Stopping-time partition on the grid of `x`:
/// `tau_k = inf { t > tau_{k-1} : |t - tau_{k-1}| + |X_t - X_{tau_{k-1}}| >= 2^-n } ^ T`.
///
/// The infimum is taken over grid times, so the mesh is at most `2^-n` plus one
/// grid step. The grid mesh must not exceed `2^{-n-2} T`.
pub fn build_stopping_partition(x: &CadlagPath, level: u32) -> Result<Partition> {
    let grid = x.grid();
    let threshold = (-(level as f64)).exp2();
    let required = threshold / 4.0 * grid.horizon();
    if grid.mesh() > required {
        return Err(Error::GridTooCoarse {
            mesh: grid.mesh(),
            required,
        });
    }
    let t = grid.times();
    let mut out = vec![t[0]];
    let mut last = 0usize;
    for i in 1..grid.len() {
        if (t[i] - t[last]) + dist(x.value(i), x.value(last)) >= threshold {
            out.push(t[i]);
            last = i;
        }
    }
    if last != grid.len() - 1 {
        out.push(grid.end());
    }
    Partition::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn constant_path_gives_uniform_times() {
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let x = CadlagPath::scalar(grid.clone(), vec![1.0; grid.len()]).unwrap();
        let p = build_stopping_partition(&x, 3).unwrap();
        let expected: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        assert_eq!(p.times(), &expected[..]);
    }

    #[test]
    fn mesh_bounded_and_jump_included() {
        let grid = Partition::dyadic(1.0, 10)
            .unwrap()
            .with_times(&[0.3])
            .unwrap();
        let i = grid.index_of(0.3).unwrap();
        let values: Vec<f64> = grid
            .times()
            .iter()
            .map(|t| (13.0 * t).sin() * 0.01)
            .collect();
        let mut shifted = values.clone();
        shifted.iter_mut().skip(i).for_each(|v| *v += 0.2);
        let mut left = BTreeMap::new();
        left.insert(i, vec![values[i]]);
        let x = CadlagPath::with_left_limits(grid.clone(), 1, shifted, left).unwrap();
        for n in 3..=7 {
            let p = build_stopping_partition(&x, n).unwrap();
            assert!(p.mesh() <= 2f64.powi(-(n as i32)) + grid.mesh() + 1e-15);
            assert_eq!(p.end(), 1.0);
            assert!(p.index_of(0.3).is_some(), "level {n}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let grid = Partition::dyadic(1.0, 4).unwrap();
        let x = CadlagPath::identity(&grid);
        assert!(matches!(
            build_stopping_partition(&x, 3),
            Err(Error::GridTooCoarse { .. })
        ));
    }
}
