use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::RoughPath;
use crate::paths::{dist, norm, CadlagPath};
use crate::schemes::coefficients::Coefficients;
use crate::schemes::controlled::{controlled_from_solution, ControlledPath};
use crate::schemes::euler::{check_dims, finite_or, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    /// Sweeps allowed per window before it is split or the solve fails.
    pub max_iter: usize,
    /// Successive-iterate distance at which a window is accepted, relative to `1 + sup |Y|`.
    pub tol: f64,
    /// Windows are never split below this many grid steps.
    pub min_window: usize,
    /// A sweep must shrink the iterate distance by this factor or the window is halved.
    pub contraction: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            max_iter: 200,
            tol: 1e-12,
            min_window: 4,
            contraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// Sweeps summed over all windows, including windows that were split.
    pub sweeps: usize,
    /// Accepted windows as grid index pairs.
    pub windows: Vec<(usize, usize)>,
}

/// Fixed point of `Y -> y0 + int b(H, Y) dA + int sigma(H, Y) dX` on the grid
/// of `r`, the rough integral taken as compensated left-point sums with
/// Gubinelli derivative `sigma(H, Y)`.
///
/// The grid is processed in windows. Each window iterates from the constant
/// guess until successive iterates agree within `tol`; a window whose sweeps
/// stop contracting is halved, down to `min_window` steps. At jumps of `X` or
/// `A` the left limit of `Y` is the first-order step with the pre-jump increments.
pub fn solve_rde_picard(
    coeffs: &dyn Coefficients,
    y0: &[f64],
    a: &CadlagPath,
    h: &CadlagPath,
    r: &RoughPath,
    opts: PicardOptions,
) -> Result<(ControlledPath, PicardReport)> {
    let x = r.path();
    check_dims(coeffs, y0, x)?;
    if a.grid() != x.grid() || h.grid() != x.grid() {
        return Err(Error::GridMismatch);
    }
    if a.dim() != 1 || h.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: a.dim().max(h.dim()),
        });
    }
    let k = y0.len();
    let d = x.dim();
    let n = x.len();
    let min_window = opts.min_window.max(1);
    let mut values = vec![0.0; n * k];
    values[..k].copy_from_slice(y0);
    let mut report = PicardReport::default();
    let mut stepper = Stepper::new(coeffs);
    let mut inc = vec![0.0; k];
    let mut dx = vec![0.0; d];
    let mut width = n - 1;
    let mut s = 0;
    while s < n - 1 {
        let e = (s + width).min(n - 1);
        let len = e - s + 1;
        let mut cur: Vec<f64> = values[s * k..(s + 1) * k].repeat(len);
        let mut next = cur.clone();
        let mut prev_gap = f64::INFINITY;
        let mut accepted = false;
        let mut split = false;
        for sweep in 0..opts.max_iter {
            report.sweeps += 1;
            for i in s..e {
                let li = i - s;
                for c in 0..d {
                    dx[c] = x.value(i + 1)[c] - x.value(i)[c];
                }
                let da = a.value(i + 1)[0] - a.value(i)[0];
                let yi = &cur[li * k..(li + 1) * k];
                stepper.increment(h.value(i)[0], yi, da, &dx, Some(r.consecutive(i)), &mut inc);
                for c in 0..k {
                    next[(li + 1) * k + c] = next[li * k + c] + inc[c];
                }
            }
            finite_or(&next, s)?;
            let gap = cur
                .chunks(k)
                .zip(next.chunks(k))
                .map(|(u, v)| dist(u, v))
                .fold(0.0, f64::max);
            let scale = 1.0 + next.chunks(k).map(norm).fold(0.0, f64::max);
            std::mem::swap(&mut cur, &mut next);
            if gap <= opts.tol * scale {
                accepted = true;
                break;
            }
            if sweep >= 1 && gap > opts.contraction * prev_gap && e - s > min_window {
                split = true;
                break;
            }
            prev_gap = gap;
        }
        if accepted {
            values[(s + 1) * k..(e + 1) * k].copy_from_slice(&cur[k..]);
            report.windows.push((s, e));
            s = e;
        } else if split || e - s > min_window {
            width = ((e - s) / 2).max(min_window);
        } else {
            let t = x.grid().times();
            return Err(Error::PicardDiverged {
                start: t[s],
                end: t[e],
                iterations: opts.max_iter,
            });
        }
    }
    let mut left = BTreeMap::new();
    let mut next = vec![0.0; k];
    for i in 1..n {
        if !(x.is_jump(i) || a.is_jump(i)) {
            continue;
        }
        for c in 0..d {
            dx[c] = x.left(i)[c] - x.value(i - 1)[c];
        }
        let da = a.left(i)[0] - a.value(i - 1)[0];
        let y = &values[(i - 1) * k..i * k];
        stepper.increment(h.value(i - 1)[0], y, da, &dx, None, &mut inc);
        for c in 0..k {
            next[c] = y[c] + inc[c];
        }
        finite_or(&next, i - 1)?;
        left.insert(i, next.clone());
    }
    let y = CadlagPath::with_left_limits(x.grid().clone(), k, values, left)?;
    let controlled = controlled_from_solution(&y, coeffs, h, x)?;
    Ok((controlled, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::piecewise_constant_lift;
    use crate::paths::{discretize_piecewise_constant, gamma_path_on, Partition};
    use crate::processes::sample_brownian;
    use crate::schemes::{euler_scheme, solve_rde_reference, CoefficientSpec};

    fn time_drivers(grid: &Partition) -> (CadlagPath, CadlagPath) {
        (CadlagPath::identity(grid), CadlagPath::identity(grid))
    }

    #[test]
    fn zero_fields_give_constant() {
        let coeffs = CoefficientSpec::Linear {
            drift: [0.0, 0.0],
            diffusion: vec![[0.0, 0.0]],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 6).unwrap();
        let w = sample_brownian(1, &[1.0], 1, &grid).unwrap();
        let r = RoughPath::grid_lift(w, 2.5).unwrap();
        let (a, h) = time_drivers(&grid);
        let (c, rep) =
            solve_rde_picard(&coeffs, &[1.5], &a, &h, &r, PicardOptions::default()).unwrap();
        assert!(c.y().values().iter().all(|&v| v == 1.5));
        assert_eq!(rep.sweeps, 1);
    }

    #[test]
    fn linear_equation_matches_exponential() {
        let coeffs = CoefficientSpec::Linear {
            drift: [0.0, 0.0],
            diffusion: vec![[0.0, 1.0]],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 12).unwrap();
        let r = RoughPath::from_increment_fn(CadlagPath::identity(&grid), 2.5, |_, s, t, o| {
            o[0] = 0.5 * (t - s).powi(2)
        })
        .unwrap();
        let (a, h) = time_drivers(&grid);
        let (c, rep) =
            solve_rde_picard(&coeffs, &[1.0], &a, &h, &r, PicardOptions::default()).unwrap();
        for (i, &t) in grid.times().iter().enumerate() {
            assert!((c.y().value(i)[0] - t.exp()).abs() < 1e-5, "t = {t}");
        }
        assert!(rep.sweeps > 1 && !rep.windows.is_empty());
    }

    #[test]
    fn piecewise_constant_drivers_reproduce_euler() {
        let coeffs = CoefficientSpec::TanhAffine {
            drift_matrix: vec![0.3, -0.2, 0.1, 0.4],
            drift_offset: vec![0.1, -0.2],
            time_coupling: 0.5,
            diffusion_matrices: vec![vec![0.5, 0.1, -0.3, 0.2], vec![-0.2, 0.6, 0.1, 0.1]],
            diffusion_offsets: vec![vec![0.2, 0.0], vec![0.0, -0.1]],
            scales: vec![],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 10).unwrap();
        let p = Partition::dyadic(1.0, 5).unwrap();
        let w = sample_brownian(11, &[1.0, 0.3, 0.3, 1.0], 2, &grid).unwrap();
        let xn = discretize_piecewise_constant(&w, &p).unwrap();
        let gamma = gamma_path_on(&p, &grid).unwrap();
        let lift = piecewise_constant_lift(&w, &p, 2.5).unwrap();
        let y0 = [0.3, -0.4];
        let (c, _) = solve_rde_picard(
            &coeffs,
            &y0,
            &gamma,
            &gamma,
            &lift,
            PicardOptions::default(),
        )
        .unwrap();
        let euler = euler_scheme(&coeffs, &y0, &w, &p).unwrap();
        let idx = p.indices_in(&grid).unwrap();
        for (i, &g) in idx.iter().enumerate() {
            assert!(dist(c.y().value(g), euler.value(i)) < 1e-12, "node {i}");
        }
        assert_eq!(lift.path(), &xn);
    }

    #[test]
    fn agrees_with_reference_on_brownian() {
        let coeffs = CoefficientSpec::Rotation {
            omega: vec![1.0, 0.5],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 14).unwrap();
        let w = sample_brownian(4, &[1.0, 0.0, 0.0, 1.0], 2, &grid).unwrap();
        let r = RoughPath::grid_lift(w, 2.5).unwrap();
        let reference = solve_rde_reference(
            &coeffs,
            &[1.0, 0.0],
            &r,
            &Partition::dyadic(1.0, 13).unwrap(),
            &Partition::dyadic(1.0, 12).unwrap(),
        )
        .unwrap();
        let (a, h) = time_drivers(&grid);
        let (c, _) =
            solve_rde_picard(&coeffs, &[1.0, 0.0], &a, &h, &r, PicardOptions::default()).unwrap();
        let gap = (0..grid.len())
            .map(|i| dist(c.y().value(i), reference.path.value(i)))
            .fold(0.0, f64::max);
        assert!(
            gap <= 5.0 * reference.tolerance,
            "gap {gap}, tol {}",
            reference.tolerance
        );
    }

    #[test]
    fn stalled_window_fails() {
        let coeffs = CoefficientSpec::Linear {
            drift: [0.0, 0.0],
            diffusion: vec![[0.0, 1.0]],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 4).unwrap();
        let r = RoughPath::grid_lift(CadlagPath::identity(&grid).scaled(400.0), 2.5).unwrap();
        let (a, h) = time_drivers(&grid);
        let opts = PicardOptions {
            max_iter: 3,
            ..PicardOptions::default()
        };
        assert!(matches!(
            solve_rde_picard(&coeffs, &[1.0], &a, &h, &r, opts),
            Err(Error::PicardDiverged { .. })
        ));
    }
}
