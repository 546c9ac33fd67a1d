use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::RoughPath;
use crate::paths::{dist, CadlagPath, Partition};
use crate::schemes::coefficients::{second_order_term, Coefficients};

pub(crate) fn check_dims(coeffs: &dyn Coefficients, y0: &[f64], x: &CadlagPath) -> Result<()> {
    if y0.len() != coeffs.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.state_dim(),
            found: y0.len(),
        });
    }
    if x.dim() != coeffs.driver_dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.driver_dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Scratch buffers for one scheme step.
pub(crate) struct Stepper<'a> {
    coeffs: &'a dyn Coefficients,
    b: Vec<f64>,
    sigma: Vec<f64>,
    deriv: Vec<f64>,
    corr: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(coeffs: &'a dyn Coefficients) -> Self {
        let k = coeffs.state_dim();
        let d = coeffs.driver_dim();
        Stepper {
            coeffs,
            b: vec![0.0; k],
            sigma: vec![0.0; k * d],
            deriv: vec![0.0; k * d * k],
            corr: vec![0.0; k],
        }
    }

    /// `out = b(h, y) da + sigma(h, y) dx (+ (D sigma sigma) : xx)`.
    pub(crate) fn increment(
        &mut self,
        h: f64,
        y: &[f64],
        da: f64,
        dx: &[f64],
        xx: Option<&[f64]>,
        out: &mut [f64],
    ) {
        let d = dx.len();
        self.coeffs.drift(h, y, &mut self.b);
        self.coeffs.diffusion(h, y, &mut self.sigma);
        for i in 0..y.len() {
            let noise: f64 = (0..d).map(|j| self.sigma[i * d + j] * dx[j]).sum();
            out[i] = self.b[i] * da + noise;
        }
        if let Some(xx) = xx {
            second_order_term(
                self.coeffs,
                h,
                y,
                &self.sigma,
                xx,
                &mut self.deriv,
                &mut self.corr,
            );
            out.iter_mut().zip(&self.corr).for_each(|(o, c)| *o += c);
        }
    }

    /// `out = y + increment`.
    fn step(
        &mut self,
        h: f64,
        y: &[f64],
        da: f64,
        dx: &[f64],
        xx: Option<&[f64]>,
        out: &mut [f64],
    ) {
        self.increment(h, y, da, dx, xx, out);
        out.iter_mut().zip(y).for_each(|(o, v)| *o += v);
    }
}

pub(crate) fn finite_or(values: &[f64], step: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { step })
    }
}

fn run_on_partition(
    coeffs: &dyn Coefficients,
    y0: &[f64],
    x: &CadlagPath,
    p: &Partition,
    mut second: impl FnMut(usize, usize) -> Option<Vec<f64>>,
) -> Result<CadlagPath> {
    check_dims(coeffs, y0, x)?;
    let idx = p.spanning_indices(x.grid())?;
    let k = y0.len();
    let t = p.times();
    let mut values = vec![0.0; idx.len() * k];
    values[..k].copy_from_slice(y0);
    let mut stepper = Stepper::new(coeffs);
    let mut next = vec![0.0; k];
    for i in 0..idx.len() - 1 {
        let dx = x.increment(idx[i], idx[i + 1]);
        let xx = second(idx[i], idx[i + 1]);
        stepper.step(
            t[i],
            &values[i * k..(i + 1) * k],
            t[i + 1] - t[i],
            &dx,
            xx.as_deref(),
            &mut next,
        );
        finite_or(&next, i)?;
        values[(i + 1) * k..(i + 2) * k].copy_from_slice(&next);
    }
    CadlagPath::new(p.clone(), k, values)
}

/// First-order Euler along `p`: `Y_{i+1} = Y_i + b(t_i, Y_i) dt + sigma(t_i, Y_i) X_{t_i, t_{i+1}}`.
///
/// Reads only increments of `x`; the result lives on `p`.
pub fn euler_scheme(
    coeffs: &dyn Coefficients,
    y0: &[f64],
    x: &CadlagPath,
    p: &Partition,
) -> Result<CadlagPath> {
    run_on_partition(coeffs, y0, x, p, |_, _| None)
}

/// Euler along `p` driven by `x + phi`; returns the scheme output and the perturbed driver.
pub fn approximate_euler(
    coeffs: &dyn Coefficients,
    y0: &[f64],
    x: &CadlagPath,
    phi: &CadlagPath,
    p: &Partition,
) -> Result<(CadlagPath, CadlagPath)> {
    let x_hat = x.sum(phi)?;
    let y = euler_scheme(coeffs, y0, &x_hat, p)?;
    Ok((y, x_hat))
}

/// Euler step plus the second-order term `(D sigma sigma) : XX_{t_i, t_{i+1}}`.
pub fn milstein_reference(
    coeffs: &dyn Coefficients,
    y0: &[f64],
    r: &RoughPath,
    p: &Partition,
) -> Result<CadlagPath> {
    run_on_partition(coeffs, y0, r.path(), p, |a, b| Some(r.second_level(a, b)))
}

/// A scheme output on `p` rendered on `grid` as the held path: constant on
/// each cell, jumping at partition points, with the jumps marked.
pub fn hold_on_grid(y: &CadlagPath, grid: &Partition) -> Result<CadlagPath> {
    let idx = y.grid().spanning_indices(grid)?;
    let k = y.dim();
    let mut values = Vec::with_capacity(grid.len() * k);
    let mut left = BTreeMap::new();
    for i in 0..idx.len() - 1 {
        for _ in idx[i]..idx[i + 1] {
            values.extend_from_slice(y.value(i));
        }
        if y.value(i + 1) != y.value(i) {
            left.insert(idx[i + 1], y.value(i).to_vec());
        }
    }
    values.extend_from_slice(y.value(idx.len() - 1));
    CadlagPath::with_left_limits(grid.clone(), k, values, left)
}

/// Euler on every step of the grid of `x`, continuous between grid points.
///
/// At a marked jump of `x` at index `i` the left limit is the step taken with
/// the pre-jump increment: `Y_{i-} = Y_{i-1} + b dt + sigma (X_{i-} - X_{i-1})`.
pub fn euler_on_grid(coeffs: &dyn Coefficients, y0: &[f64], x: &CadlagPath) -> Result<CadlagPath> {
    check_dims(coeffs, y0, x)?;
    let k = y0.len();
    let d = x.dim();
    let n = x.len();
    let t = x.grid().times();
    let mut values = vec![0.0; n * k];
    values[..k].copy_from_slice(y0);
    let mut left = BTreeMap::new();
    let mut stepper = Stepper::new(coeffs);
    let mut next = vec![0.0; k];
    let mut dx = vec![0.0; d];
    for i in 0..n - 1 {
        let dt = t[i + 1] - t[i];
        let (cur, rest) = values.split_at_mut((i + 1) * k);
        let y = &cur[i * k..];
        if x.is_jump(i + 1) {
            for c in 0..d {
                dx[c] = x.left(i + 1)[c] - x.value(i)[c];
            }
            stepper.step(t[i], y, dt, &dx, None, &mut next);
            finite_or(&next, i)?;
            left.insert(i + 1, next.clone());
        }
        for c in 0..d {
            dx[c] = x.value(i + 1)[c] - x.value(i)[c];
        }
        stepper.step(t[i], y, dt, &dx, None, &mut next);
        finite_or(&next, i)?;
        rest[..k].copy_from_slice(&next);
    }
    CadlagPath::with_left_limits(x.grid().clone(), k, values, left)
}

/// Fine-grid solution used as ground truth, with its self-reported accuracy.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub path: CadlagPath,
    /// `max |Y_ref - Y^{check}|` over the nodes of the check partition.
    pub tolerance: f64,
    /// `max |Y_ref - Y^{milstein}|` over the nodes of the Milstein partition.
    pub milstein_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub tolerance: f64,
    pub milstein_gap: f64,
}

impl ReferenceSolution {
    pub fn summary(&self) -> ReferenceSummary {
        ReferenceSummary {
            tolerance: self.tolerance,
            milstein_gap: self.milstein_gap,
        }
    }
}

fn node_gap(reference: &CadlagPath, y: &CadlagPath) -> Result<f64> {
    let idx = y.grid().indices_in(reference.grid())?;
    Ok(idx
        .iter()
        .enumerate()
        .map(|(i, &g)| dist(reference.value(g), y.value(i)))
        .fold(0.0, f64::max))
}

/// Euler on the full grid of `lift`, self-checked against Euler along `check`
/// (the next coarser level) and Milstein along `milstein` (two levels coarser).
///
/// The tolerance is the node gap to the coarser Euler run; the Milstein run
/// must land within ten times that (plus rounding) or the reference is rejected.
pub fn solve_rde_reference(
    coeffs: &dyn Coefficients,
    y0: &[f64],
    lift: &RoughPath,
    check: &Partition,
    milstein: &Partition,
) -> Result<ReferenceSolution> {
    let path = euler_on_grid(coeffs, y0, lift.path())?;
    let coarse = euler_scheme(coeffs, y0, lift.path(), check)?;
    let tolerance = node_gap(&path, &coarse)?;
    let m = milstein_reference(coeffs, y0, lift, milstein)?;
    let milstein_gap = node_gap(&path, &m)?;
    let scale = 1.0 + path.sup_norm();
    if milstein_gap > 10.0 * tolerance + 1e-12 * scale {
        return Err(Error::ReferenceMismatch {
            gap: milstein_gap,
            tol: tolerance,
        });
    }
    Ok(ReferenceSolution {
        path,
        tolerance,
        milstein_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::piecewise_constant_lift;
    use crate::processes::sample_brownian;
    use crate::schemes::{solve_rde_picard, CoefficientSpec, PicardOptions};

    fn linear(drift: [f64; 2], diffusion: Vec<[f64; 2]>) -> crate::schemes::BuiltinCoefficients {
        CoefficientSpec::Linear { drift, diffusion }
            .build()
            .unwrap()
    }

    fn exact_time_lift(level: u32) -> RoughPath {
        let grid = Partition::dyadic(1.0, level).unwrap();
        RoughPath::from_increment_fn(CadlagPath::identity(&grid), 2.5, |_, s, t, o| {
            o[0] = 0.5 * (t - s).powi(2)
        })
        .unwrap()
    }

    #[test]
    fn two_step_linear_growth() {
        let grid = Partition::dyadic(1.0, 4).unwrap();
        let p = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        let y = euler_scheme(
            &linear([0.0, 0.0], vec![[0.0, 1.0]]),
            &[1.0],
            &CadlagPath::identity(&grid),
            &p,
        )
        .unwrap();
        assert_eq!(y.values(), &[1.0, 1.5, 2.25]);
    }

    #[test]
    fn drift_only_adds_time() {
        let grid = Partition::dyadic(1.0, 6).unwrap();
        let w = sample_brownian(3, &[1.0], 1, &grid).unwrap();
        let p = Partition::dyadic(1.0, 3).unwrap();
        let y = euler_scheme(&linear([1.0, 0.0], vec![[0.0, 0.0]]), &[0.25], &w, &p).unwrap();
        for (i, &t) in p.times().iter().enumerate() {
            assert!((y.value(i)[0] - (0.25 + t)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_interval_is_legal() {
        let grid = Partition::dyadic(1.0, 3).unwrap();
        let p = Partition::new(vec![0.0, 1.0]).unwrap();
        let y = euler_scheme(
            &linear([0.0, 0.0], vec![[0.0, 1.0]]),
            &[1.0],
            &CadlagPath::identity(&grid),
            &p,
        )
        .unwrap();
        assert_eq!(y.values(), &[1.0, 2.0]);
    }

    #[test]
    fn blow_up_reports_step() {
        let grid = Partition::dyadic(1.0, 10).unwrap();
        let x = CadlagPath::identity(&grid).scaled(1e300);
        let p = Partition::dyadic(1.0, 3).unwrap();
        let err = euler_scheme(&linear([0.0, 0.0], vec![[0.0, 1e10]]), &[1.0], &x, &p).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { step: 0 }), "{err}");
    }

    #[test]
    fn ignores_second_level() {
        let coeffs = CoefficientSpec::Rotation {
            omega: vec![1.0, -0.5],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let w = sample_brownian(5, &[1.0, 0.0, 0.0, 1.0], 2, &grid).unwrap();
        let p = Partition::dyadic(1.0, 5).unwrap();
        let a = RoughPath::grid_lift(w.clone(), 2.5).unwrap();
        let b =
            RoughPath::from_increment_fn(w.clone(), 2.5, |i, _, _, o| o.fill(i as f64)).unwrap();
        let ya = euler_scheme(&coeffs, &[1.0, 0.0], a.path(), &p).unwrap();
        let yb = euler_scheme(&coeffs, &[1.0, 0.0], b.path(), &p).unwrap();
        assert_eq!(ya, yb);
        // The Milstein step does read it.
        let ma = milstein_reference(&coeffs, &[1.0, 0.0], &a, &p).unwrap();
        let mb = milstein_reference(&coeffs, &[1.0, 0.0], &b, &p).unwrap();
        assert_ne!(ma, mb);
        // With zero second level on the steps of `p` it reduces to Euler.
        let coarse = RoughPath::grid_lift(w.restrict(&p).unwrap(), 2.5).unwrap();
        let m0 = milstein_reference(&coeffs, &[1.0, 0.0], &coarse, &p).unwrap();
        assert_eq!(m0, ya);
    }

    #[test]
    fn zero_perturbation_is_bitwise() {
        let coeffs = linear([0.2, -0.1], vec![[0.5, 0.3]]);
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let w = sample_brownian(6, &[1.0], 1, &grid).unwrap();
        let p = Partition::dyadic(1.0, 5).unwrap();
        let zero = CadlagPath::new(grid.clone(), 1, vec![0.0; grid.len()]).unwrap();
        let (y, x_hat) = approximate_euler(&coeffs, &[1.0], &w, &zero, &p).unwrap();
        assert_eq!(y, euler_scheme(&coeffs, &[1.0], &w, &p).unwrap());
        assert_eq!(x_hat, w);
    }

    #[test]
    fn linear_perturbation_shifts_drift() {
        // Increment c dt of phi enters as sigma c dt, i.e. drift b + sigma c.
        let (b, s, c) = ([0.2, -0.1], [0.5, 0.3], 0.7);
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let w = sample_brownian(8, &[1.0], 1, &grid).unwrap();
        let p = Partition::dyadic(1.0, 5).unwrap();
        let phi = CadlagPath::identity(&grid).scaled(c);
        let (y, _) = approximate_euler(&linear(b, vec![s]), &[1.0], &w, &phi, &p).unwrap();
        let shifted = linear([b[0] + s[0] * c, b[1] + s[1] * c], vec![s]);
        let z = euler_scheme(&shifted, &[1.0], &w, &p).unwrap();
        for i in 0..p.len() {
            assert!((y.value(i)[0] - z.value(i)[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn milstein_is_closer_to_exponential() {
        let coeffs = linear([0.0, 0.0], vec![[0.0, 1.0]]);
        let r = exact_time_lift(10);
        let p = Partition::dyadic(1.0, 3).unwrap();
        let e = std::f64::consts::E;
        let euler = euler_scheme(&coeffs, &[1.0], r.path(), &p).unwrap();
        let mil = milstein_reference(&coeffs, &[1.0], &r, &p).unwrap();
        let end = p.len() - 1;
        let (eu, mi) = (
            (euler.value(end)[0] - e).abs(),
            (mil.value(end)[0] - e).abs(),
        );
        assert!(mi < eu / 5.0, "milstein {mi}, euler {eu}");
    }

    #[test]
    fn reference_reaches_exponential() {
        let coeffs = linear([0.0, 0.0], vec![[0.0, 1.0]]);
        let r = exact_time_lift(14);
        let check = Partition::dyadic(1.0, 13).unwrap();
        let mil = Partition::dyadic(1.0, 12).unwrap();
        let reference = solve_rde_reference(&coeffs, &[1.0], &r, &check, &mil).unwrap();
        let end = reference.path.len() - 1;
        assert!((reference.path.value(end)[0] - std::f64::consts::E).abs() <= 1e-3);
        assert!(reference.tolerance > 0.0 && reference.milstein_gap <= 10.0 * reference.tolerance);
    }

    #[test]
    fn ode_reference_converges_at_rate_one() {
        // sigma = 0, b(y) = y: errors at levels 8, 9, 10 halve.
        let coeffs = linear([0.0, 1.0], vec![[0.0, 0.0]]);
        let errs: Vec<f64> = (8..=10)
            .map(|n| {
                let grid = Partition::dyadic(1.0, n).unwrap();
                let y = euler_on_grid(&coeffs, &[1.0], &CadlagPath::identity(&grid)).unwrap();
                (y.value(grid.len() - 1)[0] - std::f64::consts::E).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 2.0).abs() < 0.02, "{errs:?}");
        }
    }

    #[test]
    fn piecewise_constant_driver_is_solved_exactly() {
        let coeffs = CoefficientSpec::Rotation {
            omega: vec![1.0, 0.5],
        }
        .build()
        .unwrap();
        let grid = Partition::dyadic(1.0, 10).unwrap();
        let p = Partition::dyadic(1.0, 4).unwrap();
        let w = sample_brownian(2, &[1.0, 0.0, 0.0, 1.0], 2, &grid).unwrap();
        let lift = piecewise_constant_lift(&w, &p, 2.5).unwrap();
        let fine = euler_on_grid(&coeffs, &[1.0, 0.0], lift.path()).unwrap();
        let coarse = euler_scheme(&coeffs, &[1.0, 0.0], &w, &p).unwrap();
        let idx = p.indices_in(&grid).unwrap();
        for (i, &g) in idx.iter().enumerate() {
            assert_eq!(fine.value(g), coarse.value(i));
        }
        // The held rendering of the coarse output is the fine solution, left limits included.
        assert_eq!(hold_on_grid(&coarse, &grid).unwrap(), fine);
        let gamma = crate::paths::gamma_path_on(&p, &grid).unwrap();
        let (c, _) = solve_rde_picard(
            &coeffs,
            &[1.0, 0.0],
            &gamma,
            &gamma,
            &lift,
            PicardOptions::default(),
        )
        .unwrap();
        for (i, &g) in idx.iter().enumerate() {
            assert!(dist(c.y().value(g), coarse.value(i)) < 1e-12);
        }
    }

    #[test]
    fn left_limits_follow_driver_jumps() {
        let grid = Partition::dyadic(1.0, 3).unwrap();
        let mut left = BTreeMap::new();
        left.insert(4, vec![0.0]);
        let x = CadlagPath::with_left_limits(
            grid.clone(),
            1,
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            left,
        )
        .unwrap();
        let y = euler_on_grid(&linear([0.0, 0.0], vec![[0.0, 1.0]]), &[1.0], &x).unwrap();
        assert_eq!(y.left(4), &[1.0]);
        assert_eq!(y.value(4), &[2.0]);
        assert!(y.is_jump(4));
    }
}
