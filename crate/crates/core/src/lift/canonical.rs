use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::rough_path::{add_outer, RoughPath};
use crate::paths::{discretize_piecewise_constant, norm, CadlagPath, Partition, PartitionSequence};

/// `t -> sum_k X_{t_k} (x) X_{t_k ^ t, t_{k+1} ^ t}` at every grid time of `x`.
///
/// Row-major `N x d*d`. Grid times inside a partition cell see a partial last term.
pub fn riemann_path(x: &CadlagPath, p: &Partition) -> Result<Vec<f64>> {
    let idx = p.spanning_indices(x.grid())?;
    let d = x.dim();
    let dd = d * d;
    let mut out = vec![0.0; x.len() * dd];
    let mut acc = vec![0.0; dd];
    for k in 0..idx.len() - 1 {
        let (a, b) = (idx[k], idx[k + 1]);
        let xa = x.value(a);
        for j in a + 1..=b {
            let row = &mut out[j * dd..(j + 1) * dd];
            row.copy_from_slice(&acc);
            let inc: Vec<f64> = x.value(j).iter().zip(xa).map(|(u, v)| u - v).collect();
            add_outer(row, xa, &inc, 1.0);
        }
        acc.copy_from_slice(&out[b * dd..(b + 1) * dd]);
    }
    Ok(out)
}

/// The left-point sum `sum_k X_{t_k} (x) X_{t_k ^ t, t_{k+1} ^ t}` at one time `t`.
pub fn iterated_riemann(x: &CadlagPath, p: &Partition, t: f64) -> Result<Vec<f64>> {
    let idx = p.spanning_indices(x.grid())?;
    let d = x.dim();
    let mut out = vec![0.0; d * d];
    let xt = x.eval(t).to_vec();
    for k in 0..idx.len() - 1 {
        let tk = x.grid().times()[idx[k]];
        if tk > t {
            break;
        }
        let xa = x.value(idx[k]);
        let tn = x.grid().times()[idx[k + 1]];
        let xb = if tn <= t {
            x.value(idx[k + 1])
        } else {
            &xt[..]
        };
        let inc: Vec<f64> = xb.iter().zip(xa).map(|(u, v)| u - v).collect();
        add_outer(&mut out, xa, &inc, 1.0);
    }
    Ok(out)
}

fn sup_row_distance(a: &[f64], b: &[f64], dd: usize) -> f64 {
    a.chunks(dd)
        .zip(b.chunks(dd))
        .map(|(u, v)| {
            u.iter()
                .zip(v)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct LiftOptions {
    /// Allowed uniform gap between the two finest Riemann-sum paths, relative
    /// to `1 + ||X||_inf^2`. `None` skips the check.
    pub tolerance: Option<f64>,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            tolerance: Some(1e-4),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftReport {
    pub levels: Vec<u32>,
    /// `sup_t |I_{n}(t) - I_{n+1}(t)|` between consecutive levels.
    pub level_differences: Vec<f64>,
    pub tolerance: Option<f64>,
    pub converged: bool,
}

/// `XX_{s,t} = int_s^t X (x) dX - X_s (x) X_{s,t}`, with the integral taken as
/// the left-point sum along the finest level of `seq`.
pub fn canonical_lift(
    x: &CadlagPath,
    seq: &PartitionSequence,
    p: f64,
    opts: LiftOptions,
) -> Result<(RoughPath, LiftReport)> {
    let d = x.dim();
    let dd = d * d;
    let mut prev: Option<Vec<f64>> = None;
    let mut diffs = Vec::new();
    for part in seq.partitions() {
        let cur = riemann_path(x, part)?;
        if let Some(pr) = &prev {
            diffs.push(sup_row_distance(pr, &cur, dd));
        }
        prev = Some(cur);
    }
    let integral = prev.expect("sequence is non-empty");
    let scale = 1.0 + x.sup_norm().powi(2);
    let tol = opts.tolerance.map(|t| t * scale);
    let converged = match (tol, diffs.last()) {
        (Some(t), Some(&gap)) => gap <= t,
        _ => true,
    };
    if let (Some(t), Some(&gap), false) = (tol, diffs.last(), converged) {
        return Err(Error::LiftNotConverged { diff: gap, tol: t });
    }
    let mut second = vec![0.0; (x.len() - 1) * dd];
    for i in 0..x.len() - 1 {
        let row = &mut second[i * dd..(i + 1) * dd];
        for c in 0..dd {
            row[c] = integral[(i + 1) * dd + c] - integral[i * dd + c];
        }
        add_outer(row, x.value(i), &x.increment(i, i + 1), -1.0);
    }
    let rp = RoughPath::new(x.clone(), second, p)?;
    let report = LiftReport {
        levels: seq.levels().to_vec(),
        level_differences: diffs,
        tolerance: tol,
        converged,
    };
    Ok((rp, report))
}

/// Lift of the piecewise-constant discretization along `p`.
///
/// `X^n` is constant between partition points and jumps at them, so the
/// iterated integral over any single grid step vanishes; `XX^n_{s,t} = 0`
/// whenever `s, t` lie in one partition cell.
pub fn piecewise_constant_lift(x: &CadlagPath, p: &Partition, exponent: f64) -> Result<RoughPath> {
    RoughPath::grid_lift(discretize_piecewise_constant(x, p)?, exponent)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LambdaReport {
    /// `sup_{s<t} |Lambda^n_{s,t}|` over grid pairs.
    pub sup_defect: f64,
    /// `2 ||X||_inf ||X^n - X||_inf` over grid values.
    pub bound: f64,
    pub holds: bool,
}

/// `Lambda^n_{s,t} = XX^n_{s,t} - int_s^t X^n_{s,u} (x) dX_u` for grid indices `a < b`.
///
/// Both terms are exact finite sums over grid steps.
pub fn lambda_defect_at(x: &CadlagPath, xn: &CadlagPath, a: usize, b: usize) -> Vec<f64> {
    let d = x.dim();
    let mut out = vec![0.0; d * d];
    let xs = xn.value(a);
    for i in a..b {
        let h: Vec<f64> = xn.value(i).iter().zip(xs).map(|(u, v)| u - v).collect();
        let dn: Vec<f64> = xn
            .value(i + 1)
            .iter()
            .zip(xn.value(i))
            .map(|(u, v)| u - v)
            .collect();
        let dx = x.increment(i, i + 1);
        let diff: Vec<f64> = dn.iter().zip(&dx).map(|(u, v)| u - v).collect();
        add_outer(&mut out, &h, &diff, 1.0);
    }
    out
}

/// Checks `sup |Lambda^n| <= 2 ||X||_inf ||X^n - X||_inf` over all grid pairs.
pub fn lambda_defect(x: &CadlagPath, p: &Partition) -> Result<LambdaReport> {
    let xn = discretize_piecewise_constant(x, p)?;
    let d = x.dim();
    let n = x.len();
    let mut sup = 0.0f64;
    let mut acc = vec![0.0; d * d];
    for a in 0..n {
        acc.iter_mut().for_each(|v| *v = 0.0);
        let xs = xn.value(a).to_vec();
        for i in a..n - 1 {
            let h: Vec<f64> = xn.value(i).iter().zip(&xs).map(|(u, v)| u - v).collect();
            let diff: Vec<f64> = (0..d)
                .map(|c| {
                    (xn.value(i + 1)[c] - xn.value(i)[c]) - (x.value(i + 1)[c] - x.value(i)[c])
                })
                .collect();
            add_outer(&mut acc, &h, &diff, 1.0);
            sup = sup.max(norm(&acc));
        }
    }
    let grid_gap = (0..n)
        .map(|i| crate::paths::dist(xn.value(i), x.value(i)))
        .fold(0.0, f64::max);
    let x_sup = (0..n).map(|i| norm(x.value(i))).fold(0.0, f64::max);
    let bound = 2.0 * x_sup * grid_gap;
    Ok(LambdaReport {
        sup_defect: sup,
        bound,
        holds: sup <= bound + 1e-12,
    })
}
