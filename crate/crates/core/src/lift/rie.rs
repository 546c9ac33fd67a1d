use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::canonical::riemann_path;
use crate::lift::rough_path::add_outer;
use crate::paths::{discretize_piecewise_constant, dist, norm, CadlagPath, PartitionSequence};
use crate::variation::ControlFunction;

/// Partitions larger than this are refused by the control-bound scan.
pub const MAX_RIE_LEVEL_POINTS: usize = 1 << 13;

#[derive(Debug, Clone, Copy)]
pub struct RieOptions {
    /// Finest-level uniform errors must fall below `rel_tol * (1 + ||X||_inf)`
    /// for the path and `rel_tol * (1 + ||X||_inf)^2` for the integral.
    pub rel_tol: f64,
}

impl Default for RieOptions {
    fn default() -> Self {
        RieOptions { rel_tol: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieWitness {
    pub level: u32,
    pub time: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RieReport {
    pub levels: Vec<u32>,
    /// `||X^n - X||_inf`, left limits included.
    pub path_errors: Vec<f64>,
    /// `sup_t |int_0^t X^n (x) dX - int_0^t X (x) dX|`, the limit taken along the grid.
    pub integral_errors: Vec<f64>,
    pub path_tolerance: f64,
    pub integral_tolerance: f64,
    /// `sup |X_{s,t}|^p / w(s,t)` over pairs of partition points.
    pub increment_ratio: f64,
    /// `sup_n sup_{k<l} |int_{t_k}^{t_l} X^n (x) dX - X_{t_k} (x) X_{t_k,t_l}|^{p/2} / w(t_k, t_l)`.
    pub remainder_ratio: f64,
    /// Smallest `c` such that `c * w` satisfies the control bound.
    pub best_scale: f64,
    pub pass: bool,
    pub failing_condition: Option<String>,
    pub witness: Option<RieWitness>,
}

fn argmax_distance(a: &CadlagPath, b: &CadlagPath) -> (f64, usize) {
    let mut best = (0.0, 0);
    for i in 0..a.len() {
        let v = dist(a.value(i), b.value(i));
        if v > best.0 {
            best = (v, i);
        }
        if a.is_jump(i) || b.is_jump(i) {
            let l = dist(a.left(i), b.left(i));
            if l > best.0 {
                best = (l, i);
            }
        }
    }
    best
}

/// Empirical check of the three conditions of the Riemann-integrability property
/// along `seq`, with the control bound tested against `w`.
pub fn rie_diagnostic(
    x: &CadlagPath,
    seq: &PartitionSequence,
    p: f64,
    w: &ControlFunction,
    opts: RieOptions,
) -> Result<RieReport> {
    if !(1.0..3.0).contains(&p) {
        return Err(Error::InvalidExponent {
            name: "p",
            value: p,
            reason: "must lie in [1, 3)",
        });
    }
    let d = x.dim();
    let dd = d * d;
    let reference = riemann_path(x, x.grid())?;
    let x_sup = x.sup_norm();
    let path_tolerance = opts.rel_tol * (1.0 + x_sup);
    let integral_tolerance = opts.rel_tol * (1.0 + x_sup).powi(2);

    let mut path_errors = Vec::new();
    let mut integral_errors = Vec::new();
    let mut last_path_witness = (0.0, 0usize);
    let mut last_integral_witness = (0.0, 0usize);
    let mut increment_ratio = 0.0f64;
    let mut remainder_ratio = 0.0f64;

    for part in seq.partitions() {
        if part.len() > MAX_RIE_LEVEL_POINTS {
            return Err(Error::TooManyPoints {
                points: part.len(),
                cap: MAX_RIE_LEVEL_POINTS,
            });
        }
        let xn = discretize_piecewise_constant(x, part)?;
        let (pe, pi) = argmax_distance(&xn, x);
        path_errors.push(pe);
        last_path_witness = (pe, pi);

        let integral = riemann_path(x, part)?;
        let mut ie = (0.0, 0usize);
        for i in 0..x.len() {
            let v = dist(
                &integral[i * dd..(i + 1) * dd],
                &reference[i * dd..(i + 1) * dd],
            );
            if v > ie.0 {
                ie = (v, i);
            }
        }
        integral_errors.push(ie.0);
        last_integral_witness = ie;

        let idx = part.spanning_indices(x.grid())?;
        let times = part.times();
        let m = idx.len();
        let mut wrow = vec![0.0; m];
        let mut rem = vec![0.0; dd];
        for a in 0..m {
            w.row(times, a, &mut wrow)?;
            let xa = x.value(idx[a]);
            let ia = &integral[idx[a] * dd..(idx[a] + 1) * dd];
            for b in a + 1..m {
                let wv = wrow[b];
                let xab = x.increment(idx[a], idx[b]);
                let inc = norm(&xab).powf(p);
                let ib = &integral[idx[b] * dd..(idx[b] + 1) * dd];
                for c in 0..dd {
                    rem[c] = ib[c] - ia[c];
                }
                add_outer(&mut rem, xa, &xab, -1.0);
                let r = norm(&rem).powf(p / 2.0);
                increment_ratio = increment_ratio.max(ratio(inc, wv));
                remainder_ratio = remainder_ratio.max(ratio(r, wv));
            }
        }
    }

    let best_scale = increment_ratio + remainder_ratio;
    let finest = *seq.levels().last().expect("non-empty");
    let times = x.grid().times();
    let (pass, failing_condition, witness) = if last_path_witness.0 > path_tolerance {
        let (v, i) = last_path_witness;
        (
            false,
            Some("uniform_path".to_string()),
            Some(RieWitness {
                level: finest,
                time: times[i],
                value: v,
            }),
        )
    } else if last_integral_witness.0 > integral_tolerance {
        let (v, i) = last_integral_witness;
        (
            false,
            Some("uniform_integral".to_string()),
            Some(RieWitness {
                level: finest,
                time: times[i],
                value: v,
            }),
        )
    } else if best_scale > 1.0 {
        (false, Some("control_bound".to_string()), None)
    } else {
        (true, None, None)
    };

    Ok(RieReport {
        levels: seq.levels().to_vec(),
        path_errors,
        integral_errors,
        path_tolerance,
        integral_tolerance,
        increment_ratio,
        remainder_ratio,
        best_scale,
        pass,
        failing_condition,
        witness,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}
