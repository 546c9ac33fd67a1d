use crate::error::{Error, Result};
use crate::lift::RoughPath;
use crate::paths::{norm, CadlagPath};
use crate::schemes::coefficients::Coefficients;
use crate::variation::two_param_variation;

/// A path `Y` controlled by `X` with Gubinelli derivative `Y'`.
///
/// `Y` has dimension `k`, `X` dimension `d`, and `Y'` holds `k x d`
/// row-major matrices. All three share one grid.
#[derive(Debug, Clone)]
pub struct ControlledPath {
    y: CadlagPath,
    y_prime: CadlagPath,
    x: CadlagPath,
}

impl ControlledPath {
    pub fn new(y: CadlagPath, y_prime: CadlagPath, x: CadlagPath) -> Result<Self> {
        if y.grid() != x.grid() || y_prime.grid() != x.grid() {
            return Err(Error::GridMismatch);
        }
        if y_prime.dim() != y.dim() * x.dim() {
            return Err(Error::DimensionMismatch {
                expected: y.dim() * x.dim(),
                found: y_prime.dim(),
            });
        }
        Ok(ControlledPath { y, y_prime, x })
    }

    pub fn y(&self) -> &CadlagPath {
        &self.y
    }

    pub fn y_prime(&self) -> &CadlagPath {
        &self.y_prime
    }

    pub fn x(&self) -> &CadlagPath {
        &self.x
    }

    /// `R_{a,b} = Y_{a,b} - Y'_a X_{a,b}` for grid indices `a <= b`.
    pub fn remainder(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.x.dim();
        let dx = self.x.increment(a, b);
        let yp = self.y_prime.value(a);
        self.y
            .increment(a, b)
            .iter()
            .enumerate()
            .map(|(i, dy)| dy - (0..d).map(|j| yp[i * d + j] * dx[j]).sum::<f64>())
            .collect()
    }

    /// `r`-variation of the remainder over the grid.
    pub fn remainder_variation(&self, r: f64) -> Result<f64> {
        let k = self.y.dim();
        let d = self.x.dim();
        two_param_variation(self.y.len(), r, |a, out| {
            let ya = self.y.value(a);
            let xa = self.x.value(a);
            let yp = self.y_prime.value(a);
            let mut rem = vec![0.0; k];
            for (b, o) in out.iter_mut().enumerate().skip(a + 1) {
                let yb = self.y.value(b);
                let xb = self.x.value(b);
                for i in 0..k {
                    let lin: f64 = (0..d).map(|j| yp[i * d + j] * (xb[j] - xa[j])).sum();
                    rem[i] = yb[i] - ya[i] - lin;
                }
                *o = norm(&rem);
            }
        })
    }
}

/// `(Y, sigma(H, Y))` controlled by `X`.
pub fn controlled_from_solution(
    y: &CadlagPath,
    coeffs: &dyn Coefficients,
    h: &CadlagPath,
    x: &CadlagPath,
) -> Result<ControlledPath> {
    if y.grid() != h.grid() || y.grid() != x.grid() {
        return Err(Error::GridMismatch);
    }
    if y.dim() != coeffs.state_dim() || x.dim() != coeffs.driver_dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.state_dim(),
            found: y.dim(),
        });
    }
    let kd = y.dim() * x.dim();
    let mut values = vec![0.0; y.len() * kd];
    for i in 0..y.len() {
        coeffs.diffusion(h.value(i)[0], y.value(i), &mut values[i * kd..(i + 1) * kd]);
    }
    let y_prime = CadlagPath::new(y.grid().clone(), kd, values)?;
    ControlledPath::new(y.clone(), y_prime, x.clone())
}

/// Compensated left-point sums `sum_i F_i X_{i,i+1} + F'_i XX_{i,i+1}` along the grid.
///
/// `F` holds `m x d` matrices (so `F.y` has dimension `m * d`) and `F'` holds
/// their derivatives, entry `((a * d + j) * d + l)` for `d F_{aj} / d X^l`.
/// The result is the `m`-vector integral path, starting at zero.
pub fn rough_integral(c: &ControlledPath, r: &RoughPath) -> Result<CadlagPath> {
    if c.x().grid() != r.grid() {
        return Err(Error::GridMismatch);
    }
    let d = r.dim();
    if c.x().dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: c.x().dim(),
        });
    }
    if !c.y().dim().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d * (c.y().dim() / d).max(1),
            found: c.y().dim(),
        });
    }
    let m = c.y().dim() / d;
    let x = r.path();
    let n = x.len();
    let mut values = vec![0.0; n * m];
    for i in 0..n - 1 {
        let f = c.y().value(i);
        let fp = c.y_prime().value(i);
        let xi = x.value(i);
        let xn = x.value(i + 1);
        let xx = r.consecutive(i);
        for a in 0..m {
            let mut acc = 0.0;
            for j in 0..d {
                acc += f[a * d + j] * (xn[j] - xi[j]);
                for l in 0..d {
                    acc += fp[(a * d + j) * d + l] * xx[l * d + j];
                }
            }
            values[(i + 1) * m + a] = values[i * m + a] + acc;
        }
    }
    CadlagPath::new(x.grid().clone(), m, values)
}

/// A Young integral with its refinement diagnostic.
#[derive(Debug, Clone)]
pub struct YoungIntegral {
    pub path: CadlagPath,
    /// `|full-grid sum - half-grid sum|` at the final time.
    pub refinement_gap: f64,
}

/// Left-point sums `int F dA` with `F` of `m x d` matrices and `A` of dimension `d`.
///
/// The half grid keeps the even indices plus the last one; when `tol` is given
/// a final-time gap above it is an error.
pub fn young_integral(f: &CadlagPath, a: &CadlagPath, tol: Option<f64>) -> Result<YoungIntegral> {
    if f.grid() != a.grid() {
        return Err(Error::GridMismatch);
    }
    let d = a.dim();
    if !f.dim().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: f.dim(),
        });
    }
    let m = f.dim() / d;
    let n = a.len();
    let left_sum = |i: usize, j: usize, out: &mut [f64]| {
        let fi = f.value(i);
        let (ai, aj) = (a.value(i), a.value(j));
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|c| fi[r * d + c] * (aj[c] - ai[c])).sum();
        }
    };
    let mut values = vec![0.0; n * m];
    let mut term = vec![0.0; m];
    for i in 0..n - 1 {
        left_sum(i, i + 1, &mut term);
        for r in 0..m {
            values[(i + 1) * m + r] = values[i * m + r] + term[r];
        }
    }
    let mut half = vec![0.0; m];
    let mut i = 0;
    while i < n - 1 {
        let j = (i + 2).min(n - 1);
        left_sum(i, j, &mut term);
        half.iter_mut().zip(&term).for_each(|(h, t)| *h += t);
        i = j;
    }
    let full = &values[(n - 1) * m..];
    let refinement_gap = full
        .iter()
        .zip(&half)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if let Some(tol) = tol {
        if refinement_gap > tol {
            return Err(Error::RefinementInconsistent {
                gap: refinement_gap,
                tol,
            });
        }
    }
    let path = CadlagPath::new(a.grid().clone(), m, values)?;
    Ok(YoungIntegral {
        path,
        refinement_gap,
    })
}
