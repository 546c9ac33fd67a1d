use crate::error::{Error, Result};
use crate::paths::{CadlagPath, Partition};
use crate::variation::pvar::{check_exponent, pvar_profile};

/// A control `w(s, t)` on a grid: superadditive, vanishing on the diagonal.
#[derive(Debug, Clone)]
pub enum ControlFunction {
    /// `c (t - s)`.
    Linear { c: f64 },
    /// `||path||^q_{q,[s,t]}`; superadditive for `q >= 1`.
    QVariation { path: CadlagPath, q: f64 },
    /// Sum of weighted products `weight * prod_j w_j^{power_j}`.
    /// Superadditive when every product has total power at least one.
    Combination(Vec<ControlTerm>),
}

#[derive(Debug, Clone)]
pub struct ControlTerm {
    pub weight: f64,
    pub factors: Vec<(ControlFunction, f64)>,
}

impl ControlFunction {
    /// `w(s, t)` for times `s <= t`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        let m = self.matrix(&[s, t])?;
        Ok(m[1])
    }

    /// `w(times[a], times[b])` for all pairs, row-major `m x m`, zero below the diagonal.
    pub fn matrix(&self, times: &[f64]) -> Result<Vec<f64>> {
        let m = times.len();
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            self.row(times, a, &mut out[a * m..(a + 1) * m])?;
        }
        Ok(out)
    }

    /// Fills `out[b] = w(times[a], times[b])` for `b > a`; other entries are zeroed.
    pub fn row(&self, times: &[f64], a: usize, out: &mut [f64]) -> Result<()> {
        let m = times.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            ControlFunction::Linear { c } => {
                for b in a + 1..m {
                    out[b] = c * (times[b] - times[a]);
                }
            }
            ControlFunction::QVariation { path, q } => {
                check_exponent("q", *q)?;
                let grid = path.grid();
                let start = grid.index_of(times[a]).ok_or(Error::NotOnGrid(times[a]))?;
                let pts = path.points(start, path.len() - 1);
                let v = pvar_profile(&pts, path.dim(), *q);
                let mut pos = 0usize;
                let mut g = start;
                for b in a + 1..m {
                    let target = grid.index_of(times[b]).ok_or(Error::NotOnGrid(times[b]))?;
                    while g < target {
                        g += 1;
                        pos += if path.is_jump(g) { 2 } else { 1 };
                    }
                    out[b] = v[pos];
                }
            }
            ControlFunction::Combination(terms) => {
                let mut prod = vec![0.0; m];
                let mut fr = vec![0.0; m];
                for term in terms {
                    prod.iter_mut().for_each(|v| *v = term.weight);
                    for (f, power) in &term.factors {
                        f.row(times, a, &mut fr)?;
                        for (p, v) in prod.iter_mut().zip(&fr) {
                            *p *= v.max(0.0).powf(*power);
                        }
                    }
                    for b in a + 1..m {
                        out[b] += prod[b];
                    }
                }
            }
        }
        Ok(())
    }

    /// `w(s,u) + w(u,t) <= w(s,t)` for every triple of `grid` times, up to rounding.
    pub fn check_superadditive(&self, grid: &Partition) -> Result<()> {
        let t = grid.times();
        let m = t.len();
        let w = self.matrix(t)?;
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    let lhs = w[a * m + b] + w[b * m + c];
                    let rhs = w[a * m + c];
                    if lhs > rhs * (1.0 + 1e-10) + 1e-14 {
                        return Err(Error::NotSuperadditive {
                            s: t[a],
                            u: t[b],
                            t: t[c],
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Evaluates a control at `(s, t)`.
pub fn control_eval(w: &ControlFunction, s: f64, t: f64) -> Result<f64> {
    w.eval(s, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_control() {
        assert_eq!(
            control_eval(&ControlFunction::Linear { c: 2.0 }, 0.0, 0.5).unwrap(),
            1.0
        );
        assert_eq!(
            control_eval(&ControlFunction::Linear { c: 2.0 }, 0.3, 0.3).unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_path_has_zero_variation_control() {
        let grid = Partition::dyadic(1.0, 4).unwrap();
        let path = CadlagPath::scalar(grid.clone(), vec![1.5; grid.len()]).unwrap();
        let w = ControlFunction::QVariation { path, q: 2.0 };
        assert!(w.matrix(grid.times()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn product_control_is_superadditive() {
        // w_X^{1/2} w_phi^{p/2q} with 1/2 + p/2q = 1/2 + 2.5/3 > 1.
        let grid = Partition::dyadic(1.0, 5).unwrap();
        let x = CadlagPath::from_fn(grid.clone(), 1, |t, out| out[0] = (11.0 * t).sin()).unwrap();
        let phi = CadlagPath::from_fn(grid.clone(), 1, |t, out| out[0] = t * t - (5.0 * t).cos())
            .unwrap();
        let (p, q) = (2.5, 1.5);
        let w = ControlFunction::Combination(vec![ControlTerm {
            weight: 1.0,
            factors: vec![
                (ControlFunction::QVariation { path: x, q: p }, 0.5),
                (ControlFunction::QVariation { path: phi, q }, p / (2.0 * q)),
            ],
        }]);
        w.check_superadditive(&grid).unwrap();
    }

    #[test]
    fn sublinear_power_is_caught() {
        let grid = Partition::dyadic(1.0, 3).unwrap();
        let w = ControlFunction::Combination(vec![ControlTerm {
            weight: 1.0,
            factors: vec![(ControlFunction::Linear { c: 1.0 }, 0.5)],
        }]);
        assert!(matches!(
            w.check_superadditive(&grid),
            Err(Error::NotSuperadditive { .. })
        ));
    }
}
