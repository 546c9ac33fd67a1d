use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{norm, CadlagPath, Partition};

/// Spans up to this many grid steps are summed directly instead of through prefix sums.
const DIRECT_SPAN: usize = 64;

/// `a (x) b` added into `out` (row-major `a.len() x b.len()`), scaled by `c`.
pub(crate) fn add_outer(out: &mut [f64], a: &[f64], b: &[f64], c: f64) {
    let e = b.len();
    for (l, &al) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[l * e + j] += c * al * bj;
        }
    }
}

/// Error-free sum: `a + b = s + e` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// A level-2 rough path `(X, XX)` on the grid of `X`.
///
/// Only the second level on consecutive grid pairs is stored; every other
/// `XX_{s,t}` follows from Chen's relation
/// `XX_{s,t} = sum_i XX_{t_i,t_{i+1}} + sum_i X_{s,t_i} (x) X_{t_i,t_{i+1}}`.
/// Entry `[l * d + j]` of a second-level value is the `(l, j)` component.
#[derive(Debug, Clone)]
pub struct RoughPath {
    path: CadlagPath,
    second: Vec<f64>,
    p: f64,
    prefix_hi: Vec<f64>,
    prefix_lo: Vec<f64>,
}

impl RoughPath {
    /// `second` holds `(N - 1) * d * d` consecutive-pair values.
    pub fn new(path: CadlagPath, second: Vec<f64>, p: f64) -> Result<Self> {
        if !(1.0..3.0).contains(&p) {
            return Err(Error::InvalidExponent {
                name: "p",
                value: p,
                reason: "rough paths need 1 <= p < 3",
            });
        }
        let d = path.dim();
        let steps = path.len() - 1;
        if second.len() != steps * d * d {
            return Err(Error::DimensionMismatch {
                expected: steps * d * d,
                found: second.len(),
            });
        }
        if let Some((i, &v)) = second.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: i / (d * d),
                value: v,
            });
        }
        let dd = d * d;
        let mut prefix_hi = vec![0.0; path.len() * dd];
        let mut prefix_lo = vec![0.0; path.len() * dd];
        let mut term = vec![0.0; dd];
        for i in 0..steps {
            term.copy_from_slice(&second[i * dd..(i + 1) * dd]);
            let dx = path.increment(i, i + 1);
            add_outer(&mut term, path.value(i), &dx, 1.0);
            for c in 0..dd {
                let (s, e) = two_sum(prefix_hi[i * dd + c], term[c]);
                prefix_hi[(i + 1) * dd + c] = s;
                prefix_lo[(i + 1) * dd + c] = prefix_lo[i * dd + c] + e;
            }
        }
        Ok(RoughPath {
            path,
            second,
            p,
            prefix_hi,
            prefix_lo,
        })
    }

    /// Second level from a function of consecutive grid pairs.
    pub fn from_increment_fn(
        path: CadlagPath,
        p: f64,
        mut f: impl FnMut(usize, f64, f64, &mut [f64]),
    ) -> Result<Self> {
        let d = path.dim();
        let t = path.grid().times().to_vec();
        let mut second = vec![0.0; (path.len() - 1) * d * d];
        for i in 0..path.len() - 1 {
            f(i, t[i], t[i + 1], &mut second[i * d * d..(i + 1) * d * d]);
        }
        RoughPath::new(path, second, p)
    }

    /// Lift whose consecutive second-level values vanish: `XX` is the
    /// left-point iterated sum of `X` along its own grid.
    pub fn grid_lift(path: CadlagPath, p: f64) -> Result<Self> {
        let d = path.dim();
        let n = path.len();
        RoughPath::new(path, vec![0.0; (n - 1) * d * d], p)
    }

    pub fn path(&self) -> &CadlagPath {
        &self.path
    }

    pub fn grid(&self) -> &Partition {
        self.path.grid()
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stored value on the consecutive pair `(t_i, t_{i+1})`.
    pub fn consecutive(&self, i: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.second[i * dd..(i + 1) * dd]
    }

    pub fn consecutive_values(&self) -> &[f64] {
        &self.second
    }

    /// `XX_{t_a, t_b}` for grid indices `a <= b`.
    pub fn second_level(&self, a: usize, b: usize) -> Vec<f64> {
        let d = self.dim();
        let dd = d * d;
        let mut out = vec![0.0; dd];
        if b <= a {
            return out;
        }
        if b - a <= DIRECT_SPAN {
            self.accumulate_direct(a, b, &mut out);
            return out;
        }
        for c in 0..dd {
            let hi = self.prefix_hi[b * dd + c] - self.prefix_hi[a * dd + c];
            let lo = self.prefix_lo[b * dd + c] - self.prefix_lo[a * dd + c];
            out[c] = hi + lo;
        }
        let xab = self.path.increment(a, b);
        add_outer(&mut out, self.path.value(a), &xab, -1.0);
        out
    }

    fn accumulate_direct(&self, a: usize, b: usize, out: &mut [f64]) {
        let d = self.dim();
        let mut xa_i = vec![0.0; d];
        for i in a..b {
            let xi = self.path.value(i);
            let xn = self.path.value(i + 1);
            for (c, v) in out.iter_mut().zip(self.consecutive(i)) {
                *c += v;
            }
            for l in 0..d {
                xa_i[l] = xi[l] - self.path.value(a)[l];
            }
            for l in 0..d {
                for j in 0..d {
                    out[l * d + j] += xa_i[l] * (xn[j] - xi[j]);
                }
            }
        }
    }

    /// Fills `out[j] = XX_{t_i, t_j}` (each `d * d` entries) for `j > i` by
    /// running Chen updates from `i`; used by the variation DPs.
    pub(crate) fn second_level_row(&self, i: usize, out: &mut [f64]) {
        let d = self.dim();
        let dd = d * d;
        let n = self.len();
        let mut acc = vec![0.0; dd];
        let xi = self.path.value(i).to_vec();
        for j in i..n - 1 {
            let xj = self.path.value(j);
            let xn = self.path.value(j + 1);
            for (c, v) in acc.iter_mut().zip(self.consecutive(j)) {
                *c += v;
            }
            for l in 0..d {
                let a = xj[l] - xi[l];
                for m in 0..d {
                    acc[l * d + m] += a * (xn[m] - xj[m]);
                }
            }
            out[(j + 1) * dd..(j + 2) * dd].copy_from_slice(&acc);
        }
    }

    /// The rough path seen only at the times of `p`: values restricted and
    /// consecutive second-level values taken from Chen's relation.
    pub fn restrict(&self, p: &Partition) -> Result<RoughPath> {
        let idx = p.indices_in(self.grid())?;
        let path = self.path.restrict(p)?;
        let mut second = Vec::with_capacity((idx.len() - 1) * self.dim() * self.dim());
        for w in idx.windows(2) {
            second.extend(self.second_level(w[0], w[1]));
        }
        RoughPath::new(path, second, self.p)
    }

    /// Chen residual on grid indices `s < u < t`: absolute and relative to the
    /// largest term of the relation.
    pub fn chen_residual(&self, s: usize, u: usize, t: usize) -> (f64, f64) {
        let st = self.second_level(s, t);
        let su = self.second_level(s, u);
        let ut = self.second_level(u, t);
        let x_su = self.path.increment(s, u);
        let x_ut = self.path.increment(u, t);
        let mut res = st.clone();
        for c in 0..res.len() {
            res[c] -= su[c] + ut[c];
        }
        add_outer(&mut res, &x_su, &x_ut, -1.0);
        let abs = norm(&res);
        let scale = norm(&st)
            .max(norm(&su))
            .max(norm(&ut))
            .max(norm(&x_su) * norm(&x_ut));
        let rel = if scale > 0.0 { abs / scale } else { abs };
        (abs, rel)
    }
}

/// JSON layout of a rough path: one row per grid time, one row-major
/// `d x d` matrix per consecutive pair.
#[derive(Serialize, Deserialize)]
struct RoughPathJson {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    left_limits: BTreeMap<usize, Vec<f64>>,
    second_level: Vec<Vec<f64>>,
    p: f64,
}

impl RoughPath {
    pub fn to_json(&self) -> String {
        let d = self.dim();
        let doc = RoughPathJson {
            grid: self.grid().times().to_vec(),
            values: self.path.values().chunks(d).map(<[f64]>::to_vec).collect(),
            left_limits: self.path.left_limits().clone(),
            second_level: self.second.chunks(d * d).map(<[f64]>::to_vec).collect(),
            p: self.p,
        };
        serde_json::to_string(&doc).expect("finite values serialize")
    }

    pub fn from_json(text: &str) -> Result<RoughPath> {
        let doc: RoughPathJson = serde_json::from_str(text)?;
        let d = doc.values.first().map_or(0, Vec::len);
        if let Some(row) = doc.values.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        let grid = Partition::new(doc.grid)?;
        let path = CadlagPath::with_left_limits(grid, d, doc.values.concat(), doc.left_limits)?;
        RoughPath::new(path, doc.second_level.concat(), doc.p)
    }
}

/// `||XX||_{r}` over grid pairs, computed with running Chen sums.
pub fn second_level_variation(x: &RoughPath, r: f64) -> Result<f64> {
    let dd = x.dim() * x.dim();
    let mut buf = vec![0.0; x.len() * dd];
    crate::variation::two_param_variation(x.len(), r, |i, out| {
        x.second_level_row(i, &mut buf);
        for j in i + 1..x.len() {
            out[j] = norm(&buf[j * dd..(j + 1) * dd]);
        }
    })
}

/// `||X - Y||_p + ||XX - YY||_{p/2}` for rough paths on one grid.
pub fn rough_distance(x: &RoughPath, y: &RoughPath, p: f64) -> Result<f64> {
    if x.grid() != y.grid() {
        return Err(Error::GridMismatch);
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let first = crate::variation::p_variation(&x.path().difference(y.path())?, p, None)?;
    let dd = x.dim() * x.dim();
    let mut bx = vec![0.0; x.len() * dd];
    let mut by = vec![0.0; x.len() * dd];
    let second = crate::variation::two_param_variation(x.len(), p / 2.0, |i, out| {
        x.second_level_row(i, &mut bx);
        y.second_level_row(i, &mut by);
        for j in i + 1..x.len() {
            let mut s = 0.0;
            for c in j * dd..(j + 1) * dd {
                s += (bx[c] - by[c]) * (bx[c] - by[c]);
            }
            out[j] = s.sqrt();
        }
    })?;
    Ok(first + second)
}
