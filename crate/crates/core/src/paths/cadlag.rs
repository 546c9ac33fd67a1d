use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::paths::partition::Partition;

/// A cadlag path sampled on a master grid.
///
/// Values are right values `X_t`. Left limits are stored only at marked jump
/// indices; at every other grid point the path is treated as continuous, so
/// `X_{t-} = X_t`. Index 0 never carries a left limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    grid: Partition,
    dim: usize,
    values: Vec<f64>,
    left: BTreeMap<usize, Vec<f64>>,
}

impl CadlagPath {
    /// Builds a path from row-major values (`grid.len() * dim` entries).
    pub fn new(grid: Partition, dim: usize, values: Vec<f64>) -> Result<Self> {
        CadlagPath::with_left_limits(grid, dim, values, BTreeMap::new())
    }

    pub fn with_left_limits(
        grid: Partition,
        dim: usize,
        values: Vec<f64>,
        left: BTreeMap<usize, Vec<f64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim,
                found: values.len(),
            });
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: i / dim,
                value: v,
            });
        }
        for (&i, lv) in &left {
            if i == 0 || i >= grid.len() {
                return Err(Error::BadLeftLimit(i));
            }
            if lv.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: lv.len(),
                });
            }
            if let Some(&v) = lv.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row: i, value: v });
            }
        }
        Ok(CadlagPath {
            grid,
            dim,
            values,
            left,
        })
    }

    /// Samples `f(t)` at every grid time.
    pub fn from_fn(
        grid: Partition,
        dim: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; grid.len() * dim];
        for (i, &t) in grid.times().iter().enumerate() {
            f(t, &mut values[i * dim..(i + 1) * dim]);
        }
        CadlagPath::new(grid, dim, values)
    }

    /// Scalar path from one value per grid time.
    pub fn scalar(grid: Partition, values: Vec<f64>) -> Result<Self> {
        CadlagPath::new(grid, 1, values)
    }

    /// `X_t = t` on the grid.
    pub fn identity(grid: &Partition) -> CadlagPath {
        let values = grid.times().to_vec();
        CadlagPath::new(grid.clone(), 1, values).expect("grid times are finite")
    }

    pub fn grid(&self) -> &Partition {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// `X_{t_i-}`: the stored left limit at a jump, else the value.
    pub fn left(&self, i: usize) -> &[f64] {
        match self.left.get(&i) {
            Some(v) => v,
            None => self.value(i),
        }
    }

    pub fn is_jump(&self, i: usize) -> bool {
        self.left.contains_key(&i)
    }

    pub fn jump_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.left.keys().copied()
    }

    pub fn left_limits(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.left
    }

    pub fn has_jumps(&self) -> bool {
        !self.left.is_empty()
    }

    pub fn jump_times(&self) -> Vec<f64> {
        self.left.keys().map(|&i| self.grid.times()[i]).collect()
    }

    /// Value held at time `t`: the value at the last grid time `<= t`.
    pub fn eval(&self, t: f64) -> &[f64] {
        self.value(self.grid.locate(t))
    }

    /// `X_{t_j} - X_{t_i}`.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.value(j)
            .iter()
            .zip(self.value(i))
            .map(|(b, a)| b - a)
            .collect()
    }

    /// `max_t |X_t|` over values and left limits.
    pub fn sup_norm(&self) -> f64 {
        let vals = self.values.chunks(self.dim).map(norm);
        let lefts = self.left.values().map(|v| norm(v));
        vals.chain(lefts).fold(0.0, f64::max)
    }

    /// Coordinate `c` as a scalar path with matching jump marks.
    pub fn component(&self, c: usize) -> CadlagPath {
        let values = self
            .values
            .iter()
            .skip(c)
            .step_by(self.dim)
            .copied()
            .collect();
        let left = self.left.iter().map(|(&i, v)| (i, vec![v[c]])).collect();
        CadlagPath {
            grid: self.grid.clone(),
            dim: 1,
            values,
            left,
        }
    }

    /// Stacks two paths on the same grid into one of dimension `d1 + d2`.
    pub fn concat(&self, other: &CadlagPath) -> Result<CadlagPath> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let dim = self.dim + other.dim;
        let mut values = Vec::with_capacity(self.len() * dim);
        for i in 0..self.len() {
            values.extend_from_slice(self.value(i));
            values.extend_from_slice(other.value(i));
        }
        let mut left = BTreeMap::new();
        for i in self.left.keys().chain(other.left.keys()) {
            let mut v = self.left(*i).to_vec();
            v.extend_from_slice(other.left(*i));
            left.insert(*i, v);
        }
        CadlagPath::with_left_limits(self.grid.clone(), dim, values, left)
    }

    /// `self - other` on a shared grid; left limits at the union of both marks.
    pub fn difference(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.combine(other, |a, b| a - b)
    }

    pub fn sum(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.combine(other, |a, b| a + b)
    }

    fn combine(&self, other: &CadlagPath, op: impl Fn(f64, f64) -> f64) -> Result<CadlagPath> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let mut left = BTreeMap::new();
        for &i in self.left.keys().chain(other.left.keys()) {
            let v = self
                .left(i)
                .iter()
                .zip(other.left(i))
                .map(|(&a, &b)| op(a, b))
                .collect();
            left.insert(i, v);
        }
        CadlagPath::with_left_limits(self.grid.clone(), self.dim, values, left)
    }

    /// Multiplies values and left limits by `c`.
    pub fn scaled(&self, c: f64) -> CadlagPath {
        CadlagPath {
            grid: self.grid.clone(),
            dim: self.dim,
            values: self.values.iter().map(|v| c * v).collect(),
            left: self
                .left
                .iter()
                .map(|(&i, v)| (i, v.iter().map(|x| c * x).collect()))
                .collect(),
        }
    }

    /// Points in time order over grid indices `a..=b`, with each left limit
    /// placed immediately before its grid time. The left limit at `a` is
    /// excluded because it lies before the interval.
    pub fn points(&self, a: usize, b: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity((b - a + 1 + self.left.len()) * self.dim);
        out.extend_from_slice(self.value(a));
        for i in a + 1..=b {
            if let Some(l) = self.left.get(&i) {
                out.extend_from_slice(l);
            }
            out.extend_from_slice(self.value(i));
        }
        out
    }

    /// Like [`CadlagPath::points`] over the whole grid, also returning the
    /// position of each grid value in the point sequence.
    pub fn points_with_positions(&self) -> (Vec<f64>, Vec<usize>) {
        let mut pos = Vec::with_capacity(self.len());
        let mut out = Vec::with_capacity((self.len() + self.left.len()) * self.dim);
        for i in 0..self.len() {
            if i > 0 {
                if let Some(l) = self.left.get(&i) {
                    out.extend_from_slice(l);
                }
            }
            pos.push(out.len() / self.dim);
            out.extend_from_slice(self.value(i));
        }
        (out, pos)
    }

    /// Values restricted to the times of `p`, which must lie in the grid.
    pub fn restrict(&self, p: &Partition) -> Result<CadlagPath> {
        let idx = p.indices_in(&self.grid)?;
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &i in &idx {
            values.extend_from_slice(self.value(i));
        }
        CadlagPath::new(p.clone(), self.dim, values)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The piecewise-constant discretization `X^n_t = X_{t_k}` on `[t_k, t_{k+1})`,
/// with `X^n_T = X_T`, rendered on the grid of `x`.
///
/// `X^n` is continuous at grid points off the partition; at partition points
/// its left limit is the previously held value, marked when it differs.
pub fn discretize_piecewise_constant(x: &CadlagPath, p: &Partition) -> Result<CadlagPath> {
    let idx = p.spanning_indices(x.grid())?;
    let d = x.dim();
    let mut values = Vec::with_capacity(x.values().len());
    let mut left = BTreeMap::new();
    for k in 0..idx.len() - 1 {
        let held = x.value(idx[k]);
        for _ in idx[k]..idx[k + 1] {
            values.extend_from_slice(held);
        }
        let next = x.value(idx[k + 1]);
        if next != held {
            left.insert(idx[k + 1], held.to_vec());
        }
    }
    values.extend_from_slice(x.value(x.len() - 1));
    debug_assert_eq!(values.len(), x.len() * d);
    CadlagPath::with_left_limits(x.grid().clone(), d, values, left)
}

/// The time discretization `gamma^n_t = t_k` on `[t_k, t_{k+1})`, on the grid `p`.
pub fn gamma_path(p: &Partition) -> CadlagPath {
    gamma_path_on(p, p).expect("a partition spans itself")
}

/// The time discretization along `p`, rendered on a finer `grid`.
pub fn gamma_path_on(p: &Partition, grid: &Partition) -> Result<CadlagPath> {
    discretize_piecewise_constant(&CadlagPath::identity(grid), p)
}

/// `sup_t |F_t - G_t|` over grid values and every marked left limit of either path.
pub fn sup_distance(f: &CadlagPath, g: &CadlagPath) -> Result<f64> {
    Ok(f.difference(g)?.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::holder_constant;

    fn grid(times: &[f64]) -> Partition {
        Partition::new(times.to_vec()).unwrap()
    }

    #[test]
    fn discretization_holds_left_value() {
        let x = CadlagPath::scalar(grid(&[0.0, 0.5, 1.0]), vec![0.0, 1.0, 2.0]).unwrap();
        let p = grid(&[0.0, 1.0]);
        let xn = discretize_piecewise_constant(&x, &p).unwrap();
        assert_eq!(xn.values(), &[0.0, 0.0, 2.0]);
        assert!(xn.is_jump(2));
        assert_eq!(xn.left(2), &[0.0]);
        assert!(!xn.is_jump(1));
    }

    #[test]
    fn discretization_is_a_projection() {
        let g = Partition::dyadic(1.0, 4).unwrap();
        let p = Partition::dyadic(1.0, 2).unwrap();
        let x = CadlagPath::from_fn(g.clone(), 2, |t, out| {
            out[0] = (7.0 * t).sin();
            out[1] = t * t;
        })
        .unwrap();
        let xn = discretize_piecewise_constant(&x, &p).unwrap();
        let again = discretize_piecewise_constant(&xn, &p).unwrap();
        assert_eq!(xn, again);
        let full = discretize_piecewise_constant(&x, &g).unwrap();
        assert_eq!(full.values(), x.values());
    }

    #[test]
    fn gamma_holds_partition_times() {
        let p = grid(&[0.0, 0.5, 1.0]);
        let fine = Partition::dyadic(1.0, 4)
            .unwrap()
            .with_times(&[0.7])
            .unwrap();
        let gamma = gamma_path_on(&p, &fine).unwrap();
        assert_eq!(gamma.eval(0.7), &[0.5]);
        assert_eq!(gamma.eval(1.0), &[1.0]);
        // Refining ten-fold below the mesh recovers sup |gamma - t| -> mesh.
        let fine = Partition::new((0..=1000).map(|k| k as f64 / 1000.0).collect()).unwrap();
        let p = Partition::new((0..=10).map(|k| k as f64 / 10.0).collect()).unwrap();
        let g = gamma_path_on(&p, &fine).unwrap();
        let id = CadlagPath::identity(&fine);
        let d = sup_distance(&g, &id).unwrap();
        assert!((d - 0.1).abs() < 1e-12, "{d}");
    }

    #[test]
    fn sup_distance_basics() {
        let g = grid(&[0.0, 1.0]);
        let f = CadlagPath::scalar(g.clone(), vec![0.0, 1.0]).unwrap();
        let z = CadlagPath::scalar(g, vec![0.0, 0.0]).unwrap();
        assert_eq!(sup_distance(&f, &f).unwrap(), 0.0);
        assert_eq!(sup_distance(&f, &z).unwrap(), 1.0);
    }

    #[test]
    fn discretization_error_within_holder_bound() {
        let g = Partition::dyadic(1.0, 10).unwrap();
        let x = CadlagPath::from_fn(g.clone(), 1, |t, out| out[0] = t.sqrt() + (9.0 * t).sin())
            .unwrap();
        let c = holder_constant(&x, 0.5).unwrap();
        for n in [2, 4, 6] {
            let p = Partition::dyadic(1.0, n).unwrap();
            let xn = discretize_piecewise_constant(&x, &p).unwrap();
            let bound = c * p.mesh().sqrt();
            assert!(sup_distance(&xn, &x).unwrap() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn left_limit_validation() {
        let g = grid(&[0.0, 0.5, 1.0]);
        let mut left = BTreeMap::new();
        left.insert(0, vec![1.0]);
        assert!(matches!(
            CadlagPath::with_left_limits(g, 1, vec![0.0; 3], left),
            Err(Error::BadLeftLimit(0))
        ));
    }

    #[test]
    fn points_interleave_left_limits() {
        let g = grid(&[0.0, 0.5, 1.0]);
        let mut left = BTreeMap::new();
        left.insert(1, vec![5.0]);
        let x = CadlagPath::with_left_limits(g, 1, vec![0.0, 1.0, 2.0], left).unwrap();
        assert_eq!(x.points(0, 2), vec![0.0, 5.0, 1.0, 2.0]);
        assert_eq!(x.points(1, 2), vec![1.0, 2.0]);
        let (pts, pos) = x.points_with_positions();
        assert_eq!(pts, vec![0.0, 5.0, 1.0, 2.0]);
        assert_eq!(pos, vec![0, 2, 3]);
        assert_eq!(x.sup_norm(), 5.0);
    }
}
