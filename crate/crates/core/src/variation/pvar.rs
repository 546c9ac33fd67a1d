use crate::error::{Error, Result};
use crate::paths::{dist, CadlagPath};

/// Largest point sequence accepted by the exact variation routines.
pub const MAX_EXACT_POINTS: usize = 1 << 20;

/// Consecutive points closer than this are merged before the DP when the
/// sequence exceeds [`MAX_EXACT_POINTS`].
pub const COARSEN_TOL: f64 = 1e-9;

pub(crate) fn check_exponent(name: &'static str, p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidExponent {
            name,
            value: p,
            reason: "must be finite and >= 1",
        });
    }
    Ok(())
}

/// Axis-aligned bounding boxes over a perfect binary tree of point indices.
struct BoxTree {
    size: usize,
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxTree {
    fn new(points: &[f64], dim: usize) -> Self {
        let n = points.len() / dim;
        let size = n.next_power_of_two();
        let mut lo = vec![f64::INFINITY; 2 * size * dim];
        let mut hi = vec![f64::NEG_INFINITY; 2 * size * dim];
        for i in 0..n {
            let node = size + i;
            lo[node * dim..(node + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
            hi[node * dim..(node + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        for node in (1..size).rev() {
            for c in 0..dim {
                lo[node * dim + c] = lo[2 * node * dim + c].min(lo[(2 * node + 1) * dim + c]);
                hi[node * dim + c] = hi[2 * node * dim + c].max(hi[(2 * node + 1) * dim + c]);
            }
        }
        BoxTree { size, dim, lo, hi }
    }

    /// Largest distance from `x` to any point of the box of `node`.
    fn far(&self, node: usize, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for c in 0..d {
            let a = (x[c] - self.lo[node * d + c]).abs();
            let b = (x[c] - self.hi[node * d + c]).abs();
            let m = a.max(b);
            s += m * m;
        }
        s.sqrt()
    }
}

/// Running p-variation sums over a point sequence.
///
/// Returns `V` with `V[0] = 0` and `V[j] = max_{i<j} V[i] + |x_j - x_i|^p`, so
/// `V[j]^(1/p)` is the p-variation of the first `j + 1` points. `V` is
/// non-decreasing, which lets whole index blocks be skipped when
/// `V[last] + far^p` cannot beat the current best.
pub fn pvar_profile(points: &[f64], dim: usize, p: f64) -> Vec<f64> {
    let n = points.len() / dim;
    let mut v = vec![0.0; n];
    if n < 2 {
        return v;
    }
    let tree = BoxTree::new(points, dim);
    let pt = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut stack: Vec<(usize, usize, usize)> = Vec::with_capacity(64);
    for j in 1..n {
        let xj = pt(j);
        let mut best = v[j - 1] + dist(xj, pt(j - 1)).powf(p);
        if j >= 2 {
            let lim = j - 2;
            stack.clear();
            stack.push((1, 0, tree.size - 1));
            while let Some((node, lo, hi)) = stack.pop() {
                if lo > lim {
                    continue;
                }
                let h = hi.min(lim);
                if v[h] + tree.far(node, xj).powf(p) <= best {
                    continue;
                }
                if lo == hi {
                    let cand = v[lo] + dist(xj, pt(lo)).powf(p);
                    if cand > best {
                        best = cand;
                    }
                    continue;
                }
                let mid = (lo + hi) / 2;
                stack.push((2 * node, lo, mid));
                stack.push((2 * node + 1, mid + 1, hi));
            }
        }
        v[j] = best;
    }
    v
}

/// Drops points within [`COARSEN_TOL`] of the last kept point, keeping the endpoint.
fn coarsen(points: &[f64], dim: usize) -> Vec<f64> {
    let n = points.len() / dim;
    let mut out: Vec<f64> = Vec::with_capacity(points.len());
    out.extend_from_slice(&points[..dim]);
    for i in 1..n {
        let x = &points[i * dim..(i + 1) * dim];
        let last = &out[out.len() - dim..];
        if i == n - 1 || dist(x, last) >= COARSEN_TOL {
            out.extend_from_slice(x);
        }
    }
    out
}

/// Exact p-variation of a point sequence (no time structure needed).
pub fn p_variation_points(points: &[f64], dim: usize, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let n = points.len() / dim;
    if n < 2 {
        return Ok(0.0);
    }
    let owned;
    let pts = if n > MAX_EXACT_POINTS {
        owned = coarsen(points, dim);
        let m = owned.len() / dim;
        if m > MAX_EXACT_POINTS {
            return Err(Error::TooManyPoints {
                points: m,
                cap: MAX_EXACT_POINTS,
            });
        }
        &owned[..]
    } else {
        points
    };
    let v = pvar_profile(pts, dim, p);
    Ok(v[v.len() - 1].powf(1.0 / p))
}

/// `||X||_{p,[s,t]}` over grid indices `interval = (a, b)`, or the whole grid.
///
/// Partitions range over grid times; left limits enter as points just before
/// their grid time, which realises the supremum over partitions approaching a jump.
pub fn p_variation(x: &CadlagPath, p: f64, interval: Option<(usize, usize)>) -> Result<f64> {
    let (a, b) = interval.unwrap_or((0, x.len() - 1));
    if a > b || b >= x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: b + 1,
        });
    }
    p_variation_points(&x.points(a, b), x.dim(), p)
}

/// Brute-force p-variation: enumerates every subset of interior points.
///
/// Exponential; refuses sequences longer than 22 points.
pub fn p_variation_brute(x: &CadlagPath, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    let pts = x.points(0, x.len() - 1);
    let d = x.dim();
    let n = pts.len() / d;
    if n > 22 {
        return Err(Error::TooManyPoints { points: n, cap: 22 });
    }
    if n < 2 {
        return Ok(0.0);
    }
    let pt = |i: usize| &pts[i * d..(i + 1) * d];
    let interior = n - 2;
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << interior) {
        let mut prev = 0;
        let mut total = 0.0;
        for k in 0..interior {
            if mask >> k & 1 == 1 {
                total += dist(pt(k + 1), pt(prev)).powf(p);
                prev = k + 1;
            }
        }
        total += dist(pt(n - 1), pt(prev)).powf(p);
        best = best.max(total);
    }
    Ok(best.powf(1.0 / p))
}

/// `max_{s,t} |F_t - F_s|` over values and left limits.
pub fn oscillation(x: &CadlagPath) -> f64 {
    let pts = x.points(0, x.len() - 1);
    let d = x.dim();
    if d == 1 {
        let (lo, hi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        return hi - lo;
    }
    let n = pts.len() / d;
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(dist(&pts[i * d..(i + 1) * d], &pts[j * d..(j + 1) * d]));
        }
    }
    best
}

/// Outcome of [`interpolation_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `||F||_{p'} <= ||F||_p^{p/p'} * osc(F)^{1-p/p'}` for `p' > p >= 1`,
/// where `osc(F) = sup |F_{s,t}|` is the uniform size of the increments.
pub fn interpolation_bound_check(
    f: &CadlagPath,
    p: f64,
    p_prime: f64,
) -> Result<InterpolationReport> {
    check_exponent("p", p)?;
    if !(p_prime > p) || !p_prime.is_finite() {
        return Err(Error::InvalidExponent {
            name: "p_prime",
            value: p_prime,
            reason: "must exceed p",
        });
    }
    let lhs = p_variation(f, p_prime, None)?;
    let theta = p / p_prime;
    let rhs = p_variation(f, p, None)?.powf(theta) * oscillation(f).powf(1.0 - theta);
    Ok(InterpolationReport {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
    })
}

/// Largest `|X_{s,t}| / (t - s)^alpha` over grid pairs.
pub fn holder_constant(x: &CadlagPath, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidExponent {
            name: "alpha",
            value: alpha,
            reason: "must lie in (0, 1]",
        });
    }
    if x.has_jumps() {
        return Err(Error::HasJumps);
    }
    let t = x.grid().times();
    let mut best = 0.0f64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            best = best.max(dist(x.value(j), x.value(i)) / (t[j] - t[i]).powf(alpha));
        }
    }
    Ok(best)
}

/// r-variation of a two-parameter function over the index chain `0..n`.
///
/// `row(i, out)` must fill `out[j] = |Xi_{i,j}|` for every `j > i`; entries
/// `out[..=i]` are ignored. The DP is `V[j] = max_{i<j} V[i] + out_i[j]^r`.
pub fn two_param_variation<F>(n: usize, r: f64, mut row: F) -> Result<f64>
where
    F: FnMut(usize, &mut [f64]),
{
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidExponent {
            name: "r",
            value: r,
            reason: "must be finite and positive",
        });
    }
    if n > MAX_EXACT_POINTS {
        return Err(Error::TooManyPoints {
            points: n,
            cap: MAX_EXACT_POINTS,
        });
    }
    if n < 2 {
        return Ok(0.0);
    }
    let mut v = vec![0.0f64; n];
    let mut buf = vec![0.0f64; n];
    for i in 0..n - 1 {
        row(i, &mut buf);
        let base = v[i];
        for j in i + 1..n {
            let cand = base + buf[j].powf(r);
            if cand > v[j] {
                v[j] = cand;
            }
        }
    }
    Ok(v[n - 1].powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Partition;
    use proptest::prelude::*;

    fn scalar(values: &[f64]) -> CadlagPath {
        let n = values.len();
        let grid = Partition::new((0..n).map(|k| k as f64 / (n - 1) as f64).collect()).unwrap();
        CadlagPath::scalar(grid, values.to_vec()).unwrap()
    }

    /// Plain `O(N^2)` DP over all predecessors.
    fn quadratic_dp(points: &[f64], dim: usize, p: f64) -> f64 {
        let n = points.len() / dim;
        let pt = |i: usize| &points[i * dim..(i + 1) * dim];
        let mut v = vec![0.0f64; n];
        for j in 1..n {
            v[j] = (0..j)
                .map(|i| v[i] + dist(pt(j), pt(i)).powf(p))
                .fold(0.0, f64::max);
        }
        v[n - 1].powf(1.0 / p)
    }

    #[test]
    fn frozen_small_paths() {
        let up_down = scalar(&[0.0, 1.0, 0.0]);
        assert!((p_variation(&up_down, 2.0, None).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((p_variation_brute(&up_down, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((p_variation(&scalar(&[0.0, 1.0, 2.0]), 1.0, None).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(p_variation(&scalar(&[3.0; 5]), 2.5, None).unwrap(), 0.0);
        assert_eq!(
            p_variation_brute(&scalar(&[0.25, -1.0]), 3.0).unwrap(),
            1.25
        );
        assert!(matches!(
            p_variation(&up_down, 0.5, None),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn interval_restricts_the_path() {
        let x = scalar(&[0.0, 1.0, 0.0, 4.0]);
        assert_eq!(p_variation(&x, 1.0, Some((0, 1))).unwrap(), 1.0);
        assert_eq!(p_variation(&x, 1.0, Some((1, 3))).unwrap(), 5.0);
    }

    #[test]
    fn interpolation_equality_case() {
        let f = scalar(&[0.0, 1.0, 0.0]);
        let r = interpolation_bound_check(&f, 2.0, 3.0).unwrap();
        let expected = 2f64.powf(1.0 / 3.0);
        assert!((r.lhs - expected).abs() < 1e-14 && (r.rhs - expected).abs() < 1e-14);
        assert!(r.pass);
        let c = interpolation_bound_check(&scalar(&[1.0; 4]), 2.0, 3.0).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.pass);
    }

    #[test]
    fn holder_of_identity_and_constant() {
        let grid = Partition::dyadic(1.0, 6).unwrap();
        assert!((holder_constant(&CadlagPath::identity(&grid), 1.0).unwrap() - 1.0).abs() < 1e-12);
        let c = CadlagPath::scalar(grid.clone(), vec![2.0; grid.len()]).unwrap();
        assert_eq!(holder_constant(&c, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn two_param_frozen() {
        assert_eq!(
            two_param_variation(10, 1.0, |_, out| out.fill(0.0)).unwrap(),
            0.0
        );
        // Xi_{s,t} = (t - s)^2 / 2 on [0, 1]: the single interval wins.
        let t: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let v = two_param_variation(t.len(), 1.0, |i, out| {
            for j in i + 1..t.len() {
                out[j] = (t[j] - t[i]).powi(2) / 2.0;
            }
        })
        .unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jump_enters_through_left_limit() {
        let grid = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        let mut left = std::collections::BTreeMap::new();
        left.insert(1, vec![1.0]);
        let x = CadlagPath::with_left_limits(grid, 1, vec![0.0, 0.0, 0.0], left).unwrap();
        assert!((p_variation(&x, 2.0, None).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(oscillation(&x), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn dp_matches_enumeration(values in prop::collection::vec(-2.0f64..2.0, 2..=12), pi in 0usize..5) {
            let p = [1.0, 1.5, 2.0, 2.5, 3.0][pi];
            let x = scalar(&values);
            let fast = p_variation(&x, p, None).unwrap();
            let brute = p_variation_brute(&x, p).unwrap();
            prop_assert!((fast - brute).abs() <= 1e-12 * (1.0 + brute));
        }

        #[test]
        fn pruned_dp_matches_quadratic(values in prop::collection::vec(-1.0f64..1.0, 2..300), dim in 1usize..4, p in 1.0f64..4.0) {
            let n = values.len() / dim * dim;
            prop_assume!(n >= 2 * dim);
            let pts = &values[..n];
            let fast = p_variation_points(pts, dim, p).unwrap();
            let slow = quadratic_dp(pts, dim, p);
            prop_assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow));
        }

        #[test]
        fn profile_is_non_decreasing(values in prop::collection::vec(-1.0f64..1.0, 2..200), p in 1.0f64..3.0) {
            let v = pvar_profile(&values, 1, p);
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn variation_decreases_in_p(values in prop::collection::vec(-1.0f64..1.0, 2..60), p in 1.0f64..3.0, dp in 0.0f64..2.0) {
            let x = scalar(&values);
            let a = p_variation(&x, p, None).unwrap();
            let b = p_variation(&x, p + dp, None).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-12) + 1e-15);
        }

        #[test]
        fn interpolation_always_holds(values in prop::collection::vec(-1.0f64..1.0, 2..60), p in 1.0f64..3.0, dp in 0.01f64..2.0) {
            prop_assert!(interpolation_bound_check(&scalar(&values), p, p + dp).unwrap().pass);
        }
    }
}
