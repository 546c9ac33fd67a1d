use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::rough_path::RoughPath;
use crate::paths::{norm, CadlagPath, PartitionSequence};

/// Joint lift of a deterministic path `eta` (already lifted) and a Brownian
/// path `w` on the same grid.
///
/// Blocks of the second level, for `Z = (eta, W)`:
/// top-left the lift of `eta`; top-right `int eta_{s,u} (x) dW_u` as left-point
/// sums on the grid; bottom-right the grid Ito lift of `W`; bottom-left
/// `W_{s,t} (x) eta_{s,t}` minus the transposed top-right block.
pub fn joint_lift_eta_w(eta: &RoughPath, w: &CadlagPath) -> Result<RoughPath> {
    if eta.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let d = eta.dim();
    let e = w.dim();
    let big = d + e;
    let z = eta.path().concat(w)?;
    let steps = z.len() - 1;
    let mut second = vec![0.0; steps * big * big];
    for i in 0..steps {
        let row = &mut second[i * big * big..(i + 1) * big * big];
        let ee = eta.consecutive(i);
        for l in 0..d {
            for j in 0..d {
                row[l * big + j] = ee[l * d + j];
            }
        }
        // Over one grid step the left-point cross integral vanishes, so the
        // bottom-left block is the product of the two increments.
        let deta = eta.path().increment(i, i + 1);
        let dw = w.increment(i, i + 1);
        for a in 0..e {
            for b in 0..d {
                row[(d + a) * big + b] = dw[a] * deta[b];
            }
        }
    }
    RoughPath::new(z, second, eta.p())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadCovReport {
    pub levels: Vec<u32>,
    /// `sum_k eta_{t_k,t_{k+1}} (x) W_{t_k,t_{k+1}}` at the horizon, row-major `d x e`.
    pub values: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
}

/// Discrete covariation `<eta, W>^n_T` along each level of `seq`.
pub fn quad_covariation(
    eta: &CadlagPath,
    w: &CadlagPath,
    seq: &PartitionSequence,
) -> Result<QuadCovReport> {
    if eta.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let (d, e) = (eta.dim(), w.dim());
    let mut values = Vec::new();
    let mut norms = Vec::new();
    for part in seq.partitions() {
        let idx = part.spanning_indices(eta.grid())?;
        let mut acc = vec![0.0; d * e];
        for k in idx.windows(2) {
            let de = eta.increment(k[0], k[1]);
            let dw = w.increment(k[0], k[1]);
            for a in 0..d {
                for b in 0..e {
                    acc[a * e + b] += de[a] * dw[b];
                }
            }
        }
        norms.push(norm(&acc));
        values.push(acc);
    }
    Ok(QuadCovReport {
        levels: seq.levels().to_vec(),
        values,
        norms,
    })
}

/// Smallest `C` with `|sum_{j=k}^{l-1} XX_{jh,(j+1)h}| <= C (l-k)^beta h^{2 alpha}`
/// over all block ranges, where a block spans `block_steps` grid steps of a
/// uniform grid. Requires `beta` in `(1 - alpha, 2 alpha)`.
pub fn davie_constant(x: &RoughPath, block_steps: usize, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidExponent {
            name: "alpha",
            value: alpha,
            reason: "must lie in (0, 1)",
        });
    }
    if !(beta > 1.0 - alpha && beta < 2.0 * alpha) {
        return Err(Error::InvalidExponent {
            name: "beta",
            value: beta,
            reason: "must lie in (1 - alpha, 2 alpha)",
        });
    }
    let steps = x.len() - 1;
    if block_steps == 0 || !steps.is_multiple_of(block_steps) {
        return Err(Error::DimensionMismatch {
            expected: steps,
            found: block_steps,
        });
    }
    let t = x.grid().times();
    let h = t[block_steps] - t[0];
    let blocks = steps / block_steps;
    let dd = x.dim() * x.dim();
    let mut prefix = vec![0.0; (blocks + 1) * dd];
    for j in 0..blocks {
        let b = x.second_level(j * block_steps, (j + 1) * block_steps);
        for c in 0..dd {
            prefix[(j + 1) * dd + c] = prefix[j * dd + c] + b[c];
        }
    }
    let scale = h.powf(2.0 * alpha);
    let mut best = 0.0f64;
    let mut diff = vec![0.0; dd];
    for k in 0..blocks {
        for l in k + 1..=blocks {
            for c in 0..dd {
                diff[c] = prefix[l * dd + c] - prefix[k * dd + c];
            }
            best = best.max(norm(&diff) / (((l - k) as f64).powf(beta) * scale));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Partition;
    use crate::processes::{deterministic_eta, sample_standard_brownian, EtaKind};

    fn setup(level: u32) -> (RoughPath, CadlagPath) {
        let grid = Partition::dyadic(1.0, level).unwrap();
        let kind = EtaKind::Weierstrass {
            terms: 6,
            base: 2.0,
            holder: 0.6,
            scale: 1.0,
        };
        let eta = deterministic_eta(&kind, 2.5, &grid).unwrap();
        let w = sample_standard_brownian(3, 2, &grid).unwrap();
        let seq = PartitionSequence::dyadic(1.0, [level]).unwrap();
        let (lifted, _) = crate::lift::canonical_lift(&eta, &seq, 2.5, Default::default()).unwrap();
        (lifted, w)
    }

    #[test]
    fn block_identity_and_chen() {
        let (eta, w) = setup(9);
        let z = joint_lift_eta_w(&eta, &w).unwrap();
        let big = 3;
        for (a, b) in [(0, 512), (17, 300), (100, 101), (255, 511)] {
            let zz = z.second_level(a, b);
            let de = eta.path().increment(a, b);
            let dw = w.increment(a, b);
            for r in 0..2 {
                // bottom-left + top-right^T == W_{s,t} (x) eta_{s,t}
                let lhs = zz[(1 + r) * big] + zz[1 + r];
                assert!(
                    (lhs - dw[r] * de[0]).abs() < 1e-12,
                    "{lhs} vs {}",
                    dw[r] * de[0]
                );
            }
            let (_, rel) = z.chen_residual(a, (a + b) / 2, b);
            assert!(b - a < 2 || rel <= 1e-12);
        }
    }

    #[test]
    fn constant_eta_decouples() {
        let grid = Partition::dyadic(1.0, 7).unwrap();
        let eta = RoughPath::grid_lift(
            CadlagPath::scalar(grid.clone(), vec![0.7; grid.len()]).unwrap(),
            2.5,
        )
        .unwrap();
        let w = sample_standard_brownian(5, 1, &grid).unwrap();
        let z = joint_lift_eta_w(&eta, &w).unwrap();
        let ww = RoughPath::grid_lift(w.clone(), 2.5).unwrap();
        for (a, b) in [(0, 128), (3, 77)] {
            let zz = z.second_level(a, b);
            // Spans past the direct-summation cutoff go through prefix sums.
            assert!(zz[..3].iter().all(|v| v.abs() < 1e-14));
            assert!((zz[3] - ww.second_level(a, b)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn covariation_of_linear_path() {
        let grid = Partition::dyadic(1.0, 10).unwrap();
        let eta = CadlagPath::identity(&grid);
        let w = sample_standard_brownian(2, 1, &grid).unwrap();
        let seq = PartitionSequence::dyadic(1.0, 2..=10).unwrap();
        let r = quad_covariation(&eta, &w, &seq).unwrap();
        // |<t, W>^n| <= 2^-n max |W_{t_k,t_{k+1}}| summed: bounded by 2^-n * 2^n * sup increment.
        for (k, &n) in r.levels.iter().enumerate() {
            let mesh = 2f64.powi(-(n as i32));
            assert!(r.norms[k] <= mesh * (1u64 << n) as f64 * 2.0 * w.sup_norm() + 1e-15);
        }
        assert!(r.norms[r.norms.len() - 1] < r.norms[0]);
    }

    #[test]
    fn davie_frozen_cases() {
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let zero = RoughPath::grid_lift(
            CadlagPath::scalar(grid.clone(), vec![0.0; grid.len()]).unwrap(),
            2.5,
        )
        .unwrap();
        assert_eq!(davie_constant(&zero, 4, 0.4, 0.65).unwrap(), 0.0);
        let time =
            RoughPath::from_increment_fn(CadlagPath::identity(&grid), 1.5, |_, s, t, out| {
                out[0] = (t - s).powi(2) / 2.0;
            })
            .unwrap();
        let (alpha, beta) = (0.6, 0.5);
        for block in [1, 2, 8, 32] {
            let c = davie_constant(&time, block, alpha, beta).unwrap();
            assert!(c <= 0.5 + 1e-12, "{c}");
        }
        assert!(matches!(
            davie_constant(&time, 4, 0.4, 0.9),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn davie_brownian_is_stable() {
        let fine = Partition::dyadic(1.0, 12).unwrap();
        let w = sample_standard_brownian(9, 1, &fine).unwrap();
        let lift = RoughPath::grid_lift(w, 2.5).unwrap();
        let coarse = lift.restrict(&Partition::dyadic(1.0, 10).unwrap()).unwrap();
        let scan = |x: &RoughPath, levels: std::ops::RangeInclusive<u32>, top: u32| {
            levels
                .map(|m| davie_constant(x, 1 << (top - m), 0.4, 0.65).unwrap())
                .fold(0.0, f64::max)
        };
        let c_fine = scan(&lift, 4..=12, 12);
        let c_coarse = scan(&coarse, 4..=10, 10);
        assert!(c_fine.is_finite() && c_coarse > 0.0);
        assert!(
            c_fine / c_coarse <= 2.0 && c_coarse / c_fine <= 2.0,
            "{c_fine} vs {c_coarse}"
        );
    }
}
