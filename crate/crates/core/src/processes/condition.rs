use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::PartitionSequence;
use crate::variation::check_exponent;

/// Values of `mesh_n^{2 - 4/p} ln n` per level.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionConditionReport {
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    /// First position from which the values never increase.
    pub decreasing_from: usize,
    pub decreasing: bool,
}

/// Checks that the mesh condition sequence decays over the stored levels.
///
/// The values may rise over the first levels (the `ln n` factor starts at 0);
/// the sequence passes when it is non-increasing from its maximum on.
pub fn check_partition_condition(
    seq: &PartitionSequence,
    p: f64,
) -> Result<PartitionConditionReport> {
    check_exponent("p", p)?;
    let mut values = Vec::with_capacity(seq.len());
    for (level, part) in seq.iter() {
        let mesh = part.mesh();
        let n_steps = part.len() - 1;
        let uniform = part.horizon() / n_steps as f64;
        let equidistant = part
            .times()
            .windows(2)
            .all(|w| ((w[1] - w[0]) - uniform).abs() <= 1e-9 * uniform);
        if !equidistant {
            return Err(Error::GridMismatch);
        }
        values.push(mesh.powf(2.0 - 4.0 / p) * (level.max(1) as f64).ln());
    }
    let n = values.len();
    let mut decreasing_from = n.saturating_sub(1);
    while decreasing_from > 0 && values[decreasing_from - 1] >= values[decreasing_from] {
        decreasing_from -= 1;
    }
    let argmax = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0;
    // A flat tail is not decay toward zero.
    let strictly_falls = n >= 2 && values[n - 1] < values[argmax];
    let decreasing = decreasing_from <= argmax && strictly_falls;
    Ok(PartitionConditionReport {
        levels: seq.levels().to_vec(),
        values,
        decreasing_from,
        decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Partition;

    #[test]
    fn dyadic_sequence_decays() {
        let seq = PartitionSequence::dyadic(1.0, 1..=12).unwrap();
        let r = check_partition_condition(&seq, 2.5).unwrap();
        assert!(r.decreasing);
        for (k, &n) in r.levels.iter().enumerate() {
            let expected = 2f64.powf(-0.4 * n as f64) * (n as f64).ln();
            assert!((r.values[k] - expected).abs() < 1e-15);
        }
        assert!(r.decreasing_from <= 2);
    }

    #[test]
    fn constant_mesh_does_not_decay() {
        let p = Partition::dyadic(1.0, 4).unwrap();
        let seq = PartitionSequence::new((1..=6).collect(), vec![p; 6]).unwrap();
        assert!(!check_partition_condition(&seq, 2.5).unwrap().decreasing);
    }

    #[test]
    fn uneven_level_is_rejected() {
        let p = Partition::new(vec![0.0, 0.1, 1.0]).unwrap();
        let seq = PartitionSequence::new(vec![3], vec![p]).unwrap();
        assert!(check_partition_condition(&seq, 2.5).is_err());
    }
}
