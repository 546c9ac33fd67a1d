use crate::error::{Error, Result};

/// Two times closer than this are the same time.
pub const TIME_TOL: f64 = 1e-12;

/// A finite, strictly increasing set of times `t_0 < ... < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    /// Validates strict monotonicity with gaps larger than [`TIME_TOL`].
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::TooFewTimes(times.len()));
        }
        for (index, &value) in times.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteTime { index, value });
            }
        }
        for index in 1..times.len() {
            if times[index] - times[index - 1] <= TIME_TOL {
                return Err(Error::NotIncreasing {
                    index,
                    prev: times[index - 1],
                    next: times[index],
                });
            }
        }
        Ok(Partition { times })
    }

    /// Sorts and merges times closer than [`TIME_TOL`], keeping the first.
    pub fn from_unsorted(mut times: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = times.iter().enumerate().find(|(_, t)| !t.is_finite()) {
            return Err(Error::NonFiniteTime { index, value });
        }
        times.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(times.len());
        for t in times {
            match out.last() {
                Some(&last) if t - last <= TIME_TOL => {}
                _ => out.push(t),
            }
        }
        Partition::new(out)
    }

    /// `k T / 2^n` for `k = 0..=2^n`, computed exactly for dyadic `T`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::NonFiniteTime {
                index: 0,
                value: horizon,
            });
        }
        let cells = 1u64 << level;
        let times = (0..=cells)
            .map(|k| horizon * (k as f64) / (cells as f64))
            .collect();
        Partition::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn horizon(&self) -> f64 {
        self.end() - self.start()
    }

    /// Largest gap between consecutive times.
    pub fn mesh(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of `t` if it is a point of the partition.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = self.locate(t);
        if (self.times[k] - t).abs() <= TIME_TOL {
            return Some(k);
        }
        if k + 1 < self.times.len() && (self.times[k + 1] - t).abs() <= TIME_TOL {
            return Some(k + 1);
        }
        None
    }

    /// Largest `k` with `t_k <= t`, clamped to `0` before the start.
    pub fn locate(&self, t: f64) -> usize {
        let pos = self.times.partition_point(|&s| s <= t + TIME_TOL);
        pos.saturating_sub(1)
    }

    pub fn union(&self, other: &Partition) -> Partition {
        let mut all = self.times.clone();
        all.extend_from_slice(&other.times);
        Partition::from_unsorted(all).expect("union of valid partitions is valid")
    }

    /// Adds extra times, merging duplicates within [`TIME_TOL`].
    pub fn with_times(&self, extra: &[f64]) -> Result<Partition> {
        let mut all = self.times.clone();
        all.extend_from_slice(extra);
        Partition::from_unsorted(all)
    }

    pub fn is_subset_of(&self, grid: &Partition) -> bool {
        self.indices_in(grid).is_ok()
    }

    /// Grid index of every partition time; fails on the first time not in the grid.
    pub fn indices_in(&self, grid: &Partition) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut j = 0;
        let g = grid.times();
        for &t in &self.times {
            while j < g.len() && g[j] < t - TIME_TOL {
                j += 1;
            }
            if j == g.len() || (g[j] - t).abs() > TIME_TOL {
                return Err(Error::NotOnGrid(t));
            }
            out.push(j);
        }
        Ok(out)
    }

    /// Indices into `grid` for a partition that must also span the whole grid.
    pub fn spanning_indices(&self, grid: &Partition) -> Result<Vec<usize>> {
        let idx = self.indices_in(grid)?;
        if idx[0] != 0 || idx[idx.len() - 1] != grid.len() - 1 {
            return Err(Error::SpanMismatch {
                start: self.start(),
                end: self.end(),
                grid_start: grid.start(),
                grid_end: grid.end(),
            });
        }
        Ok(idx)
    }
}

/// Dyadic partition of `[0, horizon]` at `level`.
pub fn build_dyadic_partition(horizon: f64, level: u32) -> Result<Partition> {
    Partition::dyadic(horizon, level)
}

/// Dyadic partition at `level` together with the supplied jump times.
pub fn build_levy_augmented_partition(
    horizon: f64,
    level: u32,
    jump_times: &[f64],
) -> Result<Partition> {
    let inside: Vec<f64> = jump_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= horizon)
        .collect();
    Partition::dyadic(horizon, level)?.with_times(&inside)
}

/// A sequence of partitions indexed by level numbers.
#[derive(Debug, Clone)]
pub struct PartitionSequence {
    levels: Vec<u32>,
    partitions: Vec<Partition>,
}

impl PartitionSequence {
    pub fn new(levels: Vec<u32>, partitions: Vec<Partition>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptySequence);
        }
        if levels.len() != partitions.len() {
            return Err(Error::DimensionMismatch {
                expected: levels.len(),
                found: partitions.len(),
            });
        }
        Ok(PartitionSequence { levels, partitions })
    }

    pub fn dyadic(horizon: f64, levels: impl IntoIterator<Item = u32>) -> Result<Self> {
        let levels: Vec<u32> = levels.into_iter().collect();
        let partitions = levels
            .iter()
            .map(|&n| Partition::dyadic(horizon, n))
            .collect::<Result<_>>()?;
        PartitionSequence::new(levels, partitions)
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> &Partition {
        &self.partitions[self.partitions.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Partition)> {
        self.levels.iter().copied().zip(self.partitions.iter())
    }
}

/// Report for [`jumps_exhausted`].
#[derive(Debug, Clone, PartialEq)]
pub struct JumpWitness {
    pub time: f64,
    /// Positions in the sequence whose partition misses `time`.
    pub missing_levels: Vec<u32>,
}

/// Whether every jump time lies in all partitions from some level on.
///
/// With finitely many levels this means the time lies in the finest level;
/// the witness lists the first time that does not, with every level missing it.
pub fn jumps_exhausted(jump_times: &[f64], seq: &PartitionSequence) -> (bool, Option<JumpWitness>) {
    for &t in jump_times {
        let missing: Vec<u32> = seq
            .iter()
            .filter(|(_, p)| p.index_of(t).is_none())
            .map(|(n, _)| n)
            .collect();
        if seq.finest().index_of(t).is_none() {
            return (
                false,
                Some(JumpWitness {
                    time: t,
                    missing_levels: missing,
                }),
            );
        }
    }
    (true, None)
}
