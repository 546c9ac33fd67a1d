//! Lévy processes `L = W + phi` with finite-activity jump parts.
//!
//! `phi_t = lambda t + sum_{s <= t} Delta L_s - t * int_{|x| < 1} x nu(dx)`,
//! so jumps of size at least 1 are not compensated. At level `n` the jumps
//! split at `2^-n`: `J^n` holds the times of the large ones and
//! `xi^n_t = sum_{s <= t, |Delta L_s| < 2^-n} Delta L_s - t * int_{|x| < 2^-n} x nu(dx)`
//! is the compensated remainder.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{build_levy_augmented_partition, norm, CadlagPath, Partition, TIME_TOL};
use crate::processes::gaussian::{covariance_root, sample_brownian, sample_brownian_stream};
use crate::processes::rng::{gaussian, poisson, stream_rng, streams, uniform};

/// Law of the scalar jump size `s`; the jump itself is `s * direction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Fixed { size: f64 },
    TwoPoint { a: f64, b: f64, prob_a: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

const QUADRATURE_INTERVALS: usize = 4096;

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Fixed { size } => size.is_finite(),
            JumpLaw::TwoPoint { a, b, prob_a } => {
                a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&prob_a)
            }
            JumpLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            JumpLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidJumpLaw(format!("{self:?}")))
        }
    }

    fn sample(&self, rng: &mut impl RngCore) -> f64 {
        match *self {
            JumpLaw::Fixed { size } => size,
            JumpLaw::TwoPoint { a, b, prob_a } => {
                if uniform(rng) < prob_a {
                    a
                } else {
                    b
                }
            }
            JumpLaw::Normal { mean, sd } => mean + sd * gaussian(rng),
            JumpLaw::Uniform { low, high } => low + (high - low) * uniform(rng),
        }
    }

    /// `(E[s 1{|s| < c}], E[s^2 1{|s| < c}])`.
    pub fn truncated_moments(&self, c: f64) -> (f64, f64) {
        match *self {
            JumpLaw::Fixed { size } => {
                if size.abs() < c {
                    (size, size * size)
                } else {
                    (0.0, 0.0)
                }
            }
            JumpLaw::TwoPoint { a, b, prob_a } => {
                let mut m = (0.0, 0.0);
                for (v, w) in [(a, prob_a), (b, 1.0 - prob_a)] {
                    if v.abs() < c {
                        m.0 += w * v;
                        m.1 += w * v * v;
                    }
                }
                m
            }
            JumpLaw::Uniform { low, high } => {
                let lo = low.max(-c);
                let hi = high.min(c);
                if hi <= lo {
                    return (0.0, 0.0);
                }
                let w = 1.0 / (high - low);
                (
                    w * (hi * hi - lo * lo) / 2.0,
                    w * (hi.powi(3) - lo.powi(3)) / 3.0,
                )
            }
            JumpLaw::Normal { mean, sd } => {
                // Composite Simpson over the window where the density is non-negligible.
                let lo = (-c).max(mean - 12.0 * sd);
                let hi = c.min(mean + 12.0 * sd);
                if hi <= lo {
                    return (0.0, 0.0);
                }
                let n = QUADRATURE_INTERVALS;
                let h = (hi - lo) / n as f64;
                let norm_c = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for k in 0..=n {
                    let s = lo + h * k as f64;
                    let w = if k == 0 || k == n {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let dens = norm_c * (-0.5 * ((s - mean) / sd).powi(2)).exp();
                    m1 += w * s * dens;
                    m2 += w * s * s * dens;
                }
                (m1 * h / 3.0, m2 * h / 3.0)
            }
        }
    }
}

/// Compound Poisson component: `intensity` jumps per unit time of size `s * direction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpComponent {
    pub intensity: f64,
    #[serde(flatten)]
    pub law: JumpLaw,
    /// Defaults to the first coordinate axis.
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
}

/// Symmetric tail `nu(dx) = scale |x|^{-1-alpha} dx` on `lower <= |x| < 1` along `direction`.
///
/// Simulated in dyadic shells `[2^{-m-1}, 2^{-m})`, each on its own stream, so
/// the realized jumps do not depend on `lower` beyond which shells exist.
/// Every `q`-moment with `q > alpha` stays bounded as `lower -> 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricTail {
    pub scale: f64,
    pub alpha: f64,
    pub lower: f64,
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
}

impl SymmetricTail {
    fn shells(&self) -> u32 {
        (-self.lower.log2()).ceil().max(0.0) as u32
    }

    fn shell_bounds(&self, m: u32) -> (f64, f64) {
        let hi = (-(m as f64)).exp2();
        (self.lower.max(hi / 2.0), hi)
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        2.0 * self.scale / self.alpha * (lo.powf(-self.alpha) - hi.powf(-self.alpha))
    }

    /// `int |x|^2 1{|x| < c} nu(dx)` along the unit direction.
    fn second_moment(&self, c: f64) -> f64 {
        let hi = c.min(1.0);
        if hi <= self.lower {
            return 0.0;
        }
        let e = 2.0 - self.alpha;
        2.0 * self.scale / e * (hi.powf(e) - self.lower.powf(e))
    }
}

/// Deterministic jump at a fixed time; never compensated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedJump {
    pub time: f64,
    pub size: Vec<f64>,
}

/// Replacement for the small-jump part in approximate schemes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpPolicy {
    /// `psi^n = -xi^n`: small jumps are removed.
    #[default]
    Drop,
    /// `psi^n = G^n - xi^n` with `G^n` Brownian of covariance `int_{|x| < 2^-n} x x^T nu(dx)`.
    Gaussian,
}

/// Characteristics `(lambda, Sigma, nu)` plus forced jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyCharacteristics {
    pub drift: Vec<f64>,
    /// `d x d`, row-major.
    pub covariance: Vec<f64>,
    #[serde(default)]
    pub components: Vec<JumpComponent>,
    #[serde(default)]
    pub tail: Option<SymmetricTail>,
    #[serde(default)]
    pub forced: Vec<ForcedJump>,
    #[serde(default)]
    pub small_jumps: SmallJumpPolicy,
}

fn unit_axis(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

impl LevyCharacteristics {
    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if self.drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidJumpLaw("non-finite drift".into()));
        }
        covariance_root(&self.covariance, d)?;
        for c in &self.components {
            if !c.intensity.is_finite() {
                return Err(Error::InfiniteIntensity(c.intensity));
            }
            if c.intensity < 0.0 {
                return Err(Error::InvalidJumpLaw(format!(
                    "negative intensity {}",
                    c.intensity
                )));
            }
            c.law.validate()?;
            check_direction(c.direction.as_deref(), d)?;
        }
        if let Some(tail) = &self.tail {
            if !(tail.lower > 0.0) {
                return Err(Error::InfiniteIntensity(f64::INFINITY));
            }
            let ok = tail.scale >= 0.0
                && tail.scale.is_finite()
                && tail.alpha > 0.0
                && tail.alpha < 2.0
                && tail.lower < 1.0;
            if !ok {
                return Err(Error::InvalidJumpLaw(format!("{tail:?}")));
            }
            check_direction(tail.direction.as_deref(), d)?;
        }
        for f in &self.forced {
            if f.size.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.size.len(),
                });
            }
            if !f.time.is_finite() || f.size.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidJumpLaw(format!("{f:?}")));
            }
        }
        Ok(())
    }

    fn direction_of(&self, dir: Option<&[f64]>) -> Vec<f64> {
        dir.map(<[f64]>::to_vec)
            .unwrap_or_else(|| unit_axis(self.dim()))
    }

    /// `int_{|x| < c} x nu(dx)`; the symmetric tail contributes nothing.
    pub fn truncated_mean(&self, c: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for comp in &self.components {
            let dir = self.direction_of(comp.direction.as_deref());
            let len = norm(&dir);
            if len == 0.0 {
                continue;
            }
            let (m1, _) = comp.law.truncated_moments(c / len);
            for (o, v) in out.iter_mut().zip(&dir) {
                *o += comp.intensity * m1 * v;
            }
        }
        out
    }

    /// `int_{|x| < c} x x^T nu(dx)`, row-major.
    pub fn truncated_covariance(&self, c: f64) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        let mut add = |dir: &[f64], m2: f64| {
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += m2 * dir[i] * dir[j];
                }
            }
        };
        for comp in &self.components {
            let dir = self.direction_of(comp.direction.as_deref());
            let len = norm(&dir);
            if len == 0.0 {
                continue;
            }
            let (_, m2) = comp.law.truncated_moments(c / len);
            add(&dir, comp.intensity * m2);
        }
        if let Some(tail) = &self.tail {
            let dir = self.direction_of(tail.direction.as_deref());
            let len = norm(&dir);
            if len > 0.0 {
                let unit: Vec<f64> = dir.iter().map(|v| v / len).collect();
                add(&unit, tail.second_moment(c));
            }
        }
        out
    }

    /// Total intensity of the simulated jumps, forced ones excluded.
    pub fn total_intensity(&self) -> f64 {
        let comps: f64 = self.components.iter().map(|c| c.intensity).sum();
        let tail = self.tail.as_ref().map_or(0.0, |t| t.mass(t.lower, 1.0));
        comps + tail
    }
}

fn check_direction(dir: Option<&[f64]>, d: usize) -> Result<()> {
    match dir {
        Some(v) if v.len() != d => Err(Error::DimensionMismatch {
            expected: d,
            found: v.len(),
        }),
        Some(v) if v.iter().any(|x| !x.is_finite()) => {
            Err(Error::InvalidJumpLaw("non-finite direction".into()))
        }
        _ => Ok(()),
    }
}

/// One realized jump.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub size: Vec<f64>,
}

/// Output of [`sample_levy`], all on the master grid augmented with the jump times.
#[derive(Clone, Debug)]
pub struct LevySample {
    pub path: CadlagPath,
    pub brownian: CadlagPath,
    pub phi: CadlagPath,
    /// Times of the jumps with norm at least `2^-level`.
    pub large_jump_times: Vec<f64>,
    /// Perturbation replacing the small jumps, per the configured policy.
    pub small_jump_residual: CadlagPath,
    pub jumps: Vec<Jump>,
    pub level: u32,
}

/// All simulated jumps in `(t0, T]`, sorted by time, coincident times merged.
pub fn sample_jumps(
    seed: u64,
    chars: &LevyCharacteristics,
    t0: f64,
    horizon: f64,
) -> Result<Vec<Jump>> {
    chars.validate()?;
    let mut raw: Vec<Jump> = Vec::new();
    let draw_time = |rng: &mut rand_chacha::ChaCha20Rng| t0 + horizon * (1.0 - uniform(rng));
    for (k, comp) in chars.components.iter().enumerate() {
        let mut rng = stream_rng(seed, streams::JUMP_BASE + k as u64);
        let dir = chars.direction_of(comp.direction.as_deref());
        let count = poisson(&mut rng, comp.intensity * horizon);
        for _ in 0..count {
            let time = draw_time(&mut rng);
            let s = comp.law.sample(&mut rng);
            raw.push(Jump {
                time,
                size: dir.iter().map(|v| s * v).collect(),
            });
        }
    }
    if let Some(tail) = &chars.tail {
        let dir = chars.direction_of(tail.direction.as_deref());
        let len = norm(&dir);
        let unit: Vec<f64> = dir
            .iter()
            .map(|v| if len > 0.0 { v / len } else { 0.0 })
            .collect();
        let a = tail.alpha;
        for m in 0..tail.shells() {
            let (lo, hi) = tail.shell_bounds(m);
            let mut rng = stream_rng(seed, streams::TAIL_BASE + u64::from(m));
            let count = poisson(&mut rng, tail.mass(lo, hi) * horizon);
            for _ in 0..count {
                let time = draw_time(&mut rng);
                let sign = if uniform(&mut rng) < 0.5 { -1.0 } else { 1.0 };
                // Inverse CDF of the |x|^{-1-alpha} density on [lo, hi).
                let u = uniform(&mut rng);
                let r = (lo.powf(-a) - u * (lo.powf(-a) - hi.powf(-a))).powf(-1.0 / a);
                raw.push(Jump {
                    time,
                    size: unit.iter().map(|v| sign * r * v).collect(),
                });
            }
        }
    }
    for f in &chars.forced {
        if f.time > t0 && f.time <= t0 + horizon + TIME_TOL {
            raw.push(Jump {
                time: f.time.min(t0 + horizon),
                size: f.size.clone(),
            });
        }
    }
    raw.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut merged: Vec<Jump> = Vec::with_capacity(raw.len());
    for j in raw {
        match merged.last_mut() {
            Some(last) if (j.time - last.time).abs() <= TIME_TOL => {
                last.size.iter_mut().zip(&j.size).for_each(|(a, b)| *a += b);
            }
            _ => merged.push(j),
        }
    }
    Ok(merged)
}

/// Samples `L = W + phi` on `grid` augmented with the jump times, split at level `level`.
///
/// The jumps and `W` do not depend on `level`; with no jumps `W` is bitwise
/// the output of [`sample_brownian`] on `grid`.
pub fn sample_levy(
    seed: u64,
    chars: &LevyCharacteristics,
    grid: &Partition,
    level: u32,
) -> Result<LevySample> {
    let d = chars.dim();
    let t0 = grid.start();
    let jumps = sample_jumps(seed, chars, t0, grid.horizon())?;
    // Snap onto existing grid times so coincident points are not duplicated.
    let snapped: Vec<f64> = jumps
        .iter()
        .map(|j| grid.index_of(j.time).map_or(j.time, |i| grid.times()[i]))
        .collect();
    let aug = grid.with_times(&snapped)?;
    let w = sample_brownian(seed, &chars.covariance, d, &aug)?;

    let threshold = (-(level as f64)).exp2();
    let comp_one = chars.truncated_mean(1.0);
    let comp_n = chars.truncated_mean(threshold);
    let times = aug.times();
    let n = aug.len();

    let mut jump_at: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (j, &t) in jumps.iter().zip(&snapped) {
        let idx = aug.index_of(t).expect("jump time is on the augmented grid");
        let entry = jump_at.entry(idx).or_insert_with(|| vec![0.0; d]);
        entry.iter_mut().zip(&j.size).for_each(|(a, b)| *a += b);
    }

    let mut phi = vec![0.0; n * d];
    let mut xi = vec![0.0; n * d];
    let mut running = vec![0.0; d];
    let mut small = vec![0.0; d];
    let mut phi_left = BTreeMap::new();
    let mut xi_left = BTreeMap::new();
    let mut large_jump_times = Vec::new();
    for i in 0..n {
        let dt = times[i] - t0;
        let mut small_jump = None;
        if let Some(size) = jump_at.get(&i) {
            running.iter_mut().zip(size).for_each(|(a, b)| *a += b);
            if norm(size) >= threshold {
                large_jump_times.push(times[i]);
            } else {
                small.iter_mut().zip(size).for_each(|(a, b)| *a += b);
                small_jump = Some(size);
            }
        }
        for r in 0..d {
            phi[i * d + r] = chars.drift[r] * dt + running[r] - dt * comp_one[r];
            xi[i * d + r] = small[r] - dt * comp_n[r];
        }
        if let Some(size) = jump_at.get(&i) {
            if i > 0 {
                phi_left.insert(
                    i,
                    (0..d).map(|r| phi[i * d + r] - size[r]).collect::<Vec<_>>(),
                );
            }
        }
        if let Some(size) = small_jump {
            if i > 0 {
                xi_left.insert(
                    i,
                    (0..d).map(|r| xi[i * d + r] - size[r]).collect::<Vec<_>>(),
                );
            }
        }
    }
    let phi = CadlagPath::with_left_limits(aug.clone(), d, phi, phi_left)?;
    let path = w.sum(&phi)?;
    let xi = CadlagPath::with_left_limits(aug.clone(), d, xi, xi_left)?;
    let small_jump_residual = match chars.small_jumps {
        SmallJumpPolicy::Drop => xi.scaled(-1.0),
        SmallJumpPolicy::Gaussian => {
            let cov = chars.truncated_covariance(threshold);
            let g = sample_brownian_stream(seed, streams::SMALL_JUMP_GAUSSIAN, &cov, d, &aug)?;
            g.difference(&xi)?
        }
    };
    Ok(LevySample {
        path,
        brownian: w,
        phi,
        large_jump_times,
        small_jump_residual,
        jumps,
        level,
    })
}

/// Dyadic partition at level `n` of `[0, horizon]` together with the large jump times.
pub fn build_levy_partition(
    level: u32,
    horizon: f64,
    large_jump_times: &[f64],
) -> Result<Partition> {
    build_levy_augmented_partition(horizon, level, large_jump_times)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diffusive(drift: f64) -> LevyCharacteristics {
        LevyCharacteristics {
            drift: vec![drift],
            covariance: vec![1.0],
            components: vec![],
            tail: None,
            forced: vec![],
            small_jumps: SmallJumpPolicy::Drop,
        }
    }

    #[test]
    fn no_jumps_is_brownian_plus_drift() {
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let s = sample_levy(5, &diffusive(0.7), &grid, 4).unwrap();
        assert_eq!(s.path.grid(), &grid);
        assert_eq!(s.brownian, sample_brownian(5, &[1.0], 1, &grid).unwrap());
        for (i, &t) in grid.times().iter().enumerate() {
            assert!((s.path.value(i)[0] - s.brownian.value(i)[0] - 0.7 * t).abs() < 1e-15);
        }
        assert!(s.large_jump_times.is_empty());
        assert!(s.small_jump_residual.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn threshold_membership() {
        let mut chars = diffusive(0.0);
        chars.forced.push(ForcedJump {
            time: 0.3,
            size: vec![0.3],
        });
        let grid = Partition::dyadic(1.0, 6).unwrap();
        for n in 0..6 {
            let s = sample_levy(1, &chars, &grid, n).unwrap();
            assert_eq!(s.large_jump_times == vec![0.3], n >= 2, "level {n}");
            let i = s.path.grid().index_of(0.3).unwrap();
            assert!(s.path.is_jump(i));
            assert!((s.path.value(i)[0] - s.path.left(i)[0] - 0.3).abs() < 1e-15);
            assert_eq!(s.small_jump_residual.is_jump(i), n < 2);
        }
    }

    #[test]
    fn compensated_mean_is_the_drift() {
        let chars = LevyCharacteristics {
            drift: vec![0.4],
            covariance: vec![0.0],
            components: vec![JumpComponent {
                intensity: 20.0,
                law: JumpLaw::Uniform {
                    low: -0.3,
                    high: 0.9,
                },
                direction: None,
            }],
            tail: None,
            forced: vec![],
            small_jumps: SmallJumpPolicy::Drop,
        };
        let grid = Partition::dyadic(1.0, 4).unwrap();
        let n = 1000;
        let ends: Vec<f64> = (0..n)
            .map(|seed| {
                let s = sample_levy(seed, &chars, &grid, 3).unwrap();
                s.phi.value(s.phi.len() - 1)[0]
            })
            .collect();
        let mean = ends.iter().sum::<f64>() / n as f64;
        let var = ends.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.4).abs() <= 3.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn partitions_nest_as_levels_grow() {
        let chars = LevyCharacteristics {
            drift: vec![0.0],
            covariance: vec![1.0],
            components: vec![JumpComponent {
                intensity: 8.0,
                law: JumpLaw::Normal { mean: 0.0, sd: 0.3 },
                direction: None,
            }],
            tail: Some(SymmetricTail {
                scale: 0.5,
                alpha: 0.8,
                lower: 2f64.powi(-10),
                direction: None,
            }),
            forced: vec![],
            small_jumps: SmallJumpPolicy::Gaussian,
        };
        let grid = Partition::dyadic(1.0, 10).unwrap();
        for seed in 0..5 {
            let mut prev: Option<Partition> = None;
            for n in 1..=8 {
                let s = sample_levy(seed, &chars, &grid, n).unwrap();
                let p = build_levy_partition(n, 1.0, &s.large_jump_times).unwrap();
                assert!(p.is_subset_of(s.path.grid()));
                if let Some(q) = prev {
                    assert!(q.is_subset_of(&p));
                }
                prev = Some(p);
            }
        }
        assert_eq!(
            build_levy_partition(1, 1.0, &[]).unwrap(),
            Partition::dyadic(1.0, 1).unwrap()
        );
        assert_eq!(
            build_levy_partition(1, 1.0, &[0.3]).unwrap().times(),
            &[0.0, 0.3, 0.5, 1.0]
        );
    }

    #[test]
    fn jumps_do_not_depend_on_level() {
        let mut chars = diffusive(0.1);
        chars.components.push(JumpComponent {
            intensity: 5.0,
            law: JumpLaw::TwoPoint {
                a: 0.05,
                b: -0.5,
                prob_a: 0.7,
            },
            direction: None,
        });
        let grid = Partition::dyadic(1.0, 8).unwrap();
        let a = sample_levy(9, &chars, &grid, 2).unwrap();
        let b = sample_levy(9, &chars, &grid, 7).unwrap();
        assert_eq!(a.path, b.path);
        assert_eq!(a.jumps, b.jumps);
        // phi splits into the large-jump part and xi; the large-jump part
        // moves only at the large jump times.
        let eta_n = a.phi.sum(&a.small_jump_residual).unwrap();
        for i in 1..eta_n.len() {
            if eta_n.is_jump(i) {
                let size = (eta_n.value(i)[0] - eta_n.left(i)[0]).abs();
                assert!(!(1e-12..0.25).contains(&size), "{size}");
            }
        }
    }

    #[test]
    fn truncated_moments_of_laws() {
        let (m1, m2) = JumpLaw::Normal { mean: 0.0, sd: 1.0 }.truncated_moments(100.0);
        assert!(m1.abs() < 1e-12 && (m2 - 1.0).abs() < 1e-10);
        let (m1, m2) = JumpLaw::Normal { mean: 0.5, sd: 0.2 }.truncated_moments(100.0);
        assert!((m1 - 0.5).abs() < 1e-10 && (m2 - 0.29).abs() < 1e-10);
        let (m1, _) = JumpLaw::Uniform {
            low: -1.0,
            high: 3.0,
        }
        .truncated_moments(1.0);
        assert_eq!(m1, 0.0);
        assert_eq!(
            JumpLaw::Fixed { size: 0.3 }.truncated_moments(0.25),
            (0.0, 0.0)
        );
        let (m1, m2) = JumpLaw::TwoPoint {
            a: 0.1,
            b: 2.0,
            prob_a: 0.5,
        }
        .truncated_moments(1.0);
        assert!((m1 - 0.05).abs() < 1e-16 && (m2 - 0.005).abs() < 1e-16);
    }

    #[test]
    fn tail_intensity_matches_counts() {
        let tail = SymmetricTail {
            scale: 0.2,
            alpha: 1.2,
            lower: 2f64.powi(-6),
            direction: None,
        };
        let chars = LevyCharacteristics {
            tail: Some(tail.clone()),
            ..diffusive(0.0)
        };
        let expected = tail.mass(tail.lower, 1.0);
        let n = 400;
        let total: usize = (0..n)
            .map(|seed| sample_jumps(seed, &chars, 0.0, 1.0).unwrap().len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!(
            (mean - expected).abs() <= 3.0 * (expected / n as f64).sqrt(),
            "{mean} vs {expected}"
        );
        let jumps = sample_jumps(3, &chars, 0.0, 1.0).unwrap();
        assert!(jumps
            .iter()
            .all(|j| j.size[0].abs() >= tail.lower && j.size[0].abs() < 1.0));
    }

    #[test]
    fn validation_errors() {
        let mut chars = diffusive(0.0);
        chars.components.push(JumpComponent {
            intensity: f64::INFINITY,
            law: JumpLaw::Fixed { size: 1.0 },
            direction: None,
        });
        assert!(matches!(chars.validate(), Err(Error::InfiniteIntensity(_))));
        let mut chars = diffusive(0.0);
        chars.tail = Some(SymmetricTail {
            scale: 1.0,
            alpha: 0.5,
            lower: 0.0,
            direction: None,
        });
        assert!(matches!(chars.validate(), Err(Error::InfiniteIntensity(_))));
    }
}
