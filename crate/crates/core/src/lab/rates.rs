use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::lab::config::{DriverSpec, ExperimentConfig, PartitionFamily, VarExponents};

/// Least-squares fit of `-log2(error)` against the level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log2` units.
    pub residual: f64,
    pub used_levels: Vec<u32>,
    /// Levels dropped because their error was zero or not finite.
    pub dropped_levels: Vec<u32>,
}

/// Fits `-log2(e_n) = slope * n + intercept`; zero errors are dropped.
pub fn fit_rate(levels: &[u32], errors: &[f64]) -> Result<RateFit> {
    if levels.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            found: errors.len(),
        });
    }
    let (mut xs, mut ys, mut used, mut dropped) = (vec![], vec![], vec![], vec![]);
    for (&n, &e) in levels.iter().zip(errors) {
        if e > 0.0 && e.is_finite() {
            xs.push(n as f64);
            ys.push(-e.log2());
            used.push(n);
        } else {
            dropped.push(n);
        }
    }
    if xs.len() < 2 {
        return Err(Error::TooFewLevels(xs.len()));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        residual: (sse / m).sqrt(),
        used_levels: used,
        dropped_levels: dropped,
    })
}

/// Driver class that selects the theoretical exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFamily {
    Brownian,
    Ito,
    /// Any driver on stopping-time partitions.
    Semimartingale,
    Levy,
    /// No rate is claimed (fBm and deterministic drivers).
    Unrated,
}

impl RateFamily {
    pub fn of(cfg: &ExperimentConfig) -> RateFamily {
        if cfg.partition_family() == PartitionFamily::Stopping {
            return RateFamily::Semimartingale;
        }
        match cfg.driver {
            DriverSpec::Brownian { .. } => RateFamily::Brownian,
            DriverSpec::Ito { .. } => RateFamily::Ito,
            DriverSpec::Levy { .. } => RateFamily::Levy,
            DriverSpec::Fbm { .. } | DriverSpec::Eta { .. } => RateFamily::Unrated,
        }
    }
}

/// The almost-sure decay exponent guaranteed for `family` under `ex`.
///
/// Brownian: `min(1 - 1/q, (2/p - beta)(1 - p/p'))`. Ito: `1/6 - epsilon`.
/// Semimartingale: `1/3 - epsilon`. Levy:
/// `min(1 - 1/q', delta (1 - q/q')(1 - p/p'), (1/p - 1/p')(1 - p/p'))`.
pub fn theoretical_exponent(family: RateFamily, ex: &VarExponents) -> Result<Option<f64>> {
    let (p, pp, q) = (ex.p, ex.p_prime, ex.q);
    let gap = 1.0 - p / pp;
    Ok(match family {
        RateFamily::Brownian => {
            let beta = ex.beta.unwrap_or(1.0 - 1.0 / p + 0.01);
            Some((1.0 - 1.0 / q).min((2.0 / p - beta) * gap))
        }
        RateFamily::Ito => Some(1.0 / 6.0 - ex.epsilon),
        RateFamily::Semimartingale => Some(1.0 / 3.0 - ex.epsilon),
        RateFamily::Levy => {
            let qp = ex
                .q_prime
                .ok_or_else(|| config_err("/exponents/q_prime", "the Levy rate needs q_prime"))?;
            let delta = ex.delta.unwrap_or(1.0 - q / 2.0 - 0.05);
            Some(
                (1.0 - 1.0 / qp)
                    .min(delta * (1.0 - q / qp) * gap)
                    .min((1.0 / p - 1.0 / pp) * gap),
            )
        }
        RateFamily::Unrated => None,
    })
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exponents() -> VarExponents {
        VarExponents {
            p: 2.25,
            p_prime: 2.75,
            q: 1.4,
            q_prime: None,
            beta: None,
            epsilon: 0.05,
            delta: None,
        }
    }

    #[test]
    fn halving_errors_give_unit_slope() {
        let f = fit_rate(&[1, 2, 3], &[0.5, 0.25, 0.125]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-15 && f.residual < 1e-15);
        assert!(f.intercept.abs() < 1e-14);
    }

    #[test]
    fn constant_errors_give_zero_slope() {
        assert_eq!(fit_rate(&[4, 5, 6, 7], &[0.3; 4]).unwrap().slope, 0.0);
    }

    #[test]
    fn zero_errors_are_dropped() {
        let f = fit_rate(&[1, 2, 3], &[0.5, 0.0, 0.125]).unwrap();
        assert_eq!(f.dropped_levels, vec![2]);
        assert!((f.slope - 1.0).abs() < 1e-15);
        assert!(matches!(
            fit_rate(&[1, 2], &[0.5, 0.0]),
            Err(Error::TooFewLevels(1))
        ));
    }

    #[test]
    fn brownian_exponent() {
        let ex = exponents();
        let beta = 1.0 - 1.0 / 2.25 + 0.01;
        let expected = (1.0 - 1.0 / 1.4f64).min((2.0 / 2.25 - beta) * (1.0 - 2.25 / 2.75));
        let got = theoretical_exponent(RateFamily::Brownian, &ex)
            .unwrap()
            .unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.058_787_878_787_878_8).abs() < 1e-12);
    }

    #[test]
    fn other_exponents() {
        let mut ex = exponents();
        assert!(
            (theoretical_exponent(RateFamily::Ito, &ex).unwrap().unwrap() - (1.0 / 6.0 - 0.05))
                .abs()
                < 1e-15
        );
        assert!(
            (theoretical_exponent(RateFamily::Semimartingale, &ex)
                .unwrap()
                .unwrap()
                - (1.0 / 3.0 - 0.05))
                .abs()
                < 1e-15
        );
        assert!(theoretical_exponent(RateFamily::Levy, &ex).is_err());
        ex.q_prime = Some(1.8);
        let delta = 1.0 - 0.7 - 0.05;
        let gap = 1.0 - 2.25 / 2.75;
        let expected = (1.0 - 1.0 / 1.8f64)
            .min(delta * (1.0 - 1.4 / 1.8) * gap)
            .min((1.0 / 2.25 - 1.0 / 2.75) * gap);
        assert!(
            (theoretical_exponent(RateFamily::Levy, &ex)
                .unwrap()
                .unwrap()
                - expected)
                .abs()
                < 1e-15
        );
        assert_eq!(
            theoretical_exponent(RateFamily::Unrated, &ex).unwrap(),
            None
        );
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median([f64::NAN]), None);
    }

    proptest! {
        #[test]
        fn recovers_exact_power_laws(rate in -1.0f64..2.0, c in 0.01f64..100.0, n0 in 1u32..10, k in 2u32..8) {
            let levels: Vec<u32> = (n0..n0 + k).collect();
            let errors: Vec<f64> = levels.iter().map(|&n| c * (-(rate * n as f64)).exp2()).collect();
            let f = fit_rate(&levels, &errors).unwrap();
            prop_assert!((f.slope - rate).abs() < 1e-9);
        }
    }
}
