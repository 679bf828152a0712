use serde::{Deserialize, Serialize};

use super::config::RpMetric;
use crate::error::{Error, Result};

/// Aggregates of one operator over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Relative net profit increment.
    pub rp: f64,
    /// Share of executions with the station switched on.
    pub on_ratio: f64,
    /// Relative deviation of served users from working alone; NaN when the
    /// station would never serve anyone alone.
    pub load_deviation: f64,
}

/// Relative profit increment of `payoffs` over `baselines`.
///
/// The literal form fails on the first zero baseline, naming its step.
pub fn metric_rp(payoffs: &[f64], baselines: &[f64], metric: RpMetric) -> Result<f64> {
    if payoffs.len() != baselines.len() {
        return Err(Error::InvalidArgument(format!("{} payoffs for {} baselines", payoffs.len(), baselines.len())));
    }
    match metric {
        RpMetric::RatioOfSums => {
            let total: f64 = baselines.iter().sum();
            if total == 0.0 {
                return Err(Error::UndefinedBaseline { step: 0 });
            }
            Ok(payoffs.iter().sum::<f64>() / total - 1.0)
        }
        RpMetric::Literal => {
            let mut sum = 0.0;
            for (k, (x, p)) in payoffs.iter().zip(baselines).enumerate() {
                if *p == 0.0 {
                    return Err(Error::UndefinedBaseline { step: k });
                }
                sum += x / p;
            }
            Ok(sum - 1.0)
        }
    }
}

pub fn metric_on(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
}

/// `Σ served / Σ baseline_served - 1`.
pub fn metric_xl(served: &[usize], baseline_served: &[usize]) -> Result<f64> {
    if served.len() != baseline_served.len() {
        return Err(Error::InvalidArgument(format!(
            "{} served counts for {} baselines",
            served.len(),
            baseline_served.len()
        )));
    }
    let base: usize = baseline_served.iter().sum();
    if base == 0 {
        return Err(Error::InvalidArgument("station never serves anyone alone".into()));
    }
    Ok(served.iter().sum::<usize>() as f64 / base as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rp_examples() {
        let p: Vec<f64> = (1..=168).map(|k| 0.01 * k as f64).collect();
        assert_close!(metric_rp(&p, &p, RpMetric::Literal).unwrap(), 167.0, 1e-9);
        assert_close!(metric_rp(&p, &p, RpMetric::RatioOfSums).unwrap(), 0.0, 1e-12);
        let x: Vec<f64> = p.iter().map(|v| 1.1 * v).collect();
        assert_close!(metric_rp(&x, &p, RpMetric::RatioOfSums).unwrap(), 0.10, 1e-12);
    }

    #[test]
    fn literal_rp_names_the_zero_step() {
        let err = metric_rp(&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0], RpMetric::Literal).unwrap_err();
        assert!(matches!(err, Error::UndefinedBaseline { step: 1 }));
        assert!(metric_rp(&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0], RpMetric::RatioOfSums).is_ok());
        assert!(metric_rp(&[1.0], &[0.0], RpMetric::RatioOfSums).is_err());
        assert!(metric_rp(&[1.0], &[1.0, 2.0], RpMetric::RatioOfSums).is_err());
    }

    #[test]
    fn on_examples() {
        assert_eq!(metric_on(&[true; 7]), 1.0);
        assert_eq!(metric_on(&[false; 7]), 0.0);
        let flags: Vec<bool> = (0..168).map(|k| k % 4 == 0).collect();
        assert_close!(metric_on(&flags), 0.25, 1e-15);
    }

    #[test]
    fn xl_examples() {
        assert_eq!(metric_xl(&[3, 4, 5], &[3, 4, 5]).unwrap(), 0.0);
        assert_close!(metric_xl(&[80, 80], &[50, 50]).unwrap(), 0.60, 1e-12);
        assert_eq!(metric_xl(&[0, 0], &[4, 1]).unwrap(), -1.0);
        assert!(metric_xl(&[1], &[0]).is_err());
    }
}
