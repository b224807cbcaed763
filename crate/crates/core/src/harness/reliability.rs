//! Exponential failure-rate fit and reliability curve.

use serde::{Deserialize, Serialize};

use super::timeline::{Class, FunctionalityTimeline};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityModel {
    /// Failures per second.
    pub lambda: f64,
    pub failures: usize,
    pub exposure_s: f64,
    /// `(t_s, R(t))` samples.
    pub curve: Vec<(f64, f64)>,
}

pub const CURVE_POINTS: usize = 41;

impl ReliabilityModel {
    /// Maximum-likelihood rate from `failures` onsets over `exposure_s` of
    /// correct operation.
    pub fn from_counts(failures: usize, exposure_s: f64, horizon_s: f64) -> Result<Self> {
        if exposure_s <= 0.0 {
            return Err(Error::UndefinedRate);
        }
        let lambda = failures as f64 / exposure_s;
        let curve = (0..CURVE_POINTS)
            .map(|i| {
                let t = horizon_s * i as f64 / (CURVE_POINTS - 1) as f64;
                (t, reliability(lambda, t))
            })
            .collect();
        Ok(Self { lambda, failures, exposure_s, curve })
    }

    pub fn r(&self, t_s: f64) -> f64 {
        reliability(self.lambda, t_s)
    }
}

pub fn reliability(lambda: f64, t_s: f64) -> f64 {
    if t_s == 0.0 {
        1.0
    } else {
        (-lambda * t_s).exp()
    }
}

pub fn fit_lambda(timeline: &FunctionalityTimeline) -> Result<ReliabilityModel> {
    fit_pooled(std::slice::from_ref(timeline))
}

/// One rate over several runs: onsets and correct time are summed.
pub fn fit_pooled(timelines: &[FunctionalityTimeline]) -> Result<ReliabilityModel> {
    let failures = timelines.iter().map(FunctionalityTimeline::failure_onsets).sum();
    let exposure: f64 = timelines.iter().map(|t| t.time_in(Class::Correct).as_secs_f64()).sum();
    let horizon = timelines.iter().map(|t| t.duration.as_secs_f64()).fold(0.0, f64::max);
    ReliabilityModel::from_counts(failures, exposure, horizon)
}
