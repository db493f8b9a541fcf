use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::graph::Graph;

pub const DEFAULT_LOG_BINS: usize = 25;

/// Exact degree counts, including degree zero when present.
pub fn degree_histogram(g: &Graph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for d in g.degrees() {
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}

/// How samples become `(value, frequency)` points before the log-log fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// One point per distinct positive value, frequency = occurrence count.
    Raw,
    /// Logarithmically spaced bins between the smallest and largest positive
    /// value; frequency = count / bin width, point at the bin's geometric
    /// center.
    Log { bins: usize },
}

impl Default for Binning {
    fn default() -> Self {
        Self::Log { bins: DEFAULT_LOG_BINS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub bin_center: f64,
    pub count: f64,
    pub fit_value: f64,
}

/// Least-squares line `ln count = intercept + slope * ln value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<FitPoint>,
}

/// Fits a power law to positive samples; zeros and negatives are dropped.
pub fn powerlaw_fit(samples: &[f64], binning: Binning) -> Result<PowerLawFit, EvalError> {
    let mut values: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    values.sort_by(f64::total_cmp);
    let mut weighted: Vec<(f64, f64)> = Vec::new();
    for v in values {
        match weighted.last_mut() {
            Some((last, w)) if *last == v => *w += 1.0,
            _ => weighted.push((v, 1.0)),
        }
    }
    fit_weighted(&weighted, binning)
}

/// Fits a power law to a degree histogram; the zero-degree bin is dropped.
pub fn powerlaw_fit_histogram(hist: &BTreeMap<usize, usize>, binning: Binning) -> Result<PowerLawFit, EvalError> {
    let weighted: Vec<(f64, f64)> = hist
        .iter()
        .filter(|(&d, &c)| d > 0 && c > 0)
        .map(|(&d, &c)| (d as f64, c as f64))
        .collect();
    fit_weighted(&weighted, binning)
}

/// `weighted`: distinct positive values in ascending order with counts.
fn fit_weighted(weighted: &[(f64, f64)], binning: Binning) -> Result<PowerLawFit, EvalError> {
    match weighted {
        [] => return Err(EvalError::TooFewPoints { usable: 0 }),
        [_] => return Err(EvalError::Degenerate),
        _ => {}
    }
    let points: Vec<(f64, f64)> = match binning {
        Binning::Raw => weighted.to_vec(),
        Binning::Log { bins } => {
            let bins = bins.max(1);
            let lo = weighted[0].0.ln();
            let hi = weighted[weighted.len() - 1].0.ln();
            let width = (hi - lo) / bins as f64;
            let mut counts = vec![0.0; bins];
            for &(v, c) in weighted {
                let idx = (((v.ln() - lo) / width) as usize).min(bins - 1);
                counts[idx] += c;
            }
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0.0)
                .map(|(b, &c)| {
                    let left = (lo + b as f64 * width).exp();
                    let right = (lo + (b + 1) as f64 * width).exp();
                    ((left * right).sqrt(), c / (right - left))
                })
                .collect()
        }
    };
    if points.len() < 3 {
        return Err(EvalError::TooFewPoints { usable: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        points: points
            .iter()
            .map(|&(center, count)| FitPoint {
                bin_center: center,
                count,
                fit_value: (intercept + slope * center.ln()).exp(),
            })
            .collect(),
    })
}
