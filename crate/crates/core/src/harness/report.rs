//! Statistical outputs of the experiments and their file formats.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};
use crate::fmt::sig17;

use super::config::Estimator;
use super::stats::{mean, ols, variance};

/// Replicate statistics at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    /// `sd / sqrt(R)`
    pub se_mean: f64,
    /// `mean - center`
    pub bias: f64,
    pub variance: f64,
    pub log_var: f64,
    /// Jackknife standard error of `log_var`.
    pub se_log_var: f64,
    pub center: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub estimator: Estimator,
    pub d: usize,
    pub points: Vec<CurvePoint>,
}

impl CurveReport {
    /// `n,mean,bias,log_var,se_log_var,center`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,mean,bias,log_var,se_log_var,center")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.n,
                sig17(p.mean),
                sig17(p.bias),
                sig17(p.log_var),
                sig17(p.se_log_var),
                sig17(p.center)
            )?;
        }
        Ok(())
    }
}

/// Least-squares line through `(log n, log variance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// Whether `((d-1)/2) log log n` was added to the log variances first.
    pub adjusted: bool,
    /// Standard error of the slope, propagated from the per-point jackknife errors.
    pub slope_se: f64,
}

/// Fit `log_var` against `log n`. With `adjusted`, the response is
/// `log_var + ((d-1)/2) log log n`, which removes the depth-dependent
/// `k^{(d-1)/2}` factor of the variance rate.
pub fn fit_variance_slope(report: &CurveReport, adjusted: bool) -> Result<SlopeFit> {
    if report.points.len() < 3 {
        return Err(invalid_input("slope fit needs at least three grid points"));
    }
    if let Some(p) = report.points.iter().find(|p| !(p.variance > 0.0)) {
        return Err(invalid_input(format!("zero variance at n = {}", p.n)));
    }
    let half = (report.d as f64 - 1.0) / 2.0;
    let x: Vec<f64> = report.points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = report
        .points
        .iter()
        .map(|p| {
            let ln_n = (p.n as f64).ln();
            if adjusted {
                p.log_var + half * ln_n.ln()
            } else {
                p.log_var
            }
        })
        .collect();
    let (slope, intercept, residual_rms, weights) = ols(&x, &y);
    let slope_se = weights
        .iter()
        .zip(&report.points)
        .map(|(w, p)| (w * p.se_log_var).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SlopeFit { slope, intercept, residual_rms, adjusted, slope_se })
}

/// Equal-width histogram of replicate predictions with a Gaussian overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub variance: f64,
    /// Overlay parameters (sample mean and variance).
    pub gaussian_mean: f64,
    pub gaussian_variance: f64,
    pub center: f64,
    /// All predictions identical: a single zero-width bin.
    pub degenerate: bool,
}

pub fn histogram_report(predictions: &[f64], bins: usize, center: f64) -> Result<HistogramReport> {
    if predictions.is_empty() {
        return Err(invalid_input("no predictions to histogram"));
    }
    if bins < 2 {
        return Err(invalid_input("need at least two bins"));
    }
    let lo = predictions.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = predictions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (edges, counts, degenerate) = if lo == hi {
        (vec![lo, hi], vec![predictions.len()], true)
    } else {
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
        let mut counts = vec![0usize; bins];
        for &p in predictions {
            let b = (((p - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        (edges, counts, false)
    };
    let (m, v) = if degenerate { (lo, 0.0) } else { (mean(predictions), variance(predictions)) };
    Ok(HistogramReport {
        edges,
        counts,
        mean: m,
        variance: v,
        gaussian_mean: m,
        gaussian_variance: v,
        center,
        degenerate,
    })
}

impl HistogramReport {
    /// `bin_lo,bin_hi,count`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", sig17(self.edges[i]), sig17(self.edges[i + 1]), c)?;
        }
        Ok(())
    }
}

/// Paired comparison of the plain and importance-sampling forests at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReduction {
    pub n: usize,
    pub replicates: usize,
    pub var_icrf: f64,
    pub var_rb: f64,
    pub var_is: f64,
    /// `var_is / var_icrf`
    pub ratio: f64,
    pub mean_icrf: f64,
    pub mean_rb: f64,
    pub mean_is: f64,
    /// `mu(x)`
    pub center: f64,
    /// `mu'(x)`
    pub center_rebalanced: f64,
}
