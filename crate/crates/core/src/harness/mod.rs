//! Seeded Monte Carlo experiments over replicate datasets.
//!
//! Every replicate owns its substreams, keyed by sample size, estimator
//! family and replicate index, and results are gathered in index order, so
//! outputs do not depend on the number of worker threads.

pub mod config;
pub mod report;
pub mod stats;

use rayon::prelude::*;

use crate::data::{generate_logistic_dataset, Dataset, LogisticScenario};
use crate::error::{invalid_config, Error, Result};
use crate::forest::{forest_predict, hyperparams_from_exponents, ForestConfig};
use crate::oracles::mu_prime_of_mu;
use crate::rebalance::{is_debias, rb_forest_predict, stratified_counts, DebiasInputs, RebalanceMode, RebalanceSpec};
use crate::rng::Stream;

pub use config::{Estimator, ExperimentConfig, RbDepthRule, ScenarioSpec};
pub use report::{fit_variance_slope, histogram_report, CurvePoint, CurveReport, HistogramReport, SlopeFit, VarianceReduction};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "CRF_WORKERS";

/// Redraws allowed when a replicate dataset lacks one of the classes.
const MAX_DATASET_ATTEMPTS: u64 = 1000;

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid_config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&w| w > 0)
}

/// Forest families: the rebalanced and debiased estimators share one family
/// so that the debiased prediction is a transform of the paired rebalanced one.
fn family(estimator: Estimator) -> u64 {
    match estimator {
        Estimator::Icrf => 0,
        Estimator::RbIcrf | Estimator::IsIcrf => 1,
    }
}

fn forest_stream(cfg: &ExperimentConfig, n: usize, estimator: Estimator, r: usize) -> Stream {
    Stream::new(cfg.seed)
        .named("forest")
        .child(n as u64)
        .child(family(estimator))
        .child(r as u64)
}

/// Replicate dataset `r` at size `n`. With `both_classes`, datasets missing a
/// class are redrawn from fresh substreams.
fn replicate_dataset(
    cfg: &ExperimentConfig,
    scenario: &LogisticScenario,
    n: usize,
    r: usize,
    both_classes: bool,
) -> Result<Dataset> {
    let base = Stream::new(cfg.seed).named("dataset").child(n as u64).child(r as u64);
    for attempt in 0..MAX_DATASET_ATTEMPTS {
        let data = generate_logistic_dataset(scenario, n, base.child(attempt))?;
        let (n0, n1) = data.class_counts();
        if !both_classes || (n0 > 0 && n1 > 0) {
            return Ok(data);
        }
    }
    Err(Error::NonConvergence { what: "dataset with both classes", iterations: MAX_DATASET_ATTEMPTS as usize })
}

/// Forest and rebalancing parameters of the rebalanced estimators on a
/// dataset with class counts `(n0, n1)`, given the plain forest's `(s, k)`.
pub fn rebalanced_config(
    cfg: &ExperimentConfig,
    n0: usize,
    n1: usize,
    s: usize,
    k: u32,
) -> Result<(ForestConfig, RebalanceSpec)> {
    let n = n0 + n1;
    let (spec, s_rb, subsample) = match cfg.rebalance_mode {
        RebalanceMode::PerSubsampleFraction => {
            let (m0, m1) = stratified_counts(s, n0, n1, cfg.p_prime)?;
            (RebalanceSpec::new(cfg.p_prime, n1.max(1))?, m0 + m1, s)
        }
        RebalanceMode::Dataset => {
            let n_prime = cfg.n_prime.unwrap_or(n1).max(1);
            let s_rb = ((s as f64 * n_prime as f64 / n as f64).round() as usize).clamp(1, n_prime);
            (RebalanceSpec::new(cfg.p_prime, n_prime)?, s_rb, s_rb)
        }
    };
    let depth = match cfg.rb_depth {
        RbDepthRule::Same => k,
        RbDepthRule::MatchedOccupancy => {
            let shift = (s as f64 / s_rb as f64).log2();
            (k as f64 - shift).round().max(0.0) as u32
        }
    };
    Ok((ForestConfig::new(cfg.b_trees, subsample, depth), spec))
}

/// Predictions of the three estimators on one dataset. The plain forest is
/// skipped unless requested.
struct Paired {
    icrf: Option<f64>,
    rb: Option<f64>,
    is: Option<f64>,
}

fn predict_on(
    cfg: &ExperimentConfig,
    data: &Dataset,
    n: usize,
    r: usize,
    want_icrf: bool,
    want_rebalanced: bool,
) -> Result<Paired> {
    let (s, k) = hyperparams_from_exponents(n, cfg.alpha, cfg.beta)?;
    let x = &cfg.query_point;
    let icrf = if want_icrf {
        let forest = ForestConfig::new(cfg.b_trees, s, k);
        Some(forest_predict(&forest, data, x, forest_stream(cfg, n, Estimator::Icrf, r))?.value)
    } else {
        None
    };
    let (rb, is) = if want_rebalanced {
        let (n0, n1) = data.class_counts();
        let (forest, spec) = rebalanced_config(cfg, n0, n1, s, k)?;
        let stream = forest_stream(cfg, n, Estimator::RbIcrf, r);
        let mu_rb = rb_forest_predict(&forest, data, &spec, cfg.rebalance_mode, x, stream, Default::default())?.value;
        let is = is_debias(DebiasInputs { mu_rb, n0, n1, p_prime: cfg.p_prime })?;
        (Some(mu_rb), Some(is))
    } else {
        (None, None)
    };
    Ok(Paired { icrf, rb, is })
}

/// One prediction at the query point per replicate: fresh dataset, fresh
/// forest. The debiased estimator uses the replicate dataset's own class counts.
pub fn run_replicates(cfg: &ExperimentConfig, n: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    let scenario = cfg.scenario.resolve()?;
    let est = cfg.estimator;
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let data = replicate_dataset(cfg, &scenario, n, r, est.is_rebalanced())?;
            let p = predict_on(cfg, &data, n, r, est == Estimator::Icrf, est.is_rebalanced())?;
            Ok(match est {
                Estimator::Icrf => p.icrf,
                Estimator::RbIcrf => p.rb,
                Estimator::IsIcrf => p.is,
            }
            .expect("requested estimator computed"))
        })
        .collect()
}

/// Value the estimator targets at the query point: `mu(x)`, or `mu'(x)` for
/// the rebalanced forest.
pub fn estimator_center(cfg: &ExperimentConfig, scenario: &LogisticScenario) -> f64 {
    let mu = scenario.mu(&cfg.query_point);
    match cfg.estimator {
        Estimator::RbIcrf => mu_prime_of_mu(mu, scenario.class_probability(), cfg.p_prime),
        Estimator::Icrf | Estimator::IsIcrf => mu,
    }
}

fn curve_point(n: usize, preds: &[f64], center: f64) -> CurvePoint {
    let m = stats::mean(preds);
    let v = stats::variance(preds);
    let (skewness, excess_kurtosis) = stats::skewness_kurtosis(preds);
    CurvePoint {
        n,
        replicates: preds.len(),
        mean: m,
        se_mean: (v / preds.len() as f64).sqrt(),
        bias: m - center,
        variance: v,
        log_var: v.ln(),
        se_log_var: stats::jackknife_se_log_variance(preds),
        center,
        skewness,
        excess_kurtosis,
    }
}

/// Curve report together with the raw predictions at each grid size.
pub fn bias_variance_curve_with_predictions(cfg: &ExperimentConfig) -> Result<(CurveReport, Vec<Vec<f64>>)> {
    cfg.validate()?;
    let scenario = cfg.scenario.resolve()?;
    let center = estimator_center(cfg, &scenario);
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    let mut all = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let preds = run_replicates(cfg, n)?;
        points.push(curve_point(n, &preds, center));
        all.push(preds);
    }
    Ok((CurveReport { estimator: cfg.estimator, d: scenario.d(), points }, all))
}

/// Replicate mean, bias and log variance at every grid size.
pub fn bias_variance_curve(cfg: &ExperimentConfig) -> Result<CurveReport> {
    bias_variance_curve_with_predictions(cfg).map(|(report, _)| report)
}

/// Plain, rebalanced and debiased forests on the same replicate datasets.
/// The estimator field of `cfg` is ignored.
pub fn variance_reduction_experiment(cfg: &ExperimentConfig) -> Result<Vec<VarianceReduction>> {
    cfg.validate()?;
    let scenario = cfg.scenario.resolve()?;
    let mu = scenario.mu(&cfg.query_point);
    let mu_prime = mu_prime_of_mu(mu, scenario.class_probability(), cfg.p_prime);
    cfg.n_grid
        .iter()
        .map(|&n| {
            let pairs: Vec<Paired> = (0..cfg.replicates)
                .into_par_iter()
                .map(|r| {
                    let data = replicate_dataset(cfg, &scenario, n, r, true)?;
                    predict_on(cfg, &data, n, r, true, true)
                })
                .collect::<Result<_>>()?;
            let icrf: Vec<f64> = pairs.iter().filter_map(|p| p.icrf).collect();
            let rb: Vec<f64> = pairs.iter().filter_map(|p| p.rb).collect();
            let is: Vec<f64> = pairs.iter().filter_map(|p| p.is).collect();
            let var_icrf = stats::variance(&icrf);
            let var_is = stats::variance(&is);
            Ok(VarianceReduction {
                n,
                replicates: cfg.replicates,
                var_icrf,
                var_rb: stats::variance(&rb),
                var_is,
                ratio: var_is / var_icrf,
                mean_icrf: stats::mean(&icrf),
                mean_rb: stats::mean(&rb),
                mean_is: stats::mean(&is),
                center: mu,
                center_rebalanced: mu_prime,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(estimator: Estimator) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::imbalanced(estimator, vec![100, 200, 400], 0.9, 0.7, 8, 5);
        cfg.b_trees = 40;
        cfg
    }

    #[test]
    fn replicates_are_reproducible_and_bounded() {
        for est in [Estimator::Icrf, Estimator::RbIcrf, Estimator::IsIcrf] {
            let cfg = small(est);
            let a = run_replicates(&cfg, 100).unwrap();
            let b = run_replicates(&cfg, 100).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 8);
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn debiased_is_monotone_transform_of_rebalanced() {
        let rb = run_replicates(&small(Estimator::RbIcrf), 200).unwrap();
        let is = run_replicates(&small(Estimator::IsIcrf), 200).unwrap();
        for (a, b) in is.iter().zip(&rb) {
            assert!(a <= b, "debiasing toward the rarer class lowers the value");
            assert_eq!(*a == 0.0, *b == 0.0);
        }
    }

    #[test]
    fn all_zero_labels_give_zero_predictions() {
        let mut cfg = small(Estimator::Icrf);
        cfg.scenario = ScenarioSpec { beta: vec![0.0, 0.0], beta0: Some(-800.0), target_p: None };
        let report = bias_variance_curve(&cfg).unwrap();
        for p in &report.points {
            assert_eq!(p.mean, 0.0);
            assert_eq!(p.variance, 0.0);
            assert_eq!(p.bias, -p.center);
        }
    }

    #[test]
    fn same_class_probability_makes_debiasing_neutral() {
        let mut cfg = small(Estimator::IsIcrf);
        cfg.p_prime = 0.1;
        let mut rb_cfg = cfg.clone();
        rb_cfg.estimator = Estimator::RbIcrf;
        let is = run_replicates(&cfg, 400).unwrap();
        let rb = run_replicates(&rb_cfg, 400).unwrap();
        // p' close to the sample proportion: debiasing barely moves predictions
        for (a, b) in is.iter().zip(&rb) {
            assert!((a - b).abs() <= 0.3 * b + 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn matched_occupancy_lowers_depth() {
        let cfg = small(Estimator::RbIcrf);
        let (forest, spec) = rebalanced_config(&cfg, 90, 10, 63, 5).unwrap();
        // stratified counts (6, 6): 63 / 12 is about 2.4 halvings
        assert_eq!(forest.depth, 3);
        assert_eq!(forest.subsample, 63);
        assert_eq!(spec.p_prime, 0.5);
        let mut same = cfg.clone();
        same.rb_depth = RbDepthRule::Same;
        assert_eq!(rebalanced_config(&same, 90, 10, 63, 5).unwrap().0.depth, 5);
        let mut ds = cfg;
        ds.rebalance_mode = RebalanceMode::Dataset;
        let (forest, spec) = rebalanced_config(&ds, 90, 10, 63, 5).unwrap();
        assert_eq!(spec.n_prime, 10);
        assert_eq!(forest.subsample, 6);
        assert_eq!(forest.depth, 2);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small(Estimator::IsIcrf);
        let one = with_workers(1, || run_replicates(&cfg, 100)).unwrap().unwrap();
        let three = with_workers(3, || run_replicates(&cfg, 100)).unwrap().unwrap();
        assert_eq!(one, three);
    }
}
