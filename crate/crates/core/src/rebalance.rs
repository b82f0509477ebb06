//! Rebalanced samples and importance-sampling debiasing.
//!
//! A rebalanced sample has minority probability `P(Y'=1) = p'` while keeping
//! the class-conditional feature laws of the source data. A forest trained on
//! it estimates `mu'(x)`, not `mu(x)`; [`is_debias`] maps the estimate back
//! through the odds-ratio relation using the source counts `(n0, n1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::forest::{forest_predict_with, predict_trees, ForestConfig, ForestPrediction, PredictOptions};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RebalanceSpec {
    /// Target minority probability of the rebalanced sample.
    pub p_prime: f64,
    /// Size of the rebalanced sample (dataset mode).
    pub n_prime: usize,
}

impl RebalanceSpec {
    pub fn new(p_prime: f64, n_prime: usize) -> Result<Self> {
        let spec = Self { p_prime, n_prime };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_prime > 0.0 && self.p_prime <= 1.0) {
            return Err(invalid_config(format!("p' = {} must lie in (0, 1]", self.p_prime)));
        }
        if self.n_prime == 0 {
            return Err(invalid_config("n' must be at least 1"));
        }
        Ok(())
    }

    /// Whether `n'` exceeds the minority count. Such a draw may still be
    /// feasible; it only departs from the usual `n' <= n1` recipe.
    pub fn exceeds_minority(&self, n1: usize) -> bool {
        self.n_prime > n1
    }
}

/// How the rebalanced forest obtains its training rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RebalanceMode {
    /// Draw one rebalanced dataset, then subsample it uniformly per tree.
    Dataset,
    /// Stratified subsampling inside each tree: a fraction `s/n` of the
    /// minority class plus enough majority rows to reach proportion `p'`.
    #[default]
    PerSubsampleFraction,
}

/// Draw `n'` observations without replacement: each draw takes a uniformly
/// random remaining label-1 row with probability `p'`, a label-0 row otherwise.
pub fn draw_rebalanced_sample<R: Rng + ?Sized>(data: &Dataset, spec: &RebalanceSpec, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    let mut pools = [data.class_indices(0), data.class_indices(1)];
    let mut picked = Vec::with_capacity(spec.n_prime);
    for _ in 0..spec.n_prime {
        let class = usize::from(rng.random::<f64>() < spec.p_prime);
        let pool = &mut pools[class];
        if pool.is_empty() {
            return Err(Error::SamplingInfeasible { class: class as u8 });
        }
        let at = rng.random_range(0..pool.len());
        picked.push(pool.swap_remove(at));
    }
    Ok(data.select(&picked))
}

/// Per-tree class counts `(m0, m1)` of the stratified subsample: `m1 =
/// round(s n1 / n)` (at least one row) and `m0 = round(m1 (1-p') / p')`.
pub fn stratified_counts(s: usize, n0: usize, n1: usize, p_prime: f64) -> Result<(usize, usize)> {
    if n1 == 0 {
        return Err(Error::SamplingInfeasible { class: 1 });
    }
    let n = n0 + n1;
    let m1 = ((s as f64 * n1 as f64 / n as f64).round() as usize).clamp(1, n1);
    let m0 = (m1 as f64 * (1.0 - p_prime) / p_prime).round() as usize;
    if m0 > n0 {
        return Err(Error::SamplingInfeasible { class: 0 });
    }
    Ok((m0, m1))
}

/// Rebalanced forest prediction at `x`; estimates `mu'(x)`.
///
/// In [`RebalanceMode::Dataset`] the forest runs on one rebalanced sample of
/// size `n'` and `config.subsample` must not exceed `n'`. In
/// [`RebalanceMode::PerSubsampleFraction`] `config.subsample` is the nominal
/// subsample size `s` of the source data and each tree trains on
/// [`stratified_counts`] rows.
pub fn rb_forest_predict(
    config: &ForestConfig,
    data: &Dataset,
    spec: &RebalanceSpec,
    mode: RebalanceMode,
    x: &[f64],
    stream: Stream,
    options: PredictOptions,
) -> Result<ForestPrediction> {
    spec.validate()?;
    match mode {
        RebalanceMode::Dataset => {
            let sample = draw_rebalanced_sample(data, spec, &mut stream.named("rebalance").rng())?;
            forest_predict_with(config, &sample, x, stream.named("forest"), options)
        }
        RebalanceMode::PerSubsampleFraction => {
            config.validate(data.n())?;
            let (n0, n1) = data.class_counts();
            let (m0, m1) = stratified_counts(config.subsample, n0, n1, spec.p_prime)?;
            let majority = data.class_indices(0);
            let minority = data.class_indices(1);
            predict_trees(config, data, x, stream.named("forest"), options, |rng| {
                let mut rows: Vec<usize> = rand::seq::index::sample(rng, n1, m1)
                    .into_iter()
                    .map(|i| minority[i])
                    .collect();
                rows.extend(rand::seq::index::sample(rng, n0, m0).into_iter().map(|i| majority[i]));
                rows
            })
        }
    }
}

/// Inputs of the importance-sampling correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebiasInputs {
    /// Rebalanced prediction.
    pub mu_rb: f64,
    /// Source majority count.
    pub n0: usize,
    /// Source minority count.
    pub n1: usize,
    pub p_prime: f64,
}

/// `n1 (1-p') u / (p' n0 (1-u) + n1 (1-p') u)` with `u = mu_rb`.
pub fn is_debias(inp: DebiasInputs) -> Result<f64> {
    let DebiasInputs { mu_rb: u, n0, n1, p_prime } = inp;
    if !(0.0..=1.0).contains(&u) {
        return Err(invalid_input(format!("rebalanced prediction {u} outside [0,1]")));
    }
    if !(0.0..=1.0).contains(&p_prime) {
        return Err(invalid_input(format!("p' = {p_prime} outside [0,1]")));
    }
    let (n0, n1) = (n0 as f64, n1 as f64);
    let num = n1 * (1.0 - p_prime) * u;
    let den = p_prime * n0 * (1.0 - u) + num;
    if !(den > 0.0) {
        return Err(invalid_input("importance-sampling denominator vanishes"));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_logistic_dataset, LogisticScenario};

    fn balanced(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn all_minority_when_p_prime_is_one() {
        let data = balanced(40);
        let spec = RebalanceSpec::new(1.0, 20).unwrap();
        let rb = draw_rebalanced_sample(&data, &spec, &mut Stream::new(1).rng()).unwrap();
        assert_eq!(rb.n(), 20);
        assert!(rb.labels().iter().all(|&y| y == 1));
    }

    #[test]
    fn exhausting_a_pool_is_reported() {
        let data = balanced(10);
        let spec = RebalanceSpec::new(1.0, 6).unwrap();
        let err = draw_rebalanced_sample(&data, &spec, &mut Stream::new(1).rng()).unwrap_err();
        assert!(matches!(err, Error::SamplingInfeasible { class: 1 }));
        assert!(spec.exceeds_minority(5));
    }

    #[test]
    fn rebalanced_sample_has_no_repeats() {
        let data = balanced(1000);
        let spec = RebalanceSpec::new(0.5, 500).unwrap();
        let rb = draw_rebalanced_sample(&data, &spec, &mut Stream::new(2).rng()).unwrap();
        let mut xs: Vec<u64> = rb.features().iter().map(|v| v.to_bits()).collect();
        xs.sort_unstable();
        xs.dedup();
        assert_eq!(xs.len(), 500);
    }

    #[test]
    fn debias_endpoints_and_identity() {
        let at = |u| is_debias(DebiasInputs { mu_rb: u, n0: 90, n1: 10, p_prime: 0.5 }).unwrap();
        assert_eq!(at(0.0), 0.0);
        assert_eq!(at(1.0), 1.0);
        for u in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let id = is_debias(DebiasInputs { mu_rb: u, n0: 90, n1: 10, p_prime: 0.1 }).unwrap();
            assert!((id - u).abs() < 1e-12);
        }
    }

    #[test]
    fn debias_recovers_the_source_probability() {
        // mu' = 0.5*0.9*0.17 / (0.1*0.5*0.83 + 0.9*0.5*0.17)
        let mu_prime = 0.0765 / (0.0415 + 0.0765);
        let mu = is_debias(DebiasInputs { mu_rb: mu_prime, n0: 90, n1: 10, p_prime: 0.5 }).unwrap();
        assert!((mu - 0.17).abs() < 1e-12, "{mu}");
    }

    #[test]
    fn debias_rejects_degenerate_inputs() {
        assert!(is_debias(DebiasInputs { mu_rb: 0.5, n0: 0, n1: 0, p_prime: 0.5 }).is_err());
        assert!(is_debias(DebiasInputs { mu_rb: 1.5, n0: 1, n1: 1, p_prime: 0.5 }).is_err());
    }

    #[test]
    fn stratified_counts_follow_the_fraction_recipe() {
        // s = 63, n = 100, n1 = 10, p' = 0.5 -> m1 = round(6.3) = 6, m0 = 6
        assert_eq!(stratified_counts(63, 90, 10, 0.5).unwrap(), (6, 6));
        // p' = 0.25 takes three majority rows per minority row
        assert_eq!(stratified_counts(100, 900, 100, 0.25).unwrap(), (30, 10));
        assert!(stratified_counts(10, 10, 0, 0.5).is_err());
        assert!(matches!(stratified_counts(100, 2, 98, 0.5), Err(Error::SamplingInfeasible { class: 0 })));
    }

    #[test]
    fn fraction_mode_runs_and_is_deterministic() {
        let s = LogisticScenario::new(-4.0, vec![3.0, 2.0]).unwrap();
        let data = generate_logistic_dataset(&s, 2000, Stream::new(5)).unwrap();
        let spec = RebalanceSpec::new(0.5, 100).unwrap();
        let cfg = ForestConfig::new(100, 500, 4);
        let run = |mode| {
            rb_forest_predict(&cfg, &data, &spec, mode, &[0.7, 0.7], Stream::new(6), PredictOptions::default())
                .unwrap()
                .value
        };
        let a = run(RebalanceMode::PerSubsampleFraction);
        assert_eq!(a, run(RebalanceMode::PerSubsampleFraction));
        assert!((0.0..=1.0).contains(&a));
        // dataset mode needs s <= n'
        let err = rb_forest_predict(&cfg, &data, &spec, RebalanceMode::Dataset, &[0.7, 0.7], Stream::new(6), PredictOptions::default());
        assert!(err.is_err());
    }
}
