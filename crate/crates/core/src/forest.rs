//! Finite-B subsampled centered random forests.
//!
//! Tree `b` of a forest evaluated with stream `S` draws everything (its
//! subsample, then its query path) from `S.child(b)`, and the per-tree values
//! are summed in tree order. The result is therefore identical for any
//! number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid_config, invalid_input, Error, Result};
use crate::rng::{Stream, StreamRng};
use crate::tree::{build_tree, sample_query_path, tree_predict, MAX_PATH_DEPTH, MAX_TREE_DEPTH};

/// Default number of trees.
pub const DEFAULT_TREES: usize = 500;

/// Forest hyperparameters: `trees` (B), `subsample` size (s) and tree `depth` (k).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    pub subsample: usize,
    pub depth: u32,
}

impl ForestConfig {
    pub fn new(trees: usize, subsample: usize, depth: u32) -> Self {
        Self { trees, subsample, depth }
    }

    /// Check the configuration against a dataset of `n` observations.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.trees == 0 {
            return Err(invalid_config("forest needs at least one tree"));
        }
        if self.subsample == 0 || self.subsample > n {
            return Err(invalid_config(format!(
                "subsample size {} must lie in [1, {n}]",
                self.subsample
            )));
        }
        if self.depth > MAX_PATH_DEPTH {
            return Err(Error::DepthOverflow { depth: self.depth, max: MAX_PATH_DEPTH });
        }
        Ok(())
    }
}

/// How each tree's leaf at the query point is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathSampler {
    /// Draw only the `k` split coordinates along the query path.
    #[default]
    QueryPath,
    /// Build the complete tree and descend it (`k <= 30`).
    FullTree,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PredictOptions {
    pub keep_per_tree: bool,
    pub sampler: PathSampler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestPrediction {
    pub value: f64,
    pub per_tree: Option<Vec<f64>>,
}

/// `(s, k)` from growth exponents: `s = round(n^alpha)` clamped to `[1, n]`,
/// `k = round(beta * log2 n)`.
pub fn hyperparams_from_exponents(n: usize, alpha: f64, beta: f64) -> Result<(usize, u32)> {
    if n == 0 {
        return Err(invalid_config("n must be positive"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid_config(format!("exponents ({alpha}, {beta}) must lie in (0, 1]")));
    }
    let nf = n as f64;
    let s = (nf.powf(alpha).round() as usize).clamp(1, n);
    let k = (beta * nf.log2()).round() as u32;
    Ok((s, k))
}

/// A uniformly random `s`-subset of `0..n`.
pub fn subsample_without_replacement<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Vec<usize>> {
    if s == 0 || s > n {
        return Err(invalid_config(format!("cannot draw {s} of {n} without replacement")));
    }
    Ok(rand::seq::index::sample(rng, n, s).into_vec())
}

/// Forest prediction at `x`: the mean over `B` trees, each fit on its own
/// uniform subsample with its own random partition.
pub fn forest_predict(config: &ForestConfig, data: &Dataset, x: &[f64], stream: Stream) -> Result<ForestPrediction> {
    forest_predict_with(config, data, x, stream, PredictOptions::default())
}

pub fn forest_predict_with(
    config: &ForestConfig,
    data: &Dataset,
    x: &[f64],
    stream: Stream,
    options: PredictOptions,
) -> Result<ForestPrediction> {
    config.validate(data.n())?;
    let (n, s) = (data.n(), config.subsample);
    predict_trees(config, data, x, stream, options, |rng| {
        // validated above, cannot fail
        rand::seq::index::sample(rng, n, s).into_vec()
    })
}

/// Shared tree loop: `draw` picks the training rows of one tree.
pub(crate) fn predict_trees<F>(
    config: &ForestConfig,
    data: &Dataset,
    x: &[f64],
    stream: Stream,
    options: PredictOptions,
    draw: F,
) -> Result<ForestPrediction>
where
    F: Fn(&mut StreamRng) -> Vec<usize> + Sync,
{
    if x.len() != data.d() {
        return Err(invalid_input(format!("query point has dimension {}, data has {}", x.len(), data.d())));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid_input("query point outside [0,1]^d"));
    }
    if config.trees == 0 {
        return Err(invalid_config("forest needs at least one tree"));
    }
    if options.sampler == PathSampler::FullTree && config.depth > MAX_TREE_DEPTH {
        return Err(Error::DepthOverflow { depth: config.depth, max: MAX_TREE_DEPTH });
    }
    let d = data.d();
    let k = config.depth;
    let one_tree = |b: usize| -> f64 {
        let mut rng = stream.child(b as u64).rng();
        let rows = draw(&mut rng);
        let cell = match options.sampler {
            PathSampler::QueryPath => sample_query_path(d, k, x, &mut rng),
            PathSampler::FullTree => build_tree(d, k, &mut rng)
                .expect("depth checked above")
                .leaf_of(x),
        };
        tree_predict(&cell, &rows, data)
    };
    let values: Vec<f64> = (0..config.trees).into_par_iter().with_min_len(16).map(one_tree).collect();
    let value = values.iter().sum::<f64>() / values.len() as f64;
    Ok(ForestPrediction {
        value,
        per_tree: options.keep_per_tree.then_some(values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_logistic_dataset, LogisticScenario};

    fn small_data() -> Dataset {
        let s = LogisticScenario::new(-1.0, vec![3.0, 2.0]).unwrap();
        generate_logistic_dataset(&s, 200, Stream::new(11)).unwrap()
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(hyperparams_from_exponents(1024, 0.5, 0.5).unwrap(), (32, 5));
        assert_eq!(hyperparams_from_exponents(1000, 0.9, 0.5).unwrap().0, 501);
        assert_eq!(hyperparams_from_exponents(7, 1.0, 1.0).unwrap().0, 7);
        assert!(hyperparams_from_exponents(10, 0.0, 0.5).is_err());
        assert!(hyperparams_from_exponents(10, 0.5, 1.5).is_err());
    }

    #[test]
    fn full_subsample_is_everything() {
        let mut rng = Stream::new(1).rng();
        let mut s = subsample_without_replacement(5, 5, &mut rng).unwrap();
        s.sort_unstable();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
        let t = subsample_without_replacement(10, 3, &mut rng).unwrap();
        let mut u = t.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 3);
        assert!(subsample_without_replacement(3, 4, &mut rng).is_err());
        assert!(subsample_without_replacement(3, 0, &mut rng).is_err());
    }

    #[test]
    fn all_zero_labels_predict_zero() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0, 0.5]).collect();
        let data = Dataset::from_rows(&rows, vec![0; 20]).unwrap();
        for (s, k) in [(1, 0), (5, 3), (20, 8)] {
            let p = forest_predict(&ForestConfig::new(50, s, k), &data, &[0.3, 0.3], Stream::new(2)).unwrap();
            assert_eq!(p.value, 0.0);
        }
    }

    #[test]
    fn single_root_tree_is_the_label_mean() {
        let data = small_data();
        let (_, n1) = data.class_counts();
        let p = forest_predict(&ForestConfig::new(1, data.n(), 0), &data, &[0.7, 0.7], Stream::new(3)).unwrap();
        assert_eq!(p.value, n1 as f64 / data.n() as f64);
    }

    #[test]
    fn per_tree_values_are_retained_on_request() {
        let data = small_data();
        let cfg = ForestConfig::new(40, 50, 3);
        let opts = PredictOptions { keep_per_tree: true, ..Default::default() };
        let p = forest_predict_with(&cfg, &data, &[0.7, 0.7], Stream::new(4), opts).unwrap();
        let trees = p.per_tree.as_ref().unwrap();
        assert_eq!(trees.len(), 40);
        assert_eq!(p.value, trees.iter().sum::<f64>() / 40.0);
        assert!(trees.iter().all(|v| (0.0..=1.0).contains(v)));
        let plain = forest_predict(&cfg, &data, &[0.7, 0.7], Stream::new(4)).unwrap();
        assert_eq!(plain.value, p.value);
        assert!(plain.per_tree.is_none());
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let data = small_data();
        let x = [0.5, 0.5];
        assert!(forest_predict(&ForestConfig::new(0, 10, 2), &data, &x, Stream::new(0)).is_err());
        assert!(forest_predict(&ForestConfig::new(5, 201, 2), &data, &x, Stream::new(0)).is_err());
        assert!(forest_predict(&ForestConfig::new(5, 10, 64), &data, &x, Stream::new(0)).is_err());
        assert!(forest_predict(&ForestConfig::new(5, 10, 2), &data, &[0.5], Stream::new(0)).is_err());
        assert!(forest_predict(&ForestConfig::new(5, 10, 2), &data, &[0.5, 1.5], Stream::new(0)).is_err());
    }
}
