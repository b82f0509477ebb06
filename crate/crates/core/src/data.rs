//! Synthetic imbalanced data: the logistic scenario, intercept calibration and
//! dataset bookkeeping.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::fmt::sig17;
use crate::rng::Stream;

/// Feature matrix on the unit cube plus binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Build a dataset from a row-major `n x d` feature buffer.
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if d == 0 {
            return Err(invalid_input("dataset dimension must be at least 1"));
        }
        if labels.is_empty() {
            return Err(invalid_input("dataset must contain at least one observation"));
        }
        if features.len() != labels.len() * d {
            return Err(invalid_input(format!(
                "feature buffer has {} values, expected {} x {}",
                features.len(),
                labels.len(),
                d
            )));
        }
        if let Some(v) = features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid_input(format!("feature value {v} outside [0,1]")));
        }
        if let Some(y) = labels.iter().find(|&&y| y > 1) {
            return Err(invalid_input(format!("label {y} is not 0 or 1")));
        }
        Ok(Self { d, features, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid_input("ragged feature rows"));
        }
        Self::new(d, rows.concat(), labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// `(n0, n1)`: the number of label-0 and label-1 observations.
    pub fn class_counts(&self) -> (usize, usize) {
        class_counts(self)
    }

    /// Majority over minority count, `n0 / n1`.
    pub fn imbalance_ratio(&self) -> f64 {
        let (n0, n1) = self.class_counts();
        n0 as f64 / n1 as f64
    }

    /// Indices of the observations carrying `label`, in ascending order.
    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &y)| (y == label).then_some(i))
            .collect()
    }

    /// A new dataset made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset { d: self.d, features, labels }
    }

    /// Write as CSV with header `x1..xd,y`, floats at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for m in 1..=self.d {
            let _ = write!(line, "x{m},");
        }
        line.push('y');
        writeln!(out, "{line}")?;
        for i in 0..self.n() {
            line.clear();
            for v in self.row(i) {
                line.push_str(&sig17(*v));
                line.push(',');
            }
            let _ = write!(line, "{}", self.labels[i]);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| invalid_input("empty CSV"))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let d = cols.len().saturating_sub(1);
        let expected: Vec<String> = (1..=d).map(|m| format!("x{m}")).chain(["y".into()]).collect();
        if d == 0 || cols != expected {
            return Err(invalid_input(format!("unexpected CSV header `{}`", header.trim())));
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != d + 1 {
                return Err(invalid_input(format!("line {}: expected {} fields", lineno + 2, d + 1)));
            }
            for f in &fields[..d] {
                features.push(
                    f.parse::<f64>()
                        .map_err(|e| invalid_input(format!("line {}: {e}", lineno + 2)))?,
                );
            }
            labels.push(
                fields[d]
                    .parse::<u8>()
                    .map_err(|e| invalid_input(format!("line {}: {e}", lineno + 2)))?,
            );
        }
        Dataset::new(d, features, labels)
    }
}

/// `(n0, n1)` label counts.
pub fn class_counts(data: &Dataset) -> (usize, usize) {
    let n1 = data.labels.iter().filter(|&&y| y == 1).count();
    (data.n() - n1, n1)
}

/// Logistic regression function `mu(x) = 1 / (1 + exp(-(beta0 + beta . x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticScenario {
    pub beta0: f64,
    pub beta: Vec<f64>,
}

impl LogisticScenario {
    pub fn new(beta0: f64, beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(invalid_input("scenario needs at least one coefficient"));
        }
        if !beta0.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(invalid_input("scenario coefficients must be finite"));
        }
        Ok(Self { beta0, beta })
    }

    /// The imbalanced scenario used throughout the experiments: `d = 2`,
    /// coefficients `(3, 2)` and the intercept calibrated so that `P(Y=1) = target_p`.
    pub fn imbalanced(target_p: f64) -> Result<Self> {
        let beta = vec![3.0, 2.0];
        let beta0 = calibrate_intercept(target_p, &beta, CALIBRATION_TOL)?;
        Self::new(beta0, beta)
    }

    pub fn d(&self) -> usize {
        self.beta.len()
    }

    pub fn linear(&self, x: &[f64]) -> f64 {
        self.beta0 + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn mu(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear(x))
    }

    /// `P(Y = 1)` under uniform covariates, by quadrature.
    pub fn class_probability(&self) -> f64 {
        let grid = QuadratureGrid::new(&self.beta);
        grid.mean_sigmoid(self.beta0)
    }
}

/// Default tolerance on `|P(Y=1) - target|` used by [`LogisticScenario::imbalanced`].
pub const CALIBRATION_TOL: f64 = 1e-10;

const BISECTION_LO: f64 = -30.0;
const BISECTION_HI: f64 = 30.0;
const BISECTION_MAX_ITER: usize = 200;
const MIDPOINT_PER_AXIS: usize = 256;
const QUASI_POINTS: usize = 1_000_000;

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Linear-predictor values `beta . x` on a fixed node set of the unit cube:
/// a 256-per-axis midpoint grid for `d <= 3`, a Kronecker low-discrepancy
/// point set of 10^6 points otherwise.
struct QuadratureGrid {
    z: Vec<f64>,
}

impl QuadratureGrid {
    fn new(beta: &[f64]) -> Self {
        let d = beta.len();
        let z = if d <= 3 {
            let h = 1.0 / MIDPOINT_PER_AXIS as f64;
            let axis: Vec<f64> = (0..MIDPOINT_PER_AXIS).map(|i| (i as f64 + 0.5) * h).collect();
            let mut z = vec![0.0];
            for b in beta {
                z = z
                    .iter()
                    .flat_map(|&acc| axis.iter().map(move |&t| acc + b * t))
                    .collect();
            }
            z
        } else {
            // generalized golden-ratio (R_d) sequence
            let mut phi = 2.0_f64;
            for _ in 0..64 {
                phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
            }
            let alpha: Vec<f64> = (1..=d).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
            (0..QUASI_POINTS)
                .map(|i| {
                    alpha
                        .iter()
                        .zip(beta)
                        .map(|(a, b)| b * (0.5 + a * (i as f64 + 1.0)).fract())
                        .sum()
                })
                .collect()
        };
        Self { z }
    }

    fn mean_sigmoid(&self, beta0: f64) -> f64 {
        self.z.iter().map(|z| sigmoid(beta0 + z)).sum::<f64>() / self.z.len() as f64
    }
}

/// Find the intercept `beta0` for which the class probability `P(Y=1)` under
/// uniform covariates equals `target_p` within `tol`.
///
/// The integral is strictly increasing in `beta0`, so bisection over
/// `[-30, 30]` has a unique root.
pub fn calibrate_intercept(target_p: f64, beta: &[f64], tol: f64) -> Result<f64> {
    if !(target_p > 0.0 && target_p < 1.0) {
        return Err(invalid_input(format!("target probability {target_p} not in (0,1)")));
    }
    if !(tol > 0.0) {
        return Err(invalid_input("tolerance must be positive"));
    }
    if beta.is_empty() {
        return Err(invalid_input("need at least one coefficient"));
    }
    let grid = QuadratureGrid::new(beta);
    let (mut lo, mut hi) = (BISECTION_LO, BISECTION_HI);
    if grid.mean_sigmoid(lo) > target_p || grid.mean_sigmoid(hi) < target_p {
        return Err(Error::NonConvergence { what: "intercept bisection (target outside bracket)", iterations: 0 });
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let gap = grid.mean_sigmoid(mid) - target_p;
        if gap.abs() <= tol {
            return Ok(mid);
        }
        if gap < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Err(Error::NonConvergence { what: "intercept bisection", iterations: BISECTION_MAX_ITER })
}

/// Draw `n` i.i.d. pairs: `X ~ U([0,1]^d)`, `Y | X ~ Bernoulli(mu(X))`.
pub fn generate_logistic_dataset(scenario: &LogisticScenario, n: usize, stream: Stream) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid_input("n must be at least 1"));
    }
    let d = scenario.d();
    let mut rng = stream.rng();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for _ in 0..d {
            features.push(rng.random::<f64>());
        }
        let p = scenario.mu(&features[start..]);
        labels.push(u8::from(rng.random::<f64>() < p));
    }
    Ok(Dataset { d, features, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_examples() {
        let zeros = Dataset::new(1, vec![0.5; 5], vec![0; 5]).unwrap();
        assert_eq!(class_counts(&zeros), (5, 0));
        let mixed = Dataset::new(1, vec![0.1, 0.2, 0.3, 0.4], vec![0, 1, 1, 0]).unwrap();
        assert_eq!(class_counts(&mixed), (2, 2));
    }

    #[test]
    fn dataset_rejects_out_of_cube_and_bad_labels() {
        assert!(Dataset::new(1, vec![1.5], vec![0]).is_err());
        assert!(Dataset::new(1, vec![0.5], vec![2]).is_err());
        assert!(Dataset::new(2, vec![0.5], vec![0]).is_err());
        assert!(Dataset::new(1, vec![], vec![]).is_err());
        assert!(Dataset::new(0, vec![], vec![0]).is_err());
    }

    #[test]
    fn symmetric_scenario_calibrates_to_zero() {
        let b0 = calibrate_intercept(0.5, &[0.0, 0.0], 1e-12).unwrap();
        assert!(b0.abs() < 1e-9, "{b0}");
    }

    #[test]
    fn calibration_rejects_bad_arguments() {
        assert!(calibrate_intercept(0.0, &[1.0], 1e-6).is_err());
        assert!(calibrate_intercept(1.0, &[1.0], 1e-6).is_err());
        assert!(calibrate_intercept(0.3, &[1.0], 0.0).is_err());
        // P(Y=1) cannot reach 1e-20 with beta0 >= -30
        assert!(matches!(
            calibrate_intercept(1e-20, &[1.0], 1e-30),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn calibration_is_monotone_in_target() {
        let beta = [3.0, 2.0];
        let mut prev = f64::NEG_INFINITY;
        for p in [0.05, 0.1, 0.2, 0.5, 0.8] {
            let b0 = calibrate_intercept(p, &beta, 1e-10).unwrap();
            assert!(b0 > prev);
            prev = b0;
        }
    }

    #[test]
    fn high_dimensional_quadrature_uses_quasi_points() {
        // symmetric coefficients around zero mean: P(Y=1) = 1/2 at beta0 = -sum(beta)/2
        let beta = vec![1.0; 4];
        let s = LogisticScenario::new(-2.0, beta).unwrap();
        assert!((s.class_probability() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = generate_logistic_dataset(
            &LogisticScenario::new(-1.0, vec![3.0, 2.0]).unwrap(),
            50,
            Stream::new(3),
        )
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        let back = Dataset::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let bad = "a,b,y\n0.1,0.2,1\n";
        assert!(Dataset::read_csv(std::io::Cursor::new(bad)).is_err());
    }
}
