use rand::Rng;

use crf::data::CALIBRATION_TOL;
use crf::rebalance::stratified_counts;
use crf::{calibrate_intercept, draw_rebalanced_sample, generate_logistic_dataset, Dataset, LogisticScenario, RebalanceSpec, Stream};

fn imbalanced() -> LogisticScenario {
    LogisticScenario::imbalanced(0.1).unwrap()
}

#[test]
fn calibrated_intercept_is_frozen() {
    let beta0 = calibrate_intercept(0.1, &[3.0, 2.0], CALIBRATION_TOL).unwrap();
    assert!((beta0 - -5.096_429_4).abs() < 1e-6, "{beta0}");
    assert_eq!(imbalanced().beta0, beta0);
}

#[test]
fn calibrated_class_probability_by_simulation() {
    let s = imbalanced();
    let mut rng = Stream::new(10).rng();
    let draws = 1_000_000;
    let mean = (0..draws).map(|_| s.mu(&[rng.random::<f64>(), rng.random::<f64>()])).sum::<f64>() / draws as f64;
    assert!((mean - 0.1).abs() < 5e-4, "{mean}");
}

#[test]
fn regression_function_at_query_point() {
    let mu = imbalanced().mu(&[0.7, 0.7]);
    assert!((mu - 0.17).abs() < 0.005, "{mu}");
}

fn class_column(data: &Dataset, label: u8, col: usize) -> Vec<f64> {
    (0..data.n()).filter(|&i| data.label(i) == label).map(|i| data.row(i)[col]).collect()
}

/// Two-sample Kolmogorov-Smirnov distance.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn ks_critical(n: usize, m: usize) -> f64 {
    // alpha = 0.001
    1.95 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[test]
fn rebalancing_keeps_class_conditional_laws() {
    let s = imbalanced();
    let source = generate_logistic_dataset(&s, 40_000, Stream::new(11)).unwrap();
    let fresh = generate_logistic_dataset(&s, 40_000, Stream::new(12)).unwrap();
    let (_, n1) = source.class_counts();
    let spec = RebalanceSpec::new(0.5, n1).unwrap();
    let rb = draw_rebalanced_sample(&source, &spec, &mut Stream::new(13).rng()).unwrap();
    for label in [0u8, 1] {
        for col in 0..2 {
            let a = class_column(&rb, label, col);
            let b = class_column(&fresh, label, col);
            let dist = ks(a.clone(), b.clone());
            assert!(dist < ks_critical(a.len(), b.len()), "class {label} x{col}: {dist}");
        }
    }
    // and the marginal law did change: rebalanced x1 is shifted toward the minority
    let all_rb: Vec<f64> = (0..rb.n()).map(|i| rb.row(i)[0]).collect();
    let all_fresh: Vec<f64> = (0..fresh.n()).map(|i| fresh.row(i)[0]).collect();
    assert!(ks(all_rb.clone(), all_fresh.clone()) > ks_critical(all_rb.len(), all_fresh.len()));
}

#[test]
fn rebalanced_label_mean_matches_target() {
    let source = generate_logistic_dataset(&imbalanced(), 20_000, Stream::new(14)).unwrap();
    let (_, n1) = source.class_counts();
    for p_prime in [0.3, 0.5] {
        let spec = RebalanceSpec::new(p_prime, n1).unwrap();
        let rb = draw_rebalanced_sample(&source, &spec, &mut Stream::new(15).rng()).unwrap();
        let mean = rb.labels().iter().map(|&y| f64::from(y)).sum::<f64>() / rb.n() as f64;
        let se = (p_prime * (1.0 - p_prime) / rb.n() as f64).sqrt();
        assert!((mean - p_prime).abs() < 4.0 * se, "{mean} vs {p_prime}");
    }
}

#[test]
fn stratified_counts_hit_target_proportion() {
    for (s, n0, n1) in [(63usize, 90usize, 10usize), (1000, 9000, 1000), (400, 3600, 400)] {
        let (m0, m1) = stratified_counts(s, n0, n1, 0.5).unwrap();
        assert_eq!(m0, m1);
        assert!(m1 <= n1 && m0 <= n0);
    }
    let (m0, m1) = stratified_counts(500, 4500, 500, 0.2).unwrap();
    assert_eq!((m0, m1), (200, 50));
}

#[test]
fn csv_round_trip_through_a_file() {
    let data = generate_logistic_dataset(&imbalanced(), 500, Stream::new(16)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    data.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = Dataset::read_csv(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back, data);
}
