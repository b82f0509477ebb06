//! Small-sample statistics used by the reports.

/// Arithmetic mean; NaN for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `R - 1`); 0 for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Jackknife standard error of `log(variance)` over leave-one-out samples.
/// Infinite when some leave-one-out variance vanishes, NaN below three values.
pub fn jackknife_se_log_variance(xs: &[f64]) -> f64 {
    let r = xs.len();
    if r < 3 {
        return f64::NAN;
    }
    let rf = r as f64;
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let loo: Vec<f64> = xs
        .iter()
        .map(|x| {
            let dev = x - m;
            let ss_i = (ss - dev * dev * rf / (rf - 1.0)).max(0.0);
            (ss_i / (rf - 2.0)).ln()
        })
        .collect();
    if loo.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let loo_mean = mean(&loo);
    ((rf - 1.0) / rf * loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)).sum::<f64>()).sqrt()
}

/// Sample skewness and excess kurtosis from population central moments.
pub fn skewness_kurtosis(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let n = xs.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let c = x - m;
        let c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return (0.0, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Ordinary least squares `y = intercept + slope x`, returning
/// `(slope, intercept, residual_rms, weights)` where `weights[i]` is the
/// coefficient of `y[i]` in the slope estimate.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64, Vec<f64>) {
    let xm = mean(x);
    let ym = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let weights: Vec<f64> = x.iter().map(|v| (v - xm) / sxx).collect();
    let slope: f64 = weights.iter().zip(y).map(|(w, v)| w * v).sum();
    let intercept = ym - slope * xm;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    (slope, intercept, (rss / x.len() as f64).sqrt(), weights)
}
