//! Analytic and simulation oracles for the theory of centered forests.
//!
//! Closed forms are evaluated directly (Gamma functions through `ln_gamma`),
//! simulation oracles report a standard error, and each result carries the
//! analytic bounds that apply to it.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_input, Error, Result};
use crate::rng::Stream;

/// Hard cap on the number of multinomial composition pairs visited by
/// [`KernelMode::Enumeration`].
pub const ENUMERATION_CAP: u128 = 100_000_000;

/// Largest depth accepted by [`KernelMode::ExactD2`].
pub const EXACT_D2_MAX_DEPTH: u32 = 1000;

const MC_CHUNK: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Exact,
    MonteCarlo,
    Enumeration,
}

impl OracleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMethod::Exact => "exact",
            OracleMethod::MonteCarlo => "monte_carlo",
            OracleMethod::Enumeration => "enumeration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    /// Zero for exact computations.
    pub std_error: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub method: OracleMethod,
}

impl OracleResult {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, lower_bound: None, upper_bound: None, method: OracleMethod::Exact }
    }

    /// Whether `value` lies within the bounds, allowing `slack` standard errors
    /// plus rounding.
    pub fn within_bounds(&self, slack: f64) -> bool {
        let tol = slack * self.std_error + 1e-12 * self.value.abs();
        self.lower_bound.is_none_or(|lo| self.value + tol >= lo)
            && self.upper_bound.is_none_or(|hi| self.value - tol <= hi)
    }
}

/// `2 Gamma(d-1) / ((log 2)^{d-1} Gamma((d-1)/2))`, the factor shared by
/// `C(d)` and its bounds.
pub fn cd_prefactor(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(invalid_input(format!("C(d) is defined for d >= 2, got {d}")));
    }
    let m = (d - 1) as f64;
    Ok((2f64.ln() + ln_gamma(m) - m * 2f64.ln().ln() - ln_gamma(m / 2.0)).exp())
}

/// Closed-form bounds on `C(d)`: the prefactor times `d^{-(d-1)/2}` and
/// `2^{-(d-1)/2}`.
pub fn cd_bounds(d: usize) -> Result<(f64, f64)> {
    let pre = cd_prefactor(d)?;
    let m = (d - 1) as f64;
    let lower = pre * (-(m / 2.0) * (d as f64).ln()).exp();
    let upper = pre * (-(m / 2.0) * 2f64.ln()).exp();
    Ok((lower, upper.max(lower)))
}

/// Monte Carlo estimate of the limiting variance constant
/// `C(d) = prefactor * E[(|N - mean(N)|_2 / |N - mean(N)|_1)^{d-1}]`
/// with `N` a standard Gaussian vector.
pub fn constant_cd(d: usize, samples: usize, stream: Stream) -> Result<OracleResult> {
    constant_cd_with_scale(d, samples, 1.0, stream)
}

/// As [`constant_cd`], with Gaussian coordinates of standard deviation
/// `sigma`. The norm ratio is scale-free, so the estimate does not depend on
/// `sigma` beyond rounding.
pub fn constant_cd_with_scale(d: usize, samples: usize, sigma: f64, stream: Stream) -> Result<OracleResult> {
    let pre = cd_prefactor(d)?;
    if samples < MC_CHUNK {
        return Err(invalid_input(format!("C(d) needs at least {MC_CHUNK} samples")));
    }
    if !(sigma > 0.0) {
        return Err(invalid_input("sigma must be positive"));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let power = (d - 1) as i32;
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.child(c as u64).rng();
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut v = vec![0.0; d];
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..len {
                for slot in v.iter_mut() {
                    *slot = sigma * rng.sample::<f64, _>(StandardNormal);
                }
                let mean = v.iter().sum::<f64>() / d as f64;
                let (l1, l2sq) = v.iter().fold((0.0, 0.0), |(a, b), &t| {
                    let c = t - mean;
                    (a + c.abs(), b + c * c)
                });
                let r = (l2sq.sqrt() / l1).powi(power);
                sum += r;
                sum_sq += r * r;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    let (lo, hi) = cd_bounds(d)?;
    Ok(OracleResult {
        value: pre * mean,
        std_error: pre * (var / n).sqrt(),
        lower_bound: Some(lo),
        upper_bound: Some(hi),
        method: OracleMethod::MonteCarlo,
    })
}

/// How [`kernel_second_moment`] evaluates `E[P(X in L(x) | X)^2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// Convolution of two `Binomial(k, 1/2)` laws; `d = 2` only.
    ExactD2,
    /// Sum over all pairs of multinomial compositions.
    Enumeration,
    /// Sampled multinomial pairs.
    MonteCarlo,
}

/// `E[P(X_1 in L_U(x) | X_1)^2] = 2^{-k} E[2^{-sum_j |K_j - L_j| / 2}]` for two
/// independent `Multinomial(k, 1/d)` vectors `K`, `L`.
///
/// `budget` caps the number of composition pairs for enumeration (never above
/// [`ENUMERATION_CAP`]) and is the number of sampled pairs for Monte Carlo.
pub fn kernel_second_moment(d: usize, k: u32, mode: KernelMode, budget: u64, stream: Stream) -> Result<OracleResult> {
    if d == 0 {
        return Err(invalid_input("dimension must be positive"));
    }
    let method = match mode {
        KernelMode::ExactD2 => OracleMethod::Exact,
        KernelMode::Enumeration => OracleMethod::Enumeration,
        KernelMode::MonteCarlo => OracleMethod::MonteCarlo,
    };
    if k == 0 {
        return Ok(OracleResult { method, ..OracleResult::exact(1.0) });
    }
    let scale = (-f64::from(k)).exp2();
    match mode {
        KernelMode::ExactD2 => {
            if d != 2 {
                return Err(invalid_input("the exact binomial convolution applies to d = 2 only"));
            }
            if k > EXACT_D2_MAX_DEPTH {
                return Err(Error::DepthOverflow { depth: k, max: EXACT_D2_MAX_DEPTH });
            }
            let pmf = binomial_half_pmf(k);
            // E[2^{-|K-L|}] grouped by |K - L| = t
            let mut e = 0.0;
            for t in 0..=k as usize {
                let w = if t == 0 { 1.0 } else { 2.0 };
                let agree: f64 = (0..=k as usize - t).map(|i| pmf[i] * pmf[i + t]).sum();
                e += w * agree * (-(t as f64)).exp2();
            }
            Ok(OracleResult { method, ..OracleResult::exact(scale * e) })
        }
        KernelMode::Enumeration => {
            let comps = composition_count(k, d);
            let pairs = comps.saturating_mul(comps);
            let cap = u128::from(budget).min(ENUMERATION_CAP);
            if pairs > cap {
                return Err(Error::BudgetExceeded { pairs, cap });
            }
            let compositions = compositions(k, d);
            let ln_kfact = ln_gamma(f64::from(k) + 1.0);
            let ln_dk = f64::from(k) * (d as f64).ln();
            let weights: Vec<f64> = compositions
                .iter()
                .map(|c| {
                    let ln_den: f64 = c.iter().map(|&kj| ln_gamma(f64::from(kj) + 1.0)).sum();
                    (ln_kfact - ln_den - ln_dk).exp()
                })
                .collect();
            let e: f64 = compositions
                .par_iter()
                .zip(&weights)
                .map(|(a, wa)| {
                    compositions
                        .iter()
                        .zip(&weights)
                        .map(|(b, wb)| {
                            let gap: u32 = a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum();
                            wb * (-0.5 * f64::from(gap)).exp2()
                        })
                        .sum::<f64>()
                        * wa
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            Ok(OracleResult { method, ..OracleResult::exact(scale * e) })
        }
        KernelMode::MonteCarlo => {
            let samples = usize::try_from(budget).unwrap_or(usize::MAX);
            if samples < 2 {
                return Err(invalid_input("Monte Carlo needs at least two samples"));
            }
            let chunks = samples.div_ceil(MC_CHUNK);
            let partial: Vec<(f64, f64)> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = stream.child(c as u64).rng();
                    let len = MC_CHUNK.min(samples - c * MC_CHUNK);
                    let (mut a, mut b) = (vec![0i64; d], vec![0i64; d]);
                    let (mut sum, mut sum_sq) = (0.0, 0.0);
                    for _ in 0..len {
                        a.iter_mut().for_each(|v| *v = 0);
                        b.iter_mut().for_each(|v| *v = 0);
                        for _ in 0..k {
                            a[rng.random_range(0..d)] += 1;
                            b[rng.random_range(0..d)] += 1;
                        }
                        let gap: i64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
                        let r = (-0.5 * gap as f64).exp2();
                        sum += r;
                        sum_sq += r * r;
                    }
                    (sum, sum_sq)
                })
                .collect();
            let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
            let n = samples as f64;
            let mean = sum / n;
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(OracleResult {
                value: scale * mean,
                std_error: scale * (var / n).sqrt(),
                lower_bound: None,
                upper_bound: None,
                method,
            })
        }
    }
}

/// `2^k sqrt(k)` times the exact `d = 2` kernel second moment: the sequence
/// whose plateau is compared with `C(2)`.
pub fn normalized_kernel_d2(k: u32) -> Result<f64> {
    let v = kernel_second_moment(2, k, KernelMode::ExactD2, 0, Stream::new(0))?.value;
    Ok(f64::from(k).exp2() * f64::from(k).sqrt() * v)
}

/// Large-`k` limit of [`normalized_kernel_d2`] from the local limit theorem
/// for `K - L` (variance `k/2`) on the integer lattice:
/// `sum_t 2^{-|t|} / sqrt(pi) = 3 / sqrt(pi)`.
pub fn kernel_lattice_limit_d2() -> f64 {
    3.0 / std::f64::consts::PI.sqrt()
}

/// `Binomial(k, 1/2)` probabilities; exact in binary for moderate `k`.
fn binomial_half_pmf(k: u32) -> Vec<f64> {
    let k = k as usize;
    let mut c = Vec::with_capacity(k + 1);
    let mut cur = 1.0f64;
    // scale early so large k stays finite
    let half_k = (-(k as f64)).exp2();
    if half_k > 0.0 {
        for i in 0..=k {
            c.push(cur * half_k);
            cur = cur * (k - i) as f64 / (i + 1) as f64;
        }
    } else {
        let ln_k = ln_gamma(k as f64 + 1.0);
        for i in 0..=k {
            let ln = ln_k - ln_gamma(i as f64 + 1.0) - ln_gamma((k - i) as f64 + 1.0) - k as f64 * 2f64.ln();
            c.push(ln.exp());
        }
    }
    c
}

/// Number of compositions of `k` into `d` nonnegative parts, `C(k+d-1, d-1)`.
pub fn composition_count(k: u32, d: usize) -> u128 {
    let (top, r) = (u128::from(k) + d as u128 - 1, d as u128 - 1);
    let r = r.min(top - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(top - i) / (i + 1);
    }
    acc
}

fn compositions(k: u32, d: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Which inverse moment of `Z ~ Binomial(n, p)` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseMomentOrder {
    /// `E[1/(1+Z)] = (1 - (1-p)^{n+1}) / ((n+1) p)`.
    FirstExact,
    /// Leading term `(np)^{-alpha}` of `E[(1+Z)^{-alpha}]`.
    AlphaAsymptotic(f64),
}

pub fn inverse_binomial_moment(n: u64, p: f64, order: InverseMomentOrder) -> Result<OracleResult> {
    if n == 0 {
        return Err(invalid_input("n must be at least 1"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid_input(format!("p = {p} must lie in (0, 1]")));
    }
    let value = match order {
        InverseMomentOrder::FirstExact => {
            let m = (n + 1) as f64;
            let tail = if m * p < 0.5 {
                -(m * (-p).ln_1p()).exp_m1()
            } else {
                1.0 - (1.0 - p).powf(m)
            };
            tail / (m * p)
        }
        InverseMomentOrder::AlphaAsymptotic(alpha) => {
            if !(alpha > 0.0) {
                return Err(invalid_input("alpha must be positive"));
            }
            (n as f64 * p).powf(-alpha)
        }
    };
    Ok(OracleResult::exact(value))
}

/// Upper bound on `E[Diam^order]` of the leaf containing a point:
/// `d (1 - 1/(2d))^k` for order 1, `d (1 - 3/(4d))^k` for order 2.
pub fn diameter_moment_bound(d: usize, k: u32, order: u8) -> Result<f64> {
    if d == 0 {
        return Err(invalid_input("dimension must be positive"));
    }
    let rate = match order {
        1 => diameter_rate(d).0,
        2 => diameter_rate(d).1,
        _ => return Err(invalid_input(format!("diameter moment order {order} not in {{1, 2}}"))),
    };
    Ok(d as f64 * rate.powi(k as i32))
}

/// `(alpha_1, alpha_2) = (1 - 1/(2d), 1 - 3/(4d))`.
pub fn diameter_rate(d: usize) -> (f64, f64) {
    let d = d as f64;
    (1.0 - 1.0 / (2.0 * d), 1.0 - 3.0 / (4.0 * d))
}

/// Regression function of the rebalanced distribution:
/// `p'(1-p) mu / (p(1-p')(1-mu) + (1-p) p' mu)`.
pub fn mu_prime_of_mu(mu: f64, p: f64, p_prime: f64) -> f64 {
    let num = p_prime * (1.0 - p) * mu;
    num / (p * (1.0 - p_prime) * (1.0 - mu) + num)
}

/// Inverse of [`mu_prime_of_mu`]: `p(1-p') mu' / (p'(1-p)(1-mu') + (1-p') p mu')`.
pub fn mu_of_mu_prime(mu_prime: f64, p: f64, p_prime: f64) -> f64 {
    let num = p * (1.0 - p_prime) * mu_prime;
    num / (p_prime * (1.0 - p) * (1.0 - mu_prime) + num)
}

/// Finite-sample ratios behind the growth conditions on `(n, s, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDiagnostics {
    /// `s / (k 2^k)`
    pub g1_ratio: f64,
    /// `n 2^k / (s^2 k^{(d-1)/2})`
    pub cond1_ratio: f64,
    /// `2^k k^{-(d-1)/2} n^{-d log 2 / (1 + d log 2)}`
    pub cond2_ratio: f64,
    /// `d log 2 / (1 + d log 2)`
    pub alpha_limit: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

pub fn check_rate_conditions(n: usize, s: usize, k: u32, d: usize) -> Result<RateDiagnostics> {
    if n == 0 || s == 0 || k == 0 || d == 0 {
        return Err(invalid_input("rate diagnostics need positive n, s, k and d"));
    }
    let (n, s, kf, df) = (n as f64, s as f64, f64::from(k), d as f64);
    let leaves = kf.exp2();
    let k_pow = kf.powf((df - 1.0) / 2.0);
    let alpha_limit = df * 2f64.ln() / (1.0 + df * 2f64.ln());
    let (alpha1, alpha2) = diameter_rate(d);
    Ok(RateDiagnostics {
        g1_ratio: s / (kf * leaves),
        cond1_ratio: n * leaves / (s * s * k_pow),
        cond2_ratio: leaves / k_pow * n.powf(-alpha_limit),
        alpha_limit,
        alpha1,
        alpha2,
    })
}
