//! Named analytic cross-checks, each comparing a closed form against an
//! independent evaluation.

use crate::error::{invalid_input, Result};
use crate::oracles::{
    cd_bounds, constant_cd, inverse_binomial_moment, kernel_second_moment, mu_of_mu_prime, mu_prime_of_mu,
    InverseMomentOrder, KernelMode,
};
use crate::rebalance::{is_debias, DebiasInputs};
use crate::rng::Stream;

pub const CHECK_NAMES: [&str; 5] = ["inverse-moments", "odds-round-trip", "kernel-exactness", "cd-bounds", "debias-identity"];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst deviation observed, in the check's own units.
    pub worst: f64,
    pub detail: String,
}

pub fn run_check(name: &str) -> Result<CheckOutcome> {
    match name {
        "inverse-moments" => inverse_moments(),
        "odds-round-trip" => Ok(odds_round_trip()),
        "kernel-exactness" => kernel_exactness(),
        "cd-bounds" => cd_within_bounds(),
        "debias-identity" => debias_identity(),
        _ => Err(invalid_input(format!("unknown check `{name}`; known: {}", CHECK_NAMES.join(", ")))),
    }
}

/// Direct pmf sum of `E[1/(1+Z)]`, `Z ~ Binomial(n, p)`.
fn inverse_moment_by_pmf(n: u64, p: f64) -> f64 {
    let mut total = 0.0;
    let mut pmf = (1.0 - p).powi(n as i32);
    for z in 0..=n {
        total += pmf / (z + 1) as f64;
        pmf *= (n - z) as f64 / (z + 1) as f64 * p / (1.0 - p);
    }
    total
}

fn inverse_moments() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for n in 1..=200u64 {
        for i in 1..=9 {
            let p = f64::from(i) / 10.0;
            let closed = inverse_binomial_moment(n, p, InverseMomentOrder::FirstExact)?.value;
            worst = worst.max((closed - inverse_moment_by_pmf(n, p)).abs());
        }
    }
    let seven_twelfths = inverse_binomial_moment(2, 0.5, InverseMomentOrder::FirstExact)?.value;
    Ok(CheckOutcome {
        name: "inverse-moments",
        passed: worst <= 1e-12 && seven_twelfths == 7.0 / 12.0,
        worst,
        detail: format!("max |closed - pmf sum| = {worst:e}; n=2, p=1/2 gives {seven_twelfths}"),
    })
}

/// Largest round-trip error of the odds maps over a 99-point grid.
pub fn odds_round_trip_error(p: f64, p_prime: f64) -> f64 {
    (1..=99)
        .map(|i| {
            let mu = f64::from(i) / 100.0;
            let there = (mu_of_mu_prime(mu_prime_of_mu(mu, p, p_prime), p, p_prime) - mu).abs();
            let back = (mu_prime_of_mu(mu_of_mu_prime(mu, p, p_prime), p, p_prime) - mu).abs();
            there.max(back)
        })
        .fold(0.0, f64::max)
}

fn odds_round_trip() -> CheckOutcome {
    let pairs = [(0.1, 0.5), (0.05, 0.5), (0.3, 0.6)];
    let worst = pairs.iter().map(|&(p, q)| odds_round_trip_error(p, q)).fold(0.0, f64::max);
    let identity = (1..=99)
        .map(|i| {
            let mu = f64::from(i) / 100.0;
            (mu_prime_of_mu(mu, 0.2, 0.2) - mu).abs()
        })
        .fold(0.0, f64::max);
    CheckOutcome {
        name: "odds-round-trip",
        passed: worst < 1e-12 && identity < 1e-15,
        worst: worst.max(identity),
        detail: format!("round trip {worst:e}, p = p' identity {identity:e}"),
    }
}

fn kernel_exactness() -> Result<CheckOutcome> {
    let stream = Stream::new(0x6b65726e656c);
    let exact = kernel_second_moment(2, 2, KernelMode::ExactD2, 0, stream)?.value;
    let mut worst = (exact - 0.1640625).abs();
    let mut lines = vec![format!("d=2 k=2 exact {exact}")];
    for k in 1..=10 {
        let a = kernel_second_moment(2, k, KernelMode::ExactD2, 0, stream)?.value;
        let b = kernel_second_moment(2, k, KernelMode::Enumeration, u64::MAX, stream)?.value;
        worst = worst.max((a - b).abs() / a);
    }
    lines.push(format!("exact vs enumeration rel {worst:e}"));
    Ok(CheckOutcome { name: "kernel-exactness", passed: worst < 1e-12, worst, detail: lines.join("; ") })
}

fn cd_within_bounds() -> Result<CheckOutcome> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for d in 2..=8 {
        let r = constant_cd(d, 200_000, Stream::new(0xcd).child(d as u64))?;
        let (lo, hi) = cd_bounds(d)?;
        let excess = ((lo - r.value).max(r.value - hi)).max(0.0) / r.std_error.max(f64::MIN_POSITIVE);
        worst = worst.max(excess);
        ok &= r.within_bounds(3.0);
        parts.push(format!("d={d}: {:.5} in [{lo:.5}, {hi:.5}]", r.value));
    }
    Ok(CheckOutcome { name: "cd-bounds", passed: ok, worst, detail: parts.join("; ") })
}

fn debias_identity() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (n0, n1) in [(90usize, 10usize), (50, 50), (999, 1), (3, 7)] {
        let p_hat = n1 as f64 / (n0 + n1) as f64;
        for i in 0..=100 {
            let u = f64::from(i) / 100.0;
            let v = is_debias(DebiasInputs { mu_rb: u, n0, n1, p_prime: p_hat })?;
            worst = worst.max((v - u).abs());
        }
    }
    let back = is_debias(DebiasInputs { mu_rb: mu_prime_of_mu(0.17, 0.1, 0.5), n0: 90, n1: 10, p_prime: 0.5 })?;
    Ok(CheckOutcome {
        name: "debias-identity",
        passed: worst <= 1e-12 && (back - 0.17).abs() < 1e-3,
        worst,
        detail: format!("identity error {worst:e}; mu' of 0.17 maps back to {back}"),
    })
}
