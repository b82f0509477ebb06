use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crf::checks::{run_check, CHECK_NAMES};
use crf::fmt::{sig17, sig17_opt};
use crf::harness::{
    self, bias_variance_curve_with_predictions, estimator_center, fit_variance_slope, histogram_report,
    variance_reduction_experiment, ExperimentConfig,
};
use crf::oracles::{
    cd_bounds, check_rate_conditions, constant_cd, diameter_moment_bound, kernel_lattice_limit_d2,
    kernel_second_moment, composition_count, KernelMode, OracleResult, ENUMERATION_CAP,
};
use crf::{hyperparams_from_exponents, Result, Stream};

#[derive(Parser)]
#[command(name = "crf", version, about = "Centered random forests for imbalanced classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate experiment: bias/variance curve, histograms and slope fits.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also run the plain, rebalanced and debiased forests on shared datasets.
        #[arg(long)]
        paired: bool,
    },
    /// Theory constants as CSV.
    Constants {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a named analytic cross-check; exits nonzero on failure.
    Oracle {
        #[arg(long)]
        check: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = harness::workers_from_env();
    let run = || match cli.command {
        Command::Simulate { config, out, paired } => simulate(&config, &out, paired).map(|_| true),
        Command::Constants { d, k, out, samples, seed } => constants(d, k, &out, samples, seed).map(|_| true),
        Command::Oracle { check } => oracle(&check),
    };
    let result = match workers {
        Some(w) => harness::with_workers(w, run).and_then(|r| r),
        None => run(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn simulate(config: &Path, out: &Path, paired: bool) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let scenario = cfg.scenario.resolve()?;
    fs::create_dir_all(out)?;
    let (report, predictions) = bias_variance_curve_with_predictions(&cfg)?;
    report.write_csv(create(&out.join("curve.csv"))?)?;
    for (point, preds) in report.points.iter().zip(&predictions) {
        let hist = histogram_report(preds, cfg.hist_bins, point.center)?;
        let name = format!("hist_{}_{}.csv", cfg.estimator.as_str(), point.n);
        hist.write_csv(create(&out.join(name))?)?;
    }
    if report.points.len() >= 3 {
        let fits: Vec<_> = [false, true]
            .into_iter()
            .filter_map(|adjusted| match fit_variance_slope(&report, adjusted) {
                Ok(fit) => Some(fit),
                Err(e) => {
                    eprintln!("slope fit skipped: {e}");
                    None
                }
            })
            .collect();
        write_json(&out.join("slope.json"), &serde_json::to_value(fits)?)?;
    }
    let mut grid = Vec::new();
    for &n in &cfg.n_grid {
        let (s, k) = hyperparams_from_exponents(n, cfg.alpha, cfg.beta)?;
        let rates = check_rate_conditions(n, s, k.max(1), scenario.d()).ok();
        grid.push(json!({ "n": n, "s": s, "k": k, "rate_diagnostics": rates }));
    }
    write_json(
        &out.join("meta.json"),
        &json!({
            "config": cfg,
            "beta0": scenario.beta0,
            "class_probability": scenario.class_probability(),
            "center": estimator_center(&cfg, &scenario),
            "grid": grid,
            "points": report.points,
        }),
    )?;
    if paired {
        let vr = variance_reduction_experiment(&cfg)?;
        write_json(&out.join("variance_reduction.json"), &serde_json::to_value(vr)?)?;
    }
    Ok(())
}

fn row(w: &mut impl Write, quantity: &str, d: usize, k: Option<u32>, r: &OracleResult) -> Result<()> {
    writeln!(
        w,
        "{quantity},{d},{},{},{},{},{},{}",
        k.map(|k| k.to_string()).unwrap_or_default(),
        sig17(r.value),
        sig17(r.std_error),
        sig17_opt(r.lower_bound),
        sig17_opt(r.upper_bound),
        r.method.as_str()
    )?;
    Ok(())
}

fn exact(value: f64) -> OracleResult {
    OracleResult { value, std_error: 0.0, lower_bound: None, upper_bound: None, method: crf::oracles::OracleMethod::Exact }
}

fn constants(d: usize, k: Option<u32>, out: &Path, samples: usize, seed: u64) -> Result<()> {
    let stream = Stream::new(seed);
    let mut w = create(out)?;
    writeln!(w, "quantity,d,k,value,std_error,lower,upper,method")?;
    if d >= 2 {
        let (lo, hi) = cd_bounds(d)?;
        row(&mut w, "cd_lower_bound", d, None, &exact(lo))?;
        row(&mut w, "cd_upper_bound", d, None, &exact(hi))?;
        row(&mut w, "cd", d, None, &constant_cd(d, samples, stream.named("cd"))?)?;
    }
    if d == 2 {
        row(&mut w, "kernel_normalized_limit", d, None, &exact(kernel_lattice_limit_d2()))?;
    }
    if let Some(k) = k {
        let mode = if d == 2 {
            KernelMode::ExactD2
        } else if composition_count(k, d).saturating_mul(composition_count(k, d)) <= ENUMERATION_CAP {
            KernelMode::Enumeration
        } else {
            KernelMode::MonteCarlo
        };
        let budget = if mode == KernelMode::MonteCarlo { samples as u64 } else { u64::MAX };
        let kernel = kernel_second_moment(d, k, mode, budget, stream.named("kernel"))?;
        row(&mut w, "kernel_second_moment", d, Some(k), &kernel)?;
        let scale = f64::from(k).exp2() * f64::from(k).powf((d as f64 - 1.0) / 2.0);
        let normalized = OracleResult { value: kernel.value * scale, std_error: kernel.std_error * scale, ..kernel };
        row(&mut w, "kernel_normalized", d, Some(k), &normalized)?;
        row(&mut w, "diameter_bound_1", d, Some(k), &exact(diameter_moment_bound(d, k, 1)?))?;
        row(&mut w, "diameter_bound_2", d, Some(k), &exact(diameter_moment_bound(d, k, 2)?))?;
    }
    w.flush()?;
    Ok(())
}

fn oracle(name: &str) -> Result<bool> {
    let names: Vec<&str> = if name == "all" { CHECK_NAMES.to_vec() } else { vec![name] };
    let mut all = true;
    for n in names {
        let outcome = run_check(n)?;
        println!("{} {}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.name, outcome.detail);
        all &= outcome.passed;
    }
    Ok(all)
}
