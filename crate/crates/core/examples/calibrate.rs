//! Pilot runs that generate the frozen constants used by the acceptance
//! suite. Each subcommand prints the values to freeze; the test fixtures
//! record which invocation produced them.
//!
//! Usage:
//!   cargo run --release -p nnwalk-core --example calibrate -- logpow
//!   cargo run --release -p nnwalk-core --example calibrate -- lln-pilot
//!   cargo run --release -p nnwalk-core --example calibrate -- lil-bands
//!   cargo run --release -p nnwalk-core --example calibrate -- exp-ks

use nnwalk_core::analytics::{d_infinity, TruncationPolicy};
use nnwalk_core::model::{Family, StepModel};
use nnwalk_core::numeric::mean_sd;
use nnwalk_core::simulator::{
    position_samples, sample_local_times_exact, sample_profiles_exact, SimOptions,
};
use nnwalk_core::statlab::{fit_exponential_limit, lil_trace_local_time};

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_default();
    match mode.as_str() {
        "logpow" => logpow(),
        "lln-pilot" => lln_pilot(),
        "lil-bands" => lil_bands(),
        "exp-ks" => exp_ks(),
        other => {
            eprintln!("unknown mode `{other}`; see the file header for options");
            std::process::exit(2);
        }
    }
}

fn logpow() {
    let model = StepModel::new(Family::LogPower { alpha: 1.0, b: 2.0 }).unwrap();
    let policy = TruncationPolicy::with_tol(1e-9);
    for m in [1_000u64, 10_000, 100_000, 1_000_000] {
        let res = d_infinity(&model, m, &policy).unwrap();
        let ratio = res.value / (m as f64).ln();
        println!(
            "m={m:>8}  D={:.6}  D/(log m)^alpha = {ratio:.6}  terms={}",
            res.value, res.terms_used
        );
    }
}

fn lln_pilot() {
    let model = StepModel::new(Family::Power { alpha: 0.5, b: 2.0 }).unwrap();
    let n = 10_000_000u64;
    let samples = position_samples(&model, n, 100, 20_250_817).unwrap();
    let scale = (n as f64).powf(2.0 / 3.0);
    let ratios: Vec<f64> = samples.iter().map(|&x| x as f64 / scale).collect();
    let (mean, sd) = mean_sd(&ratios);
    println!("pilot n={n} replicas=100 seed=20250817");
    println!("mean X_n/n^(2/3) = {mean:.6}  sd = {sd:.6}  se = {:.6}", sd / 10.0);
    println!("ode constant     = {:.6}", 1.5f64.powf(2.0 / 3.0));
}

fn lil_bands() {
    let model = StepModel::new(Family::Lambda { k: 1, b: 3.0 }).unwrap();
    let opts = SimOptions {
        series: TruncationPolicy::with_tol(1e-6),
        window: 128,
        ..Default::default()
    };
    let grid: Vec<u64> = vec![100, 178, 316, 562, 1000, 1778, 3162, 5623, 10000];
    for seed in [1u64, 2, 3, 4, 5] {
        let profiles = sample_profiles_exact(&model, 100, 10_000, 1000, seed, &opts).unwrap();
        let by_r: Vec<(u64, Vec<u64>)> = grid
            .iter()
            .map(|&r| {
                (
                    r,
                    profiles.iter().map(|p| p.xi[(r - 100) as usize]).collect(),
                )
            })
            .collect();
        let rep = lil_trace_local_time(&by_r, &model, 3.0, &opts.series).unwrap();
        let env_tail: Vec<String> = rep
            .envelope
            .points
            .iter()
            .filter(|p| p.index >= 1000)
            .map(|p| format!("{}:{:.3}", p.index, p.ratio))
            .collect();
        println!(
            "seed={seed}  lil running_max={:.4}  envelope(R>=1000): {}",
            rep.lil.running_max,
            env_tail.join(" ")
        );
    }
}

fn exp_ks() {
    let model = StepModel::new(Family::Lambda { k: 1, b: 3.0 }).unwrap();
    let opts = SimOptions {
        series: TruncationPolicy::with_tol(1e-6),
        window: 128,
        ..Default::default()
    };
    let d = nnwalk_core::analytics::d_infinity_checked(&model, 10_000, &opts.series).unwrap();
    let t0 = std::time::Instant::now();
    let samples = sample_local_times_exact(&model, 10_000, 10_000, 99, &opts).unwrap();
    let scaled: Vec<f64> = samples.iter().map(|s| s.xi_up as f64 / d).collect();
    let fit = fit_exponential_limit(&scaled).unwrap();
    println!(
        "D={d:.3}  ks={:.5} crit={:.5} consistent={} wall={:.1}s",
        fit.statistic,
        fit.critical_value,
        fit.is_consistent(),
        t0.elapsed().as_secs_f64()
    );
}
