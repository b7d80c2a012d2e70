//! Acceptance criteria. Each test prints one `[ACn] PASS|FAIL` line.
//!
//! Run with `cargo test -p ddp --test acceptance -- --nocapture --test-threads=1`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use discounted_dp::ingest::{gen_synthetic, SyntheticConfig};
use discounted_dp::verify::{discounted_sum_at, losses};
use discounted_dp::{
    rng, run_experiment, sample_laplace, sensitivity_mean, sweep_discount, verify_schedule, Bounds, DiscountFamily,
    DiscountRegime, Error, ExperimentConfig, MeanQuery, MissingPolicy, NoiseSchedule, PrivacyLedger, SweepConfig,
};

fn report(id: &str, title: &str, ok: bool, detail: String) {
    println!("[{id}] {} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

#[test]
fn ac01_sensitivity_matches_stated_constant() {
    let start = Instant::now();
    let q = MeanQuery::new(Bounds::new(0.0, 200.0).unwrap(), MissingPolicy::ExcludeFromMean);
    let df = sensitivity_mean(&q, 300);
    let elapsed = start.elapsed();
    let ok = (df - 0.666_667).abs() <= 1e-6 && within(elapsed, Duration::from_millis(1));
    report("AC1", "sensitivity (0,200), n=300", ok, format!("delta_f={df:.9} in {elapsed:?}"));
    assert!(ok);
}

#[test]
fn ac02_quadratic_schedule_budget_safety() {
    let start = Instant::now();
    let s = NoiseSchedule::dp_quadratic(1.0, 1.0).unwrap();
    let r = verify_schedule(&s, &DiscountRegime::None, 1.0, 1.0, 1_000_000).unwrap();
    let elapsed = start.elapsed();
    let ok = r.margin >= 0.0 && within(elapsed, Duration::from_secs(1));
    report("AC2", "quadratic schedule, t <= 1e6", ok, format!("max sum {:.12}, margin {:.3e} in {elapsed:?}", r.max_sum, r.margin));
    assert!(ok);
}

#[test]
fn ac03_constant_schedule_geometric_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 0.9, 0.99] {
        let s = NoiseSchedule::exp_constant(1.0, 1.0, alpha).unwrap();
        let rho = losses(&s, 1.0, 100_000).unwrap();
        let mut ledger = PrivacyLedger::new(1.0, DiscountRegime::exponential(alpha).unwrap()).unwrap();
        let mut decay = 1.0;
        for (i, &r) in rho.iter().enumerate() {
            let t = i as u64 + 1;
            ledger.record_loss(t, r).unwrap();
            decay *= alpha;
            let identity = 1.0 - decay;
            let computed = 1.0 - ledger.remaining();
            worst = worst.max((computed - identity).abs());
        }
        // Direct summation at a few points as a second route.
        let regime = DiscountRegime::exponential(alpha).unwrap();
        for t in [1u64, 10, 1000, 100_000] {
            let direct = discounted_sum_at(&regime, &rho, t);
            worst = worst.max((direct - (1.0 - alpha.powi(t as i32))).abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-9 && within(elapsed, Duration::from_secs(1));
    report("AC3", "constant schedule identity eps(1-a^t)", ok, format!("max abs error {worst:.3e} in {elapsed:?}"));
    assert!(ok);
}

/// Plain double loop over `k`, independent of the library's summation.
fn hyperbolic_sum_oracle(beta: f64, b1: f64, t: u64) -> f64 {
    let mut acc = 0.0;
    for k in 1..=t {
        acc += (1.0 / (1.0 + beta * (t - k) as f64)) * (1.0 / (b1 * (k as f64).sqrt()));
    }
    acc
}

#[test]
fn ac04_sqrt_schedule_budget_safety() {
    let start = Instant::now();
    let mut all_ok = true;
    for beta in [0.01, 0.1, 0.5, 1.0, 10.0] {
        let s = NoiseSchedule::hyp_sqrt(1.0, 1.0, beta).unwrap();
        let b1 = s.scale_at(1).unwrap();
        let (mut max_sum, mut at) = (0.0f64, 0u64);
        for t in 1..=10_000u64 {
            let v = hyperbolic_sum_oracle(beta, b1, t);
            if v > max_sum {
                max_sum = v;
                at = t;
            }
        }
        let spot = hyperbolic_sum_oracle(beta, b1, 100_000);
        let lib = verify_schedule(&s, &DiscountRegime::hyperbolic(beta).unwrap(), 1.0, 1.0, 10_000).unwrap();
        let agree = (lib.max_sum - max_sum).abs() <= 1e-12 * max_sum;
        let ok = max_sum <= 1.0 && spot <= 1.0 && agree;
        all_ok &= ok;
        report(
            "AC4",
            &format!("sqrt schedule beta={beta}"),
            ok,
            format!("max sum {max_sum:.6} at t={at}, spot t=1e5 {spot:.6}, library agrees: {agree}"),
        );
    }
    let elapsed = start.elapsed();
    let timely = within(elapsed, Duration::from_secs(60));
    report("AC4", "runtime", timely, format!("{elapsed:?}"));
    assert!(all_ok && timely, "the square-root constant overspends for large beta");
}

#[test]
fn ac05_constant_scale_is_refused_after_budget() {
    let schedule = NoiseSchedule::custom(vec![10.0; 11]).unwrap();
    let mut ledger = PrivacyLedger::new(1.0, DiscountRegime::None).unwrap();
    let mut r = rng::stream(0, 0);
    let start = Instant::now();
    let accepted = (1..=10).all(|k| ledger.release(k, 1.0, 1.0, &schedule, &mut r).is_ok());
    let refused = matches!(ledger.release(11, 1.0, 1.0, &schedule, &mut r), Err(Error::BudgetExceeded { k: 11, .. }));
    let elapsed = start.elapsed();
    let ok = accepted && refused && within(elapsed, Duration::from_millis(1));
    report("AC5", "constant scale b=10 exhausts eps=1", ok, format!("1-10 accepted: {accepted}, 11 refused: {refused} in {elapsed:?}"));
    assert!(ok);
}

#[test]
fn ac06_endpoint_regimes_reduce_to_plain_dp() {
    use rand::Rng;
    let mut r = rng::stream(606, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = r.random_range(1..=50);
        let rho: Vec<f64> = (0..len).map(|_| r.random::<f64>()).collect();
        let build = |regime| PrivacyLedger::from_losses(1e6, regime, &rho).unwrap();
        let plain = build(DiscountRegime::None);
        let exp1 = build(DiscountRegime::exponential(1.0).unwrap());
        let hyp0 = build(DiscountRegime::hyperbolic(0.0).unwrap());
        for t in [len as u64, len as u64 + 3] {
            let p = plain.discounted_sum(t).unwrap();
            worst = worst.max((exp1.discounted_sum(t).unwrap() - p).abs());
            worst = worst.max((hyp0.discounted_sum(t).unwrap() - p).abs());
        }
        worst = worst.max((exp1.remaining() - plain.remaining()).abs());
        worst = worst.max((hyp0.remaining() - plain.remaining()).abs());
    }
    let ok = worst <= 1e-12;
    report("AC6", "alpha=1 and beta=0 reduce to plain sums", ok, format!("max deviation {worst:.3e} over 1000 sequences"));
    assert!(ok);
}

#[test]
fn ac07_laplace_moments() {
    let start = Instant::now();
    let n = 1_000_000;
    let mut all_ok = true;
    for (i, b) in [0.5, 1.0, 5.0].into_iter().enumerate() {
        let mut r = rng::stream(7, i as u64);
        let (mut sum, mut sum_abs) = (0.0, 0.0);
        for _ in 0..n {
            let w = sample_laplace(b, &mut r);
            sum += w;
            sum_abs += w.abs();
        }
        let mean = sum / n as f64;
        let mean_abs = sum_abs / n as f64;
        let ok = mean.abs() <= 0.005 * b * 2f64.sqrt() * 3.0 && (mean_abs - b).abs() <= 0.01 * b;
        all_ok &= ok;
        report("AC7", &format!("Laplace moments b={b}"), ok, format!("mean {mean:.5}, mean|w| {mean_abs:.5}"));
    }
    let elapsed = start.elapsed();
    let timely = within(elapsed, Duration::from_secs(5));
    report("AC7", "runtime", timely, format!("{elapsed:?}"));
    assert!(all_ok && timely);
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs()
}

#[test]
fn ac08_growth_signatures() {
    let start = Instant::now();
    let ds = gen_synthetic(&SyntheticConfig { seasonal_amplitude: 0.0, noise_sd: 0.0, ..Default::default() }).unwrap();
    let q = MeanQuery::new(Bounds::default(), MissingPolicy::ExcludeFromMean);
    let series = run_experiment(&ds, &q, &ExperimentConfig::default()).unwrap();
    let (dp, ex, hy) = (&series[0], &series[1], &series[2]);
    let scale = |s: &discounted_dp::ErrorSeries, t: usize| s.rows[t - 1].noise_scale;
    let err = |s: &discounted_dp::ErrorSeries, t: usize| s.rows[t - 1].analytic_rel_err.unwrap();

    let t_max = ds.t();
    let dp_sq = (1..=t_max).all(|t| rel_close(scale(dp, t) / scale(dp, 1), (t * t) as f64));
    let ex_flat = (1..=t_max).all(|t| scale(ex, t) == scale(ex, 1));
    let hy_sqrt = (1..=t_max).all(|t| rel_close(scale(hy, t) / scale(hy, 1), (t as f64).sqrt()));
    report("AC8", "noise scale growth", dp_sq && ex_flat && hy_sqrt, format!("dp~t^2 {dp_sq}, exp const {ex_flat}, hyp~sqrt(t) {hy_sqrt}"));

    let dp_growing = (2..=t_max).all(|t| err(dp, t) > err(dp, t - 1));
    let hy_growing = (2..=t_max).all(|t| err(hy, t) > err(hy, t - 1));
    let hy_slower = (2..=t_max).all(|t| err(hy, t) / err(hy, 1) < err(dp, t) / err(dp, 1));
    let ex_flat_err = (1..=t_max).all(|t| err(ex, t) == err(ex, 1));
    let (avg_dp, avg_ex, avg_hy) = (
        dp.average_analytic_error().unwrap(),
        ex.average_analytic_error().unwrap(),
        hy.average_analytic_error().unwrap(),
    );
    let dp_worst = avg_dp > avg_ex && avg_dp > avg_hy && err(dp, t_max) > err(ex, t_max) && err(dp, t_max) > err(hy, t_max);
    let shape = dp_growing && hy_growing && hy_slower && ex_flat_err && dp_worst;
    report(
        "AC8",
        "error curve ordering",
        shape,
        format!("avg dp {avg_dp:.4}, exp {avg_ex:.4}, hyp {avg_hy:.4}; dp growing {dp_growing}, hyp growing slower {}", hy_growing && hy_slower),
    );
    let elapsed = start.elapsed();
    let timely = within(elapsed, Duration::from_secs(5));
    report("AC8", "runtime", timely, format!("{elapsed:?}"));
    assert!(dp_sq && ex_flat && hy_sqrt && shape && timely);
}

#[test]
fn ac09_sweep_monotonicity() {
    let start = Instant::now();
    let ds = gen_synthetic(&SyntheticConfig::default()).unwrap();
    let q = MeanQuery::new(Bounds::default(), MissingPolicy::ExcludeFromMean);
    let run = |family, grid: Vec<f64>| {
        let cfg = SweepConfig { epsilon: 1.0, family, grid, skip_zero_means: true, allow_unsound_missing: false };
        sweep_discount(&ds, &q, &cfg).unwrap().into_iter().map(|r| r.avg_rel_err).collect::<Vec<_>>()
    };
    let e = run(DiscountFamily::Exponential, vec![0.5, 0.9, 0.99, 0.999]);
    let h = run(DiscountFamily::Hyperbolic, vec![0.01, 0.1, 1.0, 10.0]);
    let e_up = e.windows(2).all(|w| w[1] > w[0]);
    let h_down = h.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    let ok = e_up && h_down && within(elapsed, Duration::from_secs(5));
    report("AC9", "sweep monotonicity", ok, format!("exp {e:.4?}, hyp {h:.4?} in {elapsed:?}"));
    assert!(ok);
}

fn ddp(dir: &Path, args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_ddp"))
        .current_dir(dir)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("DDP_SEED")
        .output()
        .expect("spawn ddp");
    assert!(o.status.success(), "ddp {args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn pipeline(dir: &Path) {
    ddp(dir, &["gen", "--n", "300", "--days", "365", "--seed", "2024", "--out", "data.csv"]);
    ddp(dir, &["run", "--data", "data.csv", "--seed", "2024", "--mc", "200", "--out", "run"]);
    ddp(dir, &["sweep", "--data", "data.csv", "--family", "exp", "--grid", "0.5,0.9,0.99", "--out", "sweep_exp.csv"]);
    ddp(dir, &["sweep", "--data", "data.csv", "--family", "hyp", "--grid", "0.1,1,10", "--out", "sweep_hyp.csv"]);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().display().to_string();
        out.push((rel, fs::read(&entry).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            v.extend(walk(&p));
        } else {
            v.push(p);
        }
    }
    v
}

#[test]
fn ac10_end_to_end_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    let ok = fa == fb && fa.len() == 10;
    report("AC10", "gen + run + sweep bit-identical", ok, format!("{} files compared: {names:?}", fa.len()));
    assert!(ok);
}
