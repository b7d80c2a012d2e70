use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde_json::json;

use discounted_dp::ingest::{self, Aggregation, DailyTable, SyntheticConfig, DATE_FORMAT};
use discounted_dp::{
    run_experiment, sweep_discount, verify_schedule, Bounds, DiscountFamily, DiscountRegime, ErrorSeries,
    EvolvingDataset, ExperimentConfig, MeanQuery, MissingPolicy, NoiseSchedule, SweepConfig,
};

use crate::config::{parse_grid, parse_pair, ConfigFile};
use crate::output::{manifest_path_for, num, opt_num, RunManifest};
use crate::{exit, CliError, DataArgs, GenArgs, IngestArgs, RunArgs, SweepArgs, VerifyArgs};

type CmdResult = Result<u8, CliError>;

const DEFAULT_BOUNDS: &str = "0,200";

fn bounds_from(cfg: &ConfigFile, flag: Option<String>) -> Result<Bounds, CliError> {
    let raw = cfg.resolve(flag, "bounds", DEFAULT_BOUNDS.to_string())?;
    let (lo, hi) = parse_pair(&raw).map_err(|e| CliError::usage(format!("--bounds: {e}")))?;
    Ok(Bounds::new(lo, hi)?)
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{name} must be positive, got {v}")))
    }
}

fn table_bytes(table: &DailyTable) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    ingest::write_daily_csv(&mut buf, table)?;
    Ok(buf)
}

pub fn gen(a: GenArgs) -> CmdResult {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let defaults = SyntheticConfig::default();
    let start_raw = cfg.resolve(a.start_date, "start-date", defaults.start_date.format(DATE_FORMAT).to_string())?;
    let start_date = NaiveDate::parse_from_str(&start_raw, DATE_FORMAT)
        .map_err(|e| CliError::usage(format!("--start-date {start_raw:?}: {e}")))?;
    let synth = SyntheticConfig {
        n: cfg.resolve(a.n, "n", defaults.n)?,
        days: cfg.resolve(a.days, "days", defaults.days)?,
        seed: cfg.resolve_seed(a.seed)?,
        base_load: cfg.resolve(a.base_load, "base-load", defaults.base_load)?,
        seasonal_amplitude: cfg.resolve(a.seasonal_amplitude, "seasonal-amplitude", defaults.seasonal_amplitude)?,
        offset_sd: cfg.resolve(a.offset_sd, "offset-sd", defaults.offset_sd)?,
        noise_sd: cfg.resolve(a.noise_sd, "noise-sd", defaults.noise_sd)?,
        bounds: bounds_from(&cfg, a.bounds)?,
        start_date,
    };
    let out: PathBuf = cfg.resolve_required(a.out, "out")?;
    if synth.n == 0 || synth.days == 0 {
        return Err(CliError::usage("--n and --days must be at least 1"));
    }
    let table = ingest::gen_synthetic_table(&synth)?;
    let mut manifest = RunManifest::new("gen", Some(synth.seed), json!(synth));
    manifest.write_output(&out, &table_bytes(&table)?)?;
    manifest.finish(&manifest_path_for(&out))?;
    eprintln!("wrote {} households x {} days to {}", synth.n, synth.days, out.display());
    Ok(exit::OK)
}

pub fn ingest(a: IngestArgs) -> CmdResult {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let input: PathBuf = cfg.resolve_required(a.input, "input")?;
    let out: PathBuf = cfg.resolve_required(a.out, "out")?;
    let format = cfg.resolve(a.format, "format", "long".to_string())?;
    let agg = match cfg.resolve(a.agg, "agg", "sum".to_string())?.as_str() {
        "sum" => Aggregation::Sum,
        "mean" => Aggregation::Mean,
        other => return Err(CliError::usage(format!("--agg must be sum or mean, got {other:?}"))),
    };
    let bounds = bounds_from(&cfg, a.bounds)?;
    let readings = match format.as_str() {
        "long" => ingest::parse_long_csv(&input)?,
        "wide" => ingest::parse_wide_csv(&input)?,
        other => return Err(CliError::usage(format!("--format must be long or wide, got {other:?}"))),
    };
    let table = ingest::resample_daily(&readings, agg)?;
    let ds = ingest::to_evolving_dataset(&table, bounds, None)?;

    let mut manifest = RunManifest::new(
        "ingest",
        None,
        json!({ "format": format, "agg": agg, "bounds": bounds, "input": input.display().to_string() }),
    );
    manifest.add_input(&input)?;
    manifest.write_output(&out, &table_bytes(&table)?)?;
    manifest.finish(&manifest_path_for(&out))?;
    eprintln!("{} readings -> {} customers x {} days", readings.len(), ds.n(), ds.t());
    Ok(exit::OK)
}

struct LoadedData {
    path: PathBuf,
    ds: EvolvingDataset,
    query: MeanQuery,
    allow_unsound_missing: bool,
}

fn load_data(cfg: &ConfigFile, a: DataArgs) -> Result<LoadedData, CliError> {
    let path: PathBuf = cfg.resolve_required(a.data, "data")?;
    let bounds = bounds_from(cfg, a.bounds)?;
    let missing_policy = match cfg.resolve(a.missing, "missing", "exclude".to_string())?.as_str() {
        "exclude" => MissingPolicy::ExcludeFromMean,
        "zero" => MissingPolicy::TreatAsZero,
        other => return Err(CliError::usage(format!("--missing must be exclude or zero, got {other:?}"))),
    };
    let allow_unsound_missing = a.allow_unsound_missing || cfg.resolve(None, "allow-unsound-missing", false)?;
    let table = ingest::read_daily_csv(&path)?;
    let ds = ingest::to_evolving_dataset(&table, bounds, None)?;
    Ok(LoadedData { path, ds, query: MeanQuery::new(bounds, missing_policy), allow_unsound_missing })
}

fn series_csv(series: &ErrorSeries) -> Vec<u8> {
    let mut s = String::from("t,date,true_mean,noise_scale,report,analytic_rel_err,empirical_rel_err\n");
    for r in &series.rows {
        let date = r.date.map(|d| d.format(DATE_FORMAT).to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.t,
            date,
            opt_num(r.true_mean),
            num(r.noise_scale),
            opt_num(r.report),
            opt_num(r.analytic_rel_err),
            opt_num(r.empirical_rel_err),
        )
        .expect("write to string");
    }
    s.into_bytes()
}

pub fn run(a: RunArgs) -> CmdResult {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let defaults = ExperimentConfig::default();
    let data = load_data(&cfg, a.data)?;
    let exp = ExperimentConfig {
        epsilon: positive("epsilon", cfg.resolve(a.epsilon, "epsilon", defaults.epsilon)?)?,
        alpha: cfg.resolve(a.alpha, "alpha", defaults.alpha)?,
        beta: cfg.resolve(a.beta, "beta", defaults.beta)?,
        seed: cfg.resolve_seed(a.seed)?,
        monte_carlo_samples: cfg.resolve(a.mc, "mc", defaults.monte_carlo_samples)?,
        allow_unsound_missing: data.allow_unsound_missing,
    };
    let out: PathBuf = cfg.resolve_required(a.out, "out")?;
    exp.validate()?;

    let series = run_experiment(&data.ds, &data.query, &exp)?;

    let mut manifest = RunManifest::new(
        "run",
        Some(exp.seed),
        json!({
            "experiment": exp,
            "query": data.query,
            "delta_f": data.query.sensitivity(data.ds.n()),
            "n": data.ds.n(),
            "t": data.ds.t(),
        }),
    );
    manifest.add_input(&data.path)?;
    for s in &series {
        let file = out.join(format!("errors_{}.csv", s.setup.label()));
        manifest.write_output(&file, &series_csv(s))?;
        println!(
            "{}: average relative error {} over {} days ({} excluded)",
            s.setup.label(),
            opt_num(s.average_analytic_error()),
            s.rows.len() - s.excluded.len(),
            s.excluded.len(),
        );
    }
    manifest.finish(&out.join("manifest.json"))?;
    Ok(exit::OK)
}

pub fn sweep(a: SweepArgs) -> CmdResult {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let data = load_data(&cfg, a.data)?;
    let epsilon = positive("epsilon", cfg.resolve(a.epsilon, "epsilon", ExperimentConfig::default().epsilon)?)?;
    let family = match cfg.resolve_required::<String>(a.family, "family")?.as_str() {
        "exp" => DiscountFamily::Exponential,
        "hyp" => DiscountFamily::Hyperbolic,
        other => return Err(CliError::usage(format!("--family must be exp or hyp, got {other:?}"))),
    };
    let grid_raw: String = cfg.resolve_required(a.grid, "grid")?;
    let grid = parse_grid(&grid_raw).map_err(|e| CliError::usage(format!("--grid: {e}")))?;
    let out: PathBuf = cfg.resolve_required(a.out, "out")?;
    let strict_zero = a.strict_zero || cfg.resolve(None, "strict-zero", false)?;
    let sweep_cfg = SweepConfig {
        epsilon,
        family,
        grid,
        skip_zero_means: !strict_zero,
        allow_unsound_missing: data.allow_unsound_missing,
    };
    let rows = sweep_discount(&data.ds, &data.query, &sweep_cfg)?;

    let mut csv = String::from("param,avg_rel_err,excluded_days\n");
    for r in &rows {
        writeln!(csv, "{},{},{}", num(r.param), num(r.avg_rel_err), r.excluded_days).expect("write to string");
    }
    let mut manifest = RunManifest::new("sweep", None, json!({ "sweep": sweep_cfg, "query": data.query }));
    manifest.add_input(&data.path)?;
    manifest.write_output(&out, csv.as_bytes())?;
    manifest.finish(&manifest_path_for(&out))?;
    print!("{csv}");
    Ok(exit::OK)
}

fn read_scales(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| CliError {
                code: exit::PARSE,
                message: format!("{}:{}: {e}", path.display(), i + 1),
            })
        })
        .collect()
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let kind: String = cfg.resolve_required(a.schedule, "schedule")?;
    let epsilon = positive("epsilon", cfg.resolve(a.epsilon, "epsilon", 1.0)?)?;
    let delta_f = positive("delta-f", cfg.resolve(a.delta_f, "delta-f", 1.0)?)?;
    let alpha = cfg.resolve(a.alpha, "alpha", 0.9)?;
    let beta = cfg.resolve(a.beta, "beta", 1.0)?;
    let scale_file: Option<PathBuf> = cfg.resolve_optional(a.scale_file, "scale-file")?;

    let (schedule, regime) = match kind.as_str() {
        "dp" => (NoiseSchedule::dp_quadratic(delta_f, epsilon)?, DiscountRegime::None),
        "exp" => (NoiseSchedule::exp_constant(delta_f, epsilon, alpha)?, DiscountRegime::exponential(alpha)?),
        "hyp" => (NoiseSchedule::hyp_sqrt(delta_f, epsilon, beta)?, DiscountRegime::hyperbolic(beta)?),
        other => return Err(CliError::usage(format!("--schedule must be dp, exp or hyp, got {other:?}"))),
    };
    let schedule = match &scale_file {
        Some(p) => NoiseSchedule::custom(read_scales(p)?)?,
        None => schedule,
    };
    let horizon = match (cfg.resolve_optional(a.horizon, "horizon")?, schedule.horizon()) {
        (Some(h), Some(len)) if h as usize > len => {
            return Err(CliError::usage(format!("--horizon {h} exceeds the {len} scales in the scale file")))
        }
        (Some(h), _) => h,
        (None, Some(len)) => len as u64,
        (None, None) => return Err(CliError::usage("missing required setting --horizon")),
    };

    let report = verify_schedule(&schedule, &regime, delta_f, epsilon, horizon)?;
    println!("schedule: {kind}{}", if scale_file.is_some() { " (scale file)" } else { "" });
    println!("regime: {}", regime.label());
    println!("horizon: {}", report.horizon);
    println!("max_discounted_sum: {}", num(report.max_sum));
    println!("at_t: {}", report.argmax_t);
    println!("epsilon: {}", num(report.epsilon));
    println!("margin: {}", num(report.margin));
    if report.passed() {
        println!("status: ok");
        Ok(exit::OK)
    } else {
        println!("status: violated");
        Ok(exit::VERIFY_FAILED)
    }
}
