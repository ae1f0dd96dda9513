//! Operator command line: simulate augmented sessions, compute acoustic
//! metrics, analyze survey and log data, check calibration tables, and run
//! the prediction service.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error,
//! 3 the session completed but at least one interval fell back from the
//! remote predictor to the local surrogate.

use std::error::Error;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::warn;

use amss_core::acoustics::{self, MetricsOptions, Waveform};
use amss_core::analysis::{contrast_table, correlation_matrix, read_survey, write_long_csv};
use amss_core::audio;
use amss_core::bank::{self, SpeakerLayout};
use amss_core::config::{load_config, AppConfig};
use amss_core::engine::{selection_frequency_report, Engine, SessionLog, SessionMeta};
use amss_core::predictor::{BackendTag, IsoplPredictor, RemotePredictor, SurrogatePredictor};
use amss_core::service;
use amss_core::simulator;

type CliError = Box<dyn Error>;

#[derive(Parser)]
#[command(name = "amss", version, about = "Soundscape augmentation toolkit")]
struct Cli {
    /// TOML config overriding policy/surrogate/predictor defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select maskers for an ambient recording and render the augmented session.
    Simulate(SimulateArgs),
    /// Compute LAeq/LCeq/N95 and a fast A-weighted level series for a WAV file.
    Metrics(MetricsArgs),
    /// Survey and session-log analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Calibration-table utilities.
    #[command(subcommand)]
    Calib(CalibCommand),
    /// Run the prediction service until killed.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Masker bank manifest CSV (id, class, audio_path, calib_path).
    #[arg(long, value_name = "CSV")]
    manifest: PathBuf,
    /// Ambient recording (mono WAV).
    #[arg(long, value_name = "WAV")]
    ambient: PathBuf,
    /// Session length, seconds.
    #[arg(long)]
    duration: f64,
    /// Selection RNG seed.
    #[arg(long)]
    seed: u64,
    /// `local`, or a service URL such as `http://host:8731`.
    #[arg(long, env = "AMSS_PREDICTOR_URL", value_name = "LOCAL|URL")]
    predictor: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Basename for output files; defaults to `<ambient stem>-<seed>`.
    #[arg(long)]
    session_id: Option<String>,
    /// Site label recorded in the log header.
    #[arg(long)]
    site: Option<String>,
    /// Condition label recorded in the log header.
    #[arg(long)]
    condition: Option<String>,
    /// Override the selection interval, seconds.
    #[arg(long)]
    interval: Option<f64>,
    /// Override the crossfade length, seconds.
    #[arg(long)]
    crossfade: Option<f64>,
    /// Full-scale SPL of the ambient recording, dB.
    #[arg(long, default_value_t = amss_core::DEFAULT_CALIBRATION_DB)]
    calibration: f64,
}

#[derive(Args)]
struct MetricsArgs {
    /// Input WAV; multichannel files use the channel with the highest LAeq.
    #[arg(long = "in", value_name = "WAV")]
    input: PathBuf,
    /// Full-scale SPL of the recording, dB.
    #[arg(long, default_value_t = amss_core::DEFAULT_CALIBRATION_DB)]
    calibration: f64,
    /// Output directory; defaults to the input's directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Cell statistics, contrast tables and attribute correlations from a survey CSV.
    Survey(SurveyArgs),
    /// Masker selection frequencies across session logs.
    Logs(LogsArgs),
}

#[derive(Args)]
struct SurveyArgs {
    /// Survey responses, one participant-session per row.
    #[arg(long, value_name = "FILE")]
    csv: PathBuf,
    /// Output directory; defaults to the CSV's directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LogsArgs {
    /// Glob over session log files, e.g. `runs/*.log.jsonl`.
    #[arg(long, value_name = "PATTERN")]
    glob: String,
    /// Write the frequency table here instead of stdout.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CalibCommand {
    /// Round-trip gain <-> SPL interpolation across the table's span.
    Check(CalibCheckArgs),
}

#[derive(Args)]
struct CalibCheckArgs {
    /// Calibration CSV (digital_gain, spl_dba_1m).
    #[arg(long, value_name = "CSV")]
    table: PathBuf,
    /// Sweep step, dB.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Maximum acceptable |achieved - target|, dB.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    /// Write per-target rows (target_spl, gain, achieved_spl, error) here.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Bind address, e.g. 127.0.0.1:8731.
    #[arg(long, value_name = "ADDR")]
    bind: String,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            process::exit(if err.exit_code() == 0 { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(code) => process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => AppConfig::default(),
    };
    match cli.command {
        Command::Simulate(args) => run_simulate(cfg, args),
        Command::Metrics(args) => run_metrics(cfg, args),
        Command::Analyze(AnalyzeCommand::Survey(args)) => run_survey(args),
        Command::Analyze(AnalyzeCommand::Logs(args)) => run_logs(args),
        Command::Calib(CalibCommand::Check(args)) => run_calib_check(args),
        Command::Serve(args) => run_serve(cfg, args),
    }
}

/// Speaker geometry of the deployed installation: four corner speakers
/// around a central listener.
fn default_layout() -> Result<SpeakerLayout, CliError> {
    Ok(SpeakerLayout::square(
        4,
        SpeakerLayout::DEFAULT_SQUARE_SIDE,
        SpeakerLayout::DEFAULT_MOUNT_HEIGHT,
        [0.0, 0.0, SpeakerLayout::DEFAULT_EAR_HEIGHT],
    )?)
}

fn run_simulate(cfg: AppConfig, args: SimulateArgs) -> Result<i32, CliError> {
    let mut policy = cfg.policy.clone();
    policy.rng_seed = args.seed;
    if let Some(interval) = args.interval {
        policy.interval = interval;
    }

    let bank = bank::load_manifest(&args.manifest)?;
    let ambient = audio::read_mono_waveform(&args.ambient, args.calibration)?;
    let layout = default_layout()?;

    // Flag and env var (via clap) win over the config file.
    let endpoint = args
        .predictor
        .filter(|p| !p.eq_ignore_ascii_case("local"))
        .or_else(|| cfg.predictor.endpoint.clone());
    let predictor: Box<dyn IsoplPredictor> = match &endpoint {
        Some(url) => Box::new(RemotePredictor::new(
            url,
            Duration::from_secs_f64(cfg.predictor.timeout),
            cfg.surrogate,
        )?),
        None => Box::new(SurrogatePredictor::new(cfg.surrogate)?),
    };

    let session_id = args.session_id.unwrap_or_else(|| {
        let stem = args.ambient.file_stem().map(|s| s.to_string_lossy().into_owned());
        format!("{}-{}", stem.unwrap_or_else(|| "session".into()), args.seed)
    });
    let meta = SessionMeta {
        session_id: session_id.clone(),
        site: args.site,
        condition: args.condition,
    };

    let engine = Engine::new(&bank, &layout, policy, predictor.as_ref())?
        .with_criterion(cfg.predictor.criterion);
    let log = engine.run_session(&ambient, args.duration, meta)?;

    let mut mix_opts = cfg.simulator.clone();
    if let Some(crossfade) = args.crossfade {
        mix_opts.crossfade = crossfade;
    }
    let augmented = simulator::mix_session(&ambient, &log, &bank, &layout, &mix_opts)?;
    let metrics_opts = MetricsOptions {
        laf_step: cfg.metrics.laf_step,
        ..MetricsOptions::default()
    };
    let report = simulator::session_report(&ambient, &augmented, &metrics_opts)?;

    fs::create_dir_all(&args.out)?;
    let out = |suffix: &str| args.out.join(format!("{session_id}.{suffix}"));
    persist(&out("log.jsonl"), |f| Ok(log.write_jsonl(f)?))?;
    persist_wav(&out("amb.wav"), &ambient)?;
    persist_wav(&out("amss.wav"), &augmented)?;
    persist_json(&out("amb.json"), &report.ambient)?;
    persist_json(&out("amss.json"), &report.augmented)?;
    persist(&out("amb.csv"), |f| Ok(report.ambient.laf_series.write_csv(f)?))?;
    persist(&out("amss.csv"), |f| Ok(report.augmented.laf_series.write_csv(f)?))?;
    persist_json(&out("report.json"), &report)?;

    let on = log.entries.iter().filter(|e| e.masker_on()).count();
    let fallbacks = log
        .entries
        .iter()
        .filter(|e| e.backend == Some(BackendTag::RemoteFallback))
        .count();
    println!(
        "session {session_id}: {} intervals ({on} masker-on, {fallbacks} fallback)",
        log.entries.len()
    );
    println!(
        "delta LAeq {:+.2} dB, LCeq {:+.2} dB, N95 {:+.2} sone",
        report.delta_laeq, report.delta_lceq, report.delta_n95
    );
    println!(
        "wrote {}/{session_id}.{{log.jsonl,amb.wav,amss.wav,amb.json,amss.json,amb.csv,amss.csv,report.json}}",
        args.out.display()
    );
    Ok(if fallbacks > 0 { 3 } else { 0 })
}

fn run_metrics(cfg: AppConfig, args: MetricsArgs) -> Result<i32, CliError> {
    let file = audio::read_audio(&args.input)?;
    let (channel, w) =
        acoustics::representative_channel(&file.channels, f64::from(file.sample_rate), args.calibration)?;
    if file.channels.len() > 1 {
        warn!("{}: using channel {channel} of {}", args.input.display(), file.channels.len());
    }
    let opts = MetricsOptions {
        laf_step: cfg.metrics.laf_step,
        ..MetricsOptions::default()
    };
    let report = acoustics::metrics_report(&w, &opts)?;

    let dir = match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            dir.clone()
        }
        None => parent_or_dot(&args.input).to_path_buf(),
    };
    let stem = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "metrics".into());
    let json_path = dir.join(format!("{stem}.json"));
    let csv_path = dir.join(format!("{stem}.csv"));
    persist_json(&json_path, &report)?;
    persist(&csv_path, |f| Ok(report.laf_series.write_csv(f)?))?;

    println!(
        "{}: laeq {:.2} dB, lceq {:.2} dB, n95 {:.2} sone, {:.1} s",
        args.input.display(),
        report.laeq,
        report.lceq,
        report.n95,
        report.duration
    );
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(0)
}

fn run_survey(args: SurveyArgs) -> Result<i32, CliError> {
    let file = File::open(&args.csv).map_err(|e| format!("cannot open {}: {e}", args.csv.display()))?;
    let records = read_survey(BufReader::new(file))?;
    let table = contrast_table(&records);

    let dir = match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            dir.clone()
        }
        None => parent_or_dot(&args.csv).to_path_buf(),
    };
    let stem = args
        .csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "survey".into());
    let out = |suffix: &str| dir.join(format!("{stem}.{suffix}"));

    persist(&out("cells.csv"), |f| Ok(table.write_cells_csv(f)?))?;
    persist(&out("changes.csv"), |f| Ok(table.write_changes_csv(f)?))?;
    persist(&out("long.csv"), |f| Ok(write_long_csv(&records, f)?))?;
    match correlation_matrix(&records) {
        Ok(matrix) => persist(&out("correlation.csv"), |f| Ok(matrix.write_csv(f)?))?,
        Err(err) => warn!("correlation matrix skipped: {err}"),
    }

    println!("{} records, {} cells", records.len(), table.cells.len());
    for (site, changes) in &table.condition_changes {
        for (attribute, pct) in changes {
            if attribute.code() == "isopl" || attribute.code() == "isoev" {
                println!("{site} AMB->AMSS: {attribute} {pct:+.2} %");
            }
        }
    }
    println!(
        "wrote {}/{stem}.{{cells.csv,changes.csv,long.csv,correlation.csv}}",
        dir.display()
    );
    Ok(0)
}

fn run_logs(args: LogsArgs) -> Result<i32, CliError> {
    let mut logs = Vec::new();
    for entry in glob::glob(&args.glob)? {
        let path = entry?;
        let file = File::open(&path)
            .map_err(|e| format!("cannot open {}: {e}", path.display()))?;
        let log = SessionLog::read_jsonl(BufReader::new(file))
            .map_err(|e| format!("{}: {e}", path.display()))?;
        logs.push(log);
    }
    if logs.is_empty() {
        warn!("no logs matched '{}'", args.glob);
    }
    let report = selection_frequency_report(&logs);

    let mut csv = String::from("masker_id,percent\n");
    for (id, pct) in &report {
        csv.push_str(&format!("{id},{pct}\n"));
    }
    match &args.out {
        Some(path) => {
            persist(path, |f| Ok(f.write_all(csv.as_bytes())?))?;
            println!("{} sessions, {} maskers; wrote {}", logs.len(), report.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run_calib_check(args: CalibCheckArgs) -> Result<i32, CliError> {
    if !(args.step.is_finite() && args.step > 0.0) {
        return Err(format!("step must be positive, got {}", args.step).into());
    }
    let masker_id = args
        .table
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into());
    let table = bank::load_calibration(&args.table, masker_id)?;
    let gains: Vec<f64> = table.points().iter().map(|p| p.digital_gain).collect();
    let (lo, hi) = (table.min_spl(), table.max_spl());

    let mut rows = String::from("target_spl,gain,achieved_spl,error\n");
    let mut worst: (f64, f64) = (0.0, lo); // (|error|, target)
    let mut targets = 0usize;
    let mut target = lo;
    while target <= hi + 1e-9 {
        let gain = table.gain_for_target_spl(target);
        let achieved = table.spl_of_gain(gain);
        let error = achieved - target;
        if error.abs() > worst.0 {
            worst = (error.abs(), target);
        }
        rows.push_str(&format!("{target},{gain},{achieved},{error}\n"));
        targets += 1;
        target += args.step;
    }
    if let Some(path) = &args.out {
        persist(path, |f| Ok(f.write_all(rows.as_bytes())?))?;
    }

    println!(
        "table {}: {} points, gain {:.4}-{:.4}, spl {:.1}-{:.1} dBA",
        table.masker_id(),
        table.points().len(),
        gains.iter().cloned().fold(f64::INFINITY, f64::min),
        gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        lo,
        hi
    );
    let pass = worst.0 < args.tolerance;
    println!(
        "round trip, {targets} targets step {} dB: max |error| {:.4} dB at {:.1} dBA -> {} (tolerance {})",
        args.step,
        worst.0,
        worst.1,
        if pass { "PASS" } else { "FAIL" },
        args.tolerance
    );
    Ok(if pass { 0 } else { 2 })
}

fn run_serve(cfg: AppConfig, args: ServeArgs) -> Result<i32, CliError> {
    let handle = service::serve(&args.bind, cfg.surrogate)?;
    println!("predictor listening on {}", handle.endpoint());
    loop {
        std::thread::park();
    }
}

fn parent_or_dot(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes through a temp file in the target directory, then renames.
fn persist<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut File) -> Result<(), CliError>,
{
    let mut tmp = tempfile::NamedTempFile::new_in(parent_or_dot(path))?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path)?;
    Ok(())
}

fn persist_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    persist(path, |f| {
        serde_json::to_writer_pretty(&mut *f, value)?;
        f.write_all(b"\n")?;
        Ok(())
    })
}

fn persist_wav(path: &Path, w: &Waveform) -> Result<(), CliError> {
    let tmp = tempfile::Builder::new()
        .suffix(".wav")
        .tempfile_in(parent_or_dot(path))?;
    audio::write_waveform(tmp.path(), w)?;
    tmp.persist(path)?;
    Ok(())
}
