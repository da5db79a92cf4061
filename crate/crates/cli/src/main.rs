mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fractackle::analytics::{correlate, leaderboard, stability, stability_rows, window_summaries, Grouping, SortKey};
use fractackle::config::{fmt_sig, parse_weeks, read_config, ConfigLayer, RunConfig};
use fractackle::harness::{generate, random_dataset_specs};
use fractackle::ingest::write_rejects;
use fractackle::study::Study;
use fractackle::types::PlayKey;
use fractackle::windows::joint_percentile_threshold;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use output::{json_bytes, num, write_atomic, Table};

const CONFIG_FILE: &str = "fractackle.conf";

#[derive(Parser, Debug)]
#[command(name = "fractackle", version, about = "Fractional tackles from player tracking data")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Directory with games.csv, plays.csv, players.csv, tackles.csv and tracking_week_{w}.csv
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Weeks to load, e.g. "1-9" or "1,2,5"
    #[arg(long, global = true, value_parser = parse_week_arg)]
    weeks: Option<std::collections::BTreeSet<u8>>,
    /// Percentile used to calibrate the contact distance
    #[arg(long, global = true)]
    percentile: Option<f64>,
    /// Fixed contact distance in yards; skips calibration
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Peak velocities at or below this are treated as no peak
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Minimum plays for a defender to appear in leaderboards and stability
    #[arg(long, global = true)]
    min_plays: Option<u32>,
    /// Format for tabular outputs
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output directory
    #[arg(long, global = true, default_value = "fractackle-out")]
    out: PathBuf,
    /// key=value settings file; defaults to <data>/fractackle.conf when present
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SortArg {
    Total,
    Average,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Choose the contact distance from first-contact and tackle frames
    Calibrate,
    /// List contact windows with landmarks and values
    Windows,
    /// Per-defender credit for every window
    Credit,
    /// Rank defenders by fractional tackles
    Leaderboard {
        /// Keep only the first N rows
        #[arg(long)]
        top: Option<usize>,
        /// Rank by total or per-play average
        #[arg(long, value_enum, default_value_t = SortArg::Total)]
        sort: SortArg,
    },
    /// Correlation with combined tackles and split-period stability
    Validate,
    /// Ball-carrier track of one play (frameId, x, y, vToward)
    ExportPlay {
        /// Play key as gameId-playId
        #[arg(long)]
        play: PlayKey,
    },
    /// Write a synthetic data directory with ground truth
    Synth {
        /// Generator seed
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of plays
        #[arg(long, default_value_t = 200)]
        plays: usize,
        /// Directory to write
        #[arg(long)]
        out_dir: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Calibrate => "calibrate",
            Self::Windows => "windows",
            Self::Credit => "credit",
            Self::Leaderboard { .. } => "leaderboard",
            Self::Validate => "validate",
            Self::ExportPlay { .. } => "export-play",
            Self::Synth { .. } => "synth",
        }
    }
}

fn parse_week_arg(s: &str) -> Result<std::collections::BTreeSet<u8>, String> {
    parse_weeks(s).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<fractackle::Error>() {
            Some(fractackle::Error::Config(msg)) => Self::Usage(msg.clone()),
            _ => Self::Data(e),
        }
    }
}

impl From<fractackle::Error> for Failure {
    fn from(e: fractackle::Error) -> Self {
        Self::from(anyhow::Error::from(e))
    }
}

/// Bookkeeping for the run manifest.
#[derive(Default)]
struct Manifest {
    inputs: Vec<Value>,
    counts: BTreeMap<&'static str, usize>,
    timings_ms: BTreeMap<&'static str, u128>,
    outputs: Vec<String>,
}

impl Manifest {
    fn emit(&mut self, out: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        write_atomic(out, name, bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    let file = common.config.clone().or_else(|| {
        common
            .data
            .as_ref()
            .map(|d| d.join(CONFIG_FILE))
            .filter(|p| p.is_file())
    });
    if let Some(path) = file {
        if !path.is_file() {
            return Err(Failure::Usage(format!("config file {} not found", path.display())));
        }
        config.apply(&read_config(&path)?);
    }
    config.apply(&ConfigLayer {
        weeks: common.weeks.clone(),
        percentile: common.percentile,
        threshold: common.threshold,
        epsilon: common.epsilon,
        min_plays: common.min_plays,
    });
    config.validate()?;
    Ok(config)
}

fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FRACTACKLE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("FRACTACKLE_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Data(e.into()))
}

/// Output directory named on a command line that failed to parse.
fn raw_out_dir(args: &[String]) -> PathBuf {
    args.iter()
        .enumerate()
        .find_map(|(i, a)| match a.strip_prefix("--out=") {
            Some(v) => Some(PathBuf::from(v)),
            None if a == "--out" => args.get(i + 1).map(PathBuf::from),
            None => None,
        })
        .unwrap_or_else(|| PathBuf::from("fractackle-out"))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            if usage {
                let doc = json!({
                    "tool": "fractackle",
                    "version": env!("CARGO_PKG_VERSION"),
                    "args": &args[1..],
                    "status": { "usageError": e.kind().to_string() },
                });
                let _ = write_atomic(&raw_out_dir(&args), "manifest.json", &json_bytes(&doc));
            }
            e.exit();
        }
    };
    let started = Instant::now();
    let mut manifest = Manifest::default();
    let result = configure_threads().and_then(|_| run(&cli, &mut manifest));
    manifest.timings_ms.insert("total", started.elapsed().as_millis());

    let (code, status) = match &result {
        Ok(()) => (ExitCode::SUCCESS, json!("ok")),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            (ExitCode::from(2), json!({ "usageError": msg }))
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            (ExitCode::from(1), json!({ "dataError": format!("{e:#}") }))
        }
    };
    let config = resolve_config(&cli.common).ok();
    let doc = json!({
        "tool": "fractackle",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cli.command.name(),
        "args": &args[1..],
        "startedAt": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "status": status,
        "dataDir": cli.common.data.as_ref().map(|d| d.display().to_string()),
        "config": config,
        "configHash": config.as_ref().map(config_hash),
        "inputs": manifest.inputs,
        "counts": manifest.counts,
        "outputs": manifest.outputs,
        "timingsMs": manifest.timings_ms,
    });
    if let Err(e) = write_atomic(&cli.common.out, "manifest.json", &json_bytes(&doc)) {
        eprintln!("error: could not write manifest: {e:#}");
        if matches!(result, Ok(())) {
            return ExitCode::from(1);
        }
    }
    code
}

fn run(cli: &Cli, manifest: &mut Manifest) -> Result<(), Failure> {
    let common = &cli.common;
    let out = &common.out;
    if let Command::Synth { seed, plays, out_dir } = &cli.command {
        let threshold = common.threshold.unwrap_or(1.5);
        let t0 = Instant::now();
        let truth = generate(&random_dataset_specs(*seed, *plays, threshold), out_dir)?;
        manifest.timings_ms.insert("generate", t0.elapsed().as_millis());
        manifest.counts.insert("plays", truth.plays.len());
        manifest
            .counts
            .insert("windows", truth.plays.iter().map(|p| p.outcome.windows.len()).sum());
        eprintln!("wrote {} plays to {}", truth.plays.len(), out_dir.display());
        return Ok(());
    }

    let config = resolve_config(common)?;
    let data = common
        .data
        .as_ref()
        .ok_or_else(|| Failure::Usage("--data is required for this subcommand".into()))?;
    if !data.is_dir() {
        return Err(Failure::Usage(format!("data directory {} not found", data.display())));
    }

    let t0 = Instant::now();
    let study = Study::run(data, &config).with_context(|| format!("processing {}", data.display()))?;
    manifest.timings_ms.insert("pipeline", t0.elapsed().as_millis());
    manifest.inputs = study
        .dataset
        .report
        .files
        .iter()
        .map(|f| json!({ "file": f.file, "rows": f.rows, "accepted": f.accepted, "rejected": f.rejected }))
        .collect();
    manifest.counts.insert("plays", study.plays.len());
    manifest.counts.insert("windows", study.output.windows().count());
    manifest.counts.insert("credits", study.output.credits().count());
    manifest.counts.insert("rejects", study.rejects.len());

    let mut rejects = Vec::new();
    write_rejects(&mut rejects, &study.rejects).context("serializing rejects")?;
    manifest.emit(out, "rejects.jsonl", &rejects)?;

    let t1 = Instant::now();
    match &cli.command {
        Command::Calibrate => calibrate(&study, out, manifest)?,
        Command::Windows => windows(&study, common.format, out, manifest)?,
        Command::Credit => credit(&study, common.format, out, manifest)?,
        Command::Leaderboard { top, sort } => {
            let sort = match sort {
                SortArg::Total => SortKey::Total,
                SortArg::Average => SortKey::Average,
            };
            leaderboard_cmd(&study, &config, sort, *top, common.format, out, manifest)?
        }
        Command::Validate => validate(&study, &config, out, manifest)?,
        Command::ExportPlay { play } => export_play(&study, *play, out, manifest)?,
        Command::Synth { .. } => unreachable!("handled above"),
    }
    manifest.timings_ms.insert("output", t1.elapsed().as_millis());
    Ok(())
}

fn calibrate(study: &Study, out: &Path, manifest: &mut Manifest) -> anyhow::Result<()> {
    let c = &study.calibration;
    let (fc, tk) = c.deciles();
    let calibrated = joint_percentile_threshold(&c.samples.first_contact, &c.samples.tackle, c.percentile)
        .ok_or(fractackle::Error::NoCalibrationSamples)?;
    let doc = json!({
        "D": num(calibrated),
        "percentile": num(c.percentile),
        "thresholdInUse": num(c.d),
        "overridden": c.overridden,
        "samples": { "firstContact": c.samples.first_contact.len(), "tackle": c.samples.tackle.len() },
        "deciles": {
            "firstContact": fc.iter().map(|v| num(*v)).collect::<Vec<_>>(),
            "tackle": tk.iter().map(|v| num(*v)).collect::<Vec<_>>(),
        },
    });
    manifest.emit(out, "calibration.json", &json_bytes(&doc))?;
    println!("D = {}", fmt_sig(calibrated));
    Ok(())
}

fn windows(study: &Study, format: Format, out: &Path, manifest: &mut Manifest) -> anyhow::Result<()> {
    let header = [
        "playKey",
        "j",
        "startFrame",
        "endFrame",
        "T",
        "vStart",
        "vEnd",
        "vPre",
        "vPost",
        "w",
        "caseTag",
    ];
    let mut rows = Vec::new();
    for p in &study.output.plays {
        for (w, v) in p.windows.iter().zip(&p.values) {
            rows.push((p.key, w, v));
        }
    }
    match format {
        Format::Csv => {
            let mut t = Table::new(&header);
            for (key, w, v) in &rows {
                t.row([
                    key.to_string(),
                    w.index.to_string(),
                    w.start_frame.to_string(),
                    w.end_frame.to_string(),
                    w.len().to_string(),
                    fmt_sig(w.v_start),
                    fmt_sig(w.v_end),
                    fmt_sig(w.v_pre),
                    fmt_sig(w.v_post),
                    fmt_sig(v.w),
                    v.case.to_string(),
                ]);
            }
            manifest.emit(out, "windows.csv", &t.into_bytes())?;
        }
        Format::Json => {
            let doc: Vec<Value> = rows
                .iter()
                .map(|(key, w, v)| {
                    json!({
                        "playKey": key.to_string(), "j": w.index, "startFrame": w.start_frame, "endFrame": w.end_frame,
                        "T": w.len(), "vStart": num(w.v_start), "vEnd": num(w.v_end), "vPre": num(w.v_pre),
                        "vPost": num(w.v_post), "w": num(v.w), "caseTag": v.case.as_str(),
                    })
                })
                .collect();
            manifest.emit(out, "windows.json", &json_bytes(&Value::from(doc)))?;
        }
    }
    let summary = window_summaries(study.output.windows());
    manifest.emit(out, "window_summary.json", &json_bytes(&summary_json(&summary)))?;
    println!("{} windows over {} plays", rows.len(), study.output.plays.len());
    Ok(())
}

fn summary_json(s: &fractackle::analytics::WindowSummary) -> Value {
    json!({
        "windowCount": s.window_count,
        "playCount": s.play_count,
        "meanDurationSeconds": s.mean_duration_seconds.map(num),
        "durationFrames": s.duration_frames.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "windowsPerPlay": s.windows_per_play.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "defendersPerWindow": s.defenders_per_window.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
    })
}

fn credit(study: &Study, format: Format, out: &Path, manifest: &mut Manifest) -> anyhow::Result<()> {
    let header = ["playKey", "windowIndex", "defenderId", "wPlayer", "framesInvolved"];
    match format {
        Format::Csv => {
            let mut t = Table::new(&header);
            for c in study.output.credits() {
                t.row([
                    c.key.to_string(),
                    c.index.to_string(),
                    c.defender_id.to_string(),
                    fmt_sig(c.w_player),
                    c.frames_involved.to_string(),
                ]);
            }
            manifest.emit(out, "credits.csv", &t.into_bytes())?;
        }
        Format::Json => {
            let doc: Vec<Value> = study
                .output
                .credits()
                .map(|c| {
                    json!({
                        "playKey": c.key.to_string(), "windowIndex": c.index, "defenderId": c.defender_id,
                        "wPlayer": num(c.w_player), "framesInvolved": c.frames_involved,
                    })
                })
                .collect();
            manifest.emit(out, "credits.json", &json_bytes(&Value::from(doc)))?;
        }
    }
    println!("{} credits", study.output.credits().count());
    Ok(())
}

fn leaderboard_cmd(
    study: &Study,
    config: &RunConfig,
    sort: SortKey,
    top: Option<usize>,
    format: Format,
    out: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    let rows = leaderboard(&study.all_aggregates()?, sort, config.min_plays, top);
    let header = [
        "rank",
        "nflId",
        "displayName",
        "position",
        "plays",
        "windows",
        "totalFT",
        "avgFT",
        "tackles",
        "assists",
        "combinedTackles",
    ];
    match format {
        Format::Csv => {
            let mut t = Table::new(&header);
            for (i, a) in rows.iter().enumerate() {
                t.row([
                    (i + 1).to_string(),
                    a.defender_id.to_string(),
                    a.display_name.clone(),
                    a.position.to_string(),
                    a.plays.to_string(),
                    a.windows.to_string(),
                    fmt_sig(a.total_ft),
                    fmt_sig(a.avg_ft),
                    a.tackles.to_string(),
                    a.assists.to_string(),
                    fmt_sig(a.combined_tackles),
                ]);
            }
            manifest.emit(out, "leaderboard.csv", &t.into_bytes())?;
        }
        Format::Json => {
            let doc: Vec<Value> = rows
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    json!({
                        "rank": i + 1, "nflId": a.defender_id, "displayName": a.display_name,
                        "position": a.position.to_string(), "plays": a.plays, "windows": a.windows,
                        "totalFT": num(a.total_ft), "avgFT": num(a.avg_ft), "tackles": a.tackles,
                        "assists": a.assists, "combinedTackles": num(a.combined_tackles),
                    })
                })
                .collect();
            manifest.emit(out, "leaderboard.json", &json_bytes(&Value::from(doc)))?;
        }
    }
    println!("{} rows", rows.len());
    Ok(())
}

fn validate(study: &Study, config: &RunConfig, out: &Path, manifest: &mut Manifest) -> anyhow::Result<()> {
    let report_json = |c: &fractackle::analytics::CorrelationReport| {
        json!({
            "label": c.label, "grouping": c.grouping, "n": c.n, "r": num(c.r),
            "ci95": [num(c.ci95.0), num(c.ci95.1)],
        })
    };
    let all: Vec<_> = study
        .all_aggregates()?
        .into_iter()
        .filter(|a| a.plays >= config.min_plays)
        .collect();
    let ft: Vec<f64> = all.iter().map(|a| a.total_ft).collect();
    let ct: Vec<f64> = all.iter().map(|a| a.combined_tackles).collect();
    let overall = match correlate("totalFT~combinedTackles", Grouping::Overall, &ft, &ct) {
        Ok(c) => report_json(&c),
        Err(e) => json!({ "error": e.to_string() }),
    };

    let (a, b) = study.period_aggregates()?;
    let rows = stability_rows(&a, &b, config.min_plays);
    let stab = match stability(&rows) {
        Ok(reports) => Value::from(reports.iter().map(report_json).collect::<Vec<_>>()),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let doc = json!({ "fractionalVsCombined": overall, "stability": stab, "players": all.len(), "stabilityPlayers": rows.len() });
    manifest.emit(out, "correlations.json", &json_bytes(&doc))?;

    let mut scatter = Table::new(&[
        "nflId",
        "displayName",
        "position",
        "group",
        "totalFT",
        "combinedTackles",
    ]);
    for p in &all {
        scatter.row([
            p.defender_id.to_string(),
            p.display_name.clone(),
            p.position.to_string(),
            p.position.group().map_or("other", |g| g.label()).to_string(),
            fmt_sig(p.total_ft),
            fmt_sig(p.combined_tackles),
        ]);
    }
    manifest.emit(out, "scatter_totals.csv", &scatter.into_bytes())?;

    let mut periods = Table::new(&[
        "nflId",
        "displayName",
        "position",
        "group",
        "playsA",
        "playsB",
        "ftA",
        "ftB",
        "ctA",
        "ctB",
    ]);
    for r in &rows {
        periods.row([
            r.defender_id.to_string(),
            r.display_name.clone(),
            r.position.to_string(),
            r.group.map_or("other", |g| g.label()).to_string(),
            r.plays_a.to_string(),
            r.plays_b.to_string(),
            fmt_sig(r.ft_a),
            fmt_sig(r.ft_b),
            fmt_sig(r.ct_a),
            fmt_sig(r.ct_b),
        ]);
    }
    manifest.emit(out, "scatter_periods.csv", &periods.into_bytes())?;
    println!(
        "{}",
        serde_json::to_string(&doc["fractionalVsCombined"]).unwrap_or_default()
    );
    Ok(())
}

fn export_play(study: &Study, key: PlayKey, out: &Path, manifest: &mut Manifest) -> Result<(), Failure> {
    let play = study
        .output
        .plays
        .iter()
        .find(|p| p.key == key)
        .ok_or_else(|| Failure::Data(anyhow::anyhow!("play {key} is not among the processed plays")))?;
    let mut t = Table::new(&["frameId", "x", "y", "vToward"]);
    for p in &play.track.points {
        t.row([p.frame_id.to_string(), fmt_sig(p.x), fmt_sig(p.y), fmt_sig(p.v_toward)]);
    }
    manifest.emit(out, &format!("play_{key}.csv"), &t.into_bytes())?;
    Ok(())
}
