//! Command implementations and the clap surface.
//!
//! Exit codes: configuration problems are 2, data problems 3, numerical
//! failures 4.  Failures print a machine-readable JSON object to stderr.
//! All randomness flows from an explicit `--seed`; stochastic commands
//! refuse to run without one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qmi_core::analysis::{ols_fit, points_gained_delta, Design, PointsGainedConvention};
use qmi_core::bootstrap::{
    bootstrap_tau, estimate_surface, pool_replicates, run_replicate, BootstrapSpec,
    PipelineConfig, ReplicateSolve, SurfaceBundle,
};
use qmi_core::domain::{Action, FieldRegion, GameState, RewardSpec, Team};
use qmi_core::inverse::{partition_search, solve_partitioned, PARTITION_CONVENTION};
use qmi_core::policy::{observed_frequency_map, tau_optimal_map_at, DecisionMap};
use qmi_core::sim::{oracle_truth, simulate_with_truth, SyntheticLeague};
use qmi_core::surface::TAU_GRID_LEN;
use qmi_core::transition::{AugmentationPolicy, GameSample};

use crate::formats;
use crate::ingest::{
    self, build_game_logs, filter_decisions, game_samples, parse_plays, FilterSpec, GameLog,
    PipelineFilters, Schema,
};
use crate::simcsv;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Data(m) => ("data", m),
            CliError::Numerical(m) => ("numerical", m),
        };
        json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

impl From<formats::FormatError> for CliError {
    fn from(e: formats::FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ingest::IngestError> for CliError {
    fn from(e: ingest::IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "qmi", version, about = "Risk-preference estimation for fourth-down decisions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct FilterArgs {
    /// Win-probability range `LO:HI` (half-open).
    #[arg(long = "wp-range")]
    pub wp_range: Option<String>,
    /// Seasons, e.g. `2014-2022` or `2018,2019`.
    #[arg(long)]
    pub seasons: Option<String>,
    /// Quarters to keep for decision extraction, e.g. `1,2,3`.
    #[arg(long)]
    pub quarters: Option<String>,
    /// Restrict decisions to one coach-team pair, `COACH:TEAM`.
    #[arg(long)]
    pub coach: Option<String>,
    /// Score-differential bins `LO:HI` (inclusive, repeatable).
    #[arg(long = "score-diff")]
    pub score_diff: Vec<String>,
    /// Minutes-remaining bins `LO:HI` (inclusive, repeatable).
    #[arg(long = "minutes-remaining")]
    pub minutes_remaining: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    /// Normalized game-log file produced by `ingest`.
    #[arg(long)]
    pub logs: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub filters: FilterArgs,
    /// Touchdown point value used by the reward function.
    #[arg(long = "td-value", default_value_t = 6.95)]
    pub td_value: f64,
    /// Fold third-down plays into fourth-down GO transition rows.
    #[arg(long = "augment-go", value_parser = ["on", "off"], default_value = "on")]
    pub augment_go: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normalize play-by-play CSV into per-game state logs.
    Ingest {
        /// Play-by-play CSV.
        #[arg(long)]
        input: PathBuf,
        /// Optional column-name mapping file (`key = value` lines).
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the empirical transition model.
    Estimate(PipelineArgs),
    /// Solve the league value function.
    Value(PipelineArgs),
    /// Build raw and smoothed quantile surfaces.
    Surface(PipelineArgs),
    /// Emit tau-optimal decision maps over the grid and the observed
    /// decision frequencies.
    Policy(PipelineArgs),
    /// Solve the partitioned inverse problem on the full data.
    Inverse(PipelineArgs),
    /// Rank every candidate size-two partition by its minimal loss.
    Partitions(PipelineArgs),
    /// Game-level bootstrap of the whole pipeline.
    Bootstrap {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// RNG seed (required: reproducibility is part of the contract).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of bootstrap replicates.
        #[arg(long = "boot-B", default_value_t = 200)]
        boot_b: u32,
        /// Worker threads for replicate evaluation.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Generate synthetic play-by-play from the configured league.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// RNG seed (required).
        #[arg(long)]
        seed: Option<u64>,
        /// League configuration file; flags below override it.
        #[arg(long)]
        league: Option<PathBuf>,
        #[arg(long)]
        games: Option<u32>,
        /// Coach tau* in the opponent half.
        #[arg(long)]
        tau1: Option<f64>,
        /// Coach tau* in the own half.
        #[arg(long)]
        tau2: Option<f64>,
        /// Coach noise rate.
        #[arg(long)]
        noise: Option<f64>,
        /// Season stamped on emitted rows.
        #[arg(long, default_value_t = 2021)]
        season: u16,
    },
    /// Fit the points-gained regression.
    Regress {
        /// Prepared records CSV with columns:
        /// avg_points_gained,tau_hat,elo,region,n.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Assemble records from logs instead (requires --tau-file,
        /// --elo-file).
        #[arg(long)]
        logs: Option<PathBuf>,
        /// Per-stratum tau estimates (JSON array).
        #[arg(long = "tau-file")]
        tau_file: Option<PathBuf>,
        /// Per-team-season Elo CSV (team,season,elo).
        #[arg(long = "elo-file")]
        elo_file: Option<PathBuf>,
        /// Value-change convention for scoring plays.
        #[arg(long = "points-convention", value_parser = ["reward-inclusive", "value-only"], default_value = "reward-inclusive")]
        points_convention: String,
        #[arg(long = "td-value", default_value_t = 6.95)]
        td_value: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a manifest of the artifacts in a run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Config(format!("cannot create output directory {path:?}: {e}")))
}

fn parse_range_f64(raw: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("range `{raw}` must be LO:HI")))?;
    let lo: f64 = lo.parse().map_err(|_| CliError::Config(format!("bad range `{raw}`")))?;
    let hi: f64 = hi.parse().map_err(|_| CliError::Config(format!("bad range `{raw}`")))?;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(CliError::Config(format!("range `{raw}` out of order or out of [0,1]")));
    }
    Ok((lo, hi))
}

fn parse_int_list(raw: &str) -> Result<BTreeSet<u16>, CliError> {
    let mut out = BTreeSet::new();
    for part in raw.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once('-') {
            let a: u16 = a.parse().map_err(|_| CliError::Config(format!("bad list `{raw}`")))?;
            let b: u16 = b.parse().map_err(|_| CliError::Config(format!("bad list `{raw}`")))?;
            out.extend(a..=b);
        } else {
            out.insert(part.parse().map_err(|_| CliError::Config(format!("bad list `{raw}`")))?);
        }
    }
    Ok(out)
}

fn parse_pair_list(raws: &[String]) -> Result<Option<Vec<(i32, i32)>>, CliError> {
    if raws.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for raw in raws {
        let (lo, hi) = raw
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("bin `{raw}` must be LO:HI")))?;
        let lo = lo.trim().parse().map_err(|_| CliError::Config(format!("bad bin `{raw}`")))?;
        let hi = hi.trim().parse().map_err(|_| CliError::Config(format!("bad bin `{raw}`")))?;
        out.push((lo, hi));
    }
    Ok(Some(out))
}

impl FilterArgs {
    fn to_filter(&self) -> Result<FilterSpec, CliError> {
        let mut filter = FilterSpec::default();
        if let Some(raw) = &self.wp_range {
            filter.wp_range = parse_range_f64(raw)?;
        }
        if let Some(raw) = &self.seasons {
            filter.seasons = Some(parse_int_list(raw)?);
        }
        if let Some(raw) = &self.quarters {
            filter.quarters =
                Some(parse_int_list(raw)?.into_iter().map(|q| q as u8).collect());
        }
        if let Some(raw) = &self.coach {
            let (coach, team) = raw
                .split_once(':')
                .ok_or_else(|| CliError::Config("--coach must be COACH:TEAM".into()))?;
            filter.coach_team = Some((coach.trim().to_string(), team.trim().to_string()));
        }
        filter.score_diff_bins = parse_pair_list(&self.score_diff)?;
        filter.minutes_remaining_bins = parse_pair_list(&self.minutes_remaining)?
            .map(|bins| bins.into_iter().map(|(a, b)| (a.max(0) as u32, b.max(0) as u32)).collect());
        Ok(filter)
    }
}

struct PreparedPipeline {
    samples: Vec<GameSample>,
    decisions: Vec<(qmi_core::domain::FourthDownState, Action)>,
    cfg: PipelineConfig,
}

impl PipelineArgs {
    fn reward(&self) -> RewardSpec {
        RewardSpec { td_points: self.td_value, ..RewardSpec::default() }
    }

    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            reward: self.reward(),
            augmentation: AugmentationPolicy { enabled: self.augment_go == "on" },
        }
    }

    fn load_logs(&self) -> Result<Vec<GameLog>, CliError> {
        if !self.logs.exists() {
            return Err(CliError::Config(format!("log file {:?} does not exist", self.logs)));
        }
        Ok(formats::read_game_logs(&self.logs)?)
    }

    fn prepare(&self) -> Result<PreparedPipeline, CliError> {
        let logs = self.load_logs()?;
        let filters = PipelineFilters::from_decision_filter(self.filters.to_filter()?);
        let samples = game_samples(&logs, &filters);
        let decisions = samples.iter().flat_map(|s| s.decisions.iter().copied()).collect();
        Ok(PreparedPipeline { samples, decisions, cfg: self.config() })
    }
}

fn estimate_bundle(prepared: &PreparedPipeline) -> Result<SurfaceBundle, CliError> {
    estimate_surface(prepared.samples.iter(), &prepared.cfg)
        .map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { input, schema, out } => cmd_ingest(&input, schema.as_deref(), &out),
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Value(args) => cmd_value(&args),
        Command::Surface(args) => cmd_surface(&args),
        Command::Policy(args) => cmd_policy(&args),
        Command::Inverse(args) => cmd_inverse(&args),
        Command::Partitions(args) => cmd_partitions(&args),
        Command::Bootstrap { pipeline, seed, boot_b, threads } => {
            cmd_bootstrap(&pipeline, seed, boot_b, threads)
        }
        Command::Simulate { out, seed, league, games, tau1, tau2, noise, season } => {
            cmd_simulate(&out, seed, league.as_deref(), games, tau1, tau2, noise, season)
        }
        Command::Regress {
            records,
            logs,
            tau_file,
            elo_file,
            points_convention,
            td_value,
            out,
        } => cmd_regress(
            records.as_deref(),
            logs.as_deref(),
            tau_file.as_deref(),
            elo_file.as_deref(),
            &points_convention,
            td_value,
            &out,
        ),
        Command::Report { out } => cmd_report(&out),
    }
}

fn cmd_ingest(input: &Path, schema: Option<&Path>, out: &Path) -> Result<(), CliError> {
    if !input.exists() {
        return Err(CliError::Config(format!("input {input:?} does not exist")));
    }
    ensure_out_dir(out)?;
    let schema = match schema {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read schema {path:?}: {e}")))?;
            Schema::from_text(&text)
        }
        None => Schema::default(),
    };
    let file = File::open(input).map_err(|e| CliError::Data(e.to_string()))?;
    let (plays, report) = parse_plays(file, &schema)?;
    let logs = build_game_logs(plays)?;
    formats::write_game_logs(&out.join("game_logs.jsonl"), &logs)?;
    let decisions_total: usize = logs
        .iter()
        .map(|log| filter_decisions(std::slice::from_ref(log), &FilterSpec::default()).len())
        .sum();
    formats::write_json(
        &out.join("ingest_report.json"),
        &json!({
            "games": logs.len(),
            "rows_total": report.rows_total,
            "rows_kept": report.rows_kept,
            "rows_non_scrimmage": report.rows_non_scrimmage,
            "rows_malformed": report.rows_malformed,
            "malformed_examples": report
                .malformed_examples
                .iter()
                .map(|(line, reason)| json!({ "line": line, "reason": reason }))
                .collect::<Vec<_>>(),
            "fourth_down_decisions": decisions_total,
        }),
    )?;
    log::info!("ingested {} games from {:?}", logs.len(), input);
    Ok(())
}

fn cmd_estimate(args: &PipelineArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    let model = qmi_core::transition::count_transitions(
        prepared.samples.iter(),
        &prepared.cfg.augmentation,
    );
    formats::write_json(&args.out.join("transition_model.json"), &formats::transition_model_json(&model))?;
    Ok(())
}

fn cmd_value(args: &PipelineArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    let bundle = estimate_bundle(&prepared)?;
    formats::write_value_table(&args.out.join("value_table.csv"), &bundle.value, &bundle.fill)?;
    formats::write_json(
        &args.out.join("value_meta.json"),
        &json!({
            "reward": formats::reward_json(&prepared.cfg.reward),
            "filled_policy_rows": bundle.fill.filled_rows.len(),
        }),
    )?;
    Ok(())
}

fn cmd_surface(args: &PipelineArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    let bundle = estimate_bundle(&prepared)?;
    formats::write_json(&args.out.join("surface_raw.json"), &formats::surface_json(&bundle.raw))?;
    formats::write_json(
        &args.out.join("surface_smoothed.json"),
        &formats::surface_json(&bundle.smoothed),
    )?;
    formats::write_json(
        &args.out.join("surface_meta.json"),
        &json!({
            "smoother": qmi_core::smooth::SmoothSpec::METHOD,
            "basis_dim": 4,
            "augment_go": prepared.cfg.augmentation.enabled,
        }),
    )?;
    Ok(())
}

fn cmd_policy(args: &PipelineArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    let bundle = estimate_bundle(&prepared)?;
    let maps: Result<Vec<DecisionMap>, _> =
        (0..TAU_GRID_LEN).map(|gi| tau_optimal_map_at(&bundle.smoothed, gi)).collect();
    let maps = maps.map_err(|e| CliError::Numerical(e.to_string()))?;
    formats::write_decision_maps(&args.out.join("tau_policy_maps.csv"), &maps)?;
    let freq = observed_frequency_map(&prepared.decisions);
    formats::write_frequency_map(&args.out.join("observed_decisions.csv"), &freq)?;
    Ok(())
}

fn cmd_inverse(args: &PipelineArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    if prepared.decisions.is_empty() {
        return Err(CliError::Data("no fourth-down decisions after filtering".into()));
    }
    let bundle = estimate_bundle(&prepared)?;
    let solve = solve_partitioned(&prepared.decisions, &bundle.smoothed)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut regions = serde_json::Map::new();
    let mut curves = Vec::new();
    for (region, label) in solve.regions.iter().zip(["opponent_half", "own_half"]) {
        match region {
            Some(r) => {
                regions.insert(label.into(), formats::tau_set_json(&r.tau_set));
                curves.push((label.to_string(), Some(r.curve.clone())));
            }
            None => {
                regions.insert(label.into(), json!(null));
                curves.push((label.to_string(), None));
            }
        }
    }
    formats::write_json(
        &args.out.join("tau_sets.json"),
        &json!({
            "regions": regions,
            "joint_min_loss": solve.joint_min_loss,
            "decisions": solve.total_n,
        }),
    )?;
    formats::write_loss_curves(&args.out.join("loss_curves.csv"), &curves)?;
    Ok(())
}

fn cmd_partitions(args: &PipelineArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    if prepared.decisions.is_empty() {
        return Err(CliError::Data("no fourth-down decisions after filtering".into()));
    }
    let bundle = estimate_bundle(&prepared)?;
    let result = partition_search(&prepared.decisions, &bundle.smoothed)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    formats::write_partition_csv(&args.out.join("partitions.csv"), &result)?;
    formats::write_json(
        &args.out.join("partitions.json"),
        &formats::partition_search_json(&result, PARTITION_CONVENTION),
    )?;
    Ok(())
}

fn cmd_bootstrap(
    args: &PipelineArgs,
    seed: Option<u64>,
    boot_b: u32,
    threads: usize,
) -> Result<(), CliError> {
    let seed = seed.ok_or_else(|| {
        CliError::Config("--seed is required for bootstrap (no silent default)".into())
    })?;
    if boot_b == 0 {
        return Err(CliError::Config("--boot-B must be at least 1".into()));
    }
    ensure_out_dir(&args.out)?;
    let prepared = args.prepare()?;
    if prepared.samples.is_empty() {
        return Err(CliError::Data("no games in log file".into()));
    }
    let spec = BootstrapSpec { replicates: boot_b, seed };
    let posterior = if threads <= 1 {
        bootstrap_tau(&prepared.samples, &spec, &prepared.cfg)
    } else {
        parallel_bootstrap(&prepared.samples, &spec, &prepared.cfg, threads)
    }
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    formats::write_json(&args.out.join("tau_posterior.json"), &formats::posterior_json(&posterior))?;
    formats::write_posterior_long(&args.out.join("tau_posterior_long.csv"), &posterior)?;
    Ok(())
}

/// Replicates run on worker threads; results land in per-index slots and
/// pool exactly as the serial path does.
fn parallel_bootstrap(
    games: &[GameSample],
    spec: &BootstrapSpec,
    cfg: &PipelineConfig,
    threads: usize,
) -> Result<qmi_core::bootstrap::TauPosterior, qmi_core::bootstrap::BootstrapError> {
    let b = spec.replicates as usize;
    let mut results: Vec<Option<ReplicateSolve>> = vec![None; b];
    let mut failures: Vec<Option<String>> = vec![None; b];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<_> = results
        .iter_mut()
        .zip(failures.iter_mut())
        .map(std::sync::Mutex::new)
        .collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(b) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= b {
                    break;
                }
                let outcome = run_replicate(games, cfg, spec.seed, i as u32);
                let mut slot = slots[i].lock().unwrap();
                match outcome {
                    Ok(solve) => *slot.0 = Some(solve),
                    Err(failure) => *slot.1 = Some(failure.to_string()),
                }
            });
        }
    });
    drop(slots);
    let skipped: Vec<(u32, String)> = failures
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.clone().map(|reason| (i as u32, reason)))
        .collect();
    pool_replicates(&results, spec, skipped)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    out: &Path,
    seed: Option<u64>,
    league_path: Option<&Path>,
    games: Option<u32>,
    tau1: Option<f64>,
    tau2: Option<f64>,
    noise: Option<f64>,
    season: u16,
) -> Result<(), CliError> {
    let seed = seed.ok_or_else(|| {
        CliError::Config("--seed is required for simulate (no silent default)".into())
    })?;
    ensure_out_dir(out)?;
    let mut league = match league_path {
        Some(path) => {
            simcsv::league_from_file(path).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => SyntheticLeague::default(),
    };
    league.seed = seed;
    if let Some(games) = games {
        league.games = games;
    }
    if let Some(tau1) = tau1 {
        league.tau_star.0 = tau1;
    }
    if let Some(tau2) = tau2 {
        league.tau_star.1 = tau2;
    }
    if let Some(noise) = noise {
        league.coach_noise = noise;
    }
    let truth = oracle_truth(&league).map_err(|e| CliError::Numerical(e.to_string()))?;
    let games = simulate_with_truth(&league, &truth).map_err(|e| CliError::Numerical(e.to_string()))?;
    let file = File::create(out.join("synthetic_pbp.csv")).map_err(|e| CliError::Data(e.to_string()))?;
    simcsv::write_sim_csv(std::io::BufWriter::new(file), &games, season)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let coach_map: Vec<String> = (1..=10)
        .map(|bin| {
            (1..=10)
                .map(|ytg| {
                    let sigma = qmi_core::domain::FourthDownState::new(bin, ytg).unwrap();
                    match truth.coach.action(sigma) {
                        Action::Punt => 'P',
                        Action::Fga => 'F',
                        Action::Go => 'G',
                    }
                })
                .collect()
        })
        .collect();
    formats::write_json(
        &out.join("sim_meta.json"),
        &json!({
            "games": league.games,
            "seed": league.seed,
            "tau_star": [league.tau_star.0, league.tau_star.1],
            "coach_noise": league.coach_noise,
            "plays_per_half": [league.plays_per_half.0, league.plays_per_half.1],
            "reward": formats::reward_json(&league.reward),
            "season": season,
            "coach_map_rows_by_bin": coach_map,
        }),
    )?;
    Ok(())
}

fn region_label_parse(raw: &str) -> Result<FieldRegion, CliError> {
    match raw {
        "opponent_half" | "1" | "P1" => Ok(FieldRegion::OpponentHalf),
        "own_half" | "2" | "P2" => Ok(FieldRegion::OwnHalf),
        other => Err(CliError::Data(format!("unknown region label `{other}`"))),
    }
}

fn cmd_regress(
    records: Option<&Path>,
    logs: Option<&Path>,
    tau_file: Option<&Path>,
    elo_file: Option<&Path>,
    points_convention: &str,
    td_value: f64,
    out: &Path,
) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let convention = match points_convention {
        "value-only" => PointsGainedConvention::ValueOnly,
        _ => PointsGainedConvention::RewardInclusive,
    };
    let rows = match (records, logs) {
        (Some(path), _) => read_records_csv(path)?,
        (None, Some(logs_path)) => {
            let tau_file = tau_file.ok_or_else(|| {
                CliError::Config("--tau-file is required when assembling from logs".into())
            })?;
            let elo_file = elo_file.ok_or_else(|| {
                CliError::Config("--elo-file is required when assembling from logs".into())
            })?;
            let reward = RewardSpec { td_points: td_value, ..RewardSpec::default() };
            let rows = assemble_records(logs_path, tau_file, elo_file, reward, convention)?;
            write_records_csv(&out.join("records_used.csv"), &rows)?;
            rows
        }
        (None, None) => {
            return Err(CliError::Config("provide --records or --logs".into()));
        }
    };
    let rows: Vec<RegressRecord> = rows.into_iter().filter(|r| r.n >= 25).collect();
    if rows.len() < 5 {
        return Err(CliError::Data(format!(
            "only {} strata with at least 25 decisions; need 5 or more",
            rows.len()
        )));
    }
    let mut x = Vec::with_capacity(rows.len() * 4);
    let mut y = Vec::with_capacity(rows.len());
    for row in &rows {
        x.extend_from_slice(&[
            1.0,
            row.tau_hat,
            row.elo,
            if row.region == FieldRegion::OwnHalf { 1.0 } else { 0.0 },
        ]);
        y.push(row.avg_points_gained);
    }
    let fit = ols_fit(&Design { x: &x, rows: rows.len(), cols: 4 }, &y)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let terms = ["intercept", "tau_hat", "elo", "own_half"];
    formats::write_regression_table(&out.join("regression.csv"), &fit, &terms)?;
    formats::write_json(&out.join("regression.json"), &formats::regression_json(&fit, &terms))?;
    Ok(())
}

#[derive(Clone, Debug)]
struct RegressRecord {
    coach: String,
    team: String,
    season: u16,
    wp_bin: String,
    region: FieldRegion,
    avg_points_gained: f64,
    n: u64,
    elo: f64,
    tau_hat: f64,
}

fn read_records_csv(path: &Path) -> Result<Vec<RegressRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Data(e.to_string()))?;
    let headers = reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    let pos = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("records file missing column `{name}`")))
    };
    let (ci_apg, ci_tau, ci_elo, ci_region, ci_n) = (
        pos("avg_points_gained")?,
        pos("tau_hat")?,
        pos("elo")?,
        pos("region")?,
        pos("n")?,
    );
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Data(e.to_string()))?;
        let cell = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        out.push(RegressRecord {
            coach: String::new(),
            team: String::new(),
            season: 0,
            wp_bin: String::new(),
            region: region_label_parse(&cell(ci_region))?,
            avg_points_gained: cell(ci_apg)
                .parse()
                .map_err(|_| CliError::Data("bad avg_points_gained".into()))?,
            n: cell(ci_n).parse().map_err(|_| CliError::Data("bad n".into()))?,
            elo: cell(ci_elo).parse().map_err(|_| CliError::Data("bad elo".into()))?,
            tau_hat: cell(ci_tau).parse().map_err(|_| CliError::Data("bad tau_hat".into()))?,
        });
    }
    Ok(out)
}

fn write_records_csv(path: &Path, rows: &[RegressRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(e.to_string()))?;
    w.write_record([
        "coach",
        "team",
        "season",
        "wp_bin",
        "region",
        "avg_points_gained",
        "n",
        "elo",
        "tau_hat",
    ])
    .map_err(|e| CliError::Data(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.coach.clone(),
            r.team.clone(),
            r.season.to_string(),
            r.wp_bin.clone(),
            r.region.label().to_string(),
            format!("{}", r.avg_points_gained),
            r.n.to_string(),
            format!("{}", r.elo),
            format!("{}", r.tau_hat),
        ])
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

/// Coarse win-probability bins used for stratified performance records.
fn wp_bin_label(wp: f64) -> &'static str {
    if wp < 0.2 {
        "low"
    } else if wp < 0.8 {
        "mid"
    } else {
        "high"
    }
}

/// Average value change on fourth-down plays per (coach, team, season, wp
/// bin, region) stratum, joined with supplied Elo and tau estimates.
fn assemble_records(
    logs_path: &Path,
    tau_file: &Path,
    elo_file: &Path,
    reward: RewardSpec,
    convention: PointsGainedConvention,
) -> Result<Vec<RegressRecord>, CliError> {
    let logs = formats::read_game_logs(logs_path)?;
    let filters = PipelineFilters::default();
    let samples = game_samples(&logs, &filters);
    let cfg = PipelineConfig { reward, augmentation: AugmentationPolicy::default() };
    let bundle =
        estimate_surface(samples.iter(), &cfg).map_err(|e| CliError::Numerical(e.to_string()))?;

    // Elo: team,season,elo.
    let mut elo: BTreeMap<(String, u16), f64> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(elo_file).map_err(|e| CliError::Data(e.to_string()))?;
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Data(e.to_string()))?;
        let team = row.get(0).unwrap_or("").trim().to_string();
        let season: u16 =
            row.get(1).unwrap_or("").trim().parse().map_err(|_| CliError::Data("bad elo season".into()))?;
        let value: f64 =
            row.get(2).unwrap_or("").trim().parse().map_err(|_| CliError::Data("bad elo value".into()))?;
        elo.insert((team, season), value);
    }

    // Tau estimates: JSON array of stratum records.
    let tau_values: serde_json::Value = serde_json::from_reader(
        File::open(tau_file).map_err(|e| CliError::Data(e.to_string()))?,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    let mut tau: BTreeMap<(String, String, u16, String, String), f64> = BTreeMap::new();
    for item in tau_values.as_array().ok_or_else(|| CliError::Data("tau file must be an array".into()))? {
        let get = |key: &str| item.get(key).and_then(|v| v.as_str()).unwrap_or("").to_string();
        let season = item.get("season").and_then(|v| v.as_u64()).unwrap_or(0) as u16;
        let tau_hat = item
            .get("tau_hat")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| CliError::Data("tau record missing tau_hat".into()))?;
        tau.insert((get("coach"), get("team"), season, get("wp_bin"), get("region")), tau_hat);
    }

    // Accumulate per-stratum sums of the per-play value change.
    type StratumKey = (String, String, u16, String, usize);
    let mut sums: BTreeMap<StratumKey, (f64, u64)> = BTreeMap::new();
    for log in &logs {
        for window in 0..log.entries.len() {
            let entry = &log.entries[window];
            let Some(state) = entry.state.to_state() else { continue };
            let GameState::Play(ps) = state else { continue };
            if ps.down != 4 {
                continue;
            }
            let play = &log.plays[entry.play];
            if play.fourth_down_action().is_none() {
                continue;
            }
            let Some(next_entry) = log.entries.get(window + 1) else { continue };
            if next_entry.half != entry.half {
                continue;
            }
            let Some(next) = next_entry.state.to_state() else { continue };
            let acting = state.team();
            let (from, to) =
                if acting == Team::A { (state, next) } else { (state.mirror(), next.mirror()) };
            let delta =
                points_gained_delta(&bundle.value, from.index(), to.index(), &cfg.reward, convention);
            let sigma = qmi_core::domain::FourthDownState::from_play(if acting == Team::A {
                ps
            } else {
                ps.mirror()
            })
            .expect("down checked");
            let key = (
                play.coach.clone(),
                play.posteam.clone(),
                play.season,
                wp_bin_label(play.wp).to_string(),
                sigma.region().index(),
            );
            let slot = sums.entry(key).or_insert((0.0, 0));
            slot.0 += delta;
            slot.1 += 1;
        }
    }

    let mut out = Vec::new();
    for ((coach, team, season, wp_bin, region_idx), (sum, n)) in sums {
        let region = if region_idx == 0 { FieldRegion::OpponentHalf } else { FieldRegion::OwnHalf };
        let Some(&elo_value) = elo.get(&(team.clone(), season)) else { continue };
        let Some(&tau_hat) = tau.get(&(
            coach.clone(),
            team.clone(),
            season,
            wp_bin.clone(),
            region.label().to_string(),
        )) else {
            continue;
        };
        out.push(RegressRecord {
            coach,
            team,
            season,
            wp_bin,
            region,
            avg_points_gained: sum / n as f64,
            n,
            elo: elo_value,
            tau_hat,
        });
    }
    Ok(out)
}

fn cmd_report(out: &Path) -> Result<(), CliError> {
    if !out.is_dir() {
        return Err(CliError::Config(format!("{out:?} is not a directory")));
    }
    let manifest = formats::manifest_json(out)?;
    formats::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}
