//! Serialized artifact formats.
//!
//! Every writer is deterministic: map keys are sorted, floats print in
//! shortest round-trip form, and re-running a command with identical
//! inputs overwrites byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use qmi_core::analysis::OlsFit;
use qmi_core::bootstrap::TauPosterior;
use qmi_core::domain::{
    all_fourth_down_states, all_states, Action, GameState, RewardSpec, StateIndex,
};
use qmi_core::inverse::{LossCurve, PartitionSearchResult, TauSet};
use qmi_core::policy::{DecisionMap, FrequencyMap};
use qmi_core::surface::{tau_value, QuantileSurface, SurfaceKind, TAU_GRID_LEN};
use qmi_core::transition::TransitionModel;
use qmi_core::value::{FillReport, ValueTable};

use crate::ingest::GameLog;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad game log line {line}: {reason}")]
    BadGameLog { line: usize, reason: String },
}

pub fn write_game_logs(path: &Path, logs: &[GameLog]) -> Result<(), FormatError> {
    let mut out = BufWriter::new(File::create(path)?);
    for log in logs {
        serde_json::to_writer(&mut out, log)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_game_logs(path: &Path) -> Result<Vec<GameLog>, FormatError> {
    let reader = BufReader::new(File::open(path)?);
    let mut logs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let log: GameLog = serde_json::from_str(&line).map_err(|e| FormatError::BadGameLog {
            line: i + 1,
            reason: e.to_string(),
        })?;
        logs.push(log);
    }
    Ok(logs)
}

/// Sparse-row JSON for the transition model: policy rows keyed by
/// from-state index, action rows keyed by the fourth-down state index and
/// action label.
pub fn transition_model_json(model: &TransitionModel) -> Value {
    let mut policy = Map::new();
    for block in 0..qmi_core::domain::NUM_TEAM_STATES {
        let row = model.policy.row(block);
        if row.is_empty() {
            continue;
        }
        let from = qmi_core::domain::team_block_state(block);
        let mut cells = Map::new();
        for (to, count) in row.counts() {
            cells.insert(to.0.to_string(), json!(count));
        }
        policy.insert(from.0.to_string(), Value::Object(cells));
    }
    let mut actions = Map::new();
    for sigma in all_fourth_down_states() {
        let mut per_action = Map::new();
        for action in Action::ALL {
            let row = model.actions.row(sigma, action);
            if row.is_empty() {
                continue;
            }
            let mut cells = Map::new();
            for (to, count) in row.counts() {
                cells.insert(to.0.to_string(), json!(count));
            }
            per_action.insert(action.label().to_string(), Value::Object(cells));
        }
        if !per_action.is_empty() {
            actions.insert(sigma.state_index().0.to_string(), Value::Object(per_action));
        }
    }
    json!({ "policy": policy, "actions": actions })
}

fn state_fields(state: GameState) -> (String, String, Value, Value, Value, Value) {
    match state {
        GameState::Play(p) => (
            "play".into(),
            if p.team == qmi_core::domain::Team::A { "A".into() } else { "B".into() },
            json!(p.down),
            json!(p.yardline_bin),
            json!(p.ytg_bucket),
            Value::Null,
        ),
        GameState::Score(s) => (
            "score".into(),
            if s.team == qmi_core::domain::Team::A { "A".into() } else { "B".into() },
            Value::Null,
            Value::Null,
            Value::Null,
            json!(match s.kind {
                qmi_core::domain::ScoreKind::Td => "TD",
                qmi_core::domain::ScoreKind::Fg => "FG",
                qmi_core::domain::ScoreKind::Saf => "SAF",
            }),
        ),
    }
}

pub fn write_value_table(path: &Path, table: &ValueTable, fill: &FillReport) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["state_index", "kind", "team", "down", "yardline_bin", "ytg_bucket", "score", "value", "filled_row"])?;
    let filled: std::collections::BTreeSet<u16> = fill.filled_rows.iter().map(|s| s.0).collect();
    for state in all_states() {
        let idx = state.index();
        let (kind, team, down, bin, ytg, score) = state_fields(state);
        let cell = |v: &Value| -> String {
            match v {
                Value::Null => String::new(),
                Value::Number(n) => n.to_string(),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            }
        };
        w.write_record([
            idx.0.to_string(),
            kind,
            team,
            cell(&down),
            cell(&bin),
            cell(&ytg),
            cell(&score),
            format!("{}", table.value(idx)),
            (filled.contains(&idx.0) as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn surface_json(surface: &QuantileSurface) -> Value {
    let grid: Vec<Value> = (0..TAU_GRID_LEN).map(|gi| json!(tau_value(gi))).collect();
    let mut cells = Vec::new();
    for sigma in all_fourth_down_states() {
        for action in Action::ALL {
            let values: Vec<Value> = (0..TAU_GRID_LEN)
                .map(|gi| match surface.get(sigma, action, gi) {
                    Some(v) => json!(v),
                    None => Value::Null,
                })
                .collect();
            cells.push(json!({
                "yardline_bin": sigma.yardline_bin(),
                "ytg_bucket": sigma.ytg_bucket(),
                "action": action.label(),
                "observed": surface.observed(sigma, action),
                "q": values,
            }));
        }
    }
    json!({
        "kind": match surface.kind() { SurfaceKind::Raw => "raw", SurfaceKind::Smoothed => "smoothed" },
        "tau_grid": grid,
        "cells": cells,
    })
}

/// One row per (tau, state): the optimal action across the whole grid.
pub fn write_decision_maps(path: &Path, maps: &[DecisionMap]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tau", "yardline_bin", "ytg_bucket", "action"])?;
    for map in maps {
        let tau = tau_value(map.grid_index());
        for sigma in all_fourth_down_states() {
            w.write_record([
                format!("{tau}"),
                sigma.yardline_bin().to_string(),
                sigma.ytg_bucket().to_string(),
                map.action(sigma).label().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_frequency_map(path: &Path, freq: &FrequencyMap) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["yardline_bin", "ytg_bucket", "action", "count", "majority"])?;
    for sigma in all_fourth_down_states() {
        let majority = freq.majority(sigma);
        for action in Action::ALL {
            w.write_record([
                sigma.yardline_bin().to_string(),
                sigma.ytg_bucket().to_string(),
                action.label().to_string(),
                freq.count(sigma, action).to_string(),
                if majority == Some(action) { "1".to_string() } else { "0".to_string() },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_curves(
    path: &Path,
    curves: &[(String, Option<LossCurve>)],
) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["region", "tau", "loss", "n"])?;
    for (region, curve) in curves {
        if let Some(curve) = curve {
            for gi in 0..TAU_GRID_LEN {
                w.write_record([
                    region.clone(),
                    format!("{}", tau_value(gi)),
                    format!("{}", curve.losses[gi]),
                    curve.n.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn tau_set_json(set: &TauSet) -> Value {
    json!({
        "optimal_taus": set.optimal.iter().map(|&gi| json!(tau_value(gi))).collect::<Vec<_>>(),
        "point_estimate": set.point_estimate,
        "min_loss": set.min_loss,
        "n": set.n,
    })
}

pub fn posterior_json(posterior: &TauPosterior) -> Value {
    let regions: Vec<Value> = posterior
        .regions
        .iter()
        .zip(["opponent_half", "own_half"])
        .map(|(region, label)| {
            json!({
                "region": label,
                "tau_grid": (0..TAU_GRID_LEN).map(|gi| json!(tau_value(gi))).collect::<Vec<_>>(),
                "weights": region.weights.to_vec(),
                "kde": region.kde.to_vec(),
                "median": region.median,
                "interval": [region.interval.0, region.interval.1],
                "boundary_flag": region.boundary_flag,
                "replicate_tau_sets": region
                    .replicate_sets
                    .iter()
                    .map(|set| match set {
                        Some(set) => json!(set.iter().map(|&gi| json!(tau_value(gi))).collect::<Vec<_>>()),
                        None => Value::Null,
                    })
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "replicates_requested": posterior.replicates_requested,
        "replicates_used": posterior.replicates_used,
        "seed": posterior.seed,
        "skipped": posterior
            .skipped
            .iter()
            .map(|(b, reason)| json!({ "replicate": b, "reason": reason }))
            .collect::<Vec<_>>(),
        "regions": regions,
    })
}

/// Long-format mass table for boxplot-style rendering.
pub fn write_posterior_long(path: &Path, posterior: &TauPosterior) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["region", "tau", "weight"])?;
    for (region, label) in posterior.regions.iter().zip(["opponent_half", "own_half"]) {
        for gi in 0..TAU_GRID_LEN {
            if region.weights[gi] > 0.0 {
                w.write_record([
                    label.to_string(),
                    format!("{}", tau_value(gi)),
                    format!("{}", region.weights[gi]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn partition_search_json(result: &PartitionSearchResult, convention: &str) -> Value {
    let ranked: Vec<Value> = result
        .ranked
        .iter()
        .enumerate()
        .map(|(rank, entry)| {
            json!({
                "rank": rank + 1,
                "shape": entry.partition.shape.label(),
                "anchor_yardline_bin": entry.partition.anchor.0,
                "anchor_ytg": entry.partition.anchor.1,
                "min_joint_loss": entry.min_joint_loss,
            })
        })
        .collect();
    json!({
        "candidate_count": result.ranked.len(),
        "dedupe_convention": convention,
        "singleton_lower_bound": result.singleton_lower_bound,
        "ranked": ranked,
    })
}

pub fn write_partition_csv(path: &Path, result: &PartitionSearchResult) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "shape", "anchor_yardline_bin", "anchor_ytg", "min_joint_loss"])?;
    for (rank, entry) in result.ranked.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            entry.partition.shape.label().to_string(),
            entry.partition.anchor.0.to_string(),
            entry.partition.anchor.1.to_string(),
            format!("{}", entry.min_joint_loss),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_regression_table(
    path: &Path,
    fit: &OlsFit,
    terms: &[&str],
) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["term", "estimate", "std_err", "partial_r2"])?;
    for (i, term) in terms.iter().enumerate() {
        w.write_record([
            term.to_string(),
            format!("{}", fit.coef[i]),
            format!("{}", fit.std_err[i]),
            if fit.partial_r2[i].is_nan() {
                "NA".to_string()
            } else {
                format!("{}", fit.partial_r2[i])
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn regression_json(fit: &OlsFit, terms: &[&str]) -> Value {
    json!({
        "terms": terms,
        "coefficients": fit.coef,
        "std_errors": fit.std_err,
        "partial_r2": fit.partial_r2.iter().map(|v| if v.is_nan() { Value::Null } else { json!(v) }).collect::<Vec<_>>(),
        "r2": fit.r2,
        "adj_r2": fit.adj_r2,
        "residual_se": fit.residual_se,
        "f_statistic": fit.f_stat,
        "df_resid": fit.df_resid,
        "n": fit.n,
    })
}

/// Reward spec echo for provenance blocks inside artifact files.
pub fn reward_json(spec: &RewardSpec) -> Value {
    json!({ "td_points": spec.td_points, "fg_points": spec.fg_points, "saf_points": spec.saf_points })
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), FormatError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Index of every artifact present in a run directory.
pub fn manifest_json(dir: &Path) -> Result<Value, FormatError> {
    let mut files = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        if name == "manifest.json" {
            continue;
        }
        let meta = std::fs::metadata(dir.join(&name))?;
        files.push(json!({ "file": name, "bytes": meta.len() }));
    }
    Ok(json!({ "artifacts": files }))
}

/// Dense-state helper exposed for tests that read value CSVs back.
pub fn state_label(idx: StateIndex) -> String {
    match GameState::from_index(idx) {
        Some(s) => format!("{s:?}"),
        None => "invalid".into(),
    }
}
