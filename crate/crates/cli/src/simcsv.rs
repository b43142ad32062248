//! Simulator output in the ingest CSV schema, and the plain-text league
//! configuration format.

use std::io::Write;
use std::path::Path;

use qmi_core::domain::ScoreKind;
use qmi_core::sim::{SimGame, SimPlayType, SyntheticLeague};

pub const HOME_CODE: &str = "HOM";
pub const AWAY_CODE: &str = "AWY";
pub const HOME_COACH: &str = "COACH_HOME";
pub const AWAY_COACH: &str = "COACH_AWAY";

#[derive(Debug, thiserror::Error)]
pub enum SimCsvError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("league config line {line}: {reason}")]
    BadConfig { line: usize, reason: String },
}

/// Header matching the default ingest schema plus coach columns.
pub const SIM_HEADER: &str = "game_id,play_id,posteam,home_team,down,ydstogo,yardline_100,play_type,td_team,field_goal_result,safety,wp,season,qtr,score_differential,game_seconds_remaining,yards_gained,home_coach,away_coach";

/// Writes simulated games as play-by-play CSV that round-trips through the
/// ingest stage unchanged.
pub fn write_sim_csv<W: Write>(mut out: W, games: &[SimGame], season: u16) -> Result<(), SimCsvError> {
    writeln!(out, "{SIM_HEADER}")?;
    for game in games {
        let game_id = format!("SIM_{:06}", game.index);
        for row in &game.rows {
            let posteam = if row.posteam_is_home { HOME_CODE } else { AWAY_CODE };
            let play_type = match row.play_type {
                SimPlayType::Run => "run",
                SimPlayType::Pass => "pass",
                SimPlayType::FieldGoal => "field_goal",
                SimPlayType::Punt => "punt",
            };
            let td_team = match row.score_event {
                Some((by_home, ScoreKind::Td)) => {
                    if by_home {
                        HOME_CODE
                    } else {
                        AWAY_CODE
                    }
                }
                _ => "",
            };
            let fg_result = if row.play_type == SimPlayType::FieldGoal {
                match row.score_event {
                    Some((_, ScoreKind::Fg)) => "made",
                    _ => "missed",
                }
            } else {
                ""
            };
            let safety = match row.score_event {
                Some((_, ScoreKind::Saf)) => "1",
                _ => "0",
            };
            writeln!(
                out,
                "{game_id},{},{posteam},{HOME_CODE},{},{},{},{play_type},{td_team},{fg_result},{safety},0.5,{season},{},{},{},{},{HOME_COACH},{AWAY_COACH}",
                row.play_index,
                row.down,
                row.ytg,
                row.yardline_100,
                row.quarter,
                row.score_differential,
                row.seconds_remaining,
                row.yards_gained,
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses the plain-text league configuration (`key = value` lines, `#`
/// comments).  Unknown keys are rejected so typos cannot silently fall
/// back to defaults.
pub fn league_from_text(text: &str) -> Result<SyntheticLeague, SimCsvError> {
    let mut league = SyntheticLeague::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SimCsvError::BadConfig {
            line: i + 1,
            reason: "expected key = value".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |reason: &str| SimCsvError::BadConfig { line: i + 1, reason: reason.into() };
        match key {
            "games" => league.games = value.parse().map_err(|_| bad("bad games"))?,
            "seed" => league.seed = value.parse().map_err(|_| bad("bad seed"))?,
            "tau1" => league.tau_star.0 = value.parse().map_err(|_| bad("bad tau1"))?,
            "tau2" => league.tau_star.1 = value.parse().map_err(|_| bad("bad tau2"))?,
            "coach_noise" => league.coach_noise = value.parse().map_err(|_| bad("bad coach_noise"))?,
            "plays_per_half_min" => {
                league.plays_per_half.0 = value.parse().map_err(|_| bad("bad plays_per_half_min"))?
            }
            "plays_per_half_max" => {
                league.plays_per_half.1 = value.parse().map_err(|_| bad("bad plays_per_half_max"))?
            }
            "td_points" => league.reward.td_points = value.parse().map_err(|_| bad("bad td_points"))?,
            "turnover_prob" => {
                league.params.turnover_prob = value.parse().map_err(|_| bad("bad turnover_prob"))?
            }
            "gain_atoms" => {
                league.params.gain_atoms = parse_atoms(value).ok_or_else(|| bad("bad gain_atoms"))?
            }
            "punt_net" => {
                league.params.punt_net =
                    parse_atoms(value).ok_or_else(|| bad("bad punt_net"))?
                        .into_iter()
                        .map(|(v, p): (i16, f64)| (v as u8, p))
                        .collect()
            }
            "receive_spots" => {
                league.params.receive_spots =
                    parse_atoms(value).ok_or_else(|| bad("bad receive_spots"))?
                        .into_iter()
                        .map(|(v, p): (i16, f64)| (v as u8, p))
                        .collect()
            }
            "fg_make" => {
                let probs: Vec<f64> =
                    value.split(',').map(|s| s.trim().parse().unwrap_or(-1.0)).collect();
                if probs.len() != 10 || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(bad("fg_make needs 10 probabilities"));
                }
                league.params.fg_make.copy_from_slice(&probs);
            }
            other => {
                return Err(SimCsvError::BadConfig {
                    line: i + 1,
                    reason: format!("unknown key `{other}`"),
                })
            }
        }
    }
    Ok(league)
}

fn parse_atoms(value: &str) -> Option<Vec<(i16, f64)>> {
    let mut out = Vec::new();
    for part in value.split(',') {
        let (v, p) = part.trim().split_once(':')?;
        out.push((v.trim().parse().ok()?, p.trim().parse().ok()?));
    }
    Some(out)
}

pub fn league_from_file(path: &Path) -> Result<SyntheticLeague, SimCsvError> {
    league_from_text(&std::fs::read_to_string(path)?)
}
