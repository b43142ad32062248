//! Play-by-play ingestion: CSV parsing, game-log construction, and
//! stratification filters.
//!
//! The default column names follow the public nflfastR export; a schema
//! file of `key = value` lines remaps them.  Game logs orient team A to
//! the home side; canonicalization to acting-team-A happens when samples
//! are extracted.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use qmi_core::domain::{Action, FourthDownState, GameState, PlayState, ScoreKind, ScoreState, Team};
use qmi_core::transition::{ActionCounts, AugmentationPolicy, GameSample, PolicyCounts, ThirdDownObs};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("more than 10% of data rows malformed ({malformed} of {total})")]
    ParseThresholdExceeded { malformed: usize, total: usize },
    #[error("game {game_id}: possession by unknown team code `{code}`")]
    InconsistentPossession { game_id: String, code: String },
    #[error("game {game_id}: empty team code on play {play_index}")]
    UnknownTeamCode { game_id: String, play_index: u64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One usable scrimmage-play row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub game_id: String,
    pub play_index: u64,
    pub season: u16,
    pub quarter: u8,
    pub posteam: String,
    pub home_team: String,
    pub down: u8,
    pub ytg: u16,
    pub yardline_100: u8,
    pub play_type: String,
    pub wp: f64,
    pub score_differential: i32,
    pub game_seconds_remaining: i64,
    #[serde(default)]
    pub coach: String,
    pub yards_gained: i32,
    pub nullified: bool,
    #[serde(default)]
    pub td_team: Option<String>,
    #[serde(default)]
    pub fg_made: Option<bool>,
    #[serde(default)]
    pub safety: bool,
}

impl PlayRecord {
    /// GO/FGA/PUNT classification from the play type; `None` for
    /// unclassifiable fourth-down plays (kneels, spikes).
    pub fn fourth_down_action(&self) -> Option<Action> {
        match self.play_type.as_str() {
            "pass" | "run" => Some(Action::Go),
            "field_goal" => Some(Action::Fga),
            "punt" => Some(Action::Punt),
            _ => None,
        }
    }

    /// Scoring event produced by this play: (team code, kind).  Touchdowns
    /// credit the team named in the data (which may be the defense); field
    /// goals credit the kicking team; safeties debit the side in
    /// possession.
    pub fn score_event(&self) -> Option<(String, ScoreKind)> {
        if let Some(team) = &self.td_team {
            return Some((team.clone(), ScoreKind::Td));
        }
        if self.fg_made == Some(true) {
            return Some((self.posteam.clone(), ScoreKind::Fg));
        }
        if self.safety {
            return Some((self.posteam.clone(), ScoreKind::Saf));
        }
        None
    }

    pub fn half(&self) -> u8 {
        match self.quarter {
            1 | 2 => 1,
            3 | 4 => 2,
            _ => 3,
        }
    }
}

/// Column-name mapping with nflfastR defaults.
#[derive(Clone, Debug)]
pub struct Schema {
    names: BTreeMap<&'static str, String>,
}

pub const SCHEMA_KEYS: &[&str] = &[
    "game_id",
    "play_id",
    "posteam",
    "home_team",
    "down",
    "ydstogo",
    "yardline_100",
    "play_type",
    "td_team",
    "field_goal_result",
    "safety",
    "wp",
    "season",
    "qtr",
    "score_differential",
    "game_seconds_remaining",
    "yards_gained",
    "home_coach",
    "away_coach",
];

/// Columns that may be absent from the file entirely.
const OPTIONAL_KEYS: &[&str] = &["home_coach", "away_coach", "td_team", "field_goal_result", "safety"];

impl Default for Schema {
    fn default() -> Self {
        let mut names = BTreeMap::new();
        for &key in SCHEMA_KEYS {
            names.insert(key, key.to_string());
        }
        Schema { names }
    }
}

impl Schema {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str) -> Schema {
        let mut schema = Schema::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let key = key.trim();
                if let Some(canon) = SCHEMA_KEYS.iter().find(|&&k| k == key) {
                    schema.names.insert(canon, value.trim().to_string());
                }
            }
        }
        schema
    }

    fn column<'a>(&'a self, key: &'a str) -> &'a str {
        self.names.get(key).map(|s| s.as_str()).unwrap_or(key)
    }
}

/// Parse outcome with per-row drop accounting.
#[derive(Debug, Default)]
pub struct ParseReport {
    pub rows_total: usize,
    pub rows_kept: usize,
    /// Rows without a down value (kickoffs, conversions, timeouts).
    pub rows_non_scrimmage: usize,
    pub rows_malformed: usize,
    pub malformed_examples: Vec<(usize, String)>,
}

fn parse_bool_cell(raw: &str) -> bool {
    matches!(raw.trim(), "1" | "true" | "TRUE" | "True")
}

/// Reads play rows from CSV.  Rows lacking down/yardline (non-scrimmage
/// plays) are dropped and counted; malformed rows are collected and only
/// abort the parse when they exceed 10% of data rows.
pub fn parse_plays<R: Read>(
    source: R,
    schema: &Schema,
) -> Result<(Vec<PlayRecord>, ParseReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let mut index = BTreeMap::new();
    for key in SCHEMA_KEYS {
        let name = schema.column(key);
        match headers.iter().position(|h| h == name) {
            Some(pos) => {
                index.insert(*key, pos);
            }
            None if OPTIONAL_KEYS.contains(key) => {}
            None => return Err(IngestError::MissingColumn(name.to_string())),
        }
    }
    let get = |record: &csv::StringRecord, key: &str| -> Option<String> {
        index.get(key).and_then(|&pos| record.get(pos)).map(|s| s.trim().to_string())
    };

    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        report.rows_total += 1;
        let down_raw = get(&row, "down").unwrap_or_default();
        if down_raw.is_empty() || down_raw == "NA" {
            report.rows_non_scrimmage += 1;
            continue;
        }
        match parse_row(&row, &get, &down_raw) {
            Ok(record) => {
                report.rows_kept += 1;
                out.push(record);
            }
            Err(reason) => {
                report.rows_malformed += 1;
                if report.malformed_examples.len() < 20 {
                    report.malformed_examples.push((line + 2, reason));
                }
            }
        }
    }
    if report.rows_malformed * 10 > report.rows_total.max(1) {
        return Err(IngestError::ParseThresholdExceeded {
            malformed: report.rows_malformed,
            total: report.rows_total,
        });
    }
    out.sort_by(|a, b| a.game_id.cmp(&b.game_id).then(a.play_index.cmp(&b.play_index)));
    Ok((out, report))
}

fn parse_row(
    row: &csv::StringRecord,
    get: &dyn Fn(&csv::StringRecord, &str) -> Option<String>,
    down_raw: &str,
) -> Result<PlayRecord, String> {
    let field = |key: &str| get(row, key).filter(|s| !s.is_empty() && s != "NA");
    let down: u8 = down_raw.parse().map_err(|_| format!("bad down `{down_raw}`"))?;
    if !(1..=4).contains(&down) {
        return Err(format!("down {down} out of range"));
    }
    let ytg: u16 = field("ydstogo")
        .ok_or("missing ydstogo")?
        .parse()
        .map_err(|_| "bad ydstogo".to_string())?;
    if ytg == 0 {
        return Err("ydstogo must be at least 1".into());
    }
    let yardline_100: u8 = field("yardline_100")
        .ok_or("missing yardline_100")?
        .parse()
        .map_err(|_| "bad yardline_100".to_string())?;
    if !(1..=99).contains(&yardline_100) {
        return Err(format!("yardline_100 {yardline_100} out of range"));
    }
    let wp: f64 = match field("wp") {
        Some(raw) => raw.parse().map_err(|_| "bad wp".to_string())?,
        None => 0.5,
    };
    if !(0.0..=1.0).contains(&wp) {
        return Err(format!("wp {wp} out of range"));
    }
    let posteam = field("posteam").ok_or("missing posteam")?;
    let home_team = field("home_team").ok_or("missing home_team")?;
    let play_type = field("play_type").unwrap_or_default();
    let nullified = play_type == "no_play";
    let coach = if posteam == home_team {
        field("home_coach").unwrap_or_default()
    } else {
        field("away_coach").unwrap_or_default()
    };
    Ok(PlayRecord {
        game_id: field("game_id").ok_or("missing game_id")?,
        play_index: field("play_id")
            .ok_or("missing play_id")?
            .parse::<f64>()
            .map_err(|_| "bad play_id".to_string())? as u64,
        season: field("season")
            .ok_or("missing season")?
            .parse()
            .map_err(|_| "bad season".to_string())?,
        quarter: field("qtr")
            .ok_or("missing qtr")?
            .parse()
            .map_err(|_| "bad qtr".to_string())?,
        posteam,
        home_team,
        down,
        ytg,
        yardline_100,
        play_type,
        wp,
        score_differential: field("score_differential")
            .and_then(|s| s.parse::<f64>().ok())
            .map(|v| v as i32)
            .unwrap_or(0),
        game_seconds_remaining: field("game_seconds_remaining")
            .and_then(|s| s.parse::<f64>().ok())
            .map(|v| v as i64)
            .unwrap_or(0),
        coach,
        yards_gained: field("yards_gained")
            .and_then(|s| s.parse::<f64>().ok())
            .map(|v| v as i32)
            .unwrap_or(0),
        nullified,
        td_team: field("td_team"),
        fg_made: field("field_goal_result").map(|s| s == "made"),
        safety: field("safety").map(|s| parse_bool_cell(&s)).unwrap_or(false),
    })
}

/// One state in a game's normalized sequence.  `play` indexes into the
/// log's play list (score states point at the play that produced them).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub state: StateDto,
    pub action: Option<String>,
    pub play: usize,
    pub half: u8,
}

/// Serializable mirror of [`GameState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateDto {
    Play { team: char, down: u8, bin: u8, ytg: u8 },
    Score { team: char, score: String },
}

impl StateDto {
    pub fn from_state(state: GameState) -> StateDto {
        let team = |t: Team| if t == Team::A { 'A' } else { 'B' };
        match state {
            GameState::Play(p) => StateDto::Play {
                team: team(p.team),
                down: p.down,
                bin: p.yardline_bin,
                ytg: p.ytg_bucket,
            },
            GameState::Score(s) => StateDto::Score {
                team: team(s.team),
                score: match s.kind {
                    ScoreKind::Td => "TD".into(),
                    ScoreKind::Fg => "FG".into(),
                    ScoreKind::Saf => "SAF".into(),
                },
            },
        }
    }

    pub fn to_state(&self) -> Option<GameState> {
        let team = |c: char| if c == 'A' { Some(Team::A) } else if c == 'B' { Some(Team::B) } else { None };
        match self {
            StateDto::Play { team: t, down, bin, ytg } => {
                Some(GameState::Play(PlayState::new(team(*t)?, *down, *bin, *ytg)?))
            }
            StateDto::Score { team: t, score } => {
                let kind = match score.as_str() {
                    "TD" => ScoreKind::Td,
                    "FG" => ScoreKind::Fg,
                    "SAF" => ScoreKind::Saf,
                    _ => return None,
                };
                Some(GameState::Score(ScoreState { team: team(*t)?, kind }))
            }
        }
    }
}

/// Normalized per-game state sequence plus the underlying plays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameLog {
    pub game_id: String,
    pub entries: Vec<LogEntry>,
    pub plays: Vec<PlayRecord>,
}

fn bucket_of_ytg(ytg: u16) -> u8 {
    ytg.min(10) as u8
}

fn bin_of_yardline(yardline_100: u8) -> u8 {
    (yardline_100 - 1) / 10 + 1
}

/// Builds per-game state sequences.  Team A is the home side; scoring
/// plays additionally emit their scoring state; nullified plays and
/// non-scrimmage rows never become states; nothing links across halves.
pub fn build_game_logs(plays: Vec<PlayRecord>) -> Result<Vec<GameLog>, IngestError> {
    let mut games: BTreeMap<String, Vec<PlayRecord>> = BTreeMap::new();
    for play in plays {
        games.entry(play.game_id.clone()).or_default().push(play);
    }
    let mut logs = Vec::with_capacity(games.len());
    for (game_id, mut plays) in games {
        plays.sort_by_key(|p| p.play_index);
        let mut away_code: Option<String> = None;
        let mut entries = Vec::new();
        for (pi, play) in plays.iter().enumerate() {
            if play.posteam.is_empty() {
                return Err(IngestError::UnknownTeamCode {
                    game_id,
                    play_index: play.play_index,
                });
            }
            if play.posteam != play.home_team {
                match &away_code {
                    None => away_code = Some(play.posteam.clone()),
                    Some(code) if *code != play.posteam => {
                        return Err(IngestError::InconsistentPossession {
                            game_id,
                            code: play.posteam.clone(),
                        });
                    }
                    _ => {}
                }
            }
            if play.nullified {
                continue;
            }
            let team = if play.posteam == play.home_team { Team::A } else { Team::B };
            let state = GameState::Play(
                PlayState::new(
                    team,
                    play.down,
                    bin_of_yardline(play.yardline_100),
                    bucket_of_ytg(play.ytg),
                )
                .expect("validated fields"),
            );
            let action = if play.down == 4 {
                play.fourth_down_action().map(|a| a.label().to_string())
            } else {
                None
            };
            entries.push(LogEntry {
                state: StateDto::from_state(state),
                action,
                play: pi,
                half: play.half(),
            });
            if let Some((code, kind)) = play.score_event() {
                let steam = if code == play.home_team { Team::A } else { Team::B };
                entries.push(LogEntry {
                    state: StateDto::from_state(GameState::Score(ScoreState { team: steam, kind })),
                    action: None,
                    play: pi,
                    half: play.half(),
                });
            }
        }
        logs.push(GameLog { game_id, entries, plays });
    }
    Ok(logs)
}

/// Stratification filter.  `wp_range` is half-open `[lo, hi)`, except that
/// `hi = 1` also admits wp exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    pub seasons: Option<BTreeSet<u16>>,
    pub wp_range: (f64, f64),
    pub quarters: Option<BTreeSet<u8>>,
    /// (coach name, team code) pair.
    pub coach_team: Option<(String, String)>,
    pub score_diff_bins: Option<Vec<(i32, i32)>>,
    /// Minutes remaining in the game, inclusive ranges.
    pub minutes_remaining_bins: Option<Vec<(u32, u32)>>,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            seasons: None,
            wp_range: (0.0, 1.0),
            quarters: None,
            coach_team: None,
            score_diff_bins: None,
            minutes_remaining_bins: None,
        }
    }
}

impl FilterSpec {
    pub fn matches(&self, play: &PlayRecord) -> bool {
        if let Some(seasons) = &self.seasons {
            if !seasons.contains(&play.season) {
                return false;
            }
        }
        let (lo, hi) = self.wp_range;
        let wp_ok = play.wp >= lo && (play.wp < hi || (hi >= 1.0 && play.wp <= 1.0));
        if !wp_ok {
            return false;
        }
        if let Some(quarters) = &self.quarters {
            if !quarters.contains(&play.quarter) {
                return false;
            }
        }
        if let Some((coach, team)) = &self.coach_team {
            if play.coach != *coach || play.posteam != *team {
                return false;
            }
        }
        if let Some(bins) = &self.score_diff_bins {
            if !bins.iter().any(|&(lo, hi)| play.score_differential >= lo && play.score_differential <= hi)
            {
                return false;
            }
        }
        if let Some(bins) = &self.minutes_remaining_bins {
            let minutes = (play.game_seconds_remaining.max(0) / 60) as u32;
            if !bins.iter().any(|&(lo, hi)| minutes >= lo && minutes <= hi) {
                return false;
            }
        }
        true
    }
}

/// Which filter applies to which stage.  Transition estimation keeps the
/// league-average policy league-wide: only win-probability and season
/// clauses restrict it by default, while decision extraction honors every
/// clause.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineFilters {
    pub transitions: FilterSpec,
    pub decisions: FilterSpec,
}

impl PipelineFilters {
    pub fn from_decision_filter(decisions: FilterSpec) -> PipelineFilters {
        let transitions = FilterSpec {
            seasons: decisions.seasons.clone(),
            wp_range: decisions.wp_range,
            ..FilterSpec::default()
        };
        PipelineFilters { transitions, decisions }
    }
}

/// Fourth-down decision plays matching the filter, canonicalized.
pub fn filter_decisions<'a>(
    logs: &'a [GameLog],
    filter: &FilterSpec,
) -> Vec<(FourthDownState, Action, &'a PlayRecord)> {
    let mut out = Vec::new();
    for log in logs {
        for entry in &log.entries {
            let Some(state) = entry.state.to_state() else { continue };
            let GameState::Play(ps) = state else { continue };
            if ps.down != 4 {
                continue;
            }
            let play = &log.plays[entry.play];
            let Some(action) = play.fourth_down_action() else { continue };
            if !filter.matches(play) {
                continue;
            }
            let sigma = FourthDownState::from_play(ps).expect("down checked");
            out.push((sigma, action, play));
        }
    }
    out
}

/// Extracts the per-game sample the estimation stages consume.
pub fn game_samples(logs: &[GameLog], filters: &PipelineFilters) -> Vec<GameSample> {
    let mut out = Vec::with_capacity(logs.len());
    for log in logs {
        let mut sample = GameSample::default();
        for window in 0..log.entries.len() {
            let entry = &log.entries[window];
            let Some(state) = entry.state.to_state() else { continue };
            let play = &log.plays[entry.play];
            let next = log.entries.get(window + 1).and_then(|e| {
                if e.half == entry.half {
                    e.state.to_state()
                } else {
                    None
                }
            });

            // Decisions need no successor; everything else does.
            if let GameState::Play(ps) = state {
                if ps.down == 4 {
                    if let Some(action) = play.fourth_down_action() {
                        if filters.decisions.matches(play) {
                            let sigma = FourthDownState::from_play(ps).expect("down checked");
                            sample.decisions.push((sigma, action));
                        }
                    }
                }
            }

            let Some(next) = next else { continue };
            if !filters.transitions.matches(play) {
                continue;
            }
            let acting = state.team();
            let (from, to) =
                if acting == Team::A { (state, next) } else { (state.mirror(), next.mirror()) };
            sample.policy_pairs.push((from.index(), to.index()));

            if let GameState::Play(ps) = state {
                let canonical = if acting == Team::A { ps } else { ps.mirror() };
                if ps.down == 4 {
                    if let Some(action) = play.fourth_down_action() {
                        let sigma = FourthDownState::from_play(canonical).expect("down checked");
                        sample.action_obs.push((sigma, action, to.index()));
                    }
                } else if ps.down == 3 && matches!(play.play_type.as_str(), "pass" | "run") {
                    let sigma = FourthDownState::new(canonical.yardline_bin, canonical.ytg_bucket)
                        .expect("valid bins");
                    let converted = play.yards_gained >= play.ytg as i32;
                    let scored = matches!(next, GameState::Score(_));
                    let turned_over = match next {
                        GameState::Play(p2) => p2.team != acting,
                        GameState::Score(_) => false,
                    };
                    let post =
                        (play.yardline_100 as i32 - play.yards_gained).clamp(1, 99) as u8;
                    sample.third_down_obs.push(ThirdDownObs {
                        as_fourth: sigma,
                        kept_realized_outcome: converted || scored || turned_over,
                        realized_next: to.index(),
                        post_yardline_100: post,
                    });
                }
            }
        }
        out.push(sample);
    }
    out
}

/// Policy-chain counts from logs under a filter.
pub fn count_policy_transitions(logs: &[GameLog], filter: &FilterSpec) -> PolicyCounts {
    let filters = PipelineFilters {
        transitions: filter.clone(),
        decisions: FilterSpec::default(),
    };
    let samples = game_samples(logs, &filters);
    qmi_core::transition::count_policy_transitions(samples.iter())
}

/// Fourth-down action counts from logs under a filter.
pub fn count_action_transitions(
    logs: &[GameLog],
    filter: &FilterSpec,
    aug: &AugmentationPolicy,
) -> ActionCounts {
    let filters = PipelineFilters {
        transitions: filter.clone(),
        decisions: FilterSpec::default(),
    };
    let samples = game_samples(logs, &filters);
    qmi_core::transition::count_action_transitions(samples.iter(), aug)
}
