//! Synthetic league simulator and its exact ground truth.
//!
//! The league is a parametric drive model on the binned lattice: one
//! discrete yardage-gain distribution drives every scrimmage play, with
//! mechanical conversion/touchdown/turnover-on-downs outcomes, plus kick
//! models for field goals and punts.  Every play state carries the
//! representative literals of its bin, so the induced kernels are exact
//! finite pushforwards of the atom lists: the simulator samples the same
//! atoms the oracle enumerates, and an ingested round trip reproduces the
//! kernels with no within-bin drift.
//!
//! The synthetic coach is tau*-optimal per field region against the
//! league's own next-state values, found by fixed-point iteration (the
//! fourth-down rows of the policy chain feed the values that define the
//! optimal fourth-down rows).  An optional noise rate makes the coach play
//! a uniformly random action, which keeps every action row observable.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::domain::{
    all_fourth_down_states, Action, FieldRegion, FourthDownState, GameState, PlayState,
    RewardSpec, ScoreKind, ScoreState, StateIndex, Team, NUM_TEAM_STATES,
};
use crate::policy::{tau_optimal_map, DecisionMap};
use crate::surface::{build_surface, ActionRows, QuantileSurface};
use crate::transition::turnover_on_downs_state;
use crate::value::{solve_value, PolicyMatrix, ValueTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimError {
    InvalidKernel(&'static str),
    /// The league chain's value solve is singular.
    SingularChain,
    /// Coach fixed-point iteration did not settle.
    CoachNotConverged,
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::InvalidKernel(what) => write!(f, "invalid kernel: {what}"),
            SimError::SingularChain => write!(f, "league chain is singular"),
            SimError::CoachNotConverged => write!(f, "coach policy iteration did not converge"),
        }
    }
}

impl core::error::Error for SimError {}

/// Generative knobs for the drive model.
#[derive(Clone, Debug, PartialEq)]
pub struct LeagueParams {
    /// Scrimmage yardage outcomes (gain, probability); must sum to 1.
    pub gain_atoms: Vec<(i16, f64)>,
    /// In-play turnover hazard (interception/fumble), applied before the
    /// gain draw.
    pub turnover_prob: f64,
    /// Field-goal make probability per yardline bin.
    pub fg_make: [f64; 10],
    /// Punt net yardage outcomes (net, probability); must sum to 1.
    pub punt_net: Vec<(u8, f64)>,
    /// Receiving team's yards-to-goal after any score (spot, probability).
    pub receive_spots: Vec<(u8, f64)>,
}

impl Default for LeagueParams {
    fn default() -> Self {
        LeagueParams {
            gain_atoms: vec![
                (-8, 0.020),
                (-4, 0.040),
                (-2, 0.050),
                (-1, 0.050),
                (0, 0.127),
                (1, 0.093),
                (2, 0.070),
                (3, 0.037),
                (4, 0.103),
                (5, 0.065),
                (6, 0.055),
                (7, 0.048),
                (8, 0.042),
                (9, 0.036),
                (11, 0.052),
                (14, 0.040),
                (18, 0.025),
                (24, 0.022),
                (32, 0.012),
                (45, 0.009),
                (70, 0.004),
            ],
            turnover_prob: 0.025,
            fg_make: [0.97, 0.90, 0.78, 0.35, 0.15, 0.05, 0.0, 0.0, 0.0, 0.0],
            punt_net: vec![(30, 0.15), (38, 0.35), (44, 0.30), (52, 0.15), (60, 0.05)],
            receive_spots: vec![(75, 0.70), (65, 0.15), (85, 0.15)],
        }
    }
}

/// Full synthetic-league description.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLeague {
    pub params: LeagueParams,
    pub reward: RewardSpec,
    /// Coach preference per field region (opponent half, own half); must
    /// be grid values.
    pub tau_star: (f64, f64),
    pub games: u32,
    /// Inclusive range of plays per half.
    pub plays_per_half: (u16, u16),
    /// Probability the coach plays a uniformly random action instead of
    /// the tau*-optimal one.
    pub coach_noise: f64,
    pub seed: u64,
}

impl SyntheticLeague {
    pub fn validated(self) -> Result<SyntheticLeague, SimError> {
        let sum: f64 = self.params.gain_atoms.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidKernel("gain atoms do not sum to 1"));
        }
        let sum: f64 = self.params.punt_net.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidKernel("punt atoms do not sum to 1"));
        }
        let sum: f64 = self.params.receive_spots.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidKernel("receive spots do not sum to 1"));
        }
        if !(0.0..=1.0).contains(&self.params.turnover_prob)
            || self.params.fg_make.iter().any(|p| !(0.0..=1.0).contains(p))
            || !(0.0..=1.0).contains(&self.coach_noise)
        {
            return Err(SimError::InvalidKernel("probability out of range"));
        }
        if self.plays_per_half.0 == 0 || self.plays_per_half.0 > self.plays_per_half.1 {
            return Err(SimError::InvalidKernel("bad plays-per-half range"));
        }
        if crate::surface::tau_grid_index(self.tau_star.0).is_none()
            || crate::surface::tau_grid_index(self.tau_star.1).is_none()
        {
            return Err(SimError::InvalidKernel("tau* must be on the grid"));
        }
        Ok(self)
    }
}

/// Representative yardline literal of a bin: mid-bin, except bin 10 whose
/// span is 91-99.
pub fn rep_yardline(bin: u8) -> u8 {
    10 * (bin - 1) + 5
}

fn bin_of(yardline_100: u8) -> u8 {
    debug_assert!((1..=99).contains(&yardline_100));
    (yardline_100 - 1) / 10 + 1
}

fn first_down_state(team: Team, yards_to_goal: u8) -> GameState {
    let y = yards_to_goal.clamp(1, 99);
    GameState::Play(PlayState {
        team,
        down: 1,
        yardline_bin: bin_of(y),
        ytg_bucket: y.min(10),
    })
}

/// Outcome of one scrimmage play, canonicalized to acting team A.
fn next_after_scrimmage(down: u8, bin: u8, bucket: u8, gained: i16, turnover: bool) -> StateIndex {
    let yl = rep_yardline(bin) as i16;
    if turnover {
        return turnover_on_downs_state(yl as u8);
    }
    let post_raw = yl - gained;
    if post_raw <= 0 {
        return GameState::Score(ScoreState { team: Team::A, kind: ScoreKind::Td }).index();
    }
    let post = post_raw.min(99) as u8;
    if gained >= bucket as i16 {
        return first_down_state(Team::A, post).index();
    }
    if down <= 3 {
        let new_bucket = (bucket as i16 - gained).clamp(1, 10) as u8;
        return GameState::Play(PlayState {
            team: Team::A,
            down: down + 1,
            yardline_bin: bin_of(post),
            ytg_bucket: new_bucket,
        })
        .index();
    }
    turnover_on_downs_state(post)
}

fn fga_outcomes(params: &LeagueParams, bin: u8) -> Vec<(StateIndex, f64)> {
    let make = params.fg_make[bin as usize - 1];
    let mut out = Vec::new();
    if make > 0.0 {
        out.push((GameState::Score(ScoreState { team: Team::A, kind: ScoreKind::Fg }).index(), make));
    }
    if make < 1.0 {
        // Missed kick: opponent ball at the spot, never worse than its 20.
        let opp_yl = 100 - rep_yardline(bin).max(20);
        out.push((first_down_state(Team::B, opp_yl).index(), 1.0 - make));
    }
    out
}

fn punt_outcomes(params: &LeagueParams, bin: u8) -> Vec<(StateIndex, f64)> {
    let mut grouped: BTreeMap<u16, f64> = BTreeMap::new();
    for &(net, p) in &params.punt_net {
        let landing = rep_yardline(bin) as i16 - net as i16;
        let opp_yl = if landing <= 0 { 80 } else { 100 - landing as u8 };
        let idx = first_down_state(Team::B, opp_yl).index();
        *grouped.entry(idx.0).or_insert(0.0) += p;
    }
    grouped.into_iter().map(|(k, p)| (StateIndex(k), p)).collect()
}

fn scrimmage_outcomes(params: &LeagueParams, down: u8, bin: u8, bucket: u8) -> Vec<(StateIndex, f64)> {
    let mut grouped: BTreeMap<u16, f64> = BTreeMap::new();
    let to = params.turnover_prob;
    if to > 0.0 {
        let idx = next_after_scrimmage(down, bin, bucket, 0, true);
        *grouped.entry(idx.0).or_insert(0.0) += to;
    }
    for &(g, p) in &params.gain_atoms {
        let idx = next_after_scrimmage(down, bin, bucket, g, false);
        *grouped.entry(idx.0).or_insert(0.0) += p * (1.0 - to);
    }
    grouped.into_iter().map(|(k, p)| (StateIndex(k), p)).collect()
}

fn score_exit_outcomes(params: &LeagueParams) -> Vec<(StateIndex, f64)> {
    let mut grouped: BTreeMap<u16, f64> = BTreeMap::new();
    for &(spot, p) in &params.receive_spots {
        let idx = first_down_state(Team::B, spot).index();
        *grouped.entry(idx.0).or_insert(0.0) += p;
    }
    grouped.into_iter().map(|(k, p)| (StateIndex(k), p)).collect()
}

/// Exact action kernels of the league.
pub struct LeagueActionKernels<'a> {
    params: &'a LeagueParams,
}

impl<'a> LeagueActionKernels<'a> {
    pub fn new(params: &'a LeagueParams) -> LeagueActionKernels<'a> {
        LeagueActionKernels { params }
    }
}

impl ActionRows for LeagueActionKernels<'_> {
    fn row_probs(&self, sigma: FourthDownState, action: Action) -> Option<Vec<(StateIndex, f64)>> {
        let bin = sigma.yardline_bin();
        Some(match action {
            Action::Go => scrimmage_outcomes(self.params, 4, bin, sigma.ytg_bucket()),
            Action::Fga => fga_outcomes(self.params, bin),
            Action::Punt => punt_outcomes(self.params, bin),
        })
    }
}

/// Coach behavior: per-state action with the noise mixture around it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoachPolicy {
    pub actions: [Action; 100],
}

impl CoachPolicy {
    fn from_maps(maps: &[DecisionMap; 2]) -> CoachPolicy {
        let mut actions = [Action::Punt; 100];
        for sigma in all_fourth_down_states() {
            let map = &maps[sigma.region().index()];
            actions[sigma.dense()] = map.action(sigma);
        }
        CoachPolicy { actions }
    }

    pub fn action(&self, sigma: FourthDownState) -> Action {
        self.actions[sigma.dense()]
    }
}

/// Full policy chain of the league under a coach policy: scrimmage rows
/// for downs 1-3, the coach's (noise-mixed) action kernels on fourth
/// downs, and the receive kernel out of scoring states.
fn league_policy_matrix(
    params: &LeagueParams,
    coach: &CoachPolicy,
    noise: f64,
) -> Result<PolicyMatrix, SimError> {
    let kernels = LeagueActionKernels { params };
    let mut rows: Vec<Vec<(StateIndex, f64)>> = Vec::with_capacity(NUM_TEAM_STATES);
    for block in 0..NUM_TEAM_STATES {
        let state = GameState::from_index(crate::domain::team_block_state(block)).unwrap();
        let row = match state {
            GameState::Score(_) => score_exit_outcomes(params),
            GameState::Play(p) if p.down <= 3 => {
                scrimmage_outcomes(params, p.down, p.yardline_bin, p.ytg_bucket)
            }
            GameState::Play(p) => {
                let sigma = FourthDownState::from_play(p).unwrap();
                let mut grouped: BTreeMap<u16, f64> = BTreeMap::new();
                for action in Action::ALL {
                    let weight = if action == coach.action(sigma) {
                        (1.0 - noise) + noise / 3.0
                    } else {
                        noise / 3.0
                    };
                    if weight == 0.0 {
                        continue;
                    }
                    for (idx, p) in kernels.row_probs(sigma, action).unwrap() {
                        *grouped.entry(idx.0).or_insert(0.0) += weight * p;
                    }
                }
                grouped.into_iter().map(|(k, p)| (StateIndex(k), p)).collect()
            }
        };
        rows.push(row);
    }
    PolicyMatrix::from_rows(rows).ok_or(SimError::InvalidKernel("policy rows not stochastic"))
}

/// Exact value, surface, decision maps, and coach policy of the league.
#[derive(Clone, Debug)]
pub struct OracleTruth {
    pub value: ValueTable,
    pub surface: QuantileSurface,
    /// tau*-optimal maps, one per field region.
    pub maps: [DecisionMap; 2],
    pub coach: CoachPolicy,
    pub policy: PolicyMatrix,
}

const COACH_FIXED_POINT_ITERS: usize = 100;

/// Computes the league's exact quantities from the true kernels, with the
/// coach's fourth-down policy its own fixed point.
pub fn oracle_truth(league: &SyntheticLeague) -> Result<OracleTruth, SimError> {
    let league = league.clone().validated()?;
    let params = &league.params;
    let kernels = LeagueActionKernels { params };
    // Start from an all-punt coach and iterate to the fixed point.
    let mut coach = CoachPolicy { actions: [Action::Punt; 100] };
    for _ in 0..COACH_FIXED_POINT_ITERS {
        let policy = league_policy_matrix(params, &coach, league.coach_noise)?;
        let value = solve_value(&policy, &league.reward).map_err(|_| SimError::SingularChain)?;
        let surface = build_surface(&kernels, &value, &league.reward);
        let maps = [
            tau_optimal_map(&surface, league.tau_star.0)
                .map_err(|_| SimError::InvalidKernel("incomplete oracle surface"))?,
            tau_optimal_map(&surface, league.tau_star.1)
                .map_err(|_| SimError::InvalidKernel("incomplete oracle surface"))?,
        ];
        let next = CoachPolicy::from_maps(&maps);
        if next == coach {
            return Ok(OracleTruth { value, surface, maps, coach, policy });
        }
        coach = next;
    }
    Err(SimError::CoachNotConverged)
}

/// Play classification for the emitted schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimPlayType {
    Run,
    Pass,
    FieldGoal,
    Punt,
}

/// One simulated play in the shape of a play-by-play row.  Orientation
/// fields are absolute: the home side is team A.
#[derive(Clone, Debug, PartialEq)]
pub struct SimPlayRow {
    pub play_index: u32,
    pub quarter: u8,
    pub half: u8,
    pub posteam_is_home: bool,
    pub down: u8,
    pub ytg: u8,
    pub yardline_100: u8,
    pub play_type: SimPlayType,
    pub yards_gained: i16,
    /// (scored by home side, kind); safeties never occur in this model.
    pub score_event: Option<(bool, ScoreKind)>,
    pub seconds_remaining: u32,
    /// Posteam score minus opponent score before the play.
    pub score_differential: i16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimGame {
    pub index: u32,
    pub rows: Vec<SimPlayRow>,
}

fn sample_from<T: Copy, R: Rng>(rng: &mut R, atoms: &[(T, f64)]) -> T {
    let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
    let mut u = rng.random::<f64>() * total;
    for &(value, p) in atoms {
        u -= p;
        if u <= 0.0 {
            return value;
        }
    }
    atoms[atoms.len() - 1].0
}

/// Simulates the league schedule.  Games draw from independent streams of
/// the league seed, so any subset is reproducible in isolation.
pub fn simulate(league: &SyntheticLeague) -> Result<Vec<SimGame>, SimError> {
    let truth = oracle_truth(league)?;
    simulate_with_truth(league, &truth)
}

/// Simulation against a precomputed oracle (saves re-deriving the coach).
pub fn simulate_with_truth(
    league: &SyntheticLeague,
    truth: &OracleTruth,
) -> Result<Vec<SimGame>, SimError> {
    let league = league.clone().validated()?;
    let params = &league.params;
    let mut games = Vec::with_capacity(league.games as usize);
    for g in 0..league.games {
        let mut rng = ChaCha12Rng::seed_from_u64(league.seed);
        rng.set_stream(g as u64);
        let mut rows: Vec<SimPlayRow> = Vec::new();
        let mut score_home: i16 = 0;
        let mut score_away: i16 = 0;
        let mut play_index: u32 = 0;
        for half in 1..=2u8 {
            let plays =
                rng.random_range(league.plays_per_half.0..=league.plays_per_half.1) as u32;
            // Home receives the first half, away the second.
            let mut state = PlayState {
                team: if half == 1 { Team::A } else { Team::B },
                down: 1,
                yardline_bin: 8,
                ytg_bucket: 10,
            };
            for p in 0..plays {
                let acting = state.team;
                let canonical =
                    if acting == Team::A { state } else { state.mirror() };
                let (play_type, gained, next_canonical) = if canonical.down == 4 {
                    let sigma = FourthDownState::from_play(canonical).unwrap();
                    let coach_action = truth.coach.action(sigma);
                    let action = if league.coach_noise > 0.0
                        && rng.random::<f64>() < league.coach_noise
                    {
                        Action::ALL[rng.random_range(0..3)]
                    } else {
                        coach_action
                    };
                    match action {
                        Action::Go => {
                            let (gained, turnover) = draw_scrimmage(&mut rng, params);
                            let next = next_after_scrimmage(
                                4,
                                canonical.yardline_bin,
                                canonical.ytg_bucket,
                                gained,
                                turnover,
                            );
                            let style =
                                if rng.random::<f64>() < 0.5 { SimPlayType::Run } else { SimPlayType::Pass };
                            (style, gained, next)
                        }
                        Action::Fga => {
                            let next = sample_from(&mut rng, &fga_outcomes(params, canonical.yardline_bin));
                            (SimPlayType::FieldGoal, 0, next)
                        }
                        Action::Punt => {
                            let next = sample_from(&mut rng, &punt_outcomes(params, canonical.yardline_bin));
                            (SimPlayType::Punt, 0, next)
                        }
                    }
                } else {
                    let (gained, turnover) = draw_scrimmage(&mut rng, params);
                    let next = next_after_scrimmage(
                        canonical.down,
                        canonical.yardline_bin,
                        canonical.ytg_bucket,
                        gained,
                        turnover,
                    );
                    let style = if rng.random::<f64>() < 0.5 { SimPlayType::Run } else { SimPlayType::Pass };
                    (style, gained, next)
                };

                // De-canonicalize and account for scores.
                let next_abs = if acting == Team::A {
                    GameState::from_index(next_canonical).unwrap()
                } else {
                    GameState::from_index(next_canonical).unwrap().mirror()
                };
                let mut score_event = None;
                let follow_state = match next_abs {
                    GameState::Play(ps) => ps,
                    GameState::Score(sc) => {
                        let home_scored = match sc.kind {
                            // TD/FG credit the tuple team; safeties are not
                            // generated by this model.
                            ScoreKind::Td | ScoreKind::Fg => sc.team == Team::A,
                            ScoreKind::Saf => sc.team != Team::A,
                        };
                        let points = match sc.kind {
                            ScoreKind::Td => 7,
                            ScoreKind::Fg => 3,
                            ScoreKind::Saf => 2,
                        };
                        if home_scored {
                            score_home += points;
                        } else {
                            score_away += points;
                        }
                        score_event = Some((home_scored, sc.kind));
                        // Receiving side takes over.
                        let spot = sample_from(&mut rng, &params.receive_spots);
                        let receiver = sc.team.other();
                        match first_down_state(Team::A, spot) {
                            GameState::Play(template) => PlayState { team: receiver, ..template },
                            GameState::Score(_) => unreachable!(),
                        }
                    }
                };

                let total_plays_guess = 2 * league.plays_per_half.1 as u32;
                let seconds = 3600u32.saturating_sub(
                    play_index * 3600 / total_plays_guess.max(1),
                );
                let quarter = if half == 1 {
                    if p * 2 < plays { 1 } else { 2 }
                } else if p * 2 < plays {
                    3
                } else {
                    4
                };
                let score_differential = if acting == Team::A {
                    score_home - score_away
                } else {
                    score_away - score_home
                };
                rows.push(SimPlayRow {
                    play_index,
                    quarter,
                    half,
                    posteam_is_home: acting == Team::A,
                    down: state.down,
                    ytg: state.ytg_bucket,
                    yardline_100: rep_yardline(state.yardline_bin),
                    play_type,
                    yards_gained: gained,
                    score_event,
                    seconds_remaining: seconds,
                    score_differential,
                });
                play_index += 1;
                state = follow_state;
            }
        }
        games.push(SimGame { index: g, rows });
    }
    Ok(games)
}

fn draw_scrimmage<R: Rng>(rng: &mut R, params: &LeagueParams) -> (i16, bool) {
    if params.turnover_prob > 0.0 && rng.random::<f64>() < params.turnover_prob {
        return (0, true);
    }
    (sample_from(rng, &params.gain_atoms), false)
}

impl Default for SyntheticLeague {
    fn default() -> Self {
        SyntheticLeague {
            params: LeagueParams::default(),
            reward: RewardSpec { td_points: 7.0, fg_points: 3.0, saf_points: -2.0 },
            tau_star: (0.35, 0.55),
            games: 1000,
            plays_per_half: (55, 70),
            coach_noise: 0.10,
            seed: 0,
        }
    }
}

/// Region label of a dense fourth-down index, for tests and reports.
pub fn region_of_dense(dense: usize) -> FieldRegion {
    FourthDownState::from_dense(dense).unwrap().region()
}
