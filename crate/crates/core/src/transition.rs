//! Empirical transition estimation.
//!
//! Counts come in two flavors: policy transitions (consecutive state pairs
//! under the pooled league-average policy) and action transitions
//! (fourth-down state/action pairs to their next state).  Both are stored
//! as integer counts in sparse rows so that identical inputs always yield
//! bit-identical models.  All rows are canonicalized so the side acting is
//! team A.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{
    team_block_index, Action, FourthDownState, GameState, PlayState, StateIndex, Team,
    NUM_FOURTH_DOWN_STATES, NUM_TEAM_STATES,
};

/// One sparse count row over destination states.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseRow {
    counts: BTreeMap<u16, u32>,
    total: u64,
}

impl SparseRow {
    pub fn add(&mut self, to: StateIndex, n: u32) {
        *self.counts.entry(to.0).or_insert(0) += n;
        self.total += n as u64;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn counts(&self) -> impl Iterator<Item = (StateIndex, u32)> + '_ {
        self.counts.iter().map(|(&k, &v)| (StateIndex(k), v))
    }

    /// Row-normalized probabilities.  Empty for unobserved rows; callers
    /// must treat those as missing rather than inventing mass.
    pub fn probs(&self) -> impl Iterator<Item = (StateIndex, f64)> + '_ {
        let total = self.total as f64;
        self.counts.iter().map(move |(&k, &v)| (StateIndex(k), v as f64 / total))
    }

    pub fn prob_atoms(&self) -> Vec<(StateIndex, f64)> {
        self.probs().collect()
    }

    fn merge(&mut self, other: &SparseRow) {
        for (&k, &v) in &other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self.total += other.total;
    }
}

/// Counts for the league-average-policy Markov chain, one row per team-A
/// state (scoring rows included).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolicyCounts {
    rows: Vec<SparseRow>,
}

impl PolicyCounts {
    pub fn new() -> PolicyCounts {
        PolicyCounts { rows: vec![SparseRow::default(); NUM_TEAM_STATES] }
    }

    /// Records one observed consecutive pair.  `from` must be a team-A
    /// state; callers mirror pairs where team B acts.
    pub fn add_pair(&mut self, from: StateIndex, to: StateIndex) {
        let block = team_block_index(from).expect("policy rows are canonicalized to team A");
        self.rows[block].add(to, 1);
    }

    pub fn row(&self, block: usize) -> &SparseRow {
        &self.rows[block]
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn total_pairs(&self) -> u64 {
        self.rows.iter().map(|r| r.total()).sum()
    }

    pub fn unobserved_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().enumerate().filter(|(_, r)| r.is_empty()).map(|(i, _)| i)
    }

    pub fn merge(&mut self, other: &PolicyCounts) {
        for (mine, theirs) in self.rows.iter_mut().zip(&other.rows) {
            mine.merge(theirs);
        }
    }
}

/// Counts for fourth-down state/action transitions, one row per (sigma,
/// action) pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActionCounts {
    rows: Vec<SparseRow>,
}

fn action_row_index(sigma: FourthDownState, action: Action) -> usize {
    sigma.dense() * 3 + action.index()
}

impl ActionCounts {
    pub fn new() -> ActionCounts {
        ActionCounts { rows: vec![SparseRow::default(); NUM_FOURTH_DOWN_STATES * 3] }
    }

    pub fn add(&mut self, sigma: FourthDownState, action: Action, to: StateIndex) {
        self.rows[action_row_index(sigma, action)].add(to, 1);
    }

    pub fn row(&self, sigma: FourthDownState, action: Action) -> &SparseRow {
        &self.rows[action_row_index(sigma, action)]
    }

    pub fn row_total(&self, sigma: FourthDownState, action: Action) -> u64 {
        self.row(sigma, action).total()
    }

    pub fn merge(&mut self, other: &ActionCounts) {
        for (mine, theirs) in self.rows.iter_mut().zip(&other.rows) {
            mine.merge(theirs);
        }
    }
}

/// Empirical transition model: policy chain plus fourth-down action rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransitionModel {
    pub policy: PolicyCounts,
    pub actions: ActionCounts,
}

/// Whether third-down plays are folded into the fourth-down GO rows to
/// offset the selection bias in observed fourth-down attempts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentationPolicy {
    pub enabled: bool,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        AugmentationPolicy { enabled: true }
    }
}

/// A third-down play restated as a counterfactual fourth-down GO attempt.
///
/// All fields are canonicalized so the acting side is team A.
/// `post_yardline_100` is the acting team's distance to the opponent end
/// zone after the play, used to place the turnover-on-downs spot when the
/// play would not have kept possession.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThirdDownObs {
    pub as_fourth: FourthDownState,
    /// True when the play converted, scored, or turned the ball over: the
    /// realized next state is what a fourth-down attempt would have seen.
    pub kept_realized_outcome: bool,
    pub realized_next: StateIndex,
    pub post_yardline_100: u8,
}

/// Next state a failed fourth-down attempt would have produced: opponent
/// ball at the post-play spot.  The first down cannot require more yards
/// than remain to the goal line.
pub fn turnover_on_downs_state(post_yardline_100: u8) -> StateIndex {
    let post = post_yardline_100.clamp(1, 99);
    let opp_yl = 100 - post;
    let bin = (opp_yl - 1) / 10 + 1;
    let ytg = opp_yl.min(10);
    GameState::Play(PlayState { team: Team::B, down: 1, yardline_bin: bin.min(10), ytg_bucket: ytg })
        .index()
}

/// Counterfactual destination for an augmented third-down observation.
pub fn counterfactual_next(obs: &ThirdDownObs) -> StateIndex {
    if obs.kept_realized_outcome {
        obs.realized_next
    } else {
        turnover_on_downs_state(obs.post_yardline_100)
    }
}

/// Per-game extract that the estimation and bootstrap stages consume.
/// Filters have already been applied by the ingest stage; everything here
/// is canonicalized to acting-team-A orientation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GameSample {
    /// Consecutive within-half state pairs, `from` always a team-A state.
    pub policy_pairs: Vec<(StateIndex, StateIndex)>,
    /// Observed fourth-down transitions.
    pub action_obs: Vec<(FourthDownState, Action, StateIndex)>,
    /// Third-down plays available for GO augmentation.
    pub third_down_obs: Vec<ThirdDownObs>,
    /// Fourth-down decision plays for the inverse problem.
    pub decisions: Vec<(FourthDownState, Action)>,
}

/// Row-normalized empirical policy chain from observed pairs.
pub fn count_policy_transitions<'a, I>(samples: I) -> PolicyCounts
where
    I: IntoIterator<Item = &'a GameSample>,
{
    let mut counts = PolicyCounts::new();
    for sample in samples {
        for &(from, to) in &sample.policy_pairs {
            counts.add_pair(from, to);
        }
    }
    counts
}

/// Fourth-down action rows, optionally augmented with counterfactual
/// third-down GO transitions.
pub fn count_action_transitions<'a, I>(samples: I, aug: &AugmentationPolicy) -> ActionCounts
where
    I: IntoIterator<Item = &'a GameSample>,
{
    let mut counts = ActionCounts::new();
    for sample in samples {
        for &(sigma, action, to) in &sample.action_obs {
            counts.add(sigma, action, to);
        }
        if aug.enabled {
            for obs in &sample.third_down_obs {
                counts.add(obs.as_fourth, Action::Go, counterfactual_next(obs));
            }
        }
    }
    counts
}

pub fn count_transitions<'a, I>(samples: I, aug: &AugmentationPolicy) -> TransitionModel
where
    I: IntoIterator<Item = &'a GameSample> + Clone,
{
    TransitionModel {
        policy: count_policy_transitions(samples.clone()),
        actions: count_action_transitions(samples, aug),
    }
}
