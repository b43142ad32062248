//! Tau-optimal decision maps and observed-decision frequency maps.

use crate::domain::{
    all_fourth_down_states, Action, FourthDownState, NUM_FOURTH_DOWN_STATES,
};
use crate::surface::{tau_grid_index, QuantileSurface};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyError {
    /// The requested tau is not a grid value.
    TauOffGrid,
    /// The surface has missing cells; smooth it first.
    IncompleteSurface,
}

impl core::fmt::Display for PolicyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PolicyError::TauOffGrid => write!(f, "tau is not on the inference grid"),
            PolicyError::IncompleteSurface => write!(f, "surface has missing cells"),
        }
    }
}

impl core::error::Error for PolicyError {}

/// The optimal action per fourth-down state at one grid tau.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionMap {
    actions: [Action; NUM_FOURTH_DOWN_STATES],
    grid_index: usize,
}

impl DecisionMap {
    pub fn action(&self, sigma: FourthDownState) -> Action {
        self.actions[sigma.dense()]
    }

    pub fn grid_index(&self) -> usize {
        self.grid_index
    }

    pub fn actions(&self) -> &[Action; NUM_FOURTH_DOWN_STATES] {
        &self.actions
    }
}

/// argmax over actions of q(sigma, a, tau).  Ties break toward the
/// conservative end of the risk order (PUNT, then FGA, then GO), so a
/// deterministic map can never overstate risk tolerance.
pub fn tau_optimal_map(surface: &QuantileSurface, tau: f64) -> Result<DecisionMap, PolicyError> {
    let grid_index = tau_grid_index(tau).ok_or(PolicyError::TauOffGrid)?;
    tau_optimal_map_at(surface, grid_index)
}

/// Same as [`tau_optimal_map`] but addressed by grid index.
pub fn tau_optimal_map_at(
    surface: &QuantileSurface,
    grid_index: usize,
) -> Result<DecisionMap, PolicyError> {
    let mut actions = [Action::Punt; NUM_FOURTH_DOWN_STATES];
    for sigma in all_fourth_down_states() {
        let mut best = Action::Punt;
        let mut best_q = surface
            .get(sigma, Action::Punt, grid_index)
            .ok_or(PolicyError::IncompleteSurface)?;
        for action in [Action::Fga, Action::Go] {
            let q = surface.get(sigma, action, grid_index).ok_or(PolicyError::IncompleteSurface)?;
            if q > best_q {
                best_q = q;
                best = action;
            }
        }
        actions[sigma.dense()] = best;
    }
    Ok(DecisionMap { actions, grid_index })
}

/// Observed decision counts per (sigma, action).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyMap {
    counts: [[u64; 3]; NUM_FOURTH_DOWN_STATES],
}

impl Default for FrequencyMap {
    fn default() -> Self {
        FrequencyMap { counts: [[0; 3]; NUM_FOURTH_DOWN_STATES] }
    }
}

impl FrequencyMap {
    pub fn count(&self, sigma: FourthDownState, action: Action) -> u64 {
        self.counts[sigma.dense()][action.index()]
    }

    pub fn state_total(&self, sigma: FourthDownState) -> u64 {
        self.counts[sigma.dense()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|row| row.iter().sum::<u64>()).sum()
    }

    /// Most frequent action at a state, ties toward the conservative end;
    /// `None` when the state was never visited.
    pub fn majority(&self, sigma: FourthDownState) -> Option<Action> {
        if self.state_total(sigma) == 0 {
            return None;
        }
        let row = &self.counts[sigma.dense()];
        let mut best = Action::Punt;
        for action in [Action::Fga, Action::Go] {
            if row[action.index()] > row[best.index()] {
                best = action;
            }
        }
        Some(best)
    }

    pub fn add(&mut self, sigma: FourthDownState, action: Action, n: u64) {
        self.counts[sigma.dense()][action.index()] += n;
    }
}

/// Tallies observed decisions per state and action.
pub fn observed_frequency_map(decisions: &[(FourthDownState, Action)]) -> FrequencyMap {
    let mut map = FrequencyMap::default();
    for &(sigma, action) in decisions {
        map.add(sigma, action, 1);
    }
    map
}
