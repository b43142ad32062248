//! Next-state value distributions and the tau-indexed objective surface.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{
    all_fourth_down_states, Action, FourthDownState, RewardSpec, StateIndex,
    NUM_FOURTH_DOWN_STATES,
};
use crate::transition::ActionCounts;
use crate::value::ValueTable;

/// The inference grid: tau in {0.20, 0.21, ..., 0.80}.  Values outside are
/// computable through [`quantile`] but excluded from inference.
pub const TAU_GRID_LEN: usize = 61;

pub fn tau_value(grid_index: usize) -> f64 {
    debug_assert!(grid_index < TAU_GRID_LEN);
    (20 + grid_index) as f64 / 100.0
}

/// Snaps a tau to its grid index, within 1e-9.
pub fn tau_grid_index(tau: f64) -> Option<usize> {
    let scaled = tau * 100.0 - 20.0;
    let idx = libm::round(scaled);
    if idx >= 0.0 && idx < TAU_GRID_LEN as f64 && (scaled - idx).abs() <= 1e-7 {
        Some(idx as usize)
    } else {
        None
    }
}

pub fn tau_grid() -> impl Iterator<Item = f64> {
    (0..TAU_GRID_LEN).map(tau_value)
}

/// Source of next-state probability rows for (sigma, action) pairs.
/// Implemented by empirical counts and by the simulator's exact kernels.
pub trait ActionRows {
    /// Probability atoms over destination states, or `None` when the pair
    /// is unobserved.
    fn row_probs(&self, sigma: FourthDownState, action: Action) -> Option<Vec<(StateIndex, f64)>>;
}

impl ActionRows for ActionCounts {
    fn row_probs(&self, sigma: FourthDownState, action: Action) -> Option<Vec<(StateIndex, f64)>> {
        let row = self.row(sigma, action);
        if row.is_empty() {
            None
        } else {
            Some(row.prob_atoms())
        }
    }
}

/// Finite discrete distribution of reward-plus-continuation value for one
/// fourth-down state/action pair.  Atoms are sorted ascending by value and
/// equal values are merged.
#[derive(Clone, Debug, PartialEq)]
pub struct NextStateValueDist {
    atoms: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceError {
    /// No transition counts exist for the requested pair.
    UnobservedPair,
}

impl core::fmt::Display for SurfaceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SurfaceError::UnobservedPair => write!(f, "state-action pair has no observations"),
        }
    }
}

impl core::error::Error for SurfaceError {}

impl NextStateValueDist {
    /// Builds from raw (value, prob) pairs; sorts and merges duplicates.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> NextStateValueDist {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        NextStateValueDist { atoms: merged }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn expectation(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn total_prob(&self) -> f64 {
        self.atoms.iter().map(|&(_, p)| p).sum()
    }
}

/// Distribution of reward(s') + v(s') under the empirical transition row.
pub fn next_state_dist<R: ActionRows>(
    rows: &R,
    value: &ValueTable,
    sigma: FourthDownState,
    action: Action,
    spec: &RewardSpec,
) -> Result<NextStateValueDist, SurfaceError> {
    let probs = rows.row_probs(sigma, action).ok_or(SurfaceError::UnobservedPair)?;
    let atoms = probs.into_iter().map(|(s, p)| (value.atom_value(s, spec), p)).collect();
    Ok(NextStateValueDist::from_atoms(atoms))
}

/// Left-continuous generalized inverse: inf { x : tau <= F(x) } over the
/// discrete atoms.
pub fn quantile(dist: &NextStateValueDist, tau: f64) -> f64 {
    let mut cum = 0.0;
    for &(v, p) in dist.atoms() {
        cum += p;
        if tau <= cum {
            return v;
        }
    }
    // Floating-point undershoot of the final cumulative sum.
    dist.atoms().last().map(|&(v, _)| v).unwrap_or(f64::NAN)
}

/// Whether surface values went through the monotone smoother.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    Raw,
    Smoothed,
}

/// q(sigma, action, tau) over the grid.  Missing cells (unobserved pairs
/// on a raw surface) are NaN internally and `None` through `get`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileSurface {
    values: Vec<f64>,
    observed: Vec<bool>,
    kind: SurfaceKind,
}

fn cell(sigma: FourthDownState, action: Action) -> usize {
    sigma.dense() * 3 + action.index()
}

impl QuantileSurface {
    pub fn new_empty(kind: SurfaceKind) -> QuantileSurface {
        QuantileSurface {
            values: vec![f64::NAN; NUM_FOURTH_DOWN_STATES * 3 * TAU_GRID_LEN],
            observed: vec![false; NUM_FOURTH_DOWN_STATES * 3],
            kind,
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn get(&self, sigma: FourthDownState, action: Action, grid_index: usize) -> Option<f64> {
        let v = self.values[cell(sigma, action) * TAU_GRID_LEN + grid_index];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn set(&mut self, sigma: FourthDownState, action: Action, grid_index: usize, value: f64) {
        self.values[cell(sigma, action) * TAU_GRID_LEN + grid_index] = value;
    }

    pub fn observed(&self, sigma: FourthDownState, action: Action) -> bool {
        self.observed[cell(sigma, action)]
    }

    pub fn set_observed(&mut self, sigma: FourthDownState, action: Action, flag: bool) {
        self.observed[cell(sigma, action)] = flag;
    }

    /// True when every (sigma, action, tau) cell holds a value.
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_nan())
    }
}

/// Raw quantile surface: q over the grid for every observed pair,
/// missing cells left for the smoother to fill.
pub fn build_surface<R: ActionRows>(
    rows: &R,
    value: &ValueTable,
    spec: &RewardSpec,
) -> QuantileSurface {
    let mut surface = QuantileSurface::new_empty(SurfaceKind::Raw);
    for sigma in all_fourth_down_states() {
        for action in Action::ALL {
            if let Ok(dist) = next_state_dist(rows, value, sigma, action, spec) {
                surface.set_observed(sigma, action, true);
                for (gi, tau) in tau_grid().enumerate() {
                    surface.set(sigma, action, gi, quantile(&dist, tau));
                }
            }
        }
    }
    surface
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_grid_spans_the_documented_range() {
        assert_eq!(tau_grid().count(), 61);
        assert!((tau_value(0) - 0.20).abs() < 1e-12);
        assert!((tau_value(60) - 0.80).abs() < 1e-12);
        for gi in 0..TAU_GRID_LEN {
            assert_eq!(tau_grid_index(tau_value(gi)), Some(gi));
        }
        assert_eq!(tau_grid_index(0.19), None);
        assert_eq!(tau_grid_index(0.805), None);
        assert_eq!(tau_grid_index(0.455), None);
    }

    #[test]
    fn quantile_follows_the_inf_definition() {
        let dist = NextStateValueDist::from_atoms(vec![(3.0, 0.5), (1.0, 0.5)]);
        assert_eq!(quantile(&dist, 0.5), 1.0);
        assert_eq!(quantile(&dist, 0.51), 3.0);
        assert_eq!(quantile(&dist, 0.2), 1.0);
        assert_eq!(quantile(&dist, 1.0), 3.0);
    }

    #[test]
    fn single_atom_is_constant_in_tau() {
        let dist = NextStateValueDist::from_atoms(vec![(-2.5, 1.0)]);
        for tau in tau_grid() {
            assert_eq!(quantile(&dist, tau), -2.5);
        }
    }

    #[test]
    fn equal_values_merge() {
        let dist = NextStateValueDist::from_atoms(vec![(1.0, 0.25), (2.0, 0.5), (1.0, 0.25)]);
        assert_eq!(dist.atoms(), &[(1.0, 0.5), (2.0, 0.5)]);
    }

    #[test]
    fn quantile_is_monotone_and_always_an_atom() {
        let dist = NextStateValueDist::from_atoms(vec![
            (0.3, 0.125),
            (-1.0, 0.25),
            (2.0, 0.125),
            (4.0, 0.375),
            (7.0, 0.125),
        ]);
        let mut last = f64::NEG_INFINITY;
        for tau in tau_grid() {
            let q = quantile(&dist, tau);
            assert!(q >= last);
            assert!(dist.atoms().iter().any(|&(v, _)| v == q));
            last = q;
        }
    }
}
