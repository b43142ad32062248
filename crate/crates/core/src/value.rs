//! Infinite-horizon value of the league-average Markov reward process.
//!
//! With identical teams the 806-state chain folds onto the 403 team-A
//! states: retained-possession transitions enter with a minus sign,
//! possession flips (mirrored back to the A block) with a plus sign, and
//! the value solves (I - P_AA + P_AB) u = r_A.  The solve is a dense LU
//! factorization with partial pivoting; the matrix is never inverted
//! explicitly.  `u` includes the reward of the state itself; the table
//! stores v = u - r, the expected point differential over the plays that
//! follow, so that next-state atoms recover u as reward(s) + v(s).

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{
    mirror_index, reward_by_index, team_block_index, team_block_state, GameState, PlayState,
    RewardSpec, ScoreKind, ScoreState, StateIndex, NUM_STATES, NUM_TEAM_STATES,
};
use crate::transition::PolicyCounts;

/// Errors from the value solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueError {
    /// The folded chain matrix is rank-deficient (or the solve residual
    /// exceeds tolerance): the input chain is degenerate and must be
    /// regularized by the caller.
    SingularSystem,
}

impl core::fmt::Display for ValueError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ValueError::SingularSystem => write!(f, "policy chain matrix is singular"),
        }
    }
}

impl core::error::Error for ValueError {}

/// Row-stochastic policy chain over the team-A block, with every row
/// present.  Destinations are full-space indices; team-B destinations are
/// folded onto their mirrors during assembly.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyMatrix {
    rows: Vec<Vec<(StateIndex, f64)>>,
}

/// Which rows had no observations and received the deterministic fill.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FillReport {
    pub filled_rows: Vec<StateIndex>,
}

/// Deterministic stand-in transition for a never-observed row: a play
/// state hands the ball to the same team at first down one bin downfield
/// (from bin 1 the advance is a touchdown, which also keeps the filled
/// chain free of self-loops); a scoring state hands the ball to the other
/// team at its own 25.  These rows are rare and low-leverage but the solve
/// needs a complete row-stochastic chain.
fn fill_destination(state: GameState) -> StateIndex {
    match state {
        GameState::Play(p) if p.yardline_bin > 1 => GameState::Play(PlayState {
            team: p.team,
            down: 1,
            yardline_bin: p.yardline_bin - 1,
            ytg_bucket: 10,
        })
        .index(),
        GameState::Play(p) => {
            GameState::Score(ScoreState { team: p.team, kind: ScoreKind::Td }).index()
        }
        GameState::Score(s) => GameState::Play(PlayState {
            team: s.team.other(),
            down: 1,
            yardline_bin: 8,
            ytg_bucket: 10,
        })
        .index(),
    }
}

impl PolicyMatrix {
    /// Normalizes observed counts into probabilities and fills unobserved
    /// rows deterministically.
    pub fn from_counts(counts: &PolicyCounts) -> (PolicyMatrix, FillReport) {
        let mut rows = Vec::with_capacity(NUM_TEAM_STATES);
        let mut report = FillReport::default();
        for block in 0..NUM_TEAM_STATES {
            let row = counts.row(block);
            if row.is_empty() {
                let from = team_block_state(block);
                report.filled_rows.push(from);
                let dest = fill_destination(GameState::from_index(from).unwrap());
                rows.push(vec![(dest, 1.0)]);
            } else {
                rows.push(row.prob_atoms());
            }
        }
        (PolicyMatrix { rows }, report)
    }

    /// Builds from explicit probability rows (used by the simulator's
    /// exact kernels).  Rows must cover the whole team-A block and each
    /// must sum to 1.
    pub fn from_rows(rows: Vec<Vec<(StateIndex, f64)>>) -> Option<PolicyMatrix> {
        if rows.len() != NUM_TEAM_STATES {
            return None;
        }
        for row in &rows {
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&(_, p)| !(0.0..=1.0 + 1e-12).contains(&p)) {
                return None;
            }
        }
        Some(PolicyMatrix { rows })
    }

    pub fn row(&self, block: usize) -> &[(StateIndex, f64)] {
        &self.rows[block]
    }
}

/// Solved state values.  `v` is the expected point differential (team A
/// perspective) over the plays strictly after the state; scoring rewards
/// are realized on entry and therefore live outside `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    v: Vec<f64>,
}

impl ValueTable {
    pub fn value(&self, s: StateIndex) -> f64 {
        self.v[s.as_usize()]
    }

    /// reward(s) + v(s): the quantity a next-state atom carries.
    pub fn atom_value(&self, s: StateIndex, spec: &RewardSpec) -> f64 {
        reward_by_index(s, spec) + self.v[s.as_usize()]
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn zero() -> ValueTable {
        ValueTable { v: vec![0.0; NUM_STATES] }
    }
}

const RESIDUAL_RTOL: f64 = 1e-8;
const PIVOT_RTOL: f64 = 1e-10;

/// Solves the folded linear system for the team-A block and extends the
/// result to all 806 states by antisymmetry.
pub fn solve_value(matrix: &PolicyMatrix, spec: &RewardSpec) -> Result<ValueTable, ValueError> {
    let n = NUM_TEAM_STATES;
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
        for &(dest, p) in matrix.row(i) {
            match team_block_index(dest) {
                Some(j) => m[i * n + j] -= p,
                None => {
                    let j = team_block_index(mirror_index(dest))
                        .expect("mirror of a team-B state is a team-A state");
                    m[i * n + j] += p;
                }
            }
        }
    }

    let mut r = vec![0.0f64; n];
    for (block, value) in r.iter_mut().enumerate() {
        *value = reward_by_index(team_block_state(block), spec);
    }

    let original = m.clone();
    let u = lu_solve(&mut m, n, &r)?;

    // Residual check against the untouched matrix.
    let r_norm = r.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut resid: f64 = 0.0;
    for i in 0..n {
        let mut dot = 0.0;
        for j in 0..n {
            dot += original[i * n + j] * u[j];
        }
        resid = resid.max((dot - r[i]).abs());
    }
    if resid > RESIDUAL_RTOL * r_norm.max(1e-300) && r_norm > 0.0 {
        return Err(ValueError::SingularSystem);
    }

    let mut v = vec![0.0f64; NUM_STATES];
    for block in 0..n {
        let idx = team_block_state(block);
        let thereafter = u[block] - r[block];
        v[idx.as_usize()] = thereafter;
        v[mirror_index(idx).as_usize()] = -thereafter;
    }
    Ok(ValueTable { v })
}

/// Convenience path from raw counts; reports which rows were filled.
pub fn solve_value_from_counts(
    counts: &PolicyCounts,
    spec: &RewardSpec,
) -> Result<(ValueTable, FillReport), ValueError> {
    let (matrix, report) = PolicyMatrix::from_counts(counts);
    let table = solve_value(&matrix, spec)?;
    Ok((table, report))
}

/// In-place LU with partial pivoting; returns the solution of m x = rhs.
fn lu_solve(m: &mut [f64], n: usize, rhs: &[f64]) -> Result<Vec<f64>, ValueError> {
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_val = m[perm[k] * n + k].abs();
        for (r, &pr) in perm.iter().enumerate().skip(k + 1) {
            let cand = m[pr * n + k].abs();
            if cand > pivot_val {
                pivot_val = cand;
                pivot_row = r;
            }
        }
        if pivot_val < PIVOT_RTOL * scale.max(1e-300) {
            return Err(ValueError::SingularSystem);
        }
        perm.swap(k, pivot_row);
        let pk = perm[k];
        let diag = m[pk * n + k];
        for &pr in perm.iter().skip(k + 1) {
            let factor = m[pr * n + k] / diag;
            if factor != 0.0 {
                m[pr * n + k] = factor;
                for j in k + 1..n {
                    m[pr * n + j] -= factor * m[pk * n + j];
                }
            }
        }
    }

    // Forward substitution on the permuted rows, then back substitution.
    let mut y = vec![0.0f64; n];
    for k in 0..n {
        let pk = perm[k];
        let mut acc = rhs[pk];
        for j in 0..k {
            acc -= m[pk * n + j] * y[j];
        }
        y[k] = acc;
    }
    let mut x = vec![0.0f64; n];
    for k in (0..n).rev() {
        let pk = perm[k];
        let mut acc = y[k];
        for j in k + 1..n {
            acc -= m[pk * n + j] * x[j];
        }
        x[k] = acc / m[pk * n + k];
    }
    Ok(x)
}
