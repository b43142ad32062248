//! Doubly-monotone regularization of quantile layers.
//!
//! Each (action, tau) layer is a 10x10 grid over (yardline bin, ytg
//! bucket) that must be nonincreasing along both axes.  The layer is
//! projected onto the doubly-monotone cone in the weighted least-squares
//! sense with Dykstra's alternating-projection scheme, where each
//! one-dimensional projection is a weighted pool-adjacent-violators pass.
//! Unobserved cells carry (effectively) zero weight, so their fill is
//! pinned only by the monotone constraints.  A final prefix-min pass makes
//! the monotonicity exact rather than tolerance-level.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{all_fourth_down_states, Action, FourthDownState, NUM_FOURTH_DOWN_STATES};
use crate::surface::{QuantileSurface, SurfaceKind, TAU_GRID_LEN};
use crate::transition::ActionCounts;

pub const LAYER_CELLS: usize = 100;
const DYKSTRA_TOL: f64 = 1e-13;
const DYKSTRA_MAX_SWEEPS: usize = 4000;
/// Relative weight assigned to free cells so the projection stays strictly
/// convex; small enough to be invisible against any real observation.
const FREE_CELL_WEIGHT_SCALE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmoothError {
    /// Every cell of the layer is unobserved; nothing to anchor the fit.
    AllCellsMissing,
}

impl core::fmt::Display for SmoothError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SmoothError::AllCellsMissing => write!(f, "layer has no observed cells"),
        }
    }
}

impl core::error::Error for SmoothError {}

/// Weights and provenance parameters for the smoother.  `basis_dim` is
/// recorded for parity with spline-based realizations; the projection
/// method here does not consume it.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothSpec {
    /// Per (sigma, action) weight, indexed `sigma.dense() * 3 + action`.
    /// Transition-row total counts (augmented); zero marks unobserved.
    pub weights: Vec<f64>,
    pub basis_dim: u8,
}

impl SmoothSpec {
    pub fn from_action_counts(actions: &ActionCounts) -> SmoothSpec {
        let mut weights = vec![0.0; NUM_FOURTH_DOWN_STATES * 3];
        for sigma in all_fourth_down_states() {
            for action in Action::ALL {
                weights[sigma.dense() * 3 + action.index()] =
                    actions.row_total(sigma, action) as f64;
            }
        }
        SmoothSpec { weights, basis_dim: 4 }
    }

    pub fn weight(&self, sigma: FourthDownState, action: Action) -> f64 {
        self.weights[sigma.dense() * 3 + action.index()]
    }

    pub const METHOD: &'static str = "dykstra-isotonic-projection";
}

fn at(bin: usize, ytg: usize) -> usize {
    bin * 10 + ytg
}

/// Weighted increasing PAVA over one line (at most 10 cells), in place.
fn pava_increasing(values: &mut [f64], weights: &[f64]) {
    let n = values.len();
    debug_assert!(n <= 10 && weights.len() == n);
    // (weighted sum, weight, member count)
    let mut sums = [0.0f64; 10];
    let mut wts = [0.0f64; 10];
    let mut lens = [0usize; 10];
    let mut means = [0.0f64; 10];
    let mut top = 0usize;
    for i in 0..n {
        sums[top] = values[i] * weights[i];
        wts[top] = weights[i];
        lens[top] = 1;
        means[top] = values[i];
        top += 1;
        while top > 1 && means[top - 2] > means[top - 1] {
            sums[top - 2] += sums[top - 1];
            wts[top - 2] += wts[top - 1];
            lens[top - 2] += lens[top - 1];
            means[top - 2] = sums[top - 2] / wts[top - 2];
            top -= 1;
        }
    }
    let mut pos = 0;
    for b in 0..top {
        for _ in 0..lens[b] {
            values[pos] = means[b];
            pos += 1;
        }
    }
}

/// Weighted projection onto the nonincreasing cone along one line.
fn pava_decreasing(values: &mut [f64], weights: &[f64]) {
    for v in values.iter_mut() {
        *v = -*v;
    }
    pava_increasing(values, weights);
    for v in values.iter_mut() {
        *v = -*v;
    }
}

/// Projects onto "nonincreasing along the bin axis" (columns of the grid).
fn project_bin_axis(grid: &mut [f64], weights: &[f64]) {
    let mut line = [0.0f64; 10];
    let mut wline = [0.0f64; 10];
    for ytg in 0..10 {
        for bin in 0..10 {
            line[bin] = grid[at(bin, ytg)];
            wline[bin] = weights[at(bin, ytg)];
        }
        pava_decreasing(&mut line, &wline);
        for bin in 0..10 {
            grid[at(bin, ytg)] = line[bin];
        }
    }
}

/// Projects onto "nonincreasing along the ytg axis" (rows of the grid).
fn project_ytg_axis(grid: &mut [f64], weights: &[f64]) {
    for bin in 0..10 {
        let row = &mut grid[bin * 10..bin * 10 + 10];
        pava_decreasing(row, &weights[bin * 10..bin * 10 + 10]);
    }
}

fn is_doubly_monotone(grid: &[f64]) -> bool {
    for bin in 0..10 {
        for ytg in 0..10 {
            if bin > 0 && grid[at(bin, ytg)] > grid[at(bin - 1, ytg)] {
                return false;
            }
            if ytg > 0 && grid[at(bin, ytg)] > grid[at(bin, ytg - 1)] {
                return false;
            }
        }
    }
    true
}

/// Seeds unobserved cells with the mean of their nearest observed
/// neighbors (L1 lattice distance).
fn seed_missing(values: &[Option<f64>; LAYER_CELLS]) -> [f64; LAYER_CELLS] {
    let mut out = [0.0f64; LAYER_CELLS];
    for bin in 0..10 {
        for ytg in 0..10 {
            let idx = at(bin, ytg);
            if let Some(v) = values[idx] {
                out[idx] = v;
                continue;
            }
            let mut best_dist = usize::MAX;
            let mut sum = 0.0;
            let mut count = 0usize;
            for b2 in 0..10 {
                for y2 in 0..10 {
                    if let Some(v) = values[at(b2, y2)] {
                        let dist = bin.abs_diff(b2) + ytg.abs_diff(y2);
                        if dist < best_dist {
                            best_dist = dist;
                            sum = v;
                            count = 1;
                        } else if dist == best_dist {
                            sum += v;
                            count += 1;
                        }
                    }
                }
            }
            out[idx] = sum / count as f64;
        }
    }
    out
}

/// Weighted projection of one layer onto the doubly-monotone cone.
///
/// Returns a complete grid, nonincreasing (exactly) along increasing
/// yardline bin and increasing ytg bucket, minimizing the weighted squared
/// error to observed cells.  `values` and `weights` are indexed
/// `(bin - 1) * 10 + (ytg - 1)`; a `None` value or zero weight marks an
/// unobserved cell.
pub fn smooth_layer(
    values: &[Option<f64>; LAYER_CELLS],
    weights: &[f64; LAYER_CELLS],
) -> Result<[f64; LAYER_CELLS], SmoothError> {
    let mut max_w = 0.0f64;
    let mut any = false;
    for i in 0..LAYER_CELLS {
        if values[i].is_some() && weights[i] > 0.0 {
            any = true;
            max_w = max_w.max(weights[i]);
        }
    }
    if !any {
        return Err(SmoothError::AllCellsMissing);
    }

    let data = seed_missing(values);
    let mut w = [0.0f64; LAYER_CELLS];
    let free = max_w * FREE_CELL_WEIGHT_SCALE;
    for i in 0..LAYER_CELLS {
        w[i] = if values[i].is_some() && weights[i] > 0.0 { weights[i] } else { free };
    }

    // Dykstra's alternating projections between the two one-axis cones.
    let mut x = data;
    let mut p = [0.0f64; LAYER_CELLS];
    let mut q = [0.0f64; LAYER_CELLS];
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let mut y = [0.0f64; LAYER_CELLS];
        for i in 0..LAYER_CELLS {
            y[i] = x[i] + p[i];
        }
        project_bin_axis(&mut y, &w);
        for i in 0..LAYER_CELLS {
            p[i] = x[i] + p[i] - y[i];
        }
        let mut z = [0.0f64; LAYER_CELLS];
        for i in 0..LAYER_CELLS {
            z[i] = y[i] + q[i];
        }
        project_ytg_axis(&mut z, &w);
        for i in 0..LAYER_CELLS {
            q[i] = y[i] + q[i] - z[i];
        }
        let mut delta = 0.0f64;
        for i in 0..LAYER_CELLS {
            delta = delta.max((z[i] - x[i]).abs());
        }
        x = z;
        if delta < DYKSTRA_TOL {
            break;
        }
    }

    // Exact monotone rounding: any residual violation is at convergence
    // tolerance, and the prefix-min makes both constraints hold with
    // tolerance zero while moving cells by at most that residual.
    for bin in 0..10 {
        for ytg in 0..10 {
            let idx = at(bin, ytg);
            if bin > 0 {
                x[idx] = x[idx].min(x[at(bin - 1, ytg)]);
            }
            if ytg > 0 {
                x[idx] = x[idx].min(x[at(bin, ytg - 1)]);
            }
        }
    }
    debug_assert!(is_doubly_monotone(&x));
    Ok(x)
}

/// Applies [`smooth_layer`] per (action, tau) layer, then restores
/// per-cell tau monotonicity by sorting each (sigma, action) column of the
/// grid, so the result satisfies both lattice and quantile monotonicity.
pub fn smooth_surface(
    raw: &QuantileSurface,
    spec: &SmoothSpec,
) -> Result<QuantileSurface, SmoothError> {
    let mut out = QuantileSurface::new_empty(SurfaceKind::Smoothed);
    for sigma in all_fourth_down_states() {
        for action in Action::ALL {
            out.set_observed(sigma, action, raw.observed(sigma, action));
        }
    }
    for action in Action::ALL {
        let mut weights = [0.0f64; LAYER_CELLS];
        for sigma in all_fourth_down_states() {
            weights[sigma.dense()] = spec.weight(sigma, action);
        }
        for gi in 0..TAU_GRID_LEN {
            let mut layer = [None; LAYER_CELLS];
            for sigma in all_fourth_down_states() {
                layer[sigma.dense()] = raw.get(sigma, action, gi);
            }
            let fitted = smooth_layer(&layer, &weights)?;
            for sigma in all_fourth_down_states() {
                out.set(sigma, action, gi, fitted[sigma.dense()]);
            }
        }
    }
    // Isotonic pass along tau: sort the 61 values of each cell.
    let mut column = [0.0f64; TAU_GRID_LEN];
    for sigma in all_fourth_down_states() {
        for action in Action::ALL {
            for (gi, slot) in column.iter_mut().enumerate() {
                *slot = out.get(sigma, action, gi).unwrap();
            }
            column.sort_by(|a, b| a.total_cmp(b));
            for (gi, &v) in column.iter().enumerate() {
                out.set(sigma, action, gi, v);
            }
        }
    }
    Ok(out)
}
