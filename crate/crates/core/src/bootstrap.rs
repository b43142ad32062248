//! Game-level bootstrap over the whole estimation pipeline.
//!
//! Each replicate resamples game indices with replacement, rebuilds
//! counts, value, and the smoothed surface, and solves the partitioned
//! inverse problem on the replicate's own decisions.  Replicates draw from
//! independent ChaCha streams keyed by (seed, replicate index), so serial
//! and parallel execution agree bit for bit and pooling is order-free.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::domain::RewardSpec;
use crate::inverse::{median_grid_index, solve_partitioned, InverseError};
use crate::smooth::{smooth_surface, SmoothError, SmoothSpec};
use crate::surface::{build_surface, tau_value, QuantileSurface, TAU_GRID_LEN};
use crate::transition::{
    count_transitions, AugmentationPolicy, GameSample, TransitionModel,
};
use crate::value::{solve_value_from_counts, FillReport, ValueError, ValueTable};

/// Bootstrap settings.  The resample unit is always a game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BootstrapSpec {
    pub replicates: u32,
    pub seed: u64,
}

pub const DEFAULT_REPLICATES: u32 = 200;

/// Knobs shared by every rebuild of the pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PipelineConfig {
    pub reward: RewardSpec,
    pub augmentation: AugmentationPolicy,
}

/// Everything the estimation pipeline produces for one set of games.
#[derive(Clone, Debug)]
pub struct SurfaceBundle {
    pub model: TransitionModel,
    pub value: ValueTable,
    pub fill: FillReport,
    pub raw: QuantileSurface,
    pub smoothed: QuantileSurface,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipelineFailure {
    Singular,
    AllCellsMissing,
}

impl From<ValueError> for PipelineFailure {
    fn from(_: ValueError) -> Self {
        PipelineFailure::Singular
    }
}

impl From<SmoothError> for PipelineFailure {
    fn from(_: SmoothError) -> Self {
        PipelineFailure::AllCellsMissing
    }
}

impl core::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PipelineFailure::Singular => write!(f, "policy chain solve is singular"),
            PipelineFailure::AllCellsMissing => write!(f, "an action layer has no observed cells"),
        }
    }
}

impl core::error::Error for PipelineFailure {}

/// Counts -> value -> raw surface -> smoothed surface.
pub fn estimate_surface<'a, I>(samples: I, cfg: &PipelineConfig) -> Result<SurfaceBundle, PipelineFailure>
where
    I: IntoIterator<Item = &'a GameSample> + Clone,
{
    let model = count_transitions(samples, &cfg.augmentation);
    let (value, fill) = solve_value_from_counts(&model.policy, &cfg.reward)?;
    let raw = build_surface(&model.actions, &value, &cfg.reward);
    let spec = SmoothSpec::from_action_counts(&model.actions);
    let smoothed = smooth_surface(&raw, &spec)?;
    Ok(SurfaceBundle { model, value, fill, raw, smoothed })
}

/// Why one replicate was skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplicateFailure {
    Pipeline(PipelineFailure),
    /// A field region drew no decisions in this replicate.
    EmptyRegion,
}

impl core::fmt::Display for ReplicateFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ReplicateFailure::Pipeline(p) => write!(f, "{p}"),
            ReplicateFailure::EmptyRegion => write!(f, "a region has no decisions"),
        }
    }
}

/// Per-replicate output: the optimal tau-set (grid indices) per region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplicateSolve {
    pub tau_sets: [Vec<usize>; 2],
}

impl ReplicateSolve {
    pub fn median_index(&self, region: usize) -> usize {
        median_grid_index(&self.tau_sets[region])
    }
}

/// Game indices drawn with replacement for replicate `b`, from the stream
/// derived from (seed, b).
pub fn replicate_indices(n_games: usize, seed: u64, b: u32) -> Vec<usize> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    (0..n_games).map(|_| rng.random_range(0..n_games)).collect()
}

/// Runs the full pipeline on one bootstrap resample.
pub fn run_replicate(
    games: &[GameSample],
    cfg: &PipelineConfig,
    seed: u64,
    b: u32,
) -> Result<ReplicateSolve, ReplicateFailure> {
    let indices = replicate_indices(games.len(), seed, b);
    let resampled: Vec<&GameSample> = indices.iter().map(|&i| &games[i]).collect();
    let bundle = estimate_surface(resampled.iter().copied(), cfg)
        .map_err(ReplicateFailure::Pipeline)?;
    let mut decisions = Vec::new();
    for game in &resampled {
        decisions.extend_from_slice(&game.decisions);
    }
    let solve = solve_partitioned(&decisions, &bundle.smoothed).map_err(|e| match e {
        InverseError::EmptyRegion => ReplicateFailure::EmptyRegion,
        InverseError::Policy(_) => ReplicateFailure::Pipeline(PipelineFailure::AllCellsMissing),
    })?;
    let mut tau_sets: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (slot, region) in tau_sets.iter_mut().zip(&solve.regions) {
        match region {
            Some(r) => *slot = r.tau_set.optimal.clone(),
            None => return Err(ReplicateFailure::EmptyRegion),
        }
    }
    Ok(ReplicateSolve { tau_sets })
}

/// Pooled posterior for one field region.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPosterior {
    /// Probability mass per grid tau; each used replicate contributes
    /// 1/B_used spread uniformly over its optimal set.
    pub weights: [f64; TAU_GRID_LEN],
    /// Optimal tau-sets per replicate index; `None` marks a skip.
    pub replicate_sets: Vec<Option<Vec<usize>>>,
    pub kde: [f64; TAU_GRID_LEN],
    pub median_index: usize,
    pub median: f64,
    pub interval: (f64, f64),
    /// Set when at least 5% of the mass sits on a grid boundary: the true
    /// interval may extend past the identifiable range.
    pub boundary_flag: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauPosterior {
    pub regions: [RegionPosterior; 2],
    pub replicates_requested: u32,
    pub replicates_used: u32,
    pub seed: u64,
    pub skipped: Vec<(u32, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BootstrapError {
    NoGames,
    /// More than 20% of replicates degenerate.
    TooManyDegenerate { skipped: u32, requested: u32 },
}

impl core::fmt::Display for BootstrapError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BootstrapError::NoGames => write!(f, "no games to resample"),
            BootstrapError::TooManyDegenerate { skipped, requested } => {
                write!(f, "{skipped} of {requested} replicates degenerate")
            }
        }
    }
}

impl core::error::Error for BootstrapError {}

/// Left-continuous weighted percentile over the grid masses.
fn weighted_percentile_index(weights: &[f64; TAU_GRID_LEN], p: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = p * total;
    let mut cum = 0.0;
    for (gi, &w) in weights.iter().enumerate() {
        cum += w;
        if cum >= target - 1e-15 && w > 0.0 {
            return gi;
        }
    }
    TAU_GRID_LEN - 1
}

/// Gaussian KDE of the pooled tau mass, Silverman bandwidth with a 0.01
/// floor, renormalized to integrate to one over the grid by the trapezoid
/// rule.  Display-only; medians and intervals come from the raw masses.
pub fn weighted_kde(weights: &[f64; TAU_GRID_LEN]) -> [f64; TAU_GRID_LEN] {
    let total: f64 = weights.iter().sum();
    let mut out = [0.0f64; TAU_GRID_LEN];
    if total <= 0.0 {
        return out;
    }
    let mean: f64 =
        weights.iter().enumerate().map(|(i, &w)| w * tau_value(i)).sum::<f64>() / total;
    let var: f64 = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| w * (tau_value(i) - mean) * (tau_value(i) - mean))
        .sum::<f64>()
        / total;
    let sd = libm::sqrt(var.max(0.0));
    let q25 = tau_value(weighted_percentile_index(weights, 0.25));
    let q75 = tau_value(weighted_percentile_index(weights, 0.75));
    let iqr = q75 - q25;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let sum_sq: f64 = weights.iter().map(|&w| (w / total) * (w / total)).sum();
    let n_eff = if sum_sq > 0.0 { 1.0 / sum_sq } else { 1.0 };
    let h = (0.9 * spread * libm::pow(n_eff, -0.2)).max(0.01);

    for (j, slot) in out.iter_mut().enumerate() {
        let x = tau_value(j);
        let mut dens = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                let z = (x - tau_value(i)) / h;
                dens += w / total * libm::exp(-0.5 * z * z) / (h * 2.5066282746310002);
            }
        }
        *slot = dens;
    }
    // Trapezoid renormalization over [0.2, 0.8].
    let step = 0.01;
    let mut integral = 0.0;
    for j in 0..TAU_GRID_LEN - 1 {
        integral += 0.5 * (out[j] + out[j + 1]) * step;
    }
    if integral > 0.0 {
        for d in out.iter_mut() {
            *d /= integral;
        }
    }
    out
}

const BOUNDARY_MASS_FLAG: f64 = 0.05;

/// Pools per-replicate tau-sets into the posterior.  Aggregation is a
/// weighted sum over replicate index, so execution order cannot matter.
pub fn pool_replicates(
    results: &[Option<ReplicateSolve>],
    spec: &BootstrapSpec,
    skipped: Vec<(u32, String)>,
) -> Result<TauPosterior, BootstrapError> {
    let used = results.iter().filter(|r| r.is_some()).count() as u32;
    let requested = spec.replicates;
    if used * 5 < requested * 4 {
        return Err(BootstrapError::TooManyDegenerate { skipped: requested - used, requested });
    }
    let per_replicate = 1.0 / used as f64;
    let mut regions: Vec<RegionPosterior> = Vec::with_capacity(2);
    for region in 0..2 {
        let mut weights = [0.0f64; TAU_GRID_LEN];
        let mut replicate_sets: Vec<Option<Vec<usize>>> = Vec::with_capacity(results.len());
        for result in results {
            match result {
                Some(solve) => {
                    let set = &solve.tau_sets[region];
                    let share = per_replicate / set.len() as f64;
                    for &gi in set {
                        weights[gi] += share;
                    }
                    replicate_sets.push(Some(set.clone()));
                }
                None => replicate_sets.push(None),
            }
        }
        let median_index = weighted_percentile_index(&weights, 0.5);
        let lo = weighted_percentile_index(&weights, 0.025);
        let hi = weighted_percentile_index(&weights, 0.975);
        let boundary_flag = weights[0] >= BOUNDARY_MASS_FLAG
            || weights[TAU_GRID_LEN - 1] >= BOUNDARY_MASS_FLAG;
        regions.push(RegionPosterior {
            kde: weighted_kde(&weights),
            weights,
            replicate_sets,
            median_index,
            median: tau_value(median_index),
            interval: (tau_value(lo), tau_value(hi)),
            boundary_flag,
        });
    }
    let own = regions.pop().unwrap();
    let opp = regions.pop().unwrap();
    Ok(TauPosterior {
        regions: [opp, own],
        replicates_requested: requested,
        replicates_used: used,
        seed: spec.seed,
        skipped,
    })
}

/// Full bootstrap: resample, rebuild, solve, pool.
pub fn bootstrap_tau(
    games: &[GameSample],
    spec: &BootstrapSpec,
    cfg: &PipelineConfig,
) -> Result<TauPosterior, BootstrapError> {
    if games.is_empty() {
        return Err(BootstrapError::NoGames);
    }
    let mut results: Vec<Option<ReplicateSolve>> = Vec::with_capacity(spec.replicates as usize);
    let mut skipped = Vec::new();
    for b in 0..spec.replicates {
        match run_replicate(games, cfg, spec.seed, b) {
            Ok(solve) => results.push(Some(solve)),
            Err(failure) => {
                skipped.push((b, alloc::format!("{failure}")));
                results.push(None);
            }
        }
    }
    pool_replicates(&results, spec, skipped)
}

/// Paired or fallback-unpaired difference of two posteriors' per-replicate
/// medians (tau at `region_x` of `x` minus tau at `region_y` of `y`).
#[derive(Clone, Debug, PartialEq)]
pub struct DiffEstimate {
    pub estimate: f64,
    pub interval: (f64, f64),
    pub paired: bool,
    pub n_pairs: u32,
}

pub fn paired_difference(
    x: &TauPosterior,
    region_x: usize,
    y: &TauPosterior,
    region_y: usize,
) -> DiffEstimate {
    let paired = x.seed == y.seed
        && x.replicates_requested == y.replicates_requested
        && x.regions[region_x].replicate_sets.len() == y.regions[region_y].replicate_sets.len();
    if !paired {
        // Unpaired fallback: difference of pooled medians with a
        // conservative interval from the marginal percentile bounds.
        let ex = &x.regions[region_x];
        let ey = &y.regions[region_y];
        return DiffEstimate {
            estimate: ex.median - ey.median,
            interval: (ex.interval.0 - ey.interval.1, ex.interval.1 - ey.interval.0),
            paired: false,
            n_pairs: 0,
        };
    }
    let mut diffs: Vec<f64> = Vec::new();
    for (sx, sy) in x.regions[region_x]
        .replicate_sets
        .iter()
        .zip(&y.regions[region_y].replicate_sets)
    {
        if let (Some(sx), Some(sy)) = (sx, sy) {
            let dx = tau_value(median_grid_index(sx));
            let dy = tau_value(median_grid_index(sy));
            diffs.push(dx - dy);
        }
    }
    diffs.sort_by(|a, b| a.total_cmp(b));
    let n = diffs.len();
    let estimate = if n % 2 == 1 {
        diffs[n / 2]
    } else {
        0.5 * (diffs[n / 2 - 1] + diffs[n / 2])
    };
    let pick = |p: f64| -> f64 {
        let mut cum = 0.0;
        let share = 1.0 / n as f64;
        for &d in &diffs {
            cum += share;
            if cum >= p - 1e-15 {
                return d;
            }
        }
        diffs[n - 1]
    };
    DiffEstimate {
        estimate,
        interval: (pick(0.025), pick(0.975)),
        paired: true,
        n_pairs: n as u32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn kde_integrates_to_one() {
        let mut weights = [0.0f64; TAU_GRID_LEN];
        weights[30] = 1.0;
        let kde = weighted_kde(&weights);
        let mut integral = 0.0;
        for j in 0..TAU_GRID_LEN - 1 {
            integral += 0.5 * (kde[j] + kde[j + 1]) * 0.01;
        }
        assert!((integral - 1.0).abs() < 1e-6);
        let peak = kde.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(peak, 30);
    }

    #[test]
    fn kde_on_uniform_mass_is_nearly_flat() {
        let weights = [1.0 / TAU_GRID_LEN as f64; TAU_GRID_LEN];
        let kde = weighted_kde(&weights);
        let interior = &kde[10..50];
        let min = interior.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let max = interior.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        assert!(max / min < 1.25, "interior spread too big: {min}..{max}");
    }

    #[test]
    fn kde_integral_holds_for_scattered_masses() {
        let mut lcg = 0x2468u64;
        for _ in 0..20 {
            let mut weights = [0.0f64; TAU_GRID_LEN];
            let mut total = 0.0;
            for w in weights.iter_mut() {
                lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (lcg >> 11) as f64 / (1u64 << 53) as f64;
                if u > 0.7 {
                    *w = u;
                    total += u;
                }
            }
            if total == 0.0 {
                continue;
            }
            for w in weights.iter_mut() {
                *w /= total;
            }
            let kde = weighted_kde(&weights);
            let mut integral = 0.0;
            for j in 0..TAU_GRID_LEN - 1 {
                integral += 0.5 * (kde[j] + kde[j + 1]) * 0.01;
            }
            assert!((integral - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pooled_weights_conserve_mass_and_ignore_order() {
        let spec = BootstrapSpec { replicates: 3, seed: 9 };
        let solves = [
            Some(ReplicateSolve { tau_sets: [vec![10, 11], vec![40]] }),
            Some(ReplicateSolve { tau_sets: [vec![12], vec![40, 41, 42]] }),
            Some(ReplicateSolve { tau_sets: [vec![10], vec![44]] }),
        ];
        let posterior = pool_replicates(&solves, &spec, Vec::new()).unwrap();
        for region in &posterior.regions {
            let total: f64 = region.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        // Same solves in a different storage order, pooled by index: the
        // mass per tau must be identical (weights are index-free sums).
        let reordered = [solves[2].clone(), solves[0].clone(), solves[1].clone()];
        let p2 = pool_replicates(&reordered, &spec, Vec::new()).unwrap();
        for region in 0..2 {
            assert_eq!(posterior.regions[region].weights, p2.regions[region].weights);
        }
    }

    #[test]
    fn single_replicate_posterior_is_that_replicate() {
        let spec = BootstrapSpec { replicates: 1, seed: 4 };
        let solves = [Some(ReplicateSolve { tau_sets: [vec![15, 16, 17], vec![50]] })];
        let posterior = pool_replicates(&solves, &spec, Vec::new()).unwrap();
        let r0 = &posterior.regions[0];
        for gi in [15, 16, 17] {
            assert!((r0.weights[gi] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(r0.median_index, 16);
        let r1 = &posterior.regions[1];
        assert_eq!(r1.median_index, 50);
        assert_eq!(r1.interval, (tau_value(50), tau_value(50)));
    }

    #[test]
    fn excessive_skips_abort() {
        let spec = BootstrapSpec { replicates: 10, seed: 4 };
        let mut solves: Vec<Option<ReplicateSolve>> = Vec::new();
        for b in 0..10 {
            if b < 7 {
                solves.push(Some(ReplicateSolve { tau_sets: [vec![10], vec![50]] }));
            } else {
                solves.push(None);
            }
        }
        assert_eq!(
            pool_replicates(&solves, &spec, Vec::new()),
            Err(BootstrapError::TooManyDegenerate { skipped: 3, requested: 10 })
        );
    }

    #[test]
    fn boundary_mass_raises_the_flag()
    {
        let spec = BootstrapSpec { replicates: 2, seed: 4 };
        let solves = [
            Some(ReplicateSolve { tau_sets: [vec![0], vec![30]] }),
            Some(ReplicateSolve { tau_sets: [vec![5], vec![30]] }),
        ];
        let posterior = pool_replicates(&solves, &spec, Vec::new()).unwrap();
        assert!(posterior.regions[0].boundary_flag);
        assert!(!posterior.regions[1].boundary_flag);
    }

    #[test]
    fn identical_posteriors_difference_to_zero() {
        let spec = BootstrapSpec { replicates: 4, seed: 11 };
        let solves: Vec<Option<ReplicateSolve>> = (0..4)
            .map(|b| {
                Some(ReplicateSolve {
                    tau_sets: [vec![10 + b as usize], vec![40 + b as usize]],
                })
            })
            .collect();
        let x = pool_replicates(&solves, &spec, Vec::new()).unwrap();
        let y = x.clone();
        let diff = paired_difference(&x, 0, &y, 0);
        assert!(diff.paired);
        assert_eq!(diff.estimate, 0.0);
        assert_eq!(diff.interval, (0.0, 0.0));
        // Region 1 sits 0.30 above region 0 by construction.
        let cross = paired_difference(&x, 1, &y, 0);
        assert!((cross.estimate - 0.30).abs() < 1e-12);
        assert!(cross.estimate.signum() == (x.regions[1].median - y.regions[0].median).signum());
    }

    #[test]
    fn replicate_streams_are_deterministic_and_distinct() {
        let a = replicate_indices(100, 7, 3);
        let b = replicate_indices(100, 7, 3);
        assert_eq!(a, b);
        let c = replicate_indices(100, 7, 4);
        assert_ne!(a, c);
        assert!(a.iter().all(|&i| i < 100));
    }
}
