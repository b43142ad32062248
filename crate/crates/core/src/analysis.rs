//! Points-gained accounting and the performance regression.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{reward_by_index, RewardSpec, StateIndex};
use crate::value::ValueTable;

/// How a play's value change treats realized scoring rewards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PointsGainedConvention {
    /// reward(next) + v(next) - v(current): scoring transitions credit the
    /// realized points alongside the continuation value.
    #[default]
    RewardInclusive,
    /// v(next) - v(current), the literal value-difference reading.
    ValueOnly,
}

/// Value change across one play from the acting side's perspective.
pub fn points_gained_delta(
    value: &ValueTable,
    current: StateIndex,
    next: StateIndex,
    spec: &RewardSpec,
    convention: PointsGainedConvention,
) -> f64 {
    match convention {
        PointsGainedConvention::RewardInclusive => {
            reward_by_index(next, spec) + value.value(next) - value.value(current)
        }
        PointsGainedConvention::ValueOnly => value.value(next) - value.value(current),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OlsError {
    TooFewRows { rows: usize, cols: usize },
    RankDeficientDesign,
}

impl core::fmt::Display for OlsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OlsError::TooFewRows { rows, cols } => {
                write!(f, "need more rows ({rows}) than columns ({cols})")
            }
            OlsError::RankDeficientDesign => write!(f, "design matrix is rank deficient"),
        }
    }
}

impl core::error::Error for OlsError {}

/// Ordinary least squares output.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub residual_se: f64,
    pub r2: f64,
    pub adj_r2: f64,
    /// Per covariate: (SSE_without - SSE_full) / SSE_without.  The
    /// intercept column reports NaN.
    pub partial_r2: Vec<f64>,
    pub f_stat: f64,
    pub df_resid: usize,
    pub n: usize,
}

/// Row-major design matrix (including the intercept column if wanted).
pub struct Design<'a> {
    pub x: &'a [f64],
    pub rows: usize,
    pub cols: usize,
}

const RANK_TOL: f64 = 1e-12;

/// Householder QR of the design; returns (packed R, Q^T y, rank_ok).
fn qr_solve(x: &[f64], rows: usize, cols: usize, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), OlsError> {
    let mut a = x.to_vec();
    let mut qty = y.to_vec();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for k in 0..cols {
        let mut norm = 0.0f64;
        for i in k..rows {
            norm += a[i * cols + k] * a[i * cols + k];
        }
        let norm = libm::sqrt(norm);
        if norm < RANK_TOL * scale {
            return Err(OlsError::RankDeficientDesign);
        }
        let alpha = if a[k * cols + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0f64; rows - k];
        v[0] = a[k * cols + k] - alpha;
        for i in k + 1..rows {
            v[i - k] = a[i * cols + k];
        }
        let vtv: f64 = v.iter().map(|&t| t * t).sum();
        if vtv < 1e-300 {
            continue;
        }
        for j in k..cols {
            let mut dot = 0.0;
            for i in k..rows {
                dot += v[i - k] * a[i * cols + j];
            }
            let factor = 2.0 * dot / vtv;
            for i in k..rows {
                a[i * cols + j] -= factor * v[i - k];
            }
        }
        let mut dot = 0.0;
        for i in k..rows {
            dot += v[i - k] * qty[i];
        }
        let factor = 2.0 * dot / vtv;
        for i in k..rows {
            qty[i] -= factor * v[i - k];
        }
        a[k * cols + k] = alpha;
    }
    Ok((a, qty))
}

fn back_substitute(r: &[f64], cols: usize, rhs: &[f64]) -> Vec<f64> {
    let mut beta = vec![0.0f64; cols];
    for k in (0..cols).rev() {
        let mut acc = rhs[k];
        for j in k + 1..cols {
            acc -= r[k * cols + j] * beta[j];
        }
        beta[k] = acc / r[k * cols + k];
    }
    beta
}

fn sse_of(x: &[f64], rows: usize, cols: usize, y: &[f64], beta: &[f64]) -> f64 {
    let mut sse = 0.0;
    for i in 0..rows {
        let mut fit = 0.0;
        for j in 0..cols {
            fit += x[i * cols + j] * beta[j];
        }
        sse += (y[i] - fit) * (y[i] - fit);
    }
    sse
}

/// OLS via Householder QR with standard errors from the unbiased residual
/// variance and per-covariate partial R-squared from nested refits.
pub fn ols_fit(design: &Design<'_>, y: &[f64]) -> Result<OlsFit, OlsError> {
    let (rows, cols) = (design.rows, design.cols);
    assert_eq!(design.x.len(), rows * cols);
    assert_eq!(y.len(), rows);
    if rows <= cols {
        return Err(OlsError::TooFewRows { rows, cols });
    }
    let (r, qty) = qr_solve(design.x, rows, cols, y)?;
    let beta = back_substitute(&r, cols, &qty[..cols]);
    let sse = sse_of(design.x, rows, cols, y, &beta);
    let ybar: f64 = y.iter().sum::<f64>() / rows as f64;
    let sst: f64 = y.iter().map(|&v| (v - ybar) * (v - ybar)).sum();
    let df_resid = rows - cols;
    let sigma2 = sse / df_resid as f64;

    // (X^T X)^{-1} = R^{-1} R^{-T}; only the diagonal is needed.
    let mut rinv = vec![0.0f64; cols * cols];
    for j in 0..cols {
        let mut e = vec![0.0f64; cols];
        e[j] = 1.0;
        let col = back_substitute(&r, cols, &e);
        for i in 0..cols {
            rinv[i * cols + j] = col[i];
        }
    }
    let mut std_err = vec![0.0f64; cols];
    for (i, se) in std_err.iter_mut().enumerate() {
        let mut diag = 0.0;
        for j in 0..cols {
            diag += rinv[i * cols + j] * rinv[i * cols + j];
        }
        *se = libm::sqrt(sigma2 * diag);
    }

    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (rows as f64 - 1.0) / df_resid as f64;
    let f_stat = if cols > 1 {
        ((sst - sse) / (cols as f64 - 1.0)) / sigma2
    } else {
        f64::NAN
    };

    let mut partial_r2 = vec![f64::NAN; cols];
    // Column 0 is treated as the intercept and skipped.
    for (j, slot) in partial_r2.iter_mut().enumerate().skip(1) {
        let mut reduced = Vec::with_capacity(rows * (cols - 1));
        for i in 0..rows {
            for k in 0..cols {
                if k != j {
                    reduced.push(design.x[i * cols + k]);
                }
            }
        }
        let (rr, rqty) = qr_solve(&reduced, rows, cols - 1, y)?;
        let rbeta = back_substitute(&rr, cols - 1, &rqty[..cols - 1]);
        let sse_red = sse_of(&reduced, rows, cols - 1, y, &rbeta);
        *slot = if sse_red > 0.0 { (sse_red - sse) / sse_red } else { 0.0 };
    }

    Ok(OlsFit {
        coef: beta,
        std_err,
        residual_se: libm::sqrt(sigma2),
        r2,
        adj_r2,
        partial_r2,
        f_stat,
        df_resid,
        n: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_data_is_interpolated() {
        // y = -0.3 + 0.8 x1 + 0.04 x2 + 0.08 x3, no noise.
        let beta_true = [-0.3, 0.8, 0.04, 0.08];
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut lcg = 77u64;
        let mut unif = || {
            lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (lcg >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..40 {
            let x1 = unif();
            let x2 = unif() * 10.0;
            let x3 = if unif() > 0.5 { 1.0 } else { 0.0 };
            x.extend_from_slice(&[1.0, x1, x2, x3]);
            y.push(beta_true[0] + beta_true[1] * x1 + beta_true[2] * x2 + beta_true[3] * x3);
        }
        let fit = ols_fit(&Design { x: &x, rows: 40, cols: 4 }, &y).unwrap();
        for (b, bt) in fit.coef.iter().zip(beta_true) {
            assert!((b - bt).abs() < 1e-10, "{b} vs {bt}");
        }
        assert!(fit.r2 > 1.0 - 1e-12);
        assert!(fit.partial_r2[0].is_nan());
        for j in 1..4 {
            assert!(fit.partial_r2[j] >= 0.0 && fit.partial_r2[j] <= 1.0);
        }
    }

    #[test]
    fn collinear_design_is_rejected() {
        let mut x = Vec::new();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        for i in 0..10 {
            x.extend_from_slice(&[1.0, i as f64, 2.0 * i as f64]);
        }
        assert_eq!(
            ols_fit(&Design { x: &x, rows: 10, cols: 3 }, &y),
            Err(OlsError::RankDeficientDesign)
        );
    }

    #[test]
    fn points_gained_conventions_differ_only_on_scores() {
        use crate::domain::{GameState, PlayState, ScoreKind, ScoreState, Team};
        let value = ValueTable::zero();
        let spec = RewardSpec::default();
        let from = GameState::Play(PlayState::new(Team::A, 4, 3, 2).unwrap()).index();
        let to_play = GameState::Play(PlayState::new(Team::A, 1, 2, 10).unwrap()).index();
        let to_td = GameState::Score(ScoreState { team: Team::A, kind: ScoreKind::Td }).index();
        let inclusive = PointsGainedConvention::RewardInclusive;
        let value_only = PointsGainedConvention::ValueOnly;
        assert_eq!(points_gained_delta(&value, from, to_play, &spec, inclusive), 0.0);
        assert_eq!(points_gained_delta(&value, from, to_play, &spec, value_only), 0.0);
        assert_eq!(points_gained_delta(&value, from, to_td, &spec, inclusive), 6.95);
        assert_eq!(points_gained_delta(&value, from, to_td, &spec, value_only), 0.0);
    }
}
