//! Max-min fair precoder optimization by alternating WMMSE steps.
//!
//! The optimizer maximizes the minimum per-user total spectral efficiency
//! (private rate plus common-rate share) under a total power budget, with
//! expectations over channel uncertainty approximated by sample averages.
//! Each iteration alternates two steps:
//!
//! * **Step I** — for the current precoders, compute the closed-form MMSE
//!   equalizers and weights of every (user, sample) pair and average the
//!   induced quadratic coefficients ([`mmse_update`], [`average_terms`]).
//! * **Step II** — maximize the epigraph variable `q` of the resulting
//!   convex quadratically-constrained subproblem ([`build_subproblem`],
//!   solved by [`crate::qcqp`]).
//!
//! The achieved objective is nondecreasing across iterations; the loop
//! stops once the per-iteration improvement falls below a tolerance.
//!
//! Five transmission modes share the machinery: Alamouti-coded common
//! stream over a feed pair (`ST_RSMA`), beamformed common stream (`RSMA`),
//! private streams only (`SDMA`), common stream only (`MULTICAST`), and a
//! closed-form orthogonal-resource reference (`FRR`, no optimization).

mod subproblem;
mod terms;

pub use subproblem::{build_subproblem, Subproblem, VarLayout};
pub use terms::{
    average_terms, mmse_update, mse_of_equalizer, mse_terms, weighted_mse, CommonModel,
    EqualizerWeights, SampleAveragedTerms,
};

use crate::channel::ChannelSet;
use crate::qcqp::{self, QcqpError, QcqpParams};
use crate::spacetime::{
    common_rate_beamformed, common_rate_st, private_rate, select_feed_pair, FeedPair, RateReport,
    SpacetimeError,
};
use crate::{C64, CMatrix, CVector};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use subproblem::Point;
use thiserror::Error;

/// Errors from the alternating optimization and rate evaluation.
#[derive(Debug, Error)]
pub enum WmmseError {
    #[error("channel set is missing a stage: {0}")]
    MissingStage(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error("subproblem construction failed: {0}")]
    Subproblem(#[from] QcqpError),
    #[error("no strictly feasible start for the iteration-{iteration} subproblem: {source}")]
    FeasibleStart { iteration: usize, source: QcqpError },
    #[error("solver failure at iteration {iteration}: {source}")]
    SolverFailure { iteration: usize, source: QcqpError },
}

/// Transmission mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// Alamouti-coded common stream over a selected feed pair plus
    /// beamformed private streams.
    StRsma,
    /// Beamformed common stream plus beamformed private streams.
    Rsma,
    /// Private streams only.
    Sdma,
    /// Common stream only, delivered to every user.
    Multicast,
    /// Fractional resource reuse: orthogonal slices with matched-filter
    /// beamforming, evaluated in closed form by [`frr_rate`].
    Frr,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::StRsma,
        Mode::Rsma,
        Mode::Sdma,
        Mode::Multicast,
        Mode::Frr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Mode::StRsma => "ST_RSMA",
            Mode::Rsma => "RSMA",
            Mode::Sdma => "SDMA",
            Mode::Multicast => "MULTICAST",
            Mode::Frr => "FRR",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = WmmseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ST_RSMA" => Ok(Mode::StRsma),
            "RSMA" => Ok(Mode::Rsma),
            "SDMA" => Ok(Mode::Sdma),
            "MULTICAST" => Ok(Mode::Multicast),
            "FRR" => Ok(Mode::Frr),
            other => Err(WmmseError::InvalidMode(format!(
                "unknown mode {other:?}; expected ST_RSMA, RSMA, SDMA, MULTICAST, or FRR"
            ))),
        }
    }
}

/// How the common stream is transmitted in a returned solution.
#[derive(Debug, Clone)]
pub enum CommonPrecoder {
    /// Alamouti block with total common power `p_c` over `pair`.
    SpaceTime { p_c: f64, pair: FeedPair },
    /// Beamformed common stream with precoder `p_c`.
    Beamformed(CVector),
    /// No common stream.
    None,
}

/// Output of the alternating optimization.
#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    pub mode: Mode,
    pub common: CommonPrecoder,
    /// Private precoders, one `N_t` column per user (all-zero columns for
    /// the multicast mode).
    pub precoders: CMatrix,
    /// Common-rate portions `C_k ≥ 0` credited to each user.
    pub c: DVector<f64>,
    /// Private-rate epigraph values `α_k ≥ 0` at the final subproblem.
    pub alpha_p: DVector<f64>,
    /// Achieved max-min objective.
    pub q: f64,
    /// Objective after each iteration (nondecreasing within solver
    /// tolerance).
    pub trace: Vec<f64>,
    /// Iterations executed.
    pub iterations: usize,
    /// Whether the improvement tolerance was met within the budget.
    pub converged: bool,
    /// Noise variance the solution was optimized for.
    pub sigma_n2: f64,
}

impl PrecoderSolution {
    /// Power spent on the common stream.
    pub fn common_power(&self) -> f64 {
        match &self.common {
            CommonPrecoder::SpaceTime { p_c, .. } => *p_c,
            CommonPrecoder::Beamformed(p) => p.norm_squared(),
            CommonPrecoder::None => 0.0,
        }
    }

    /// Total transmit power of the solution.
    pub fn total_power(&self) -> f64 {
        let mut total = self.common_power();
        for j in 0..self.precoders.ncols() {
            total += self.precoders.column(j).norm_squared();
        }
        total
    }

    /// The feed pair carrying the common stream, if the mode has one.
    pub fn pair(&self) -> Option<&FeedPair> {
        match &self.common {
            CommonPrecoder::SpaceTime { pair, .. } => Some(pair),
            _ => None,
        }
    }

    /// JSON rendering with complex quantities interleaved as
    /// `[re, im, re, im, …]` in column-major order.
    pub fn to_json(&self) -> serde_json::Value {
        let interleave_vec = |v: &CVector| -> Vec<f64> {
            v.iter().flat_map(|z| [z.re, z.im]).collect()
        };
        let common = match &self.common {
            CommonPrecoder::SpaceTime { p_c, pair } => serde_json::json!({
                "type": "space_time",
                "p_c": p_c,
                "pair": [pair.m, pair.n],
            }),
            CommonPrecoder::Beamformed(p) => serde_json::json!({
                "type": "beamformed",
                "precoder": interleave_vec(p),
            }),
            CommonPrecoder::None => serde_json::json!({ "type": "none" }),
        };
        serde_json::json!({
            "mode": self.mode.label(),
            "common": common,
            "precoders": {
                "n_feeds": self.precoders.nrows(),
                "k_users": self.precoders.ncols(),
                "interleaved": self.precoders.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>(),
            },
            "c": self.c.iter().copied().collect::<Vec<f64>>(),
            "alpha_p": self.alpha_p.iter().copied().collect::<Vec<f64>>(),
            "q": self.q,
            "trace": self.trace,
            "iterations": self.iterations,
            "converged": self.converged,
            "sigma_n2": self.sigma_n2,
        })
    }
}

/// Parameters of [`solve_maxmin`].
#[derive(Debug, Clone)]
pub struct SolveParams {
    /// Total power budget `P_t` (watts).
    pub p_t: f64,
    /// Stop once `|q_n − q_{n−1}| ≤ eps`.
    pub eps: f64,
    /// Iteration budget.
    pub max_iter: usize,
    /// Noise variance (1 for channels synthesized by this crate).
    pub sigma_n2: f64,
    /// Interior-point settings for the per-iteration subproblems.
    pub qcqp: QcqpParams,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            p_t: 1.0,
            eps: 1e-4,
            max_iter: 200,
            sigma_n2: 1.0,
            qcqp: QcqpParams::default(),
        }
    }
}

/// Run the alternating optimization for one mode.
///
/// The channel set must carry estimated channels and SAA samples; the
/// sample count is taken from the set. For the space-time mode the feed
/// pair is chosen by [`select_feed_pair`] before iterating. On a
/// non-converged budget exhaustion the best (final) iterate is returned
/// with `converged = false`; solver failures carry the iteration index.
pub fn solve_maxmin(
    channels: &ChannelSet,
    mode: Mode,
    params: &SolveParams,
) -> Result<PrecoderSolution, WmmseError> {
    if mode == Mode::Frr {
        return Err(WmmseError::InvalidMode(
            "the fixed-rate reference has no iterative optimization; use frr_rate".into(),
        ));
    }
    if channels.h_est.is_empty() {
        return Err(WmmseError::MissingStage(
            "estimated channels (run impair_csit or build from estimates)".into(),
        ));
    }
    if channels.samples.is_empty() {
        return Err(WmmseError::MissingStage(
            "SAA samples (run draw_saa_samples)".into(),
        ));
    }
    if !(params.p_t > 0.0) || !(params.eps > 0.0) || !(params.sigma_n2 > 0.0) {
        return Err(WmmseError::Dimension(format!(
            "parameters must be positive: p_t = {}, eps = {}, sigma_n2 = {}",
            params.p_t, params.eps, params.sigma_n2
        )));
    }
    if params.max_iter == 0 {
        return Err(WmmseError::Dimension("max_iter must be at least 1".into()));
    }

    let k_users = channels.n_users();
    let n_t = channels.n_feeds();
    let pair = match mode {
        Mode::StRsma => Some(select_feed_pair(channels)?),
        _ => None,
    };

    let mut point = initial_point(channels, mode, params.p_t);
    let mut trace = Vec::new();
    let mut q_prev = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=params.max_iter {
        iterations = iter;

        // Step I: closed-form equalizers and weights at the current
        // precoders, averaged into subproblem coefficients.
        let mut all_terms = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let model = common_model(&point, mode, pair.as_ref());
            let weights: Vec<EqualizerWeights> = channels.samples[k]
                .iter()
                .map(|h| mmse_update(h, &model, &point.precoders, k, params.sigma_n2))
                .collect();
            all_terms.push(average_terms(&channels.samples[k], &weights, &model));
        }

        // Step II: maximize q over the convex surrogate.
        let sub = build_subproblem(&all_terms, mode, n_t, params.p_t, params.sigma_n2)?;
        let x0 = strictly_feasible_start(&sub, &point)
            .map_err(|source| WmmseError::FeasibleStart {
                iteration: iter,
                source,
            })?;
        let sol = qcqp::solve(&sub.problem, &x0, &params.qcqp).map_err(|source| {
            WmmseError::SolverFailure {
                iteration: iter,
                source,
            }
        })?;
        point = sub.layout.unpack(&sol.x);
        trace.push(point.q);

        if (point.q - q_prev).abs() <= params.eps {
            converged = true;
            break;
        }
        q_prev = point.q;
    }

    let common = match mode {
        Mode::StRsma => CommonPrecoder::SpaceTime {
            p_c: 2.0 * point.y_c * point.y_c,
            pair: pair.expect("pair selected for the space-time mode"),
        },
        Mode::Rsma | Mode::Multicast => CommonPrecoder::Beamformed(point.p_c.clone()),
        Mode::Sdma => CommonPrecoder::None,
        Mode::Frr => unreachable!(),
    };
    let precoders = if mode == Mode::Multicast {
        CMatrix::zeros(n_t, k_users)
    } else {
        point.precoders.clone()
    };
    let pad = |v: &DVector<f64>| -> DVector<f64> {
        if v.len() == k_users {
            v.clone()
        } else {
            DVector::zeros(k_users)
        }
    };
    Ok(PrecoderSolution {
        mode,
        common,
        precoders,
        c: pad(&point.c),
        alpha_p: pad(&point.alpha),
        q: point.q,
        trace,
        iterations,
        converged,
        sigma_n2: params.sigma_n2,
    })
}

/// Convenience wrapper: the beamformed-common subproblem used by the
/// conventional baseline, on the same sample-averaged coefficients.
pub fn conventional_rsma_subproblem(
    terms: &[SampleAveragedTerms],
    n_feeds: usize,
    p_t: f64,
    sigma_n2: f64,
) -> Result<Subproblem, WmmseError> {
    build_subproblem(terms, Mode::Rsma, n_feeds, p_t, sigma_n2)
}

/// The MSE model corresponding to an iterate.
fn common_model<'a>(point: &'a Point, mode: Mode, pair: Option<&'a FeedPair>) -> CommonModel<'a> {
    match mode {
        Mode::StRsma => CommonModel::SpaceTime {
            pair: pair.expect("pair required for the space-time mode"),
            p_c: 2.0 * point.y_c * point.y_c,
        },
        Mode::Rsma | Mode::Multicast => CommonModel::Beamformed(&point.p_c),
        Mode::Sdma => CommonModel::None,
        Mode::Frr => unreachable!("no MSE model for the fixed-rate reference"),
    }
}

/// Matched-filter initialization: private precoders along the estimated
/// channels sharing half the budget (the full budget when no common stream
/// exists), the common stream carrying the other half.
fn initial_point(channels: &ChannelSet, mode: Mode, p_t: f64) -> Point {
    let k_users = channels.n_users();
    let n_t = channels.n_feeds();
    let unit = |h: &CVector| -> CVector {
        let norm = h.norm();
        if norm > 1e-300 {
            h / C64::new(norm, 0.0)
        } else {
            let mut e = DVector::from_element(n_t, C64::new(0.0, 0.0));
            e[0] = C64::new(1.0, 0.0);
            e
        }
    };

    let has_common = !matches!(mode, Mode::Sdma);
    let has_private = !matches!(mode, Mode::Multicast);
    let private_budget = if has_common { p_t / 2.0 } else { p_t };
    let precoders = if has_private {
        let amp = C64::new((private_budget / k_users as f64).sqrt(), 0.0);
        let cols: Vec<CVector> = (0..k_users)
            .map(|k| unit(&channels.h_est[k]) * amp)
            .collect();
        CMatrix::from_columns(&cols)
    } else {
        CMatrix::zeros(n_t, 0)
    };

    let p_c = if matches!(mode, Mode::Rsma | Mode::Multicast) {
        // Sum of per-user matched filters, falling back to the first user's
        // direction if they cancel.
        let mut dir = DVector::from_element(n_t, C64::new(0.0, 0.0));
        for h in &channels.h_est {
            dir += unit(h);
        }
        if dir.norm() < 1e-9 {
            dir = unit(&channels.h_est[0]);
        }
        unit(&dir) * C64::new((p_t / 2.0).sqrt(), 0.0)
    } else {
        DVector::from_element(0, C64::new(0.0, 0.0))
    };

    Point {
        y_c: if mode == Mode::StRsma {
            (p_t / 4.0).sqrt()
        } else {
            0.0
        },
        p_c,
        precoders,
        c: DVector::zeros(if matches!(mode, Mode::StRsma | Mode::Rsma) {
            k_users
        } else {
            0
        }),
        alpha: DVector::zeros(if mode == Mode::Multicast { 0 } else { k_users }),
        q: 0.0,
    }
}

/// Construct a strictly feasible start for a subproblem from the previous
/// iterate.
///
/// The precoders are shrunk slightly to clear the power boundary, the
/// epigraph variables are placed at half their constraint headroom, and the
/// common portions share half the worst-case common headroom. If the shrink
/// ladder fails (degenerate headroom), fall back to the generic phase-one
/// search.
fn strictly_feasible_start(
    sub: &Subproblem,
    prev: &Point,
) -> Result<DVector<f64>, QcqpError> {
    let layout = &sub.layout;
    let k_users = layout.k_users;
    for shrink in [0.999f64, 0.99, 0.9] {
        let scale = C64::new(shrink.sqrt(), 0.0);
        let mut cand = Point {
            y_c: prev.y_c * shrink.sqrt(),
            p_c: &prev.p_c * scale,
            precoders: &prev.precoders * scale,
            c: DVector::zeros(prev.c.len()),
            alpha: DVector::zeros(prev.alpha.len()),
            q: 0.0,
        };
        let base = layout.pack(&cand);

        // Private headroom: α_k strictly inside (0, A_k).
        let mut ok = true;
        for (k, &ci) in sub.private_constraints.iter().enumerate() {
            let headroom = -sub.problem.constraint_value(ci, &base);
            if headroom <= 1e-11 {
                ok = false;
                break;
            }
            cand.alpha[k] = headroom / 2.0;
        }
        if !ok {
            continue;
        }

        // Common headroom: Σ c_j strictly under min_k B_k.
        let mut common_cap = f64::INFINITY;
        for &ci in &sub.common_constraints {
            common_cap = common_cap.min(-sub.problem.constraint_value(ci, &base));
        }
        if layout.c_start.is_some() {
            if common_cap <= 1e-11 {
                continue;
            }
            let share = 0.5 * common_cap / k_users as f64;
            for k in 0..k_users {
                cand.c[k] = share;
            }
        }

        // Epigraph: q strictly under its caps.
        cand.q = if layout.alpha_start.is_some() {
            let cap = (0..k_users)
                .map(|k| {
                    cand.alpha[k]
                        + if layout.c_start.is_some() {
                            cand.c[k]
                        } else {
                            0.0
                        }
                })
                .fold(f64::INFINITY, f64::min);
            cap * (1.0 - 1e-3) - 1e-12
        } else {
            // Multicast: q couples directly to the common surrogates.
            if common_cap <= 1e-11 {
                continue;
            }
            0.5 * common_cap
        };

        let x = layout.pack(&cand);
        if sub.problem.max_violation(&x) < -1e-12 {
            return Ok(x);
        }
    }
    qcqp::find_strictly_feasible(&sub.problem)
}

/// Evaluate a solution's rates on the sample set carried by `channels`
/// (typically a held-out set drawn with a distinct seed).
///
/// Point rates use the estimated channels; averaged rates are arithmetic
/// means over the samples. Per-user totals credit the private rate plus the
/// common portion, with the portions scaled down if the evaluation samples
/// cannot decode the full claimed common rate (factor
/// `min(1, min_k R̄_c,k / Σ C_j)`).
pub fn evaluate_rates(
    channels: &ChannelSet,
    solution: &PrecoderSolution,
) -> Result<RateReport, WmmseError> {
    if solution.mode == Mode::Frr {
        return Err(WmmseError::InvalidMode(
            "the fixed-rate reference is evaluated by frr_rate".into(),
        ));
    }
    if channels.h_est.is_empty() {
        return Err(WmmseError::MissingStage("estimated channels".into()));
    }
    if channels.samples.is_empty() {
        return Err(WmmseError::MissingStage("SAA samples".into()));
    }
    let k_users = channels.n_users();
    let n_t = channels.n_feeds();
    if solution.precoders.nrows() != n_t || solution.precoders.ncols() != k_users {
        return Err(WmmseError::Dimension(format!(
            "solution is {}x{}, channels are {n_t} feeds x {k_users} users",
            solution.precoders.nrows(),
            solution.precoders.ncols()
        )));
    }

    let common_rate = |h: &CVector| -> Result<f64, WmmseError> {
        match &solution.common {
            CommonPrecoder::SpaceTime { p_c, pair } => {
                Ok(common_rate_st(h, pair, *p_c, &solution.precoders, solution.sigma_n2)?)
            }
            CommonPrecoder::Beamformed(p_c) => Ok(common_rate_beamformed(
                h,
                p_c,
                &solution.precoders,
                solution.sigma_n2,
            )?),
            CommonPrecoder::None => Ok(0.0),
        }
    };

    let mut r_common = Vec::with_capacity(k_users);
    let mut r_private = Vec::with_capacity(k_users);
    let mut r_common_avg = Vec::with_capacity(k_users);
    let mut r_private_avg = Vec::with_capacity(k_users);
    for k in 0..k_users {
        r_common.push(common_rate(&channels.h_est[k])?);
        r_private.push(private_rate(
            &channels.h_est[k],
            &solution.precoders,
            k,
            solution.sigma_n2,
        )?);
        let mut c_acc = 0.0;
        let mut p_acc = 0.0;
        for h in &channels.samples[k] {
            c_acc += common_rate(h)?;
            p_acc += private_rate(h, &solution.precoders, k, solution.sigma_n2)?;
        }
        let s = channels.samples[k].len() as f64;
        r_common_avg.push(c_acc / s);
        r_private_avg.push(p_acc / s);
    }
    let min_common_avg = r_common_avg.iter().copied().fold(f64::INFINITY, f64::min);

    let common_portions: Vec<f64> = if solution.c.len() == k_users {
        solution.c.iter().copied().collect()
    } else {
        vec![0.0; k_users]
    };
    let totals: Vec<f64> = match solution.mode {
        Mode::StRsma | Mode::Rsma => {
            let claimed: f64 = common_portions.iter().sum();
            let cap = if claimed > 1e-12 {
                (min_common_avg / claimed).min(1.0)
            } else {
                1.0
            };
            (0..k_users)
                .map(|k| r_private_avg[k] + common_portions[k] * cap)
                .collect()
        }
        Mode::Sdma => r_private_avg.clone(),
        Mode::Multicast => vec![min_common_avg; k_users],
        Mode::Frr => unreachable!(),
    };

    Ok(RateReport {
        r_common,
        r_private,
        r_common_avg,
        r_private_avg,
        min_common_avg,
        common_portions,
        totals,
    })
}

/// Closed-form fractional-resource-reuse reference: each user is served
/// alone on a `1/K` orthogonal resource slice by full-power matched-filter
/// beamforming, so `rate_k = (1/K)·log₂(1 + ‖h_k‖² P_t / σ²)`, averaged
/// over the SAA samples.
pub fn frr_rate(channels: &ChannelSet, p_t: f64, sigma_n2: f64) -> Result<RateReport, WmmseError> {
    if channels.h_est.is_empty() {
        return Err(WmmseError::MissingStage("estimated channels".into()));
    }
    if channels.samples.is_empty() {
        return Err(WmmseError::MissingStage("SAA samples".into()));
    }
    if !(p_t > 0.0) || !(sigma_n2 > 0.0) {
        return Err(WmmseError::Dimension(format!(
            "p_t and sigma_n2 must be positive, got {p_t} and {sigma_n2}"
        )));
    }
    let k_users = channels.n_users();
    let fraction = 1.0 / k_users as f64;
    let slice_rate = |h: &CVector| fraction * (1.0 + h.norm_squared() * p_t / sigma_n2).log2();

    let r_private: Vec<f64> = channels.h_est.iter().map(&slice_rate).collect();
    let r_private_avg: Vec<f64> = channels
        .samples
        .iter()
        .map(|user| user.iter().map(&slice_rate).sum::<f64>() / user.len() as f64)
        .collect();
    Ok(RateReport {
        r_common: vec![0.0; k_users],
        r_private,
        r_common_avg: vec![0.0; k_users],
        r_private_avg: r_private_avg.clone(),
        min_common_avg: 0.0,
        common_portions: vec![0.0; k_users],
        totals: r_private_avg,
    })
}
