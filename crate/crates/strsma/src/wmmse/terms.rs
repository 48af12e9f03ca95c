//! MMSE equalizers, weights, and their sample averages.
//!
//! The max-min rate problem is handled through its weighted-MSE
//! reformulation: for fixed precoders, the optimal scalar equalizer `g` and
//! weight `u = 1/ε_MMSE` of every (user, sample) pair are closed-form, and
//! the weighted MSE `ξ(g, u) = u·ε(g) − ln u` satisfies
//! `(1 − ξ*)·log₂e = R` exactly at the optimizers. The natural log is
//! essential: `ln x ≤ x − 1` makes `(1 − ξ(g, u))·log₂e ≤ R` for *every*
//! fixed `(g, u)`, so the expansion is a true global rate lower bound in
//! the precoders, tight at the expansion point (a base-2 weight term would
//! overestimate the rate by up to `1 − (1 + ln ln 2)/ln 2 ≈ 0.086` bits).
//! Expanding `ξ` at fixed `(g, u)` yields terms that are quadratic in the
//! precoders; their arithmetic means over the SAA samples are the
//! coefficients of the per-iteration convex subproblem.

use crate::spacetime::FeedPair;
use crate::{C64, CMatrix, CVector};
use nalgebra::DVector;

/// How the common stream reaches the users, for the purpose of MSE
/// modelling.
#[derive(Debug, Clone)]
pub enum CommonModel<'a> {
    /// Alamouti block over a feed pair with total common power `p_c`.
    SpaceTime { pair: &'a FeedPair, p_c: f64 },
    /// Beamformed common stream (conventional RSMA / multicast).
    Beamformed(&'a CVector),
    /// No common stream (SDMA).
    None,
}

/// Optimal equalizers and weights for one (user, sample) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerWeights {
    /// Common-stream equalizer (real-valued for the space-time model).
    pub g_c: C64,
    /// Private-stream equalizer.
    pub g_p: C64,
    /// Common weight `1/ε_c^MMSE` (≥ 1).
    pub u_c: f64,
    /// Private weight `1/ε_p^MMSE` (≥ 1).
    pub u_p: f64,
}

/// Total received powers `(T_c, T_p)` at one sample channel.
///
/// `T_c` is the common-decoding observation power: the common signal power
/// plus all private interference plus noise. `T_p` is the post-SIC private
/// observation power `Σ_j |hᴴp_j|² + σ²`.
pub fn mse_terms(
    h: &CVector,
    common: &CommonModel<'_>,
    precoders: &CMatrix,
    sigma_n2: f64,
) -> (f64, f64) {
    let mut t_p = sigma_n2;
    for j in 0..precoders.ncols() {
        t_p += h.dotc(&precoders.column(j).into_owned()).norm_sqr();
    }
    let t_c = t_p + common_signal_power(h, common);
    (t_c, t_p)
}

/// `|common amplitude|²` seen by channel `h`.
fn common_signal_power(h: &CVector, common: &CommonModel<'_>) -> f64 {
    match common {
        CommonModel::SpaceTime { pair, p_c } => {
            pair.pair_energy(h).expect("pair validated upstream") * p_c / 2.0
        }
        CommonModel::Beamformed(p_c) => h.dotc(p_c).norm_sqr(),
        CommonModel::None => 0.0,
    }
}

/// Complex common-signal amplitude seen by channel `h` (real for the
/// space-time model where combining absorbs the channel phase).
fn common_signal_amplitude(h: &CVector, common: &CommonModel<'_>) -> C64 {
    match common {
        CommonModel::SpaceTime { pair, p_c } => C64::new(
            (pair.pair_energy(h).expect("pair validated upstream") * p_c / 2.0).sqrt(),
            0.0,
        ),
        CommonModel::Beamformed(p_c) => h.dotc(p_c),
        CommonModel::None => C64::new(0.0, 0.0),
    }
}

/// Closed-form MMSE equalizers and weights at one sample channel for user
/// `k`:
///
/// `g_c = a_c*/T_c`, `g_p = a_p*/T_p` with `a_c`, `a_p` the common/private
/// signal amplitudes, and `u = 1/ε_MMSE` where
/// `ε_c^MMSE = (T_c − |a_c|²)/T_c`, `ε_p^MMSE = (T_p − |a_p|²)/T_p`.
/// Both weights are finite because `σ² > 0` keeps the MMSE positive.
pub fn mmse_update(
    h: &CVector,
    common: &CommonModel<'_>,
    precoders: &CMatrix,
    k: usize,
    sigma_n2: f64,
) -> EqualizerWeights {
    let (t_c, t_p) = mse_terms(h, common, precoders, sigma_n2);
    let a_c = common_signal_amplitude(h, common);
    let a_p = if precoders.ncols() > 0 {
        h.dotc(&precoders.column(k).into_owned())
    } else {
        C64::new(0.0, 0.0)
    };
    let g_c = a_c.conj() / t_c;
    let g_p = a_p.conj() / t_p;
    let eps_c = (t_c - a_c.norm_sqr()) / t_c;
    let eps_p = (t_p - a_p.norm_sqr()) / t_p;
    EqualizerWeights {
        g_c,
        g_p,
        u_c: 1.0 / eps_c,
        u_p: 1.0 / eps_p,
    }
}

/// The MSE `ε(g) = |g|²T − 2Re{g·a} + 1` for an arbitrary equalizer.
pub fn mse_of_equalizer(g: C64, t: f64, a: C64) -> f64 {
    g.norm_sqr() * t - 2.0 * (g * a).re + 1.0
}

/// Weighted-MSE value `ξ(g, u) = u·ε − ln u` (nats); `(1 − ξ)·log₂e` is a
/// rate lower bound for any `u > 0`, tight at `u = 1/ε`.
pub fn weighted_mse(u: f64, eps: f64) -> f64 {
    u * eps - u.ln()
}

/// Per-user sample averages of the subproblem coefficients.
///
/// With `τ = u|g|²`, every sampled weighted MSE expands into terms whose
/// precoder dependence is at most quadratic:
///
/// * `Ψ = τ·h hᴴ` (quadratic coefficient, full channel),
/// * `ψ_c = τ_c·‖h_pair‖²` (quadratic coefficient of `y_c = √(P_c/2)`),
/// * `w_c = u_c·g_c·‖h_pair‖` (linear coefficient of `y_c`),
/// * `w = u·g*·h` (linear coefficient of a precoder vector),
/// * `v = ln u` (nats) and the weight itself for the constant part.
///
/// All fields are arithmetic means over the sample set.
#[derive(Debug, Clone)]
pub struct SampleAveragedTerms {
    pub tau_c: f64,
    pub tau_p: f64,
    /// Mean `τ_c ‖h_pair‖²` (space-time model; zero otherwise).
    pub psi_c: f64,
    /// Mean `τ_c h hᴴ`.
    pub psi_mat_c: CMatrix,
    /// Mean `τ_p h hᴴ`.
    pub psi_mat_p: CMatrix,
    /// Mean `u_c g_c ‖h_pair‖` (space-time model; zero otherwise).
    pub w_c_scalar: C64,
    /// Mean `u_c g_c* h` (beamformed common; zero vector otherwise).
    pub w_c_vec: CVector,
    /// Mean `u_p g_p* h`.
    pub w_p: CVector,
    pub u_c: f64,
    pub u_p: f64,
    pub v_c: f64,
    pub v_p: f64,
}

/// Average the per-sample subproblem coefficients for one user.
///
/// `samples` and `weights` must be parallel (the weights computed from the
/// same sample channels).
pub fn average_terms(
    samples: &[CVector],
    weights: &[EqualizerWeights],
    common: &CommonModel<'_>,
) -> SampleAveragedTerms {
    assert_eq!(
        samples.len(),
        weights.len(),
        "samples and weights must be parallel"
    );
    assert!(!samples.is_empty(), "need at least one sample");
    let n_t = samples[0].len();
    let s_count = samples.len() as f64;

    let mut out = SampleAveragedTerms {
        tau_c: 0.0,
        tau_p: 0.0,
        psi_c: 0.0,
        psi_mat_c: CMatrix::zeros(n_t, n_t),
        psi_mat_p: CMatrix::zeros(n_t, n_t),
        w_c_scalar: C64::new(0.0, 0.0),
        w_c_vec: DVector::from_element(n_t, C64::new(0.0, 0.0)),
        w_p: DVector::from_element(n_t, C64::new(0.0, 0.0)),
        u_c: 0.0,
        u_p: 0.0,
        v_c: 0.0,
        v_p: 0.0,
    };

    for (h, w) in samples.iter().zip(weights) {
        let tau_c = w.u_c * w.g_c.norm_sqr();
        let tau_p = w.u_p * w.g_p.norm_sqr();
        let outer = h * h.adjoint();
        out.tau_c += tau_c;
        out.tau_p += tau_p;
        out.psi_mat_c += &outer * C64::new(tau_c, 0.0);
        out.psi_mat_p += &outer * C64::new(tau_p, 0.0);
        match common {
            CommonModel::SpaceTime { pair, .. } => {
                let pair_energy = pair.pair_energy(h).expect("pair validated upstream");
                out.psi_c += tau_c * pair_energy;
                out.w_c_scalar += w.g_c * w.u_c * pair_energy.sqrt();
            }
            CommonModel::Beamformed(_) => {
                out.w_c_vec += h * (w.g_c.conj() * w.u_c);
            }
            CommonModel::None => {}
        }
        out.w_p += h * (w.g_p.conj() * w.u_p);
        out.u_c += w.u_c;
        out.u_p += w.u_p;
        out.v_c += w.u_c.ln();
        out.v_p += w.u_p.ln();
    }

    let inv = 1.0 / s_count;
    out.tau_c *= inv;
    out.tau_p *= inv;
    out.psi_c *= inv;
    out.psi_mat_c *= C64::new(inv, 0.0);
    out.psi_mat_p *= C64::new(inv, 0.0);
    out.w_c_scalar *= inv;
    out.w_c_vec *= C64::new(inv, 0.0);
    out.w_p *= C64::new(inv, 0.0);
    out.u_c *= inv;
    out.u_p *= inv;
    out.v_c *= inv;
    out.v_p *= inv;
    out
}
