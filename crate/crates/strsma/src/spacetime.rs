//! Alamouti space-time processing of the common stream and rate evaluation.
//!
//! In ST-RSMA the common stream is transmitted as a two-symbol Alamouti
//! block over a pair of feeds. Receive-side stacking of the two slots (the
//! second conjugated) turns the block into a 2×2 effective channel whose
//! combining matrix is exactly orthogonal: the product equals
//! `‖h_pair‖² I₂`, so the two common symbols separate without cross-talk
//! and the common stream collects full transmit diversity over the pair —
//! without needing a beamforming vector at the transmitter.
//!
//! This module provides the encoder and combiner, the closed-form common
//! and private spectral-efficiency expressions, the feed-pair selection
//! rule for `N_t > 2`, and a signal-level Monte-Carlo simulator used as an
//! independent oracle for the closed-form SINR arguments.
//!
//! Rates are in bits per two-symbol space-time block per Hz (the two-slot
//! sum collapses into a single log term); divide by two for per-slot
//! values.

use crate::channel::ChannelSet;
use crate::rng;
use crate::wmmse::{CommonPrecoder, PrecoderSolution};
use crate::{C64, CMatrix, CVector};
use nalgebra::{DVector, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// Errors from space-time processing and rate evaluation.
#[derive(Debug, Error)]
pub enum SpacetimeError {
    #[error("invalid feed pair: {0}")]
    InvalidPair(String),
    #[error("need at least two feeds, got {0}")]
    TooFewFeeds(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("user index {0} out of range for {1} users")]
    UserIndex(usize, usize),
    #[error("negative power {0}")]
    NegativePower(f64),
    #[error("block count {0} below the minimum of 1000 for a stable estimate")]
    TooFewBlocks(usize),
    #[error("channel set is missing a stage: {0}")]
    MissingStage(String),
    #[error("mode {0} has no signal-level model")]
    UnsupportedMode(String),
}

/// One Alamouti block: the common symbols sent on the selected feed pair
/// over two consecutive slots.
#[derive(Debug, Clone, PartialEq)]
pub struct StBlock {
    /// Slot 1 feed symbols `[s1, s2]`.
    pub slot1: Vector2<C64>,
    /// Slot 2 feed symbols `[−s2*, s1*]`.
    pub slot2: Vector2<C64>,
}

/// Map two common symbols onto an Alamouti block.
pub fn alamouti_encode(s1: C64, s2: C64) -> StBlock {
    StBlock {
        slot1: Vector2::new(s1, s2),
        slot2: Vector2::new(-s2.conj(), s1.conj()),
    }
}

/// The feed pair `(m, n)` carrying the common stream, with its `N_t × 2`
/// selection (embedding) matrix.
///
/// Indices are 1-based and satisfy `1 ≤ m < n ≤ N_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedPair {
    /// First selected feed, 1-based.
    pub m: usize,
    /// Second selected feed, 1-based.
    pub n: usize,
    /// Total feed count the pair is embedded into.
    pub n_feeds: usize,
}

impl FeedPair {
    pub fn new(m: usize, n: usize, n_feeds: usize) -> Result<Self, SpacetimeError> {
        if n_feeds < 2 {
            return Err(SpacetimeError::TooFewFeeds(n_feeds));
        }
        if !(1 <= m && m < n && n <= n_feeds) {
            return Err(SpacetimeError::InvalidPair(format!(
                "(m, n) = ({m}, {n}) must satisfy 1 <= m < n <= {n_feeds}"
            )));
        }
        Ok(Self { m, n, n_feeds })
    }

    /// The canonical pair `(1, 2)`, the only choice when `N_t = 2`.
    pub fn first_two(n_feeds: usize) -> Result<Self, SpacetimeError> {
        Self::new(1, 2, n_feeds)
    }

    /// Zero-based feed indices.
    pub fn indices0(&self) -> (usize, usize) {
        (self.m - 1, self.n - 1)
    }

    /// The `N_t × 2` selection matrix: one unit entry per column at rows
    /// `m` and `n`.
    pub fn embed(&self) -> CMatrix {
        let mut pi = CMatrix::zeros(self.n_feeds, 2);
        pi[(self.m - 1, 0)] = C64::new(1.0, 0.0);
        pi[(self.n - 1, 1)] = C64::new(1.0, 0.0);
        pi
    }

    /// Restrict a full channel vector to the pair entries `[h_m, h_n]`.
    pub fn restrict(&self, h: &CVector) -> Result<Vector2<C64>, SpacetimeError> {
        if h.len() != self.n_feeds {
            return Err(SpacetimeError::DimensionMismatch(format!(
                "channel has {} feeds, pair expects {}",
                h.len(),
                self.n_feeds
            )));
        }
        Ok(Vector2::new(h[self.m - 1], h[self.n - 1]))
    }

    /// `‖h_pair‖²`: channel energy over the selected pair.
    pub fn pair_energy(&self, h: &CVector) -> Result<f64, SpacetimeError> {
        let hp = self.restrict(h)?;
        Ok(hp[0].norm_sqr() + hp[1].norm_sqr())
    }
}

/// Place an Alamouti block onto the full feed array: returns
/// `(Π·slot1, Π·slot2)`, zero on all feeds outside the pair.
pub fn embed_common(pair: &FeedPair, st: &StBlock) -> (CVector, CVector) {
    let mut x1 = DVector::from_element(pair.n_feeds, C64::new(0.0, 0.0));
    let mut x2 = x1.clone();
    let (i, j) = pair.indices0();
    x1[i] = st.slot1[0];
    x1[j] = st.slot1[1];
    x2[i] = st.slot2[0];
    x2[j] = st.slot2[1];
    (x1, x2)
}

/// Apply the orthogonal combining matrix to the stacked receive pair
/// `[y1, y2*]` for channel pair `h = [h_m, h_n]`:
///
/// `z1 = h_m* y1 + h_n y2*`, `z2 = h_n* y1 − h_m y2*`.
///
/// For a noiseless common-only block the outputs are
/// `z_i = ‖h‖² √(P_c/2) s_i`. A zero channel pair yields `z = 0` (combined
/// SNR zero), not an error.
pub fn combine(y1: C64, y2: C64, h_pair: &Vector2<C64>) -> (C64, C64) {
    let y2c = y2.conj();
    let z1 = h_pair[0].conj() * y1 + h_pair[1] * y2c;
    let z2 = h_pair[1].conj() * y1 - h_pair[0] * y2c;
    (z1, z2)
}

/// The combining-matrix × channel-matrix product for a channel pair; the
/// orthogonality invariant says this equals `‖h‖² I₂` exactly.
pub fn alamouti_effective_matrix(h_pair: &Vector2<C64>) -> Matrix2<C64> {
    // Stacked channel matrix H acting on [s1, s2]: row 1 from slot 1, row 2
    // from the conjugated slot 2.
    let h = Matrix2::new(
        h_pair[0],
        h_pair[1],
        h_pair[1].conj(),
        -h_pair[0].conj(),
    );
    h.adjoint() * h
}

/// Common-stream spectral efficiency of the space-time scheme:
/// `log₂(1 + ‖h_pair‖² (P_c/2) / (Σ_j |hᴴ p_j|² + σ²))`.
///
/// For `N_t > 2` the signal term restricts `h` to the selected pair while
/// the private interference uses the full channel vector.
pub fn common_rate_st(
    h: &CVector,
    pair: &FeedPair,
    p_c: f64,
    precoders: &CMatrix,
    sigma_n2: f64,
) -> Result<f64, SpacetimeError> {
    if p_c < 0.0 {
        return Err(SpacetimeError::NegativePower(p_c));
    }
    let signal = pair.pair_energy(h)? * (p_c / 2.0);
    let interference = private_interference(h, precoders, None)?;
    Ok((1.0 + signal / (interference + sigma_n2)).log2())
}

/// Common-stream spectral efficiency with a beamformed common stream
/// (conventional RSMA): `log₂(1 + |hᴴ p_c|² / (Σ_j |hᴴ p_j|² + σ²))`.
pub fn common_rate_beamformed(
    h: &CVector,
    p_c: &CVector,
    precoders: &CMatrix,
    sigma_n2: f64,
) -> Result<f64, SpacetimeError> {
    if p_c.len() != h.len() {
        return Err(SpacetimeError::DimensionMismatch(format!(
            "common precoder has {} entries, channel {}",
            p_c.len(),
            h.len()
        )));
    }
    let signal = h.dotc(p_c).norm_sqr();
    let interference = private_interference(h, precoders, None)?;
    Ok((1.0 + signal / (interference + sigma_n2)).log2())
}

/// Private-stream spectral efficiency after the common stream has been
/// cancelled: `log₂(1 + |hᴴ p_k|² / (Σ_{j≠k} |hᴴ p_j|² + σ²))`.
pub fn private_rate(
    h: &CVector,
    precoders: &CMatrix,
    k: usize,
    sigma_n2: f64,
) -> Result<f64, SpacetimeError> {
    if k >= precoders.ncols() {
        return Err(SpacetimeError::UserIndex(k, precoders.ncols()));
    }
    let signal = h.dotc(&precoders.column(k).into_owned()).norm_sqr();
    let interference = private_interference(h, precoders, Some(k))?;
    Ok((1.0 + signal / (interference + sigma_n2)).log2())
}

/// `Σ_j |hᴴ p_j|²`, optionally excluding one column.
fn private_interference(
    h: &CVector,
    precoders: &CMatrix,
    exclude: Option<usize>,
) -> Result<f64, SpacetimeError> {
    if precoders.ncols() > 0 && precoders.nrows() != h.len() {
        return Err(SpacetimeError::DimensionMismatch(format!(
            "precoders have {} rows, channel {} entries",
            precoders.nrows(),
            h.len()
        )));
    }
    let mut sum = 0.0;
    for j in 0..precoders.ncols() {
        if exclude == Some(j) {
            continue;
        }
        sum += h.dotc(&precoders.column(j).into_owned()).norm_sqr();
    }
    Ok(sum)
}

/// Select the feed pair maximizing the worst user's expected pair energy:
///
/// `(m*, n*) = argmax_(m,n) min_k ( ‖ĥ_{k,(m,n)}‖² + tr Φ_{k,(m,n)} )`,
///
/// searching all `C(N_t, 2)` pairs exhaustively, ties broken toward the
/// lexicographically smallest `(m, n)`.
pub fn select_feed_pair(channels: &ChannelSet) -> Result<FeedPair, SpacetimeError> {
    if channels.h_est.is_empty() {
        return Err(SpacetimeError::MissingStage(
            "pair selection requires estimated channels".into(),
        ));
    }
    let n_t = channels.n_feeds();
    if n_t < 2 {
        return Err(SpacetimeError::TooFewFeeds(n_t));
    }
    let k_users = channels.n_users();
    let mut best: Option<(f64, usize, usize)> = None;
    for m in 0..n_t {
        for n in (m + 1)..n_t {
            let mut score = f64::INFINITY;
            for k in 0..k_users {
                let h = &channels.h_est[k];
                let mut energy = h[m].norm_sqr() + h[n].norm_sqr();
                if let Some(phi) = channels.error_cov.get(k) {
                    energy += phi[(m, m)].re + phi[(n, n)].re;
                }
                score = score.min(energy);
            }
            // Strict improvement only: keeps the lexicographically smallest
            // maximizer since pairs are visited in lexicographic order.
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, m, n));
            }
        }
    }
    let (_, m, n) = best.expect("n_t >= 2 guarantees at least one pair");
    FeedPair::new(m + 1, n + 1, n_t)
}

/// Empirical per-user SINRs measured by the signal-level simulator.
#[derive(Debug, Clone)]
pub struct LinkMeasurement {
    /// Post-combining common-stage SINR per user (`inf` when saturated).
    pub common_sinr: Vec<f64>,
    /// Private-stage SINR per user after ideal common-stream cancellation.
    pub private_sinr: Vec<f64>,
    /// Users whose common-stage interference-plus-noise power was
    /// numerically zero (SINR reported as `inf`).
    pub common_saturated: Vec<bool>,
}

/// Per-user accumulator for measured signal and interference-plus-noise
/// energies.
#[derive(Clone, Copy, Default)]
struct PowerAccumulator {
    sig_c: f64,
    inter_c: f64,
    sig_p: f64,
    inter_p: f64,
}

impl PowerAccumulator {
    fn add(&mut self, o: &PowerAccumulator) {
        self.sig_c += o.sig_c;
        self.inter_c += o.inter_c;
        self.sig_p += o.sig_p;
        self.inter_p += o.inter_p;
    }
}

/// Signal-level Monte-Carlo oracle: transmit Gaussian symbols through the
/// true channels, stack and combine the space-time block, measure the
/// common-stage SINR, cancel the common stream ideally, and measure the
/// private-stage SINR.
///
/// Blocks use independent per-`(user, block)` streams and a fixed-chunk
/// deterministic reduction, so the result is bit-identical regardless of
/// thread scheduling. At least 1000 blocks are required to keep the
/// estimator within its documented 2% agreement band.
pub fn simulate_link(
    channels: &ChannelSet,
    solution: &PrecoderSolution,
    n_blocks: usize,
    seed: u64,
) -> Result<LinkMeasurement, SpacetimeError> {
    if n_blocks < 1000 {
        return Err(SpacetimeError::TooFewBlocks(n_blocks));
    }
    if channels.h_true.is_empty() {
        return Err(SpacetimeError::MissingStage(
            "simulate_link requires true channels".into(),
        ));
    }
    let k_users = channels.n_users();
    let n_t = channels.n_feeds();
    if solution.precoders.nrows() != n_t || solution.precoders.ncols() != k_users {
        return Err(SpacetimeError::DimensionMismatch(format!(
            "solution precoders are {}x{}, channels are {n_t} feeds x {k_users} users",
            solution.precoders.nrows(),
            solution.precoders.ncols()
        )));
    }

    let sigma_n2 = solution.sigma_n2;
    let noise_amp = sigma_n2.sqrt();
    // Effective private gains per user: hᴴ p_j.
    let gains: Vec<Vec<C64>> = (0..k_users)
        .map(|k| {
            (0..k_users)
                .map(|j| {
                    channels.h_true[k]
                        .dotc(&solution.precoders.column(j).into_owned())
                })
                .collect()
        })
        .collect();

    enum CommonLink {
        // Alamouti over the pair: (h_m, h_n, sqrt(P_c/2)) per user.
        SpaceTime(Vec<(C64, C64, f64)>),
        // Beamformed: hᴴ p_c per user.
        Beamformed(Vec<C64>),
        None,
    }
    let common = match &solution.common {
        CommonPrecoder::SpaceTime { p_c, pair } => {
            let amp = (p_c / 2.0).sqrt();
            let mut per_user = Vec::with_capacity(k_users);
            for k in 0..k_users {
                let hp = pair.restrict(&channels.h_true[k])?;
                per_user.push((hp[0], hp[1], amp));
            }
            CommonLink::SpaceTime(per_user)
        }
        CommonPrecoder::Beamformed(p_c) => {
            if p_c.len() != n_t {
                return Err(SpacetimeError::DimensionMismatch(
                    "common beamformer length disagrees with feed count".into(),
                ));
            }
            CommonLink::Beamformed(
                (0..k_users)
                    .map(|k| channels.h_true[k].dotc(p_c))
                    .collect(),
            )
        }
        CommonPrecoder::None => CommonLink::None,
    };

    const CHUNK: usize = 4096;
    let n_chunks = n_blocks.div_ceil(CHUNK);
    let mut totals = vec![PowerAccumulator::default(); k_users];
    for k in 0..k_users {
        let partials: Vec<PowerAccumulator> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = PowerAccumulator::default();
                let start = chunk * CHUNK;
                let end = ((chunk + 1) * CHUNK).min(n_blocks);
                for block in start..end {
                    let mut stream =
                        rng::stream(seed, &[rng::purpose::LINK, k as u64, block as u64]);
                    let draw = |s: &mut rand_chacha::ChaCha8Rng| {
                        let re: f64 = s.sample(StandardNormal);
                        let im: f64 = s.sample(StandardNormal);
                        C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
                    };
                    // Common symbols, two slots of private symbols, two
                    // noise draws — fixed order for determinism.
                    let s1 = draw(&mut stream);
                    let s2 = draw(&mut stream);
                    let a1: Vec<C64> = (0..k_users).map(|_| draw(&mut stream)).collect();
                    let a2: Vec<C64> = (0..k_users).map(|_| draw(&mut stream)).collect();
                    let w1 = draw(&mut stream) * noise_amp;
                    let w2 = draw(&mut stream) * noise_amp;

                    let mut clutter1 = w1; // private interference + noise, slot 1
                    let mut clutter2 = w2;
                    for j in 0..k_users {
                        clutter1 += gains[k][j] * a1[j];
                        clutter2 += gains[k][j] * a2[j];
                    }

                    match &common {
                        CommonLink::SpaceTime(pairs) => {
                            let (hm, hn, amp) = pairs[k];
                            let y1 = amp * (hm * s1 + hn * s2) + clutter1;
                            let y2 = amp * (-hm * s2.conj() + hn * s1.conj()) + clutter2;
                            let hp = Vector2::new(hm, hn);
                            let energy = hm.norm_sqr() + hn.norm_sqr();
                            let (z1, z2) = combine(y1, y2, &hp);
                            let d1 = C64::new(energy * amp, 0.0) * s1;
                            let d2 = C64::new(energy * amp, 0.0) * s2;
                            acc.sig_c += d1.norm_sqr() + d2.norm_sqr();
                            acc.inter_c += (z1 - d1).norm_sqr() + (z2 - d2).norm_sqr();
                            // Ideal SIC: both slots cleaned of the common
                            // block, then decode the private stream.
                            let r1 = clutter1;
                            let r2 = clutter2;
                            let p1 = gains[k][k] * a1[k];
                            let p2 = gains[k][k] * a2[k];
                            acc.sig_p += p1.norm_sqr() + p2.norm_sqr();
                            acc.inter_p += (r1 - p1).norm_sqr() + (r2 - p2).norm_sqr();
                        }
                        CommonLink::Beamformed(g) => {
                            // Single-slot transmission per draw; reuse both
                            // slots as two independent measurements.
                            for (s, clutter, a) in
                                [(s1, clutter1, &a1), (s2, clutter2, &a2)]
                            {
                                let d = g[k] * s;
                                let y = d + clutter;
                                acc.sig_c += d.norm_sqr();
                                acc.inter_c += (y - d).norm_sqr();
                                let p = gains[k][k] * a[k];
                                acc.sig_p += p.norm_sqr();
                                acc.inter_p += (clutter - p).norm_sqr();
                            }
                        }
                        CommonLink::None => {
                            for (clutter, a) in [(clutter1, &a1), (clutter2, &a2)] {
                                let p = gains[k][k] * a[k];
                                acc.sig_p += p.norm_sqr();
                                acc.inter_p += (clutter - p).norm_sqr();
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        for p in &partials {
            totals[k].add(p);
        }
    }

    let mut out = LinkMeasurement {
        common_sinr: Vec::with_capacity(k_users),
        private_sinr: Vec::with_capacity(k_users),
        common_saturated: Vec::with_capacity(k_users),
    };
    for acc in &totals {
        let saturated = acc.inter_c < 1e-30 && acc.sig_c > 0.0;
        out.common_saturated.push(saturated);
        out.common_sinr.push(if saturated {
            f64::INFINITY
        } else if acc.inter_c == 0.0 {
            0.0
        } else {
            acc.sig_c / acc.inter_c
        });
        out.private_sinr.push(if acc.inter_p < 1e-30 {
            if acc.sig_p > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            acc.sig_p / acc.inter_p
        });
    }
    Ok(out)
}

/// Per-user spectral-efficiency report for a precoder solution.
///
/// Point rates are evaluated at the estimated channels; averaged rates are
/// arithmetic means of per-sample rates over an SAA sample set. Totals
/// credit each user its private rate plus its share of the common rate.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Common rate at the estimated channel, per user.
    pub r_common: Vec<f64>,
    /// Private rate at the estimated channel, per user.
    pub r_private: Vec<f64>,
    /// SAA-averaged common rate, per user.
    pub r_common_avg: Vec<f64>,
    /// SAA-averaged private rate, per user.
    pub r_private_avg: Vec<f64>,
    /// `min_k` of the SAA-averaged common rates.
    pub min_common_avg: f64,
    /// Common-rate share `C_k` credited to each user.
    pub common_portions: Vec<f64>,
    /// Per-user totals `R̄_p,k + C_k` (with the common share capped by the
    /// decodability of the common stream on the evaluation samples).
    pub totals: Vec<f64>,
}

impl RateReport {
    /// The max-min objective achieved on this report's samples.
    pub fn min_total(&self) -> f64 {
        self.totals.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
