//! Multibeam LEO satellite channel synthesis and imperfect-CSIT modelling.
//!
//! The physical model is a bent-pipe multibeam downlink: `N_t` feeds on one
//! satellite, each illuminating a spot beam on the ground, serving `K`
//! single-antenna users. The feed-`n`-to-user-`k` channel element combines
//!
//! * a Bessel-function aperture taper for the feed's radiation pattern,
//!   evaluated at the user's off-boresight angle,
//! * free-space path loss at slant distance `d_k`,
//! * receive antenna gain, and
//! * noise pre-normalization by `√(κ T_sys B)`, so the downstream noise
//!   variance is exactly one.
//!
//! CSIT imperfection follows the estimation-error convention
//! `ĥ_k = h_k − e_k` with `e_k ~ CN(0, Φ_k)`; robust optimization works on
//! sample-average-approximation (SAA) draws `h_k^(s) = ĥ_k + e_k^(s)`.
//!
//! All randomized operations take an explicit seed and are bit-deterministic
//! given it; per-user and per-sample streams are derived independently so
//! results do not depend on evaluation order.

mod bessel;
mod ntn;

pub use bessel::{bessel_j1, bessel_j3};
pub use ntn::{ntn_feasibility, NtnFeasibilityReport};

use crate::rng;
use crate::{C64, CMatrix, CVector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use thiserror::Error;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Scale factor of the beam-pattern argument: `μ = 2.07123 sinθ / sinθ_3dB`
/// places the half-power point exactly at `θ = θ_3dB`.
pub const BEAM_MU_3DB: f64 = 2.07123;

/// Errors from channel construction and sampling.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("negative input: {0}")]
    NegativeInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("covariance is not Hermitian positive semidefinite: {0}")]
    NotPsd(String),
    #[error("channel set is missing a stage: {0}")]
    MissingStage(String),
    #[error("nonpositive input: {0}")]
    NonpositiveInput(String),
}

/// Satellite and link-budget geometry shared by every user.
#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteGeometry {
    /// Orbit altitude in meters.
    pub altitude: f64,
    /// Spot-beam footprint radius in meters.
    pub beam_radius: f64,
    /// One-sided 3 dB beamwidth of a feed in radians.
    pub theta_3db: f64,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Signal bandwidth in Hz.
    pub bandwidth: f64,
    /// Peak transmit feed gain, linear scale.
    pub max_tx_gain: f64,
    /// User terminal receive gain, linear scale.
    pub rx_gain: f64,
    /// Receiver system noise temperature in Kelvin.
    pub system_noise_temp: f64,
}

impl SatelliteGeometry {
    /// Ka-band LEO reference configuration: 600 km altitude, 25 km beams
    /// with a 4.4127° 3 dB beamwidth, 20 GHz carrier, 400 MHz bandwidth,
    /// 30.5 dBi feed gain, 39.7 dBi terminal gain, 150 K noise temperature.
    pub fn leo_ka_band() -> Self {
        Self {
            altitude: 600e3,
            beam_radius: 25e3,
            theta_3db: 4.4127_f64.to_radians(),
            carrier_frequency: 20e9,
            bandwidth: 400e6,
            max_tx_gain: dbi_to_linear(30.5),
            rx_gain: dbi_to_linear(39.7),
            system_noise_temp: 150.0,
        }
    }

    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Check the physical-range invariants.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            (self.altitude, "altitude"),
            (self.beam_radius, "beam_radius"),
            (self.carrier_frequency, "carrier_frequency"),
            (self.bandwidth, "bandwidth"),
            (self.max_tx_gain, "max_tx_gain"),
            (self.rx_gain, "rx_gain"),
            (self.system_noise_temp, "system_noise_temp"),
        ];
        for (value, name) in positive {
            if !(value > 0.0) {
                return Err(ChannelError::InvalidGeometry(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if !(self.theta_3db > 0.0 && self.theta_3db < PI / 2.0) {
            return Err(ChannelError::InvalidGeometry(format!(
                "theta_3db must lie in (0, pi/2), got {}",
                self.theta_3db
            )));
        }
        Ok(())
    }
}

/// Convert an antenna gain in dBi to linear scale.
pub fn dbi_to_linear(dbi: f64) -> f64 {
    10f64.powf(dbi / 10.0)
}

/// Feed radiation gain toward off-boresight angle `theta`.
///
/// Implements the tapered-aperture pattern
/// `G(θ) = G_max · [J1(μ)/(2μ) + 36 J3(μ)/μ³]²` with
/// `μ = 2.07123 sinθ / sinθ_3dB`. The bracket tends to 1 as `μ → 0`
/// (`J1(μ)/(2μ) → 1/4` and `36 J3(μ)/μ³ → 3/4`), so boresight gain is
/// exactly `G_max`; at `θ = θ_3dB` the gain is 3 dB down.
pub fn beam_gain(theta: f64, theta_3db: f64, max_tx_gain: f64) -> Result<f64, ChannelError> {
    if theta < 0.0 {
        return Err(ChannelError::NegativeInput(format!(
            "off-boresight angle must be nonnegative, got {theta}"
        )));
    }
    if !(theta_3db > 0.0) {
        return Err(ChannelError::InvalidGeometry(format!(
            "theta_3db must be positive, got {theta_3db}"
        )));
    }
    if max_tx_gain < 0.0 {
        return Err(ChannelError::NegativeInput(format!(
            "max_tx_gain must be nonnegative, got {max_tx_gain}"
        )));
    }
    let mu = BEAM_MU_3DB * theta.sin() / theta_3db.sin();
    let bracket = if mu < 1e-9 {
        // Series limit: 1 − 5μ²/64 + O(μ⁴); avoids 0/0 at boresight.
        1.0 - 5.0 * mu * mu / 64.0
    } else {
        bessel_j1(mu) / (2.0 * mu) + 36.0 * bessel_j3(mu) / (mu * mu * mu)
    };
    Ok(max_tx_gain * bracket * bracket)
}

/// Geometry-derived per-user placement: slant distances, off-boresight
/// angles toward every feed, and per-feed carrier phases.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPlacement {
    /// Slant distance `d_k` from the satellite to user `k`, meters.
    pub distances: Vec<f64>,
    /// `angles[k][n]`: off-boresight angle of user `k` seen from feed `n`,
    /// radians.
    pub angles: Vec<Vec<f64>>,
    /// `phases[k][n]`: carrier phase of the feed-`n`-to-user-`k` path,
    /// radians in `[0, 2π)`.
    pub phases: Vec<Vec<f64>>,
}

impl UserPlacement {
    pub fn n_users(&self) -> usize {
        self.distances.len()
    }

    pub fn n_feeds(&self) -> usize {
        self.angles.first().map_or(0, Vec::len)
    }

    /// Draw a random placement: beam boresights on a hexagonal grid with
    /// center spacing `√3 · beam_radius`, user `k` uniform in the footprint
    /// disc of beam `k mod n_feeds`, phases uniform in `[0, 2π)`.
    ///
    /// All randomness is derived from `seed` with one independent stream
    /// per user.
    pub fn random(
        geometry: &SatelliteGeometry,
        n_users: usize,
        n_feeds: usize,
        seed: u64,
    ) -> Result<Self, ChannelError> {
        geometry.validate()?;
        if n_users == 0 || n_feeds == 0 {
            return Err(ChannelError::DimensionMismatch(
                "n_users and n_feeds must be at least 1".into(),
            ));
        }
        let centers = beam_centers(n_feeds, 3f64.sqrt() * geometry.beam_radius);
        let alt = geometry.altitude;

        let mut distances = Vec::with_capacity(n_users);
        let mut angles = Vec::with_capacity(n_users);
        let mut phases = Vec::with_capacity(n_users);
        for k in 0..n_users {
            let mut stream = rng::stream(seed, &[k as u64]);
            let serving = centers[k % n_feeds];
            // Uniform draw in the serving beam's footprint disc.
            let radius = geometry.beam_radius * stream.random::<f64>().sqrt();
            let azimuth = 2.0 * PI * stream.random::<f64>();
            let pos = [
                serving[0] + radius * azimuth.cos(),
                serving[1] + radius * azimuth.sin(),
            ];
            let d = (alt * alt + pos[0] * pos[0] + pos[1] * pos[1]).sqrt();
            distances.push(d);

            // Angle between the satellite→user ray and each feed boresight
            // (satellite→beam-center ray); flat-footprint approximation.
            let mut theta_row = Vec::with_capacity(n_feeds);
            for c in centers.iter().take(n_feeds) {
                let dot = pos[0] * c[0] + pos[1] * c[1] + alt * alt;
                let nb = (c[0] * c[0] + c[1] * c[1] + alt * alt).sqrt();
                theta_row.push((dot / (d * nb)).clamp(-1.0, 1.0).acos());
            }
            angles.push(theta_row);

            let phi_row: Vec<f64> = (0..n_feeds)
                .map(|_| 2.0 * PI * stream.random::<f64>())
                .collect();
            phases.push(phi_row);
        }
        Ok(Self {
            distances,
            angles,
            phases,
        })
    }
}

/// Beam boresight footprint centers on a hexagonal grid (one ring after
/// another around the nadir beam), with the given center-to-center spacing.
pub fn beam_centers(n_beams: usize, spacing: f64) -> Vec<[f64; 2]> {
    // Smallest hex radius r with 1 + 3r(r+1) ≥ n_beams.
    let mut rings = 0usize;
    while 1 + 3 * rings * (rings + 1) < n_beams {
        rings += 1;
    }
    let r = rings as i64;
    // Axial coordinates within hex distance `rings`, ordered by
    // (ring, azimuth) with an integer tie-break for determinism.
    let mut cells: Vec<(usize, f64, i64, i64)> = Vec::new();
    for q in -r..=r {
        for s in -r..=r {
            let dist = (q.abs() + s.abs() + (q + s).abs()) as usize / 2;
            if dist > rings {
                continue;
            }
            let x = spacing * (q as f64 + s as f64 / 2.0);
            let y = spacing * 3f64.sqrt() / 2.0 * s as f64;
            let azimuth = y.atan2(x).rem_euclid(2.0 * PI);
            cells.push((dist, azimuth, q, s));
        }
    }
    cells.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).expect("azimuth is finite"))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    cells
        .into_iter()
        .take(n_beams)
        .map(|(_, _, q, s)| {
            [
                spacing * (q as f64 + s as f64 / 2.0),
                spacing * 3f64.sqrt() / 2.0 * s as f64,
            ]
        })
        .collect()
}

/// How the CSIT estimation-error covariances are modeled.
#[derive(Debug, Clone)]
pub enum CsitErrorModel {
    /// `Φ_k = σ_e² I` with the same standard deviation for every user.
    Uniform(f64),
    /// `Φ_k = σ_e,k² I` with a per-user standard deviation.
    PerUser(Vec<f64>),
    /// Arbitrary per-user Hermitian PSD covariance matrices.
    Full(Vec<CMatrix>),
}

impl CsitErrorModel {
    /// Materialize the per-user covariance matrices.
    fn covariances(&self, n_users: usize, n_feeds: usize) -> Result<Vec<CMatrix>, ChannelError> {
        match self {
            CsitErrorModel::Uniform(sigma) => {
                if *sigma < 0.0 {
                    return Err(ChannelError::NegativeInput(format!(
                        "sigma_e must be nonnegative, got {sigma}"
                    )));
                }
                let phi = CMatrix::identity(n_feeds, n_feeds) * C64::new(sigma * sigma, 0.0);
                Ok(vec![phi; n_users])
            }
            CsitErrorModel::PerUser(sigmas) => {
                if sigmas.len() != n_users {
                    return Err(ChannelError::DimensionMismatch(format!(
                        "expected {n_users} per-user sigmas, got {}",
                        sigmas.len()
                    )));
                }
                sigmas
                    .iter()
                    .map(|&s| {
                        if s < 0.0 {
                            Err(ChannelError::NegativeInput(format!(
                                "sigma_e must be nonnegative, got {s}"
                            )))
                        } else {
                            Ok(CMatrix::identity(n_feeds, n_feeds) * C64::new(s * s, 0.0))
                        }
                    })
                    .collect()
            }
            CsitErrorModel::Full(covs) => {
                if covs.len() != n_users {
                    return Err(ChannelError::DimensionMismatch(format!(
                        "expected {n_users} covariance matrices, got {}",
                        covs.len()
                    )));
                }
                for (k, phi) in covs.iter().enumerate() {
                    if phi.nrows() != n_feeds || phi.ncols() != n_feeds {
                        return Err(ChannelError::DimensionMismatch(format!(
                            "covariance {k} is {}x{}, expected {n_feeds}x{n_feeds}",
                            phi.nrows(),
                            phi.ncols()
                        )));
                    }
                }
                Ok(covs.clone())
            }
        }
    }
}

/// Channels for all `K` users, built up in stages: true channels, then
/// estimated channels with their error covariances, then SAA samples.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// True channels `h_k` (empty if the set was built from estimates).
    pub h_true: Vec<CVector>,
    /// Estimated channels `ĥ_k` (empty until [`impair_csit`] runs).
    pub h_est: Vec<CVector>,
    /// Error covariances `Φ_k` (parallel to `h_est`).
    pub error_cov: Vec<CMatrix>,
    /// SAA draws `samples[k][s] = ĥ_k + e_k^(s)` (empty until
    /// [`draw_saa_samples`] runs).
    pub samples: Vec<Vec<CVector>>,
}

impl ChannelSet {
    /// Start a set from true channels only.
    pub fn from_true(h_true: Vec<CVector>) -> Result<Self, ChannelError> {
        validate_uniform_lengths(&h_true)?;
        Ok(Self {
            h_true,
            h_est: Vec::new(),
            error_cov: Vec::new(),
            samples: Vec::new(),
        })
    }

    /// Start a set directly from estimated channels and covariances, when
    /// no ground-truth channel is needed.
    pub fn from_estimate(
        h_est: Vec<CVector>,
        error_cov: Vec<CMatrix>,
    ) -> Result<Self, ChannelError> {
        validate_uniform_lengths(&h_est)?;
        if error_cov.len() != h_est.len() {
            return Err(ChannelError::DimensionMismatch(format!(
                "{} covariances for {} users",
                error_cov.len(),
                h_est.len()
            )));
        }
        let n = h_est[0].len();
        for phi in &error_cov {
            if phi.nrows() != n || phi.ncols() != n {
                return Err(ChannelError::DimensionMismatch(
                    "covariance dimensions disagree with channel length".into(),
                ));
            }
        }
        Ok(Self {
            h_true: Vec::new(),
            h_est,
            error_cov,
            samples: Vec::new(),
        })
    }

    pub fn n_users(&self) -> usize {
        if self.h_true.is_empty() {
            self.h_est.len()
        } else {
            self.h_true.len()
        }
    }

    pub fn n_feeds(&self) -> usize {
        self.h_true
            .first()
            .or_else(|| self.h_est.first())
            .map_or(0, CVector::len)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }
}

fn validate_uniform_lengths(h: &[CVector]) -> Result<(), ChannelError> {
    let Some(first) = h.first() else {
        return Err(ChannelError::DimensionMismatch(
            "channel set must contain at least one user".into(),
        ));
    };
    if first.len() == 0 {
        return Err(ChannelError::DimensionMismatch(
            "channels must have at least one feed".into(),
        ));
    }
    if h.iter().any(|v| v.len() != first.len()) {
        return Err(ChannelError::DimensionMismatch(
            "all users must see the same number of feeds".into(),
        ));
    }
    Ok(())
}

/// Synthesize true channels from geometry and a placement.
///
/// Each element is
/// `h_{k,n} = √(G(θ_{k,n}) G_Rx) / ((4π d_k/λ) √(κ T_sys B)) · e^{−jφ_{k,n}}`.
/// The `√(κ T_sys B)` factor folds the thermal noise power into the channel,
/// so every downstream consumer uses noise variance `σ_n² = 1`.
///
/// Deterministic: all randomness lives in the placement (see
/// [`UserPlacement::random`]).
pub fn synth_channel(
    geometry: &SatelliteGeometry,
    placement: &UserPlacement,
    n_t: usize,
) -> Result<ChannelSet, ChannelError> {
    geometry.validate()?;
    let k_users = placement.n_users();
    if k_users == 0 {
        return Err(ChannelError::DimensionMismatch(
            "placement contains no users".into(),
        ));
    }
    if placement.angles.len() != k_users || placement.phases.len() != k_users {
        return Err(ChannelError::DimensionMismatch(
            "placement field lengths disagree".into(),
        ));
    }
    let lambda = geometry.wavelength();
    let noise_amp = (BOLTZMANN * geometry.system_noise_temp * geometry.bandwidth).sqrt();

    let mut h_true = Vec::with_capacity(k_users);
    for k in 0..k_users {
        if placement.angles[k].len() != n_t || placement.phases[k].len() != n_t {
            return Err(ChannelError::DimensionMismatch(format!(
                "user {k} has {} feed angles, expected {n_t}",
                placement.angles[k].len()
            )));
        }
        let d = placement.distances[k];
        if !(d > 0.0) {
            return Err(ChannelError::InvalidGeometry(format!(
                "distance of user {k} must be positive, got {d}"
            )));
        }
        let path = 4.0 * PI * d / lambda;
        let h = DVector::from_fn(n_t, |n, _| {
            let gain = beam_gain(placement.angles[k][n], geometry.theta_3db, geometry.max_tx_gain)
                .expect("angles validated nonnegative");
            let amp = (gain * geometry.rx_gain).sqrt() / (path * noise_amp);
            let phi = placement.phases[k][n];
            C64::new(amp * phi.cos(), -amp * phi.sin())
        });
        h_true.push(h);
    }
    ChannelSet::from_true(h_true)
}

/// Draw the CSIT estimation error and fill `h_est`/`error_cov`.
///
/// `ĥ_k = h_k − e_k` with `e_k ~ CN(0, Φ_k)`; one independent stream per
/// user, reproducible from `seed`.
pub fn impair_csit(
    channels: &ChannelSet,
    model: &CsitErrorModel,
    seed: u64,
) -> Result<ChannelSet, ChannelError> {
    if channels.h_true.is_empty() {
        return Err(ChannelError::MissingStage(
            "impair_csit requires true channels".into(),
        ));
    }
    let n_feeds = channels.n_feeds();
    let covs = model.covariances(channels.n_users(), n_feeds)?;
    let mut out = channels.clone();
    out.h_est.clear();
    out.error_cov.clear();
    for (k, h) in channels.h_true.iter().enumerate() {
        let root = covariance_root(&covs[k])?;
        let mut stream = rng::stream(seed, &[k as u64]);
        let e = &root * standard_complex_gaussian(n_feeds, &mut stream);
        out.h_est.push(h - e);
        out.error_cov.push(covs[k].clone());
    }
    Ok(out)
}

/// Draw `s` SAA samples per user and fill `samples`.
///
/// `h_k^(s) = ĥ_k + e_k^(s)` with `e_k^(s) ~ CN(0, Φ_k)` i.i.d.; one
/// independent stream per `(user, sample)` pair so parallel consumption
/// cannot change the draws.
pub fn draw_saa_samples(
    channels: &ChannelSet,
    s: usize,
    seed: u64,
) -> Result<ChannelSet, ChannelError> {
    if channels.h_est.is_empty() {
        return Err(ChannelError::MissingStage(
            "draw_saa_samples requires estimated channels".into(),
        ));
    }
    if s == 0 {
        return Err(ChannelError::DimensionMismatch(
            "sample count must be at least 1".into(),
        ));
    }
    let n_feeds = channels.n_feeds();
    let mut out = channels.clone();
    out.samples.clear();
    for (k, h_est) in channels.h_est.iter().enumerate() {
        let root = covariance_root(&channels.error_cov[k])?;
        let mut user_samples = Vec::with_capacity(s);
        for si in 0..s {
            let mut stream = rng::stream(seed, &[k as u64, si as u64]);
            let e = &root * standard_complex_gaussian(n_feeds, &mut stream);
            user_samples.push(h_est + e);
        }
        out.samples.push(user_samples);
    }
    Ok(out)
}

/// Draw a CN(0, I) vector: independent complex entries with unit variance
/// split evenly between real and imaginary parts.
fn standard_complex_gaussian(n: usize, stream: &mut rand_chacha::ChaCha8Rng) -> CVector {
    DVector::from_fn(n, |_, _| {
        let re: f64 = stream.sample(StandardNormal);
        let im: f64 = stream.sample(StandardNormal);
        C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    })
}

/// Factor a Hermitian PSD matrix as `Φ = B Bᴴ` via eigendecomposition,
/// rejecting inputs that are non-Hermitian or have eigenvalues below
/// `−1e-9` (relative to the largest magnitude); slightly negative
/// eigenvalues from rounding are clipped to zero.
fn covariance_root(phi: &CMatrix) -> Result<CMatrix, ChannelError> {
    let n = phi.nrows();
    let herm_err = (phi - phi.adjoint()).norm();
    if herm_err > 1e-9 * (1.0 + phi.norm()) {
        return Err(ChannelError::NotPsd(format!(
            "asymmetry norm {herm_err:.3e}"
        )));
    }
    // Exact fast path for (scaled) identity covariances, the common case.
    let diag = phi.diagonal();
    let first = diag[0].re;
    let is_scaled_identity = first >= 0.0
        && phi == &(CMatrix::identity(n, n) * C64::new(first, 0.0));
    if is_scaled_identity {
        return Ok(CMatrix::identity(n, n) * C64::new(first.sqrt(), 0.0));
    }
    let eig = nalgebra::SymmetricEigen::new(phi.clone());
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, &l| m.max(l.abs()));
    let mut roots = DVector::zeros(n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -1e-9 * scale {
            return Err(ChannelError::NotPsd(format!("eigenvalue {l:.3e}")));
        }
        roots[i] = C64::new(l.max(0.0).sqrt(), 0.0);
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}
