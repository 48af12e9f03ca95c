//! Scenario configuration: experiment parameters in engineering units,
//! parsed from strict JSON and converted to the crate's internal units
//! (meters, radians, Hz, linear gains, watts) at the boundary.
//!
//! A configuration names everything a run depends on — geometry, array and
//! user-population sizes, power budget, CSIT error levels, sample and trial
//! counts, modes, convergence settings, and the master seed — so a run is
//! reproducible from the config file alone. Unknown keys are rejected to
//! catch typos before compute is spent on the wrong scenario.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{dbi_to_linear, SatelliteGeometry};
use crate::wmmse::Mode;

use super::HarnessError;

/// Convert a power from dBm to watts: `P_W = 10^{(P_dBm − 30)/10}`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Satellite and antenna geometry in the units engineers quote them in.
///
/// Converted to the internal SI/linear representation by
/// [`GeometryConfig::to_geometry`]. The default is the LEO Ka-band
/// reference scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Orbit altitude, km.
    pub altitude_km: f64,
    /// Spot-beam footprint radius, km.
    pub beam_radius_km: f64,
    /// One-sided 3 dB feed beamwidth, degrees.
    pub theta_3db_deg: f64,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
    /// Signal bandwidth, MHz.
    pub bandwidth_mhz: f64,
    /// Peak transmit feed gain, dBi.
    pub max_tx_gain_dbi: f64,
    /// User terminal receive gain, dBi.
    pub rx_gain_dbi: f64,
    /// Receiver system noise temperature, K.
    pub system_noise_temp_k: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            altitude_km: 600.0,
            beam_radius_km: 25.0,
            theta_3db_deg: 4.4127,
            carrier_ghz: 20.0,
            bandwidth_mhz: 400.0,
            max_tx_gain_dbi: 30.5,
            rx_gain_dbi: 39.7,
            system_noise_temp_k: 150.0,
        }
    }
}

impl GeometryConfig {
    /// Convert to the internal SI/linear-unit representation.
    pub fn to_geometry(&self) -> SatelliteGeometry {
        SatelliteGeometry {
            altitude: self.altitude_km * 1e3,
            beam_radius: self.beam_radius_km * 1e3,
            theta_3db: self.theta_3db_deg.to_radians(),
            carrier_frequency: self.carrier_ghz * 1e9,
            bandwidth: self.bandwidth_mhz * 1e6,
            max_tx_gain: dbi_to_linear(self.max_tx_gain_dbi),
            rx_gain: dbi_to_linear(self.rx_gain_dbi),
            system_noise_temp: self.system_noise_temp_k,
        }
    }
}

/// The scenario dimension a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// CSIT error standard deviation σ_e.
    SigmaE,
    /// Number of users K.
    KUsers,
    /// Number of transmit feeds N_t.
    NT,
    /// Transmit power budget, in the unit the config's power field used
    /// (watts for `p_t_watts`, dBm for `p_t_dbm`).
    PT,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [Self::SigmaE, Self::KUsers, Self::NT, Self::PT];

    /// The label used in CSV output and CLI arguments.
    pub fn label(self) -> &'static str {
        match self {
            Self::SigmaE => "sigma_e",
            Self::KUsers => "k_users",
            Self::NT => "n_t",
            Self::PT => "p_t",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|axis| axis.label() == lowered)
            .ok_or_else(|| HarnessError::UnknownAxis(s.to_string()))
    }
}

/// Which axis to sweep and the values to visit, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Complete description of a Monte-Carlo experiment.
///
/// Every random draw in a run is derived from `master_seed`, so two runs of
/// the same config produce identical result rows (wall-clock timings
/// aside). Exactly one of `p_t_watts` / `p_t_dbm` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Satellite/antenna geometry; defaults to the LEO Ka-band reference.
    #[serde(default)]
    pub geometry: GeometryConfig,
    /// Number of transmit feeds `N_t`.
    pub n_t: usize,
    /// Number of users `K`.
    pub k_users: usize,
    /// Power budget in watts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_t_watts: Option<f64>,
    /// Power budget in dBm, converted to watts at parse time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_t_dbm: Option<f64>,
    /// CSIT error standard deviations. This list is the default sweep, and
    /// `sigma_e[0]` is the operating point when sweeping another axis.
    pub sigma_e: Vec<f64>,
    /// SAA sample count `S` drawn for each trial.
    pub s_samples: usize,
    /// Monte-Carlo trials per (sweep value, mode) cell.
    pub n_trials: usize,
    /// Transmission modes to compare.
    pub modes: Vec<Mode>,
    /// Convergence tolerance on `|Δq|` between alternating iterations.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Alternating-optimization iteration cap.
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Root of every random stream in the run.
    pub master_seed: u64,
    /// Optional explicit sweep; when absent, the `sigma_e` list is swept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_eps() -> f64 {
    1e-4
}

fn default_max_iter() -> usize {
    200
}

impl Default for ScenarioConfig {
    /// Desk-scale defaults: `N_t = 2`, `K = 4`, 1 W budget, σ_e ∈ {0, 1, 2},
    /// `S = 100`, 100 trials, the three optimized modes.
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            n_t: 2,
            k_users: 4,
            p_t_watts: Some(1.0),
            p_t_dbm: None,
            sigma_e: vec![0.0, 1.0, 2.0],
            s_samples: 100,
            n_trials: 100,
            modes: vec![Mode::StRsma, Mode::Rsma, Mode::Sdma],
            eps: default_eps(),
            max_iter: default_max_iter(),
            master_seed: 1,
            sweep: None,
        }
    }
}

impl ScenarioConfig {
    /// Parse and validate a config from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| HarnessError::Config(format!("invalid config JSON: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Parse and validate a config file.
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    /// The power budget in watts, whichever input unit was used.
    pub fn power_watts(&self) -> Result<f64, HarnessError> {
        match (self.p_t_watts, self.p_t_dbm) {
            (Some(w), None) => Ok(w),
            (None, Some(dbm)) => Ok(dbm_to_watts(dbm)),
            (Some(_), Some(_)) => Err(HarnessError::Config(
                "give p_t_watts or p_t_dbm, not both".into(),
            )),
            (None, None) => Err(HarnessError::Config(
                "one of p_t_watts or p_t_dbm is required".into(),
            )),
        }
    }

    /// Interpret a `p_t` sweep value in the unit the config's power field
    /// used and return watts.
    pub fn sweep_power_watts(&self, value: f64) -> f64 {
        if self.p_t_dbm.is_some() {
            dbm_to_watts(value)
        } else {
            value
        }
    }

    /// Check every invariant a run relies on.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.n_t == 0 {
            return fail("n_t must be at least 1".into());
        }
        if self.k_users == 0 {
            return fail("k_users must be at least 1".into());
        }
        if self.s_samples == 0 {
            return fail("s_samples must be at least 1".into());
        }
        if self.n_trials == 0 {
            return fail("n_trials must be at least 1".into());
        }
        if self.modes.is_empty() {
            return fail("modes must list at least one transmission mode".into());
        }
        if self.sigma_e.is_empty() {
            return fail("sigma_e must list at least one value".into());
        }
        if let Some(bad) = self.sigma_e.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return fail(format!("sigma_e entries must be nonnegative, got {bad}"));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return fail(format!("eps must be positive, got {}", self.eps));
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1".into());
        }
        let p_t = self.power_watts()?;
        if !(p_t > 0.0) || !p_t.is_finite() {
            return fail(format!("transmit power must be positive, got {p_t} W"));
        }
        if self.modes.contains(&Mode::StRsma) && self.n_t < 2 {
            return fail("ST_RSMA needs at least two transmit feeds".into());
        }
        self.geometry
            .to_geometry()
            .validate()
            .map_err(|e| HarnessError::Config(format!("geometry: {e}")))?;
        if let Some(sweep) = &self.sweep {
            validate_axis_values(self, sweep.axis, &sweep.values)?;
        }
        Ok(())
    }
}

/// Check that sweep values are admissible for an axis: nonnegative σ_e,
/// positive integer counts, positive power after unit conversion.
pub(crate) fn validate_axis_values(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<(), HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config(format!(
            "sweep over {axis} needs at least one value"
        )));
    }
    for &v in values {
        if !v.is_finite() {
            return Err(HarnessError::Config(format!(
                "sweep value for {axis} must be finite, got {v}"
            )));
        }
        match axis {
            SweepAxis::SigmaE => {
                if v < 0.0 {
                    return Err(HarnessError::Config(format!(
                        "sigma_e sweep values must be nonnegative, got {v}"
                    )));
                }
            }
            SweepAxis::KUsers | SweepAxis::NT => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(HarnessError::Config(format!(
                        "{axis} sweep values must be positive integers, got {v}"
                    )));
                }
                if axis == SweepAxis::NT && v < 2.0 && config.modes.contains(&Mode::StRsma) {
                    return Err(HarnessError::Config(
                        "ST_RSMA needs at least two transmit feeds".into(),
                    ));
                }
            }
            SweepAxis::PT => {
                let watts = config.sweep_power_watts(v);
                if !(watts > 0.0) {
                    return Err(HarnessError::Config(format!(
                        "p_t sweep value {v} converts to a nonpositive power"
                    )));
                }
            }
        }
    }
    Ok(())
}
