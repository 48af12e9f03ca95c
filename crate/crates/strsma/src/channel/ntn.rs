//! OFDM timing feasibility of two-slot space-time blocks under NTN
//! numerologies.
//!
//! An Alamouti block needs the channel to stay constant over two consecutive
//! OFDM symbols. This module compares twice the CP-extended symbol duration
//! against the Clarke-model coherence time implied by the residual Doppler
//! spread left after payload-side pre-compensation.

use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

use super::ChannelError;

/// Coherence-time factor of Clarke's model, `√(9/(16π)) ≈ 0.423`:
/// `T_coh = √(9/(16π)) / f_D`.
fn clarke_factor() -> f64 {
    (9.0 / (16.0 * PI)).sqrt()
}

/// Timing feasibility report for a two-symbol space-time block.
///
/// Durations are in microseconds. Symbol durations are snapped to the
/// 0.01 μs grid used by the numerology tables before the CP overhead is
/// applied, so the reported totals line up with tabulated values
/// (e.g. 16.67 μs × 1.07 = 17.84 μs for 60 kHz spacing).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NtnFeasibilityReport {
    /// Subcarrier spacing in Hz.
    pub scs_hz: f64,
    /// Cyclic-prefix overhead as a fraction of the symbol duration.
    pub cp_fraction: f64,
    /// Residual Doppler spread after pre-compensation, Hz.
    pub residual_doppler_hz: f64,
    /// OFDM symbol duration `1/scs`, μs (0.01 μs grid).
    pub symbol_duration_us: f64,
    /// Symbol duration including CP, μs.
    pub total_symbol_duration_us: f64,
    /// Clarke-model coherence time, μs.
    pub coherence_time_us: f64,
    /// Whether two consecutive CP-extended symbols fit inside the
    /// coherence time.
    pub st_block_feasible: bool,
}

/// Evaluate space-time block feasibility for one numerology.
///
/// `symbol = 1/scs`, `total = symbol · (1 + cp_fraction)`,
/// `coherence = √(9/(16π)) / residual_doppler`; the block is feasible when
/// `2 · total ≤ coherence`.
pub fn ntn_feasibility(
    scs_hz: f64,
    cp_fraction: f64,
    residual_doppler_hz: f64,
) -> Result<NtnFeasibilityReport, ChannelError> {
    if !(scs_hz > 0.0) {
        return Err(ChannelError::NonpositiveInput(format!(
            "subcarrier spacing must be positive, got {scs_hz}"
        )));
    }
    if !(0.0..1.0).contains(&cp_fraction) {
        return Err(ChannelError::NonpositiveInput(format!(
            "cp_fraction must lie in [0, 1), got {cp_fraction}"
        )));
    }
    if !(residual_doppler_hz > 0.0) {
        return Err(ChannelError::NonpositiveInput(format!(
            "residual Doppler must be positive, got {residual_doppler_hz}"
        )));
    }
    // Snap to the 0.01 μs numerology grid before applying CP overhead.
    let symbol_us = (1e6 / scs_hz * 100.0).round() / 100.0;
    let total_us = symbol_us * (1.0 + cp_fraction);
    let coherence_us = clarke_factor() / residual_doppler_hz * 1e6;
    Ok(NtnFeasibilityReport {
        scs_hz,
        cp_fraction,
        residual_doppler_hz,
        symbol_duration_us: symbol_us,
        total_symbol_duration_us: total_us,
        coherence_time_us: coherence_us,
        st_block_feasible: 2.0 * total_us <= coherence_us,
    })
}

impl fmt::Display for NtnFeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "subcarrier spacing      {:10.2} kHz", self.scs_hz / 1e3)?;
        writeln!(f, "cp fraction             {:10.2}", self.cp_fraction)?;
        writeln!(f, "symbol duration         {:10.2} us", self.symbol_duration_us)?;
        writeln!(
            f,
            "symbol + cp             {:10.2} us",
            self.total_symbol_duration_us
        )?;
        writeln!(
            f,
            "residual doppler        {:10.2} kHz",
            self.residual_doppler_hz / 1e3
        )?;
        writeln!(f, "coherence time          {:10.2} us", self.coherence_time_us)?;
        writeln!(
            f,
            "two-symbol st block     {:10.2} us",
            2.0 * self.total_symbol_duration_us
        )?;
        write!(
            f,
            "st block feasible       {:>10}",
            if self.st_block_feasible { "yes" } else { "no" }
        )
    }
}
