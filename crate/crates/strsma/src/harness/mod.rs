//! Monte-Carlo experiment orchestration: seeded trial execution, sweeps
//! over scenario axes, and result emission.
//!
//! A trial is the unit of work: place users, synthesize their channels,
//! impair the transmitter's channel knowledge, draw optimization samples,
//! run the configured transmission mode, and score the result on held-out
//! samples. A sweep runs the cartesian product (axis values × modes ×
//! trials) with every random stream derived from the config's master seed,
//! which buys three properties:
//!
//! * re-running a sweep reproduces the table byte for byte (wall-clock
//!   timings aside);
//! * trials can execute on any number of threads without changing a single
//!   row, because no random state is shared between them;
//! * every sweep value and mode of a given trial index sees the same user
//!   placement, CSIT error direction, and sample noise, so cross-mode and
//!   cross-value comparisons are paired and channel-draw variance cancels
//!   out of the differences.

mod config;
mod table;

pub use config::{dbm_to_watts, GeometryConfig, ScenarioConfig, SweepAxis, SweepSpec};
pub use table::{AggregateRow, ResultTable, TrialRow};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    draw_saa_samples, impair_csit, synth_channel, ChannelError, CsitErrorModel, UserPlacement,
};
use crate::rng::{derive_seed, purpose};
use crate::wmmse::{evaluate_rates, frr_rate, solve_maxmin, Mode, SolveParams, WmmseError};

/// Errors from configuration, trial execution, or result emission.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// The scenario description is invalid.
    #[error("configuration error: {0}")]
    Config(String),
    /// A channel-synthesis stage failed.
    #[error("channel stage failed: {0}")]
    Channel(#[from] ChannelError),
    /// The precoder optimization failed; carries the full cell identity so
    /// the failing trial can be reproduced in isolation.
    #[error("solver failed at {axis}={value}, mode {mode}, trial {trial}: {source}")]
    Solver {
        axis: SweepAxis,
        value: f64,
        mode: Mode,
        trial: usize,
        #[source]
        source: WmmseError,
    },
    /// A sweep-axis name is not one of `sigma_e`, `k_users`, `n_t`, `p_t`.
    #[error("unknown sweep axis `{0}`; expected sigma_e, k_users, n_t, or p_t")]
    UnknownAxis(String),
    /// Nothing to emit or parse.
    #[error("result table is empty")]
    EmptyTable,
    /// A result table could not be parsed back from text.
    #[error("failed to parse result table: {0}")]
    Parse(String),
    /// Writing or reading result files failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// JSON serialization failed.
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Execute one Monte-Carlo trial and produce its result row.
///
/// The channel realization is derived from `(master_seed, stage, trial)`
/// only — not from the sweep value or mode — so all cells of a sweep share
/// realizations trial-for-trial: the CSIT error direction is common and its
/// magnitude scales with the cell's σ_e, and the per-sample noise is common
/// across modes. Each trial redraws placement, CSIT error, and samples.
///
/// For the optimized modes, the flow is: place users, synthesize channels,
/// impair CSIT at the cell's σ_e, draw `S` optimization samples, run the
/// alternating optimizer, then score the precoders on `S` *held-out*
/// samples drawn from an independent stream. `FRR` skips the optimizer and
/// scores the orthogonal-resource reference on the held-out samples
/// directly.
pub fn run_trial(
    config: &ScenarioConfig,
    axis: SweepAxis,
    sweep_value: f64,
    mode: Mode,
    trial: usize,
) -> Result<TrialRow, HarnessError> {
    config.validate()?;
    let as_count = |what: &str| -> Result<usize, HarnessError> {
        if sweep_value >= 1.0 && sweep_value.fract() == 0.0 && sweep_value < u32::MAX as f64 {
            Ok(sweep_value as usize)
        } else {
            Err(HarnessError::Config(format!(
                "{what} sweep value must be a positive integer, got {sweep_value}"
            )))
        }
    };

    let mut k_users = config.k_users;
    let mut n_t = config.n_t;
    let mut sigma_e = config.sigma_e[0];
    let mut p_t = config.power_watts()?;
    match axis {
        SweepAxis::SigmaE => sigma_e = sweep_value,
        SweepAxis::KUsers => k_users = as_count("k_users")?,
        SweepAxis::NT => n_t = as_count("n_t")?,
        SweepAxis::PT => p_t = config.sweep_power_watts(sweep_value),
    }
    if !(sigma_e >= 0.0) {
        return Err(HarnessError::Config(format!(
            "sigma_e must be nonnegative, got {sigma_e}"
        )));
    }
    if !(p_t > 0.0) || !p_t.is_finite() {
        return Err(HarnessError::Config(format!(
            "transmit power must be positive, got {p_t} W"
        )));
    }
    if mode == Mode::StRsma && n_t < 2 {
        return Err(HarnessError::Config(
            "ST_RSMA needs at least two transmit feeds".into(),
        ));
    }

    let geometry = config.geometry.to_geometry();
    let t = trial as u64;
    let placement_seed = derive_seed(config.master_seed, &[purpose::PLACEMENT, t]);
    let csit_seed = derive_seed(config.master_seed, &[purpose::CSIT, t]);
    let saa_seed = derive_seed(config.master_seed, &[purpose::SAA, t]);
    let heldout_seed = derive_seed(config.master_seed, &[purpose::HELDOUT, t]);

    let placement = UserPlacement::random(&geometry, k_users, n_t, placement_seed)?;
    let truth = synth_channel(&geometry, &placement, n_t)?;
    let estimated = impair_csit(&truth, &CsitErrorModel::Uniform(sigma_e), csit_seed)?;
    let heldout = draw_saa_samples(&estimated, config.s_samples, heldout_seed)?;

    let solver_context = |source: WmmseError| HarnessError::Solver {
        axis,
        value: sweep_value,
        mode,
        trial,
        source,
    };

    let start = Instant::now();
    let (report, q, iterations) = if mode == Mode::Frr {
        let report = frr_rate(&heldout, p_t, 1.0).map_err(solver_context)?;
        let q = report.min_total();
        (report, q, 0)
    } else {
        let training = draw_saa_samples(&estimated, config.s_samples, saa_seed)?;
        let params = SolveParams {
            p_t,
            eps: config.eps,
            max_iter: config.max_iter,
            sigma_n2: 1.0,
            qcqp: Default::default(),
        };
        let solution = solve_maxmin(&training, mode, &params).map_err(solver_context)?;
        let report = evaluate_rates(&heldout, &solution).map_err(solver_context)?;
        (report, solution.q, solution.iterations)
    };
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    let user_se = report.totals;
    let min_se = user_se.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TrialRow {
        sweep_axis: axis,
        sweep_value,
        mode,
        trial,
        min_se,
        q,
        iterations,
        runtime_ms,
        user_se,
    })
}

/// The (axis, values) pair a config implies: its explicit `sweep` block if
/// present, otherwise a sweep of σ_e over the configured list.
pub fn sweep_plan(config: &ScenarioConfig) -> (SweepAxis, Vec<f64>) {
    match &config.sweep {
        Some(sweep) => (sweep.axis, sweep.values.clone()),
        None => (SweepAxis::SigmaE, config.sigma_e.clone()),
    }
}

/// Run the sweep a config describes. See [`sweep_with`].
pub fn sweep(config: &ScenarioConfig) -> Result<ResultTable, HarnessError> {
    let (axis, values) = sweep_plan(config);
    sweep_with(config, axis, &values)
}

/// Run a sweep of `axis` over `values`: every (value, mode, trial) cell,
/// trials in parallel, rows in deterministic (value, mode, trial) order.
pub fn sweep_with(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<ResultTable, HarnessError> {
    config.validate()?;
    config::validate_axis_values(config, axis, values)?;
    let mut tasks = Vec::with_capacity(values.len() * config.modes.len() * config.n_trials);
    for &value in values {
        for &mode in &config.modes {
            for trial in 0..config.n_trials {
                tasks.push((value, mode, trial));
            }
        }
    }
    let rows = tasks
        .into_par_iter()
        .map(|(value, mode, trial)| run_trial(config, axis, value, mode, trial))
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(HarnessError::EmptyTable);
    }
    Ok(ResultTable { rows })
}

/// Output format for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

/// Write a table to `path` in the requested format.
pub fn emit(table: &ResultTable, format: EmitFormat, path: &Path) -> Result<(), HarnessError> {
    let text = match format {
        EmitFormat::Csv => table.to_csv_string()?,
        EmitFormat::Json => table.to_json_string()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Build the run manifest: config echo, sweep plan, the seed-derivation
/// scheme in prose, crate version, and a unix timestamp.
pub fn run_manifest(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<serde_json::Value, HarnessError> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(serde_json::json!({
        "config": serde_json::to_value(config)?,
        "sweep": { "axis": axis.label(), "values": values },
        "seed_scheme": {
            "master_seed": config.master_seed,
            "derivation": "stream = chacha8(fold(master_seed, [stage, trial])) with a \
                splitmix64-style fold; stages: placement=1, csit=2, saa=3, heldout=4",
            "pairing": "channel draws depend only on (master_seed, stage, trial), so every \
                sweep value and mode reuses the same user placements, CSIT error directions, \
                and sample noise; the CSIT error magnitude scales with the cell's sigma_e",
            "redraw_policy": "user placement, CSIT error, and SAA samples are all redrawn \
                independently for every trial index",
        },
        "versions": { "crate": env!("CARGO_PKG_VERSION") },
        "generated_at_unix": timestamp,
    }))
}
