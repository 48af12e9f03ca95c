//! Thin command-line front end over the library: run configured
//! simulations and sweeps, check space-time block timing feasibility, and
//! run a quick self-check suite over the whole pipeline.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver or runtime
//! failure, 4 validation failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;

use strsma::channel::{
    draw_saa_samples, impair_csit, ntn_feasibility, synth_channel, ChannelSet, CsitErrorModel,
    SatelliteGeometry, UserPlacement,
};
use strsma::harness::{
    emit, run_manifest, run_trial, sweep_plan, sweep_with, EmitFormat, HarnessError, ResultTable,
    ScenarioConfig, SweepAxis,
};
use strsma::qcqp::{self, QcqpParams, QcqpProblem, QuadConstraint};
use strsma::spacetime::{alamouti_effective_matrix, common_rate_st, private_rate, FeedPair};
use strsma::wmmse::{evaluate_rates, mmse_update, solve_maxmin, CommonModel, Mode, SolveParams};
use strsma::{C64, CMatrix, CVector};

#[derive(Parser)]
#[command(
    name = "strsma",
    version,
    about = "Max-min precoder experiments for a multibeam LEO satellite downlink"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep a JSON scenario config describes and emit result rows.
    Simulate {
        /// Path to the JSON scenario config.
        #[arg(long)]
        config: PathBuf,
        /// Output file (`.json` for JSON, anything else for CSV); stdout
        /// when omitted. A run manifest is written next to the output file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep an explicit axis over explicit values, overriding the config's
    /// own sweep block.
    Sweep {
        /// Path to the JSON scenario config.
        #[arg(long)]
        config: PathBuf,
        /// Axis to sweep: sigma_e, k_users, n_t, or p_t.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a two-symbol space-time block fits inside the channel
    /// coherence time for one OFDM numerology.
    Feasibility {
        /// Subcarrier spacing, Hz.
        #[arg(long)]
        scs: f64,
        /// Cyclic-prefix overhead as a fraction of the symbol duration.
        #[arg(long)]
        cp: f64,
        /// Residual Doppler spread after pre-compensation, Hz.
        #[arg(long)]
        doppler: f64,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a quick invariant suite over the whole pipeline; prints one
    /// PASS/FAIL line per check.
    Validate,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

/// Map error classes onto the documented exit codes: bad inputs are 2,
/// failures while executing a valid request are 3.
fn exit_code_for(err: &HarnessError) -> ExitCode {
    match err {
        HarnessError::Config(_) | HarnessError::UnknownAxis(_) | HarnessError::Parse(_) => {
            ExitCode::from(2)
        }
        _ => ExitCode::from(3),
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let config = ScenarioConfig::from_path(&config)?;
            let (axis, values) = sweep_plan(&config);
            run_sweep(&config, axis, &values, out.as_deref())
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let config = ScenarioConfig::from_path(&config)?;
            let axis: SweepAxis = axis.parse()?;
            run_sweep(&config, axis, &values, out.as_deref())
        }
        Command::Feasibility {
            scs,
            cp,
            doppler,
            json,
        } => {
            let report =
                ntn_feasibility(scs, cp, doppler).map_err(|e| HarnessError::Config(e.to_string()))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => Ok(validate()),
    }
}

fn run_sweep(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    out: Option<&Path>,
) -> Result<ExitCode, HarnessError> {
    let table = sweep_with(config, axis, values)?;
    match out {
        Some(path) => {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("json") => EmitFormat::Json,
                _ => EmitFormat::Csv,
            };
            emit(&table, format, path)?;
            let manifest = run_manifest(config, axis, values)?;
            let manifest_path = manifest_path_for(path);
            std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
            eprintln!(
                "wrote {} rows to {} (manifest: {})",
                table.rows.len(),
                path.display(),
                manifest_path.display()
            );
        }
        None => print!("{}", table.to_csv_string()?),
    }
    Ok(ExitCode::SUCCESS)
}

/// `results.csv` → `results.manifest.json` in the same directory.
fn manifest_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    out.with_file_name(format!("{stem}.manifest.json"))
}

// ---------------------------------------------------------------------------
// Self-check suite
// ---------------------------------------------------------------------------

fn validate() -> ExitCode {
    let checks: &[(&str, fn() -> Result<(), String>)] = &[
        (
            "equalizer-weight rates match analytic rate expressions",
            check_rate_identity,
        ),
        (
            "alamouti combining is orthogonal",
            check_alamouti_orthogonality,
        ),
        (
            "interior-point solver certifies known optima",
            check_qcqp_known_optima,
        ),
        (
            "max-min iterates ascend and satisfy constraints",
            check_maxmin_ascent,
        ),
        (
            "single-user run reaches matched-filter capacity",
            check_single_user_capacity,
        ),
        (
            "space-time block timing reference values",
            check_timing_reference,
        ),
        (
            "trial rows are deterministic and self-consistent",
            check_trial_determinism,
        ),
        ("sweep shape and CSV round-trip", check_sweep_and_csv),
    ];
    let mut failures = 0usize;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failures == 0 {
        println!("all {} checks passed", checks.len());
        ExitCode::SUCCESS
    } else {
        println!("{failures} of {} checks failed", checks.len());
        ExitCode::from(4)
    }
}

fn err_string<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_c64(stream: &mut impl Rng) -> C64 {
    C64::new(
        stream.random::<f64>() * 2.0 - 1.0,
        stream.random::<f64>() * 2.0 - 1.0,
    )
}

fn random_cvector(stream: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| random_c64(stream))
}

fn random_cmatrix(stream: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_c64(stream))
}

/// Channel pipeline shared by the solver-backed checks.
fn demo_channels(
    k_users: usize,
    n_t: usize,
    sigma_e: f64,
    s: usize,
    seed: u64,
) -> Result<ChannelSet, String> {
    let geometry = SatelliteGeometry::leo_ka_band();
    let placement = UserPlacement::random(&geometry, k_users, n_t, seed).map_err(err_string)?;
    let truth = synth_channel(&geometry, &placement, n_t).map_err(err_string)?;
    let estimated =
        impair_csit(&truth, &CsitErrorModel::Uniform(sigma_e), seed ^ 0x5eed).map_err(err_string)?;
    draw_saa_samples(&estimated, s, seed ^ 0xa5a5).map_err(err_string)
}

/// A small scenario the harness checks can run in well under a second.
fn quick_config() -> ScenarioConfig {
    ScenarioConfig {
        n_t: 2,
        k_users: 2,
        sigma_e: vec![1.0],
        s_samples: 4,
        n_trials: 1,
        modes: vec![Mode::Frr],
        master_seed: 11,
        ..ScenarioConfig::default()
    }
}

/// The MMSE weight `u` equals `1/ε^MMSE`, so `log₂ u` must equal the
/// analytic spectral efficiency for both the space-time common stream and
/// the private streams.
fn check_rate_identity() -> Result<(), String> {
    let k_users = 3;
    for trial in 0..20u64 {
        let mut stream = strsma::rng::stream(0xA11CE, &[trial]);
        let h = random_cvector(&mut stream, 2);
        let precoders = random_cmatrix(&mut stream, 2, k_users);
        let p_c = stream.random::<f64>() + 0.1;
        let pair = FeedPair::new(1, 2, 2).map_err(err_string)?;
        let common = CommonModel::SpaceTime { pair: &pair, p_c };
        let r_c = common_rate_st(&h, &pair, p_c, &precoders, 1.0).map_err(err_string)?;
        for k in 0..k_users {
            let w = mmse_update(&h, &common, &precoders, k, 1.0);
            let r_p = private_rate(&h, &precoders, k, 1.0).map_err(err_string)?;
            let dev_c = (w.u_c.log2() - r_c).abs();
            let dev_p = (w.u_p.log2() - r_p).abs();
            if dev_c > 1e-10 || dev_p > 1e-10 {
                return Err(format!(
                    "identity residual common {dev_c:.2e}, private {dev_p:.2e}"
                ));
            }
        }
    }
    Ok(())
}

fn check_alamouti_orthogonality() -> Result<(), String> {
    for trial in 0..200u64 {
        let mut stream = strsma::rng::stream(0xA1B2, &[trial]);
        let h = Vector2::new(random_c64(&mut stream), random_c64(&mut stream));
        let eff = alamouti_effective_matrix(&h);
        let norm2 = h[0].norm_sqr() + h[1].norm_sqr();
        let dev = (eff[(0, 0)] - C64::new(norm2, 0.0))
            .norm()
            .max((eff[(1, 1)] - C64::new(norm2, 0.0)).norm())
            .max(eff[(0, 1)].norm())
            .max(eff[(1, 0)].norm());
        if dev > 1e-12 {
            return Err(format!("off-diagonal/diagonal deviation {dev:.2e}"));
        }
    }
    Ok(())
}

fn check_qcqp_known_optima() -> Result<(), String> {
    // Maximize x + y over the unit disc: optimum √2 at (√2/2, √2/2).
    let disc = QuadConstraint {
        q: DMatrix::identity(2, 2),
        a: DVector::zeros(2),
        b: -1.0,
    };
    let problem = QcqpProblem::new(
        DVector::from_vec(vec![1.0, 1.0]),
        vec![disc.clone()],
        vec![None, None],
    )
    .map_err(err_string)?;
    let solution =
        qcqp::solve(&problem, &DVector::zeros(2), &QcqpParams::default()).map_err(err_string)?;
    if (solution.objective_value - 2f64.sqrt()).abs() > 1e-6 {
        return Err(format!(
            "disc optimum {} vs √2 = {}",
            solution.objective_value,
            2f64.sqrt()
        ));
    }
    if solution.kkt_residual > 1e-6 {
        return Err(format!("disc KKT residual {:.2e}", solution.kkt_residual));
    }

    // With the bound y ≥ 0.8 active, the optimum moves to (0.6, 0.8).
    let problem = QcqpProblem::new(
        DVector::from_vec(vec![1.0, 1.0]),
        vec![disc],
        vec![None, Some(0.8)],
    )
    .map_err(err_string)?;
    let x0 = DVector::from_vec(vec![0.0, 0.9]);
    let solution = qcqp::solve(&problem, &x0, &QcqpParams::default()).map_err(err_string)?;
    if (solution.objective_value - 1.4).abs() > 1e-6 {
        return Err(format!(
            "bounded optimum {} vs 1.4",
            solution.objective_value
        ));
    }
    if solution.kkt_residual > 1e-6 {
        return Err(format!("bounded KKT residual {:.2e}", solution.kkt_residual));
    }
    Ok(())
}

fn check_maxmin_ascent() -> Result<(), String> {
    let channels = demo_channels(2, 2, 1.0, 4, 31)?;
    let params = SolveParams {
        p_t: 1.0,
        eps: 1e-3,
        max_iter: 80,
        ..Default::default()
    };
    let solution = solve_maxmin(&channels, Mode::StRsma, &params).map_err(err_string)?;
    for pair in solution.trace.windows(2) {
        if pair[1] < pair[0] - 1e-6 {
            return Err(format!("objective decreased: {} -> {}", pair[0], pair[1]));
        }
    }
    if !solution.converged {
        return Err("did not converge within the iteration budget".into());
    }
    if solution.total_power() > params.p_t + 1e-8 {
        return Err(format!("power {} exceeds budget", solution.total_power()));
    }
    let report = evaluate_rates(&channels, &solution).map_err(err_string)?;
    if report.min_total() + 1e-5 < solution.q {
        return Err(format!(
            "objective {} exceeds achieved min rate {}",
            solution.q,
            report.min_total()
        ));
    }
    Ok(())
}

fn check_single_user_capacity() -> Result<(), String> {
    let channels = demo_channels(1, 2, 0.0, 1, 7)?;
    let capacity = (1.0 + channels.h_est[0].norm_squared()).log2();
    let params = SolveParams {
        p_t: 1.0,
        eps: 1e-6,
        max_iter: 400,
        ..Default::default()
    };
    let solution = solve_maxmin(&channels, Mode::StRsma, &params).map_err(err_string)?;
    let achieved = evaluate_rates(&channels, &solution)
        .map_err(err_string)?
        .min_total();
    if achieved < 0.99 * capacity {
        return Err(format!("achieved {achieved} vs capacity {capacity}"));
    }
    Ok(())
}

fn check_timing_reference() -> Result<(), String> {
    let two_dp = |x: f64| (x * 100.0).round() / 100.0;
    let expect = |value: f64, reference: f64, what: &str| -> Result<(), String> {
        if two_dp(value) == reference {
            Ok(())
        } else {
            Err(format!("{what}: {value} vs {reference}"))
        }
    };
    let small_60 = ntn_feasibility(60e3, 0.07, 8.4e3).map_err(err_string)?;
    expect(small_60.symbol_duration_us, 16.67, "60 kHz symbol")?;
    expect(small_60.total_symbol_duration_us, 17.84, "60 kHz symbol + CP")?;
    expect(small_60.coherence_time_us, 50.37, "10 km coherence")?;
    let small_120 = ntn_feasibility(120e3, 0.07, 8.4e3).map_err(err_string)?;
    expect(small_120.symbol_duration_us, 8.33, "120 kHz symbol")?;
    expect(small_120.total_symbol_duration_us, 8.91, "120 kHz symbol + CP")?;
    let large_60 = ntn_feasibility(60e3, 0.07, 21e3).map_err(err_string)?;
    expect(large_60.coherence_time_us, 20.15, "25 km coherence")?;
    let large_120 = ntn_feasibility(120e3, 0.07, 21e3).map_err(err_string)?;
    if !small_60.st_block_feasible || !small_120.st_block_feasible {
        return Err("10 km beam: both numerologies must fit".into());
    }
    if large_60.st_block_feasible {
        return Err("25 km beam at 60 kHz must not fit".into());
    }
    if !large_120.st_block_feasible {
        return Err("25 km beam at 120 kHz must fit".into());
    }
    Ok(())
}

fn check_trial_determinism() -> Result<(), String> {
    let config = quick_config();
    let first =
        run_trial(&config, SweepAxis::SigmaE, 1.0, Mode::Frr, 0).map_err(err_string)?;
    let second =
        run_trial(&config, SweepAxis::SigmaE, 1.0, Mode::Frr, 0).map_err(err_string)?;
    if first.user_se != second.user_se || first.min_se != second.min_se {
        return Err("identical trials disagreed".into());
    }
    let min = first
        .user_se
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if first.min_se != min {
        return Err("min_se is not the minimum of the per-user SEs".into());
    }
    if first.iterations != 0 {
        return Err("the orthogonal-resource reference must not iterate".into());
    }
    Ok(())
}

fn check_sweep_and_csv() -> Result<(), String> {
    let config = ScenarioConfig {
        n_trials: 2,
        ..quick_config()
    };
    let table = sweep_with(&config, SweepAxis::SigmaE, &[0.0, 2.0]).map_err(err_string)?;
    if table.rows.len() != 4 {
        return Err(format!("expected 4 rows, got {}", table.rows.len()));
    }
    let csv = table.to_csv_string().map_err(err_string)?;
    let parsed = ResultTable::from_csv_str(&csv).map_err(err_string)?;
    let again = parsed.to_csv_string().map_err(err_string)?;
    if csv != again {
        return Err("CSV round-trip is not a fixpoint".into());
    }
    Ok(())
}
