//! Space-time block feasibility under NTN OFDM numerologies.
//!
//! An Alamouti block needs the channel to hold still for two consecutive
//! OFDM symbols. This example evaluates that condition for the standard
//! subcarrier spacings against coherence times implied by two levels of
//! residual Doppler (after payload-side pre-compensation), printing the
//! full timing report for each combination.

use strsma::channel::ntn_feasibility;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cp_fraction = 0.07; // normal cyclic prefix overhead
    let spacings_khz = [15.0, 30.0, 60.0, 120.0];
    let residual_doppler_hz = [8.4e3, 21.0e3];

    println!("cyclic-prefix overhead: {:.0}%", 100.0 * cp_fraction);
    println!();
    println!(
        "{:>8} {:>10} {:>12} {:>12} {:>12} {:>9}",
        "scs/kHz", "symbol/us", "sym+cp/us", "2(sym+cp)", "T_coh/us", "feasible"
    );
    for &fd in &residual_doppler_hz {
        println!("-- residual Doppler {:.1} kHz --", fd / 1e3);
        for &scs in &spacings_khz {
            let r = ntn_feasibility(scs * 1e3, cp_fraction, fd)?;
            println!(
                "{:>8.0} {:>10.2} {:>12.2} {:>12.2} {:>12.2} {:>9}",
                scs,
                r.symbol_duration_us,
                r.total_symbol_duration_us,
                2.0 * r.total_symbol_duration_us,
                r.coherence_time_us,
                if r.st_block_feasible { "yes" } else { "no" }
            );
        }
    }

    println!();
    println!("detailed report for 60 kHz at 8.4 kHz residual Doppler:");
    println!("{}", ntn_feasibility(60e3, cp_fraction, 8.4e3)?);
    Ok(())
}
