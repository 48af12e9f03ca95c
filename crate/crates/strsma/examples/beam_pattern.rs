//! Beam gain roll-off of the Bessel feed pattern.
//!
//! Sweeps the off-boresight angle from boresight to three beamwidths and
//! prints the transmit gain of a single feed, confirming the −3 dB point at
//! `θ = θ_3dB` and showing the first side lobe. The ASCII profile makes the
//! main-lobe shape visible at a glance.

use strsma::channel::{beam_gain, SatelliteGeometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geo = SatelliteGeometry::leo_ka_band();
    let peak_db = 10.0 * geo.max_tx_gain.log10();
    println!("3 dB beamwidth angle  {:.4} deg", geo.theta_3db.to_degrees());
    println!("peak feed gain        {peak_db:.1} dBi");
    println!();
    println!("{:>9}  {:>9}  relative profile (60 dB span)", "theta", "gain");
    println!("{:>9}  {:>9}", "deg", "dBi");

    let steps = 36;
    for i in 0..=steps {
        let theta = 3.0 * geo.theta_3db * i as f64 / steps as f64;
        let g = beam_gain(theta, geo.theta_3db, geo.max_tx_gain)?;
        let g_db = 10.0 * g.max(1e-30).log10();
        let rel = (g_db - peak_db).max(-60.0);
        let bar = "#".repeat(((rel + 60.0) / 60.0 * 48.0).round() as usize);
        println!("{:9.3}  {g_db:9.2}  {bar}", theta.to_degrees());
    }

    let g_3db = beam_gain(geo.theta_3db, geo.theta_3db, geo.max_tx_gain)?;
    println!();
    println!(
        "gain at theta_3db     {:.4} dB below peak",
        peak_db - 10.0 * g_3db.log10()
    );
    Ok(())
}
