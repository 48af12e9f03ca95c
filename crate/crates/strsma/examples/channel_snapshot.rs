//! Synthesize a multibeam channel set and inspect its magnitudes.
//!
//! Places users in a hexagonal beam layout, builds the noise-normalized
//! channel matrix, impairs the transmitter's channel knowledge, draws
//! sample-average-approximation (SAA) samples around the estimate, and
//! prints the resulting magnitudes stage by stage. Because the synthesis
//! folds the thermal-noise power into the channel, `‖h_k‖²` is directly the
//! per-user SNR at unit transmit power.

use strsma::channel::{
    draw_saa_samples, impair_csit, synth_channel, CsitErrorModel, SatelliteGeometry,
    UserPlacement,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geo = SatelliteGeometry::leo_ka_band();
    let (k_users, n_feeds, seed) = (4, 7, 42);

    let placement = UserPlacement::random(&geo, k_users, n_feeds, seed)?;
    let channels = synth_channel(&geo, &placement, n_feeds)?;
    println!(
        "{k_users} users, {n_feeds} feeds, altitude {:.0} km, seed {seed}",
        geo.altitude / 1e3
    );
    println!();
    println!("true channels (noise-normalized amplitude per feed):");
    println!("{:>6} {:>10} {:>11}  per-feed |h_kn|", "user", "dist/km", "snr@1W/dB");
    for (k, h) in channels.h_true.iter().enumerate() {
        let mags: Vec<String> = h.iter().map(|z| format!("{:7.2}", z.norm())).collect();
        println!(
            "{k:>6} {:>10.1} {:>11.2}  [{}]",
            placement.distances[k] / 1e3,
            10.0 * h.norm_squared().log10(),
            mags.join(" ")
        );
    }

    // Imperfect transmitter-side knowledge: the estimate misses an error
    // drawn from CN(0, σ_e² I).
    let sigma_e = 0.5;
    let impaired = impair_csit(&channels, &CsitErrorModel::Uniform(sigma_e), seed ^ 1)?;
    println!();
    println!("estimation offsets at sigma_e = {sigma_e}:");
    for k in 0..impaired.n_users() {
        let err = (&impaired.h_true[k] - &impaired.h_est[k]).norm();
        println!(
            "  user {k}: ||h - h_est|| = {err:.3}  ({:.1}% of ||h||)",
            100.0 * err / impaired.h_true[k].norm()
        );
    }

    // SAA samples redraw the channel around the estimate using the same
    // error statistics; a robust design optimizes their average behaviour.
    let s = 8;
    let sampled = draw_saa_samples(&impaired, s, seed ^ 2)?;
    println!();
    println!("drew {} SAA samples per user; sample spread around the estimate:", s);
    for k in 0..sampled.n_users() {
        let mean_dev = sampled.samples[k]
            .iter()
            .map(|h| (h - &sampled.h_est[k]).norm())
            .sum::<f64>()
            / s as f64;
        println!("  user {k}: mean ||h_s - h_est|| = {mean_dev:.3}");
    }
    Ok(())
}
