//! Choose the common-stream feed pair for an array with more than two feeds.
//!
//! The space-time common stream occupies exactly two feeds, so for
//! `N_t > 2` the pair must be selected. The rule maximizes the worst user's
//! expected pair energy `‖ĥ_pair‖² + tr Φ_pair` over all C(N_t, 2)
//! candidates. This example scores every candidate pair by hand, shows the
//! selection agreeing with the exhaustive table, and demonstrates that the
//! choice is invariant to a global channel rescaling.

use strsma::channel::{impair_csit, synth_channel, CsitErrorModel, SatelliteGeometry, UserPlacement};
use strsma::spacetime::{select_feed_pair, FeedPair};
use strsma::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geo = SatelliteGeometry::leo_ka_band();
    let (k_users, n_t) = (3, 5);
    let placement = UserPlacement::random(&geo, k_users, n_t, 21)?;
    let truth = synth_channel(&geo, &placement, n_t)?;
    let channels = impair_csit(&truth, &CsitErrorModel::Uniform(0.4), 22)?;

    println!("{k_users} users, {n_t} feeds: scoring all feed pairs");
    println!();
    println!("{:>8} {:>14}  per-user expected pair energy", "pair", "worst user");
    let mut best: Option<(f64, (usize, usize))> = None;
    for m in 1..=n_t {
        for n in (m + 1)..=n_t {
            let pair = FeedPair::new(m, n, n_t)?;
            let scores: Vec<f64> = (0..k_users)
                .map(|k| {
                    let est = pair.pair_energy(&channels.h_est[k]).unwrap();
                    let (i, j) = pair.indices0();
                    let trace = channels.error_cov[k][(i, i)].re + channels.error_cov[k][(j, j)].re;
                    est + trace
                })
                .collect();
            let worst = scores.iter().cloned().fold(f64::INFINITY, f64::min);
            let row: Vec<String> = scores.iter().map(|s| format!("{s:9.2}")).collect();
            println!("{:>8} {worst:>14.2}  [{}]", format!("({m},{n})"), row.join(" "));
            if best.is_none_or(|(b, _)| worst > b) {
                best = Some((worst, (m, n)));
            }
        }
    }

    let chosen = select_feed_pair(&channels)?;
    let (_, table_best) = best.unwrap();
    println!();
    println!("exhaustive table says   ({}, {})", table_best.0, table_best.1);
    println!("select_feed_pair says   ({}, {})", chosen.m, chosen.n);

    // Scale invariance: multiplying every channel by a constant rescales
    // all pair energies equally, so the argmax cannot move.
    let mut scaled = channels.clone();
    for h in &mut scaled.h_est {
        *h *= C64::new(17.0, 0.0);
    }
    for phi in &mut scaled.error_cov {
        *phi *= C64::new(17.0 * 17.0, 0.0);
    }
    let rescaled = select_feed_pair(&scaled)?;
    println!(
        "after x17 rescaling     ({}, {})  (selection is scale-invariant)",
        rescaled.m, rescaled.n
    );
    Ok(())
}
