//! Prepare-and-measure simulation with single-qubit probes: exact
//! probabilities, then finite samples of growing size, each turned into a
//! witness.
//!
//! Usage: `cargo run --release --example simulate_and_witness -- [p] [mu] [seed]`

use capwit::capacity::exact_capacity;
use capwit::channels::{correlated_channel, ChannelParams};
use capwit::measure::{exact_record, record_to_accessible_choi, sampled_record, SamplingConfig};
use capwit::witness::{q_det, q_lim, LimSource, SearchConfig};

fn main() -> capwit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: f64| {
        args.get(i)
            .map(|s| s.parse().expect("numeric argument"))
            .unwrap_or(d)
    };
    let params = ChannelParams::new(num(0, 0.5), num(1, 1.0))?;
    let seed = num(2, 7.0) as u64;
    let channel = correlated_channel(&params);
    let cfg = SearchConfig::default();

    println!("exact capacity {:.6}", exact_capacity(&params));
    let exact = exact_record(&channel)?;
    println!("settings simulated: {}", exact.settings.len());
    let choi = record_to_accessible_choi(&exact)?;
    println!(
        "{:>10}  Q_tot = {:.6}  Q_lim = {:.6}",
        "exact",
        q_det(&choi, &cfg)?.q_det,
        q_lim(LimSource::Marginals(&choi), &cfg)?.q_lim
    );

    for shots in [100, 1_000, 10_000, 100_000, 1_000_000] {
        let sampling = SamplingConfig {
            shots_per_setting: shots,
            seed,
            poisson: false,
        };
        let rec = sampled_record(&channel, &sampling)?;
        let choi = record_to_accessible_choi(&rec)?;
        let res = q_det(&choi, &cfg)?;
        let lim = q_lim(LimSource::Marginals(&choi), &cfg)?;
        println!(
            "{shots:>10}  Q_tot = {:.6}  Q_lim = {:.6}  (raw {:+.6})",
            res.q_det, lim.q_lim, res.q_det_raw
        );
    }
    Ok(())
}
