//! Bootstrap uncertainty of the witness for one published dataset.
//!
//! Usage: `cargo run --release --example bootstrap -- [p] [mu] [resamples] [seed]`

use std::time::Instant;

use capwit::cli::{bootstrap_dataset, fit_dataset, Bootstrap};
use capwit::dataio::builtin_dataset;
use capwit::witness::{bootstrap_error, q_det, BootstrapReport, SearchConfig};

fn main() -> capwit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let ds = builtin_dataset(&arg(0, "1/2"), &arg(1, "1"))?;
    let resamples: usize = arg(2, "1000")
        .parse()
        .expect("resamples must be an integer");
    let seed: u64 = arg(3, "2024").parse().expect("seed must be an integer");

    let fit = fit_dataset(&ds)?;
    let model = fit.params().expect("fit determines mu");
    let choi = ds.to_accessible_choi(&model)?;
    let cfg = SearchConfig::default();
    let nominal = q_det(&choi, &cfg)?;
    println!("dataset p = {}, mu = {}", ds.p, ds.mu);
    println!(
        "Q_det_tot = {:.6} (raw {:.6})",
        nominal.q_det, nominal.q_det_raw
    );

    // Full propagation: redraw, refit, refill the single-pair entries.
    let start = Instant::now();
    let rep = bootstrap_dataset(&ds, &nominal, Bootstrap { resamples, seed }, &cfg)?;
    report("refit", &rep, start);

    // Single-pair entries frozen at the nominal fit.
    let start = Instant::now();
    let rep = bootstrap_error(&choi, &nominal, resamples, seed, &cfg)?;
    report("frozen model", &rep, start);
    Ok(())
}

fn report(label: &str, rep: &BootstrapReport, start: Instant) {
    println!(
        "{label:>12}: {} resamples, seed {}, mean {:.6}, sigma_Q = {:.6} ({:.1} s)",
        rep.samples.len(),
        rep.seed,
        rep.mean_q,
        rep.sigma_q,
        start.elapsed().as_secs_f64()
    );
}
