//! Detectable capacity of an ideal correlated channel, found by searching
//! the product bases, compared with the exact capacity.
//!
//! Usage: `cargo run --release --example witness_ideal -- [p] [mu]`

use std::time::Instant;

use capwit::capacity::exact_capacity;
use capwit::channels::{correlated_channel, ChannelParams};
use capwit::witness::{accessible_choi_from_channel, q_det, q_lim, LimSource, SearchConfig};

fn main() -> capwit::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("arguments are numbers"))
        .collect();
    let params = ChannelParams::new(
        *args.first().unwrap_or(&0.375),
        *args.get(1).unwrap_or(&0.2),
    )?;
    let choi = accessible_choi_from_channel(&correlated_channel(&params));
    let cfg = SearchConfig::default();

    let start = Instant::now();
    let res = q_det(&choi, &cfg)?;
    let lim = q_lim(LimSource::Marginals(&choi), &cfg)?;
    println!("p = {}, mu = {}", params.p, params.mu);
    println!("exact capacity      {:.9}", exact_capacity(&params));
    println!("Q_det (witness)     {:.9}", res.q_det);
    println!("Q_lim = Q1 + Q2     {:.9}", lim.q_lim);
    println!("best basis          {}", res.best_basis);
    println!(
        "probabilities       {:?}",
        res.prob_vector
            .iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
    );
    println!("refined candidates, one line per distinct basis:");
    let mut seen = Vec::new();
    for cand in &res.candidates {
        let name = cand.basis().canonical().to_string();
        if !seen.contains(&name) {
            println!("  {name} H = {:.9}", cand.entropy);
            seen.push(name);
        }
    }
    println!("search took {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}
