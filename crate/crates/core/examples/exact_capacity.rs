//! Closed-form capacity of the correlated bit-flip channel over a μ sweep,
//! next to the coherent information of the same channel at the maximally
//! mixed input and the benchmark that ignores correlations.
//!
//! Usage: `cargo run --example exact_capacity -- [p]`

use capwit::capacity::{exact_capacity, pauli_coherent_information, CapacityReport};
use capwit::channels::{correlated_channel, ChannelParams};

fn main() -> capwit::Result<()> {
    let p: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("p must be a number"))
        .unwrap_or(0.25);

    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10}",
        "mu", "Q", "I_c", "Q_lim", "Delta_Q"
    );
    for k in 0..=10 {
        let params = ChannelParams::new(p, k as f64 / 10.0)?;
        let rep = CapacityReport::for_params(&params);
        let ic = pauli_coherent_information(&correlated_channel(&params));
        println!(
            "{:>6.2} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            params.mu,
            exact_capacity(&params),
            ic,
            rep.q_lim,
            rep.correlation_gain()
        );
    }
    Ok(())
}
