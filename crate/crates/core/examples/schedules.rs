//! Switching schedules that realize each parameter point with two
//! liquid-crystal arms, and the overlap weights they produce.
//!
//! Usage: `cargo run --example schedules`

use capwit::channels::{schedule_to_channel, Level, Schedule};
use capwit::dataio::table1_registry;

fn show(s: &Schedule) -> String {
    s.segments()
        .iter()
        .map(|seg| {
            let level = match seg.level {
                Level::V0 => "V0",
                Level::VX => "VX",
            };
            format!("{}s {level}", seg.duration)
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

fn main() -> capwit::Result<()> {
    for row in table1_registry() {
        let (arm1, arm2) = &row.schedules;
        let a = schedule_to_channel(arm1, arm2)?;
        println!("p = {}, mu = {}", row.p, row.mu);
        println!("  arm 1: {}", show(arm1));
        println!("  arm 2: {}", show(arm2));
        println!(
            "  A_II = {}, A_IX = {}, A_XI = {}, A_XX = {} (table: {})",
            a.0[0],
            a.0[1],
            a.0[2],
            a.0[3],
            if a.0 == row.a { "match" } else { "MISMATCH" }
        );
    }
    Ok(())
}
