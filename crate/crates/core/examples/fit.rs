//! Fits the correlated flip model, with a common visibility, to every
//! shipped correlator table.
//!
//! Usage: `cargo run --example fit`

use capwit::cli::fit_dataset;
use capwit::dataio::builtin_appendix;

fn main() -> capwit::Result<()> {
    println!(
        "{:>5} {:>6} | {:>8} {:>8} {:>8} {:>8}",
        "p", "mu", "p_fit", "mu_fit", "eta", "chi2"
    );
    for ds in builtin_appendix()? {
        let fit = fit_dataset(&ds)?;
        println!(
            "{:>5} {:>6} | {:>8.4} {:>8.4} {:>8.4} {:>8.1}",
            ds.p.to_string(),
            ds.mu.to_string(),
            fit.p,
            fit.mu.unwrap_or(f64::NAN),
            fit.visibility,
            fit.chi2
        );
    }
    Ok(())
}
