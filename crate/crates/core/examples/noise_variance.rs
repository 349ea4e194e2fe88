//! Acceleration under uniform timing noise, and the spread of the
//! communication-dominated optimum against its closed-form variance.
//!
//! ```text
//! cargo run --release --example noise_variance -- [config.toml ...]
//! ```

use std::path::PathBuf;

use datasplit::cmd::{noise_rows, Experiment};
use datasplit::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        paths.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/reference_sweep.toml"));
    }
    let exp = Experiment::new(RunConfig::load(&paths)?)?;
    println!(
        "{:>5} {:>4} {:>10} {:>23} {:>11} {:>23} {:>6}",
        "p", "l", "ratio", "ratio 95% CI", "D[F] theory", "D[F] bootstrap CI", "in CI"
    );
    for r in noise_rows(&exp)? {
        if !r.error.is_empty() {
            println!("{:>5} {:>4} error: {}", r.level, r.l, r.error);
            continue;
        }
        println!(
            "{:>5} {:>4} {:>10.6} [{:>10.6}, {:>10.6}] {:>11.4e} [{:>10.4e}, {:>10.4e}] {:>6}",
            r.level,
            r.l,
            r.ratio_mean,
            r.ratio_ci_lo,
            r.ratio_ci_hi,
            r.f_var_theory,
            r.f_var_ci_lo,
            r.f_var_ci_hi,
            r.within_ci
        );
    }
    Ok(())
}
