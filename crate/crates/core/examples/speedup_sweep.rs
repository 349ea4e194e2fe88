//! Planned vs. uniform allocation across communication costs.
//!
//! ```text
//! cargo run --release --example speedup_sweep -- [config.toml ...]
//! ```

use std::path::PathBuf;

use datasplit::cmd::{sweep_rows, Experiment};
use datasplit::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        paths.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/reference_sweep.toml"));
    }
    let exp = Experiment::new(RunConfig::load(&paths)?)?;
    if let Some(cal) = &exp.calibration {
        println!(
            "calibrated at b1 = {}: c1 = {:.4}, c2 = {:.4} ({} comm rounds, {} inner)",
            cal.probe.server(),
            cal.c1,
            cal.c2,
            cal.observed.comm_rounds,
            cal.observed.inner
        );
    }
    println!(
        "{:>4} {:>10} {:>6} {:>8} {:>12} {:>12} {:>6} {:>6} {:>8}",
        "l", "tau_comm", "b1", "method", "planned", "uniform", "K_p", "K_u", "speedup"
    );
    for r in sweep_rows(&exp)? {
        println!(
            "{:>4} {:>10.1e} {:>6} {:>8} {:>12.4e} {:>12.4e} {:>6} {:>6} {:>8.4}",
            r.l,
            r.tau_comm,
            r.b1_planned.map_or("-".into(), |b| b.to_string()),
            r.method,
            r.sim_planned.unwrap_or(f64::NAN),
            r.sim_uniform.unwrap_or(f64::NAN),
            r.outer_planned.unwrap_or(0),
            r.outer_uniform.unwrap_or(0),
            r.speedup.unwrap_or(f64::NAN),
        );
        if !r.error.is_empty() {
            println!("     error: {}", r.error);
        }
    }
    Ok(())
}
