//! Fits the iteration-count constants from a real solver run and checks
//! that two different probes roughly agree.
//!
//! ```text
//! cargo run --release --example calibrate_constants
//! ```

use datasplit::cmd::{allocation_with_server, Experiment};
use datasplit::config::RunConfig;
use datasplit::model::{delta_of, rate_estimates, ProblemConstants};

fn main() -> datasplit::Result<()> {
    let cfg = RunConfig::from_toml_str("[problem]\nc1 = \"calibrate\"\nc2 = \"calibrate\"\n")?;
    let exp = Experiment::new(cfg)?;
    let timing = exp.timing(1.0)?;
    // c1 drifts slowly with the probe: the measured counts fall a bit faster
    // in b1 than the model's b1^(-1/4)
    for b1 in [48, 96, 192, 400, 800] {
        let cal = exp.calibrate_at(allocation_with_server(b1, exp.n_total(), &timing)?)?;
        let consts = ProblemConstants {
            c1: cal.c1,
            c2: cal.c2,
            ..exp.consts
        };
        let (delta, _) = delta_of(b1 as f64, &consts)?;
        let back = rate_estimates(&consts, delta)?;
        println!(
            "probe b1 = {b1:>4}: c1 = {:.5}, c2 = {:.5}; observed {} rounds / {} inner, model gives {} / {}",
            cal.c1, cal.c2, cal.observed.comm_rounds, cal.observed.inner, back.comm_rounds, back.inner
        );
    }
    println!("\noverlay for the uniform probe:\n{}", {
        let cal = exp.calibrate_at(exp.uniform()?)?;
        RunConfig::calibration_overlay(cal.c1, cal.c2)
    });
    Ok(())
}
