//! A larger server shard looks more like the whole dataset, so the
//! similarity constant shrinks and fewer communication rounds are needed.
//!
//! ```text
//! cargo run --release --example iteration_scaling
//! ```

use datasplit::cmd::{allocation_with_server, Experiment};
use datasplit::config::RunConfig;
use datasplit::model::delta_of;

fn main() -> datasplit::Result<()> {
    let cfg = RunConfig::from_toml_str(
        r#"
[problem]
c1 = 1.0
c2 = 1.0
"#,
    )?;
    let exp = Experiment::new(cfg)?;
    let timing = exp.timing(1.0)?;
    println!(
        "{:>6} {:>12} {:>12} {:>8} {:>8}",
        "b1", "delta meas.", "delta model", "outer", "inner"
    );
    for b1 in [4, 16, 64, 256, 1024] {
        let alloc = allocation_with_server(b1, exp.n_total(), &timing)?;
        let run = exp.simulate(&alloc, &timing, None)?;
        let (model, _) = delta_of(b1 as f64, &exp.consts)?;
        println!(
            "{b1:>6} {:>12.4} {:>12.4} {:>8} {:>8}",
            exp.step_delta(&alloc)?,
            model,
            run.outer_iters,
            run.inner_iters
        );
    }
    Ok(())
}
