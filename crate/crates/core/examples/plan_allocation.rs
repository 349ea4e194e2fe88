//! Where should the data go? Plans one network at a few communication
//! costs and compares every planner against exhaustive search.
//!
//! ```text
//! cargo run --release --example plan_allocation
//! ```

use datasplit::model::{Allocation, Gamma, ProblemConstants, TimingModel};
use datasplit::planner::{
    brute_force_plan, closed_form_large_comm, closed_form_small_comm, plan, predicted_time, PlannerInput,
};

fn main() -> datasplit::Result<()> {
    // a fast server and four slower workers
    let tau = vec![1.0, 3.0, 4.5, 5.0, 7.0];
    let n_total = 1200;
    let consts = ProblemConstants::with_calibration(50.0, 0.01, 1e-6, Gamma::Half, 0.05, 2.0)?;

    for tau_comm in [1e-4, 1.0, 1e2, 1e5, 1e8] {
        let timing = TimingModel::new(tau.clone(), tau_comm)?;
        let input = PlannerInput::new(n_total, timing.clone(), consts)?;
        let best = plan(&input)?;
        let exhaustive = brute_force_plan(&input)?;
        let uniform = Allocation::uniform(n_total, tau.len())?;
        let t_plan = predicted_time(&best.allocation, &input)?;
        let t_uniform = predicted_time(&uniform, &input)?;
        println!("tau_comm = {tau_comm:.0e}");
        println!("  {:<12} b = {:?}", best.method.as_str(), best.allocation.sizes());
        println!("  {:<12} b = {:?}", "exhaustive", exhaustive.allocation.sizes());
        println!(
            "  predicted time {t_plan:.4e} vs uniform {t_uniform:.4e} (x{:.3})",
            t_uniform / t_plan
        );

        if tau_comm <= 1e-3 {
            let small = closed_form_small_comm(&input)?;
            println!("  small-comm closed form: b1 = {}", small.allocation.server());
        }
    }

    // the large-communication closed form wants identical workers
    let timing = TimingModel::new(vec![1.0; 5], 1e5)?;
    let input = PlannerInput::new(n_total, timing, consts)?;
    let closed = closed_form_large_comm(&input)?;
    let exact = plan(&input)?;
    println!(
        "identical devices, tau_comm = 1e5: closed form b1 = {:.1}, planner b1 = {:.1}",
        closed.b1_continuous, exact.b1_continuous
    );
    Ok(())
}
