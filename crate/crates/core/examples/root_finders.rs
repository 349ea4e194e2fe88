//! For `gamma = 1` the stationarity condition is a cubic in `sqrt(b1)`.
//! Solves it in closed form and with safeguarded Newton, side by side.
//!
//! ```text
//! cargo run --release --example root_finders
//! ```

use datasplit::model::{Gamma, ProblemConstants, TimingModel};
use datasplit::planner::{d_objective_f, plan_with, PlannerInput, RootMethod};
use datasplit::roots::{cubic_real_roots, newton_root};

fn main() -> datasplit::Result<()> {
    // x^3 - 6x^2 + 11x - 6 = (x - 1)(x - 2)(x - 3)
    println!(
        "roots of (x-1)(x-2)(x-3): {:?}",
        cubic_real_roots(1.0, -6.0, 11.0, -6.0)
    );
    let r = newton_root(|x| x.powi(3) - 2.0, |x| 3.0 * x * x, 0.0, 2.0, 1e-14)?;
    println!("cube root of 2 by Newton: {:?}", r);

    let consts = ProblemConstants::with_calibration(20.0, 0.01, 1e-6, Gamma::One, 0.4, 0.04)?;
    let tau = vec![1.0, 3.2, 4.1, 5.5, 6.8, 3.9];
    println!(
        "\n{:>9} {:>16} {:>16} {:>10} {:>12}",
        "tau_comm", "b1 cardano", "b1 newton", "rel gap", "F'(b1)"
    );
    for e in -2..=8 {
        let tau_comm = 10f64.powi(e);
        let input = PlannerInput::new(3000, TimingModel::new(tau.clone(), tau_comm)?, consts)?;
        let cardano = plan_with(&input, RootMethod::Cardano)?;
        let newton = plan_with(&input, RootMethod::Newton)?;
        let gap = (cardano.b1_continuous - newton.b1_continuous).abs() / newton.b1_continuous;
        println!(
            "{:>9.0e} {:>16.10} {:>16.10} {:>10.2e} {:>12.2e}",
            tau_comm,
            cardano.b1_continuous,
            newton.b1_continuous,
            gap,
            d_objective_f(newton.b1_continuous, &input)?
        );
    }
    Ok(())
}
