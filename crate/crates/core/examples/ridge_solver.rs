//! Distributed ridge regression with the accelerated extragradient method:
//! the server solves a local proximal problem each round, the workers only
//! contribute gradients.
//!
//! ```text
//! cargo run --release --example ridge_solver
//! ```

use nalgebra::DVector;

use datasplit::data::{gen_synthetic, hessian_similarity, shard, spectral_constants, RidgeProblem};
use datasplit::model::{Allocation, Gamma, ProblemConstants};
use datasplit::solver::{accel_extragradient, default_params, InnerSolver, RidgeComposite, StopRule};

fn main() -> datasplit::Result<()> {
    let lambda = 1e-2;
    let data = gen_synthetic(2000, 20, 0.1, 42)?;
    let problem = RidgeProblem::new(data.clone(), lambda)?;
    let direct = problem.solve_direct()?;
    let (l, mu) = spectral_constants(&problem)?;
    let consts = ProblemConstants::new(l, mu, 1e-6, Gamma::Half)?;
    println!("L = {l:.4}, mu = {mu:.4}, kappa = {:.1}", l / mu);

    let stop = StopRule {
        grad_tol: 1e-8,
        relative: false,
    };
    for b1 in [100, 400, 1000] {
        let rest = (2000 - b1) / 4;
        let alloc = Allocation::new(vec![b1, rest, rest, rest, 2000 - b1 - 3 * rest])?;
        let shards = shard(&data, &alloc, 7)?;
        let obj = RidgeComposite::new(&shards, lambda)?;
        let delta = hessian_similarity(&data, &shards.shards[0]).clamp(mu, l);
        let params = default_params(&consts, delta)?;
        for inner in [InnerSolver::Exact { work_units: 1 }, InnerSolver::Ogmg { iters: 100 }] {
            let out = accel_extragradient(&obj, &params, &DVector::zeros(20), &stop, &inner, |_| {})?;
            println!(
                "b1 = {b1:>4}  delta = {delta:.4}  {:<24} outer = {:>4}  |grad| = {:.2e}  |x - x*| = {:.2e}",
                format!("{inner:?}"),
                out.trace.len(),
                out.final_grad_norm(),
                (out.x_f() - &direct).amax()
            );
        }
    }
    Ok(())
}
