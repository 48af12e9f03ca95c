//! Solve small quadratically-constrained programs and certify the results.
//!
//! Three instances of increasing generality go through the log-barrier
//! interior-point solver: a disc-constrained linear objective with a
//! closed-form answer, a pure linear program, and a randomly generated
//! instance. Each solution is certified by its KKT residual and worst
//! constraint violation — the same certificates the precoder optimizer
//! relies on every iteration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use strsma::qcqp::{find_strictly_feasible, solve, QcqpParams, QcqpProblem, QuadConstraint};
use strsma::rng;

fn report(name: &str, sol: &strsma::qcqp::QcqpSolution, analytic: Option<f64>) {
    println!("{name}");
    println!("  objective      {:.12}", sol.objective_value);
    if let Some(reference) = analytic {
        println!("  analytic       {reference:.12}");
        println!("  gap            {:.2e}", (sol.objective_value - reference).abs());
    }
    println!("  x              {:?}", sol.x.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>());
    println!("  kkt residual   {:.2e}", sol.kkt_residual);
    println!(
        "  iterations     {} barrier / {} newton, status {:?}",
        sol.barrier_iterations, sol.newton_iterations, sol.status
    );
    println!();
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = QcqpParams::default();

    // 1. Maximize x + y on the unit disc with x, y >= 0.
    //    Optimum: x = y = 1/sqrt(2), objective sqrt(2).
    let disc = QcqpProblem::new(
        DVector::from_row_slice(&[1.0, 1.0]),
        vec![QuadConstraint {
            q: DMatrix::identity(2, 2),
            a: DVector::zeros(2),
            b: -1.0,
        }],
        vec![Some(0.0), Some(0.0)],
    )?;
    let x0 = find_strictly_feasible(&disc)?;
    let sol = solve(&disc, &x0, &params)?;
    report("maximize x + y on the unit disc", &sol, Some(2f64.sqrt()));

    // 2. A linear program: maximize x + 2y subject to x + y <= 1, x, y >= 0.
    //    Optimum: (0, 1), objective 2.
    let lp = QcqpProblem::new(
        DVector::from_row_slice(&[1.0, 2.0]),
        vec![QuadConstraint::linear(
            DVector::from_row_slice(&[-1.0, -1.0]),
            -1.0,
        )],
        vec![Some(0.0), Some(0.0)],
    )?;
    let x0 = find_strictly_feasible(&lp)?;
    let sol = solve(&lp, &x0, &params)?;
    report("maximize x + 2y under x + y <= 1", &sol, Some(2.0));

    // 3. A random four-variable instance with three ellipsoid constraints,
    //    certified by the KKT residual alone.
    let n = 4;
    let mut stream = rng::stream(11, &[]);
    let mut constraints = Vec::new();
    for _ in 0..3 {
        let m = DMatrix::from_fn(n, n, |_, _| stream.sample::<f64, _>(StandardNormal));
        let q = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let a = DVector::from_fn(n, |_, _| stream.sample::<f64, _>(StandardNormal));
        constraints.push(QuadConstraint { q, a, b: -1.0 });
    }
    let objective = DVector::from_fn(n, |_, _| stream.sample::<f64, _>(StandardNormal));
    let random = QcqpProblem::new(objective, constraints, vec![None; n])?;
    let x0 = find_strictly_feasible(&random)?;
    let sol = solve(&random, &x0, &params)?;
    let violation = random.max_violation(&sol.x);
    report("random 4-variable instance", &sol, None);
    println!("worst constraint violation of the random instance: {violation:.2e}");
    Ok(())
}
