//! Log-barrier interior-point solver for convex quadratically-constrained
//! programs with a linear objective.
//!
//! Problem shape: maximize `cᵀx` subject to constraints
//! `g_i(x) = xᵀQ_i x − a_iᵀx + b_i ≤ 0` with every `Q_i` symmetric positive
//! semidefinite, plus optional per-variable lower bounds. This is exactly
//! the per-iteration subproblem class produced by the WMMSE reformulation
//! (after complex-to-real lifting), so the solver stays deliberately small:
//! dense real algebra, no cones, no sparsity.
//!
//! Method: classic path following. For increasing `t`, minimize the barrier
//! `f_t(x) = −t·cᵀx − Σ_i ln(−g_i(x))` by damped Newton with backtracking
//! line search; stop once the duality-gap bound `m/t` is below tolerance.
//! Dual multipliers come from the barrier identity `λ_i = 1/(t·(−g_i))`,
//! which makes the returned points certifiable by a KKT residual check.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Errors from problem construction and solving.
#[derive(Debug, Error)]
pub enum QcqpError {
    #[error("constraint {index} is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { index: usize, eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("problem needs at least one constraint")]
    NoConstraints,
    #[error("start is not strictly feasible: constraint {index} evaluates to {value:.3e}")]
    InfeasibleStart { index: usize, value: f64 },
    #[error("no strictly feasible point exists (phase-one optimum {0:.3e})")]
    Infeasible(f64),
    #[error("numerical failure in Newton step: {0}")]
    Numerical(String),
}

/// One convex quadratic constraint `xᵀQx − aᵀx + b ≤ 0`.
#[derive(Debug, Clone)]
pub struct QuadConstraint {
    /// Symmetric PSD quadratic term.
    pub q: DMatrix<f64>,
    /// Linear coefficient (note the minus sign in the constraint form).
    pub a: DVector<f64>,
    /// Constant offset.
    pub b: f64,
}

impl QuadConstraint {
    /// Purely linear constraint `−aᵀx + b ≤ 0`.
    pub fn linear(a: DVector<f64>, b: f64) -> Self {
        let n = a.len();
        Self {
            q: DMatrix::zeros(n, n),
            a,
            b,
        }
    }
}

/// A validated problem instance.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    pub n_vars: usize,
    /// Maximize `objective · x`.
    pub objective: DVector<f64>,
    /// Quadratic constraints (these come first in the dual ordering).
    pub constraints: Vec<QuadConstraint>,
    /// Optional per-variable lower bounds, appended to the dual ordering
    /// after the quadratic constraints, in variable order.
    pub lower_bounds: Vec<Option<f64>>,
}

impl QcqpProblem {
    /// Validate dimensions and PSD-ness.
    ///
    /// Each `Q` is symmetrized; eigenvalues below `−1e-9` (relative to the
    /// spectral radius) are rejected, and tiny negative ones are clipped to
    /// zero by spectral reconstruction.
    pub fn new(
        objective: DVector<f64>,
        constraints: Vec<QuadConstraint>,
        lower_bounds: Vec<Option<f64>>,
    ) -> Result<Self, QcqpError> {
        let n = objective.len();
        if n == 0 {
            return Err(QcqpError::Dimension("no decision variables".into()));
        }
        if constraints.is_empty() {
            return Err(QcqpError::NoConstraints);
        }
        if lower_bounds.len() != n {
            return Err(QcqpError::Dimension(format!(
                "lower_bounds has length {}, expected {n}",
                lower_bounds.len()
            )));
        }
        let mut validated = Vec::with_capacity(constraints.len());
        for (index, mut con) in constraints.into_iter().enumerate() {
            if con.q.nrows() != n || con.q.ncols() != n || con.a.len() != n {
                return Err(QcqpError::Dimension(format!(
                    "constraint {index} dimensions disagree with n_vars = {n}"
                )));
            }
            con.q = (&con.q + con.q.transpose()) * 0.5;
            if con.q.iter().any(|v| v.abs() > 0.0) {
                let eig = con.q.clone().symmetric_eigen();
                let scale = eig.eigenvalues.amax().max(1.0);
                let min = eig.eigenvalues.min();
                if min < -1e-9 * scale {
                    return Err(QcqpError::NotPsd {
                        index,
                        eigenvalue: min,
                    });
                }
                if min < 0.0 {
                    // Clip rounding-level negative curvature.
                    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
                    con.q = &eig.eigenvectors
                        * DMatrix::from_diagonal(&clipped)
                        * eig.eigenvectors.transpose();
                }
            }
            validated.push(con);
        }
        Ok(Self {
            n_vars: n,
            objective,
            constraints: validated,
            lower_bounds,
        })
    }

    /// Total constraint count including lower bounds (the dual vector's
    /// length).
    pub fn n_constraints_total(&self) -> usize {
        self.constraints.len() + self.lower_bounds.iter().flatten().count()
    }

    /// Evaluate constraint `i` of the dual ordering at `x` (quadratic
    /// constraints first, then bounds as `l_j − x_j ≤ 0`).
    pub fn constraint_value(&self, i: usize, x: &DVector<f64>) -> f64 {
        if i < self.constraints.len() {
            let c = &self.constraints[i];
            (x.transpose() * &c.q * x)[(0, 0)] - c.a.dot(x) + c.b
        } else {
            let mut remaining = i - self.constraints.len();
            for (j, lb) in self.lower_bounds.iter().enumerate() {
                if let Some(l) = lb {
                    if remaining == 0 {
                        return l - x[j];
                    }
                    remaining -= 1;
                }
            }
            panic!("constraint index {i} out of range");
        }
    }

    /// Largest constraint value at `x` (≤ 0 means feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        (0..self.n_constraints_total())
            .map(|i| self.constraint_value(i, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Plain-text dump for external cross-checking: dimensions first, then
    /// row-major entries of every matrix and vector.
    pub fn dump_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(
            s,
            "qcqp n_vars {} n_quadratic {} n_bounds {}",
            self.n_vars,
            self.constraints.len(),
            self.lower_bounds.iter().flatten().count()
        )
        .unwrap();
        let fmt_vec = |v: &DVector<f64>| {
            v.iter()
                .map(|x| format!("{x:.17e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(s, "objective {}", fmt_vec(&self.objective)).unwrap();
        for (i, c) in self.constraints.iter().enumerate() {
            writeln!(s, "constraint {i} b {:.17e}", c.b).unwrap();
            writeln!(s, "a {}", fmt_vec(&c.a)).unwrap();
            for r in 0..self.n_vars {
                let row: Vec<String> =
                    (0..self.n_vars).map(|cc| format!("{:.17e}", c.q[(r, cc)])).collect();
                writeln!(s, "q {}", row.join(" ")).unwrap();
            }
        }
        for (j, lb) in self.lower_bounds.iter().enumerate() {
            if let Some(l) = lb {
                writeln!(s, "bound {j} {l:.17e}").unwrap();
            }
        }
        s
    }

    /// Internal flat constraint view: `(Q or None, a, b)` with bounds
    /// rendered as linear constraints.
    fn flat_constraints(&self) -> Vec<(Option<&DMatrix<f64>>, DVector<f64>, f64)> {
        let mut out: Vec<(Option<&DMatrix<f64>>, DVector<f64>, f64)> = self
            .constraints
            .iter()
            .map(|c| {
                let q = if c.q.iter().any(|v| *v != 0.0) {
                    Some(&c.q)
                } else {
                    None
                };
                (q, c.a.clone(), c.b)
            })
            .collect();
        for (j, lb) in self.lower_bounds.iter().enumerate() {
            if let Some(l) = lb {
                let mut a = DVector::zeros(self.n_vars);
                a[j] = 1.0;
                out.push((None, a, *l));
            }
        }
        out
    }
}

/// Solver parameters. Defaults: `mu_factor` 10, Newton-decrement tolerance
/// `1e-9`, relative duality-gap tolerance `3e-8`, 60 outer iterations, 50
/// Newton steps per phase, backtracking with `alpha = 0.3`, `beta = 0.8`,
/// initial `t = 1`.
#[derive(Debug, Clone)]
pub struct QcqpParams {
    pub mu_factor: f64,
    pub newton_tol: f64,
    /// Stop once the barrier duality-gap bound `m/t` falls below
    /// `gap_tol · (1 + |objective|)`. Driving `t` far beyond this point
    /// buys no accuracy: the Newton phases hit the f64 floor of the
    /// ill-conditioned barrier Hessian and the KKT residual degrades.
    pub gap_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub t0: f64,
    pub backtrack_alpha: f64,
    pub backtrack_beta: f64,
    /// Record the per-step barrier values of every Newton phase (for
    /// descent diagnostics).
    pub record_descent: bool,
}

impl Default for QcqpParams {
    fn default() -> Self {
        Self {
            mu_factor: 10.0,
            newton_tol: 1e-9,
            gap_tol: 3e-8,
            max_outer: 60,
            max_newton: 50,
            t0: 1.0,
            backtrack_alpha: 0.3,
            backtrack_beta: 0.8,
            record_descent: false,
        }
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Duality-gap bound met; KKT residual certified.
    Optimal,
    /// Iteration budget exhausted; best iterate returned.
    MaxIter,
    /// The provided start violated strict feasibility (also reported as an
    /// error by [`solve`]).
    InfeasibleStart,
}

/// Solver output.
#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub x: DVector<f64>,
    pub objective_value: f64,
    /// max(stationarity ∞-norm, complementary slackness, primal violation).
    pub kkt_residual: f64,
    /// Outer (barrier) iterations executed.
    pub barrier_iterations: usize,
    /// Total Newton steps across all phases.
    pub newton_iterations: usize,
    pub status: SolveStatus,
    /// One multiplier per constraint in the dual ordering (quadratic
    /// constraints first, then lower bounds).
    pub duals: DVector<f64>,
    /// Objective value after each outer iteration.
    pub objective_trace: Vec<f64>,
    /// Barrier values per Newton step, one inner vector per outer phase
    /// (filled only when `record_descent` is set).
    pub newton_descent: Vec<Vec<f64>>,
}

/// Maximize `cᵀx` over the problem's feasible set from a strictly feasible
/// start.
pub fn solve(
    problem: &QcqpProblem,
    x0: &DVector<f64>,
    params: &QcqpParams,
) -> Result<QcqpSolution, QcqpError> {
    if x0.len() != problem.n_vars {
        return Err(QcqpError::Dimension(format!(
            "start has {} entries, problem has {} variables",
            x0.len(),
            problem.n_vars
        )));
    }
    let cons = problem.flat_constraints();
    let m = cons.len();
    let n = problem.n_vars;
    let c = &problem.objective;

    let eval = |x: &DVector<f64>| -> Vec<f64> {
        cons.iter()
            .map(|(q, a, b)| {
                let quad = q.map_or(0.0, |q| (x.transpose() * q * x)[(0, 0)]);
                quad - a.dot(x) + b
            })
            .collect()
    };

    let g0 = eval(x0);
    if let Some((index, &value)) = g0
        .iter()
        .enumerate()
        .find(|(_, &g)| !(g < 0.0))
    {
        return Err(QcqpError::InfeasibleStart { index, value });
    }

    let barrier = |x: &DVector<f64>, t: f64| -> f64 {
        let g = eval(x);
        if g.iter().any(|&gi| gi >= 0.0) {
            return f64::INFINITY;
        }
        -t * c.dot(x) - g.iter().map(|&gi| (-gi).ln()).sum::<f64>()
    };

    let mut x = x0.clone();
    let mut t = params.t0;
    let mut newton_total = 0usize;
    let mut objective_trace = Vec::new();
    let mut newton_descent = Vec::new();

    let mut outer_done = 0usize;
    let mut converged = false;
    for _outer in 0..params.max_outer {
        outer_done += 1;
        let mut phase_values = Vec::new();
        if params.record_descent {
            phase_values.push(barrier(&x, t));
        }

        for _inner in 0..params.max_newton {
            // Gradient and Hessian of the barrier at x.
            let g = eval(&x);
            let mut grad = c * (-t);
            let mut hess = DMatrix::zeros(n, n);
            for ((q, a, _), &gi) in cons.iter().zip(&g) {
                let inv = 1.0 / (-gi);
                let mut grad_gi = -a.clone();
                if let Some(q) = *q {
                    grad_gi += q * &x * 2.0;
                    hess += q * (2.0 * inv);
                }
                hess += &grad_gi * grad_gi.transpose() * (inv * inv);
                grad += grad_gi * inv;
            }

            // Newton direction via Cholesky with an escalating ridge as a
            // fallback for near-singular Hessians at large t.
            let mut ridge = 0.0f64;
            let max_diag = hess.diagonal().amax().max(1.0);
            let step = loop {
                let mut h = hess.clone();
                if ridge > 0.0 {
                    for i in 0..n {
                        h[(i, i)] += ridge;
                    }
                }
                match h.cholesky() {
                    Some(chol) => break Some(chol.solve(&(-&grad))),
                    None => {
                        ridge = if ridge == 0.0 {
                            1e-14 * max_diag
                        } else {
                            ridge * 100.0
                        };
                        if ridge > 1e-2 * max_diag {
                            break None;
                        }
                    }
                }
            };
            let Some(delta) = step else {
                return Err(QcqpError::Numerical(
                    "Hessian factorization failed beyond ridge limit".into(),
                ));
            };

            let slope = grad.dot(&delta);
            if slope >= 0.0 {
                // Numerical loss of the descent property: the phase has
                // converged as far as f64 allows.
                break;
            }
            let decrement = (-slope).sqrt();
            if decrement <= params.newton_tol {
                break;
            }

            newton_total += 1;

            // Inside the quadratic-convergence region, take the full Newton
            // step whenever it stays strictly feasible. At large t the
            // barrier improvement per step can fall below the f64 resolution
            // of the (huge) barrier value, which stalls value-based
            // backtracking, while the decrement itself keeps contracting
            // quadratically.
            if decrement < 0.25 {
                let cand = &x + &delta;
                let f_cand = barrier(&cand, t);
                if f_cand.is_finite() {
                    x = cand;
                    if params.record_descent {
                        phase_values.push(f_cand);
                    }
                    continue;
                }
            }

            let f0 = barrier(&x, t);
            let mut s = 1.0;
            let mut accepted = false;
            for _ in 0..120 {
                let cand = &x + &delta * s;
                let f_cand = barrier(&cand, t);
                if f_cand <= f0 + params.backtrack_alpha * s * slope {
                    x = cand;
                    if params.record_descent {
                        phase_values.push(f_cand);
                    }
                    accepted = true;
                    break;
                }
                s *= params.backtrack_beta;
            }
            if !accepted {
                break; // step stalled at line-search resolution
            }
        }

        if params.record_descent {
            newton_descent.push(phase_values);
        }
        let objective_value = c.dot(&x);
        objective_trace.push(objective_value);

        // Duality-gap bound for the barrier path: gap ≤ m/t.
        if (m as f64) / t <= params.gap_tol * (1.0 + objective_value.abs()) {
            converged = true;
            break;
        }
        t *= params.mu_factor;
    }

    let g = eval(&x);
    let duals = DVector::from_iterator(m, g.iter().map(|&gi| 1.0 / (t * (-gi).max(1e-300))));
    let kkt_residual = check_kkt(problem, &x, &duals);
    Ok(QcqpSolution {
        objective_value: c.dot(&x),
        x,
        kkt_residual,
        barrier_iterations: outer_done,
        newton_iterations: newton_total,
        status: if converged {
            SolveStatus::Optimal
        } else {
            SolveStatus::MaxIter
        },
        duals,
        objective_trace,
        newton_descent,
    })
}

/// KKT residual of a candidate primal/dual pair: the largest of the
/// stationarity ∞-norm `‖c − Σ λ_i ∇g_i‖_∞`, the complementary-slackness
/// magnitude `max_i |λ_i g_i|`, and the primal violation `max_i g_i⁺`.
/// Multipliers are expected nonnegative.
pub fn check_kkt(problem: &QcqpProblem, x: &DVector<f64>, duals: &DVector<f64>) -> f64 {
    let cons = problem.flat_constraints();
    debug_assert_eq!(duals.len(), cons.len());
    let mut stationarity = problem.objective.clone();
    let mut comp = 0.0f64;
    let mut violation = 0.0f64;
    for (i, (q, a, b)) in cons.iter().enumerate() {
        let quad = q.map_or(0.0, |q| (x.transpose() * q * x)[(0, 0)]);
        let gi = quad - a.dot(x) + b;
        let mut grad_gi = -a.clone();
        if let Some(q) = *q {
            grad_gi += q * x * 2.0;
        }
        stationarity -= grad_gi * duals[i];
        comp = comp.max((duals[i] * gi).abs());
        violation = violation.max(gi);
    }
    stationarity.amax().max(comp).max(violation.max(0.0))
}

/// Find a strictly feasible point, or report that none exists.
///
/// Tries the origin first, then solves the standard phase-one auxiliary
/// problem (maximize `−s` subject to `g_i(x) − s ≤ 0`, `s ≥ −1`, and a
/// large box on `x` to keep the search bounded). Infeasibility is reported
/// when even the relaxed optimum cannot push all constraints strictly
/// negative.
pub fn find_strictly_feasible(problem: &QcqpProblem) -> Result<DVector<f64>, QcqpError> {
    let n = problem.n_vars;
    let origin = DVector::zeros(n);
    if problem.max_violation(&origin) < -1e-9 {
        return Ok(origin);
    }

    // Auxiliary problem over (x, s).
    const BOX: f64 = 1e3;
    let n_aug = n + 1;
    let mut constraints = Vec::new();
    for c in &problem.constraints {
        let mut q = DMatrix::zeros(n_aug, n_aug);
        q.view_mut((0, 0), (n, n)).copy_from(&c.q);
        let mut a = DVector::zeros(n_aug);
        a.rows_mut(0, n).copy_from(&c.a);
        a[n] = 1.0; // −aᵀz includes −s: relaxation g(x) − s ≤ 0
        constraints.push(QuadConstraint { q, a, b: c.b });
    }
    for (j, lb) in problem.lower_bounds.iter().enumerate() {
        if let Some(l) = lb {
            let mut a = DVector::zeros(n_aug);
            a[j] = 1.0;
            a[n] = 1.0;
            constraints.push(QuadConstraint::linear(a, *l));
        }
    }
    // Box on x (not relaxed: the origin-centered box always holds at the
    // aux start).
    for j in 0..n {
        let mut lo = DVector::zeros(n_aug);
        lo[j] = 1.0;
        constraints.push(QuadConstraint::linear(lo, -BOX));
        let mut hi = DVector::zeros(n_aug);
        hi[j] = -1.0;
        constraints.push(QuadConstraint::linear(hi, -BOX));
    }
    let mut objective = DVector::zeros(n_aug);
    objective[n] = -1.0;
    let mut bounds = vec![None; n_aug];
    bounds[n] = Some(-1.0); // cap s from below to keep the objective bounded
    let aux = QcqpProblem::new(objective, constraints, bounds)?;

    let mut z0 = DVector::zeros(n_aug);
    z0[n] = problem.max_violation(&origin).max(-0.5) + 1.0;
    let solution = solve(&aux, &z0, &QcqpParams::default())?;
    let x = solution.x.rows(0, n).into_owned();
    let worst = problem.max_violation(&x);
    if worst >= -1e-8 {
        return Err(QcqpError::Infeasible(solution.x[n]));
    }
    Ok(x)
}
