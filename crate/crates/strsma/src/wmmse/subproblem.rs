//! Assembly of the per-iteration convex subproblem.
//!
//! At fixed equalizers and weights, every sample-averaged weighted MSE is a
//! convex quadratic in the precoders, so the max-min step becomes: maximize
//! the epigraph variable `q` subject to per-user private-rate surrogates,
//! per-user common-rate surrogates shared through the common-portion split
//! `c`, the total power budget, and nonnegativity. Complex precoders are
//! lifted to stacked real vectors `[Re p; Im p]`, turning Hermitian forms
//! `pᴴΨp` into real quadratic forms, which is exactly the shape the
//! interior-point solver consumes.

use super::terms::SampleAveragedTerms;
use super::{Mode, WmmseError};
use crate::qcqp::{QcqpProblem, QuadConstraint};
use crate::{C64, CMatrix, CVector};
use nalgebra::{DMatrix, DVector};

/// Real lifting `[[A, −B], [B, A]]` of a Hermitian matrix `Ψ = A + iB`,
/// chosen so that `pᴴΨp = xᵀQx` for `x = [Re p; Im p]`.
pub(crate) fn lift_hermitian(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = m[(r, c)];
            out[(r, c)] = z.re;
            out[(r + n, c + n)] = z.re;
            out[(r, c + n)] = -z.im;
            out[(r + n, c)] = z.im;
        }
    }
    out
}

/// Real lifting `[Re w; Im w]`, chosen so that `2Re{wᴴp} = 2·lᵀx`.
pub(crate) fn lift_vector(w: &CVector) -> DVector<f64> {
    let n = w.len();
    DVector::from_fn(2 * n, |i, _| if i < n { w[i].re } else { w[i - n].im })
}

/// Inverse of [`lift_vector`] on a slice of a stacked decision vector.
pub(crate) fn unlift(x: &DVector<f64>, start: usize, n: usize) -> CVector {
    DVector::from_fn(n, |i, _| C64::new(x[start + i], x[start + n + i]))
}

/// Index map of the stacked real decision vector.
///
/// Depending on the mode the vector contains, in order: the common
/// amplitude `y_c = √(P_c/2)` (space-time) or a lifted common precoder
/// (beamformed), the lifted private precoders, the common portions `c`, the
/// private-rate epigraph variables `α`, and the max-min epigraph `q`.
#[derive(Debug, Clone)]
pub struct VarLayout {
    pub mode: Mode,
    pub n_feeds: usize,
    pub k_users: usize,
    /// Index of `y_c` (space-time common amplitude).
    pub y_c: Option<usize>,
    /// Start of the lifted common precoder block (beamformed common).
    pub p_c: Option<usize>,
    /// Start of the lifted private precoder blocks.
    pub p_start: Option<usize>,
    /// Start of the common-portion block `c`.
    pub c_start: Option<usize>,
    /// Start of the private epigraph block `α`.
    pub alpha_start: Option<usize>,
    /// Index of the max-min epigraph `q`.
    pub q: usize,
    pub n_vars: usize,
}

impl VarLayout {
    pub fn new(mode: Mode, n_feeds: usize, k_users: usize) -> Self {
        let lift = 2 * n_feeds;
        let mut cursor = 0usize;
        let mut take = |len: usize| {
            let at = cursor;
            cursor += len;
            at
        };
        let (y_c, p_c) = match mode {
            Mode::StRsma => (Some(take(1)), None),
            Mode::Rsma | Mode::Multicast => (None, Some(take(lift))),
            Mode::Sdma => (None, None),
            Mode::Frr => unreachable!("no subproblem exists for the fixed-rate reference"),
        };
        let p_start = match mode {
            Mode::Multicast => None,
            _ => Some(take(lift * k_users)),
        };
        let c_start = match mode {
            Mode::StRsma | Mode::Rsma => Some(take(k_users)),
            _ => None,
        };
        let alpha_start = match mode {
            Mode::Multicast => None,
            _ => Some(take(k_users)),
        };
        let q = take(1);
        Self {
            mode,
            n_feeds,
            k_users,
            y_c,
            p_c,
            p_start,
            c_start,
            alpha_start,
            q,
            n_vars: cursor,
        }
    }

    /// Start index of user `j`'s lifted private precoder block.
    pub fn private_block(&self, j: usize) -> usize {
        self.p_start.expect("mode has private precoders") + 2 * self.n_feeds * j
    }
}

/// One precoding state in natural (complex) coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    /// Space-time common amplitude `y_c = √(P_c/2)` (0 when unused).
    pub y_c: f64,
    /// Beamformed common precoder (empty when unused).
    pub p_c: CVector,
    /// Private precoders, one column per user (`n_t × 0` when unused).
    pub precoders: CMatrix,
    pub c: DVector<f64>,
    pub alpha: DVector<f64>,
    pub q: f64,
}

impl VarLayout {
    pub(crate) fn pack(&self, point: &Point) -> DVector<f64> {
        let mut x = DVector::zeros(self.n_vars);
        if let Some(y) = self.y_c {
            x[y] = point.y_c;
        }
        if let Some(at) = self.p_c {
            x.rows_mut(at, 2 * self.n_feeds)
                .copy_from(&lift_vector(&point.p_c));
        }
        if self.p_start.is_some() {
            for j in 0..self.k_users {
                let col = point.precoders.column(j).into_owned();
                x.rows_mut(self.private_block(j), 2 * self.n_feeds)
                    .copy_from(&lift_vector(&col));
            }
        }
        if let Some(at) = self.c_start {
            for j in 0..self.k_users {
                x[at + j] = point.c[j];
            }
        }
        if let Some(at) = self.alpha_start {
            for j in 0..self.k_users {
                x[at + j] = point.alpha[j];
            }
        }
        x[self.q] = point.q;
        x
    }

    pub(crate) fn unpack(&self, x: &DVector<f64>) -> Point {
        let y_c = self.y_c.map_or(0.0, |i| x[i]);
        let p_c = self.p_c.map_or_else(
            || DVector::from_element(0, C64::new(0.0, 0.0)),
            |at| unlift(x, at, self.n_feeds),
        );
        let precoders = if self.p_start.is_some() {
            let cols: Vec<CVector> = (0..self.k_users)
                .map(|j| unlift(x, self.private_block(j), self.n_feeds))
                .collect();
            CMatrix::from_columns(&cols)
        } else {
            CMatrix::zeros(self.n_feeds, 0)
        };
        let c = self.c_start.map_or_else(
            || DVector::zeros(0),
            |at| DVector::from_fn(self.k_users, |j, _| x[at + j]),
        );
        let alpha = self.alpha_start.map_or_else(
            || DVector::zeros(0),
            |at| DVector::from_fn(self.k_users, |j, _| x[at + j]),
        );
        Point {
            y_c,
            p_c,
            precoders,
            c,
            alpha,
            q: x[self.q],
        }
    }
}

/// A built subproblem together with the bookkeeping needed to interpret it.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub problem: QcqpProblem,
    pub layout: VarLayout,
    /// Constraint indices of the per-user private-rate surrogates.
    pub private_constraints: Vec<usize>,
    /// Constraint indices of the per-user common-rate surrogates.
    pub common_constraints: Vec<usize>,
    /// Constraint index of the power budget.
    pub power_constraint: usize,
    /// Constraint indices of the per-user epigraph couplings `q ≤ α + c`.
    pub epigraph_constraints: Vec<usize>,
}

/// Build the convex subproblem for the given mode from per-user
/// sample-averaged coefficients.
///
/// Constraint order: private surrogates (one per user), common surrogates
/// (one per user), the power budget, then the epigraph couplings; for the
/// multicast mode the epigraph is folded into the common surrogates.
/// Nonnegativity of `y_c`, `c`, and `α` is expressed through variable
/// lower bounds.
pub fn build_subproblem(
    terms: &[SampleAveragedTerms],
    mode: Mode,
    n_feeds: usize,
    p_t: f64,
    sigma_n2: f64,
) -> Result<Subproblem, WmmseError> {
    let k_users = terms.len();
    if k_users == 0 {
        return Err(WmmseError::Dimension("no users".into()));
    }
    if p_t <= 0.0 {
        return Err(WmmseError::Dimension(format!(
            "power budget must be positive, got {p_t}"
        )));
    }
    if mode == Mode::Frr {
        return Err(WmmseError::InvalidMode(
            "the fixed-rate reference has no optimization subproblem".into(),
        ));
    }
    for t in terms {
        if t.psi_mat_p.nrows() != n_feeds {
            return Err(WmmseError::Dimension(format!(
                "terms built for {} feeds, subproblem for {n_feeds}",
                t.psi_mat_p.nrows()
            )));
        }
    }

    let layout = VarLayout::new(mode, n_feeds, k_users);
    let n = layout.n_vars;
    let lift = 2 * n_feeds;
    // The averaged weighted MSE is a natural-log surrogate; scaling its
    // side of each rate constraint by log₂e keeps `c`, `α`, and `q` in
    // bits per channel use.
    let scale = std::f64::consts::LOG2_E;
    let mut constraints: Vec<QuadConstraint> = Vec::new();
    let mut private_constraints = Vec::new();
    let mut common_constraints = Vec::new();
    let mut epigraph_constraints = Vec::new();

    // Private-rate surrogates: α_k ≤ (1 − ξ̄_p,k)·log₂e, expanded as
    // α_k + log₂e·(Σ_j p_jᴴΨ̄_p,k p_j − 2Re{w̄_p,kᴴ p_k}
    // + τ̄_p,k σ² + ū_p,k − v̄_p,k − 1) ≤ 0.
    if mode != Mode::Multicast {
        for (k, t) in terms.iter().enumerate() {
            let mut q = DMatrix::zeros(n, n);
            let block = lift_hermitian(&t.psi_mat_p) * scale;
            for j in 0..k_users {
                let at = layout.private_block(j);
                q.view_mut((at, at), (lift, lift)).copy_from(&block);
            }
            let mut a = DVector::zeros(n);
            a.rows_mut(layout.private_block(k), lift)
                .copy_from(&(lift_vector(&t.w_p) * (2.0 * scale)));
            a[layout.alpha_start.unwrap() + k] = -1.0;
            let b = scale * (t.tau_p * sigma_n2 + t.u_p - t.v_p - 1.0);
            private_constraints.push(constraints.len());
            constraints.push(QuadConstraint { q, a, b });
        }
    }

    // Common-rate surrogates, likewise scaled by log₂e. Space-time /
    // beamformed quadratics differ in how the common signal enters; the
    // interference part is shared.
    if mode != Mode::Sdma {
        for t in terms {
            let mut q = DMatrix::zeros(n, n);
            let mut a = DVector::zeros(n);
            let block = lift_hermitian(&t.psi_mat_c) * scale;
            if let Some(at) = layout.p_c {
                q.view_mut((at, at), (lift, lift)).copy_from(&block);
                a.rows_mut(at, lift)
                    .copy_from(&(lift_vector(&t.w_c_vec) * (2.0 * scale)));
            }
            if let Some(y) = layout.y_c {
                q[(y, y)] = scale * t.psi_c;
                a[y] = 2.0 * scale * t.w_c_scalar.re;
            }
            if layout.p_start.is_some() {
                for j in 0..k_users {
                    let at = layout.private_block(j);
                    q.view_mut((at, at), (lift, lift)).copy_from(&block);
                }
            }
            match layout.c_start {
                Some(c0) => {
                    // Σ_j c_j ≤ (common surrogate of user k).
                    for j in 0..k_users {
                        a[c0 + j] = -1.0;
                    }
                }
                None => {
                    // Multicast: the epigraph couples directly, q ≤ surrogate.
                    a[layout.q] = -1.0;
                }
            }
            let b = scale * (t.tau_c * sigma_n2 + t.u_c - t.v_c - 1.0);
            common_constraints.push(constraints.len());
            constraints.push(QuadConstraint { q, a, b });
        }
    }

    // Power budget: 2y_c² + ‖p_c‖² + Σ_j ‖p_j‖² ≤ P_t.
    let mut q = DMatrix::zeros(n, n);
    if let Some(y) = layout.y_c {
        q[(y, y)] = 2.0;
    }
    if let Some(at) = layout.p_c {
        for i in 0..lift {
            q[(at + i, at + i)] = 1.0;
        }
    }
    if layout.p_start.is_some() {
        for j in 0..k_users {
            let at = layout.private_block(j);
            for i in 0..lift {
                q[(at + i, at + i)] = 1.0;
            }
        }
    }
    let power_constraint = constraints.len();
    constraints.push(QuadConstraint {
        q,
        a: DVector::zeros(n),
        b: -p_t,
    });

    // Epigraph couplings: q ≤ α_k (+ c_k).
    if let Some(a0) = layout.alpha_start {
        for k in 0..k_users {
            let mut a = DVector::zeros(n);
            a[layout.q] = -1.0;
            a[a0 + k] = 1.0;
            if let Some(c0) = layout.c_start {
                a[c0 + k] = 1.0;
            }
            epigraph_constraints.push(constraints.len());
            constraints.push(QuadConstraint::linear(a, 0.0));
        }
    }

    // Nonnegativity as variable bounds.
    let mut lower_bounds = vec![None; n];
    if let Some(y) = layout.y_c {
        lower_bounds[y] = Some(0.0);
    }
    if let Some(c0) = layout.c_start {
        for j in 0..k_users {
            lower_bounds[c0 + j] = Some(0.0);
        }
    }
    if let Some(a0) = layout.alpha_start {
        for j in 0..k_users {
            lower_bounds[a0 + j] = Some(0.0);
        }
    }

    let mut objective = DVector::zeros(n);
    objective[layout.q] = 1.0;
    let problem = QcqpProblem::new(objective, constraints, lower_bounds)?;
    Ok(Subproblem {
        problem,
        layout,
        private_constraints,
        common_constraints,
        power_constraint,
        epigraph_constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::spacetime::FeedPair;
    use crate::wmmse::terms::{average_terms, mmse_update, CommonModel, EqualizerWeights};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_cvec(n: usize, stream: &mut rand_chacha::ChaCha8Rng) -> CVector {
        DVector::from_fn(n, |_, _| {
            let re: f64 = stream.sample(StandardNormal);
            let im: f64 = stream.sample(StandardNormal);
            c(re, im)
        })
    }

    #[test]
    fn test_lifting_preserves_quadratic_and_linear_forms() {
        let mut stream = rng::stream(9, &[]);
        for _ in 0..25 {
            let n = 2 + (stream.random::<f64>() * 3.0) as usize;
            let m = CMatrix::from_fn(n, n, |_, _| {
                c(stream.sample(StandardNormal), stream.sample(StandardNormal))
            });
            let psi = &m * m.adjoint(); // Hermitian PSD
            let p = random_cvec(n, &mut stream);
            let w = random_cvec(n, &mut stream);

            let q = lift_hermitian(&psi);
            assert_eq!(q.transpose(), q, "lifted matrix must be symmetric");
            let x = lift_vector(&p);
            let quad_complex = (p.adjoint() * &psi * &p)[(0, 0)].re;
            let quad_real = (x.transpose() * &q * &x)[(0, 0)];
            assert_relative_eq!(quad_complex, quad_real, max_relative = 1e-12);

            let lin_complex = 2.0 * w.dotc(&p).re;
            let lin_real = 2.0 * lift_vector(&w).dot(&x);
            assert_relative_eq!(lin_complex, lin_real, max_relative = 1e-12, epsilon = 1e-12);

            let back = unlift(&x, 0, n);
            assert!((back - &p).norm() < 1e-15);
        }
    }

    #[test]
    fn test_layout_indices_all_modes() {
        let st = VarLayout::new(Mode::StRsma, 2, 3);
        assert_eq!(st.y_c, Some(0));
        assert_eq!(st.p_start, Some(1));
        assert_eq!(st.private_block(2), 1 + 2 * 4);
        assert_eq!(st.c_start, Some(13));
        assert_eq!(st.alpha_start, Some(16));
        assert_eq!(st.q, 19);
        assert_eq!(st.n_vars, 20);

        let rsma = VarLayout::new(Mode::Rsma, 2, 3);
        assert_eq!(rsma.p_c, Some(0));
        assert_eq!(rsma.p_start, Some(4));
        assert_eq!(rsma.n_vars, 4 + 12 + 3 + 3 + 1);

        let sdma = VarLayout::new(Mode::Sdma, 2, 3);
        assert_eq!(sdma.p_start, Some(0));
        assert_eq!(sdma.c_start, None);
        assert_eq!(sdma.n_vars, 12 + 3 + 1);

        let mc = VarLayout::new(Mode::Multicast, 2, 3);
        assert_eq!(mc.p_c, Some(0));
        assert_eq!(mc.p_start, None);
        assert_eq!(mc.alpha_start, None);
        assert_eq!(mc.n_vars, 5);
    }

    #[test]
    fn test_pack_unpack_roundtrip() {
        let mut stream = rng::stream(5, &[]);
        for mode in [Mode::StRsma, Mode::Rsma, Mode::Sdma, Mode::Multicast] {
            let layout = VarLayout::new(mode, 3, 2);
            let point = Point {
                y_c: if layout.y_c.is_some() { 0.7 } else { 0.0 },
                p_c: if layout.p_c.is_some() {
                    random_cvec(3, &mut stream)
                } else {
                    DVector::from_element(0, c(0.0, 0.0))
                },
                precoders: if layout.p_start.is_some() {
                    CMatrix::from_columns(&[
                        random_cvec(3, &mut stream),
                        random_cvec(3, &mut stream),
                    ])
                } else {
                    CMatrix::zeros(3, 0)
                },
                c: if layout.c_start.is_some() {
                    DVector::from_row_slice(&[0.1, 0.2])
                } else {
                    DVector::zeros(0)
                },
                alpha: if layout.alpha_start.is_some() {
                    DVector::from_row_slice(&[0.3, 0.4])
                } else {
                    DVector::zeros(0)
                },
                q: -0.25,
            };
            let x = layout.pack(&point);
            let back = layout.unpack(&x);
            assert_eq!(back.y_c, point.y_c);
            assert_eq!(back.q, point.q);
            assert!((back.p_c - &point.p_c).norm() < 1e-15);
            assert!((back.precoders - &point.precoders).norm() < 1e-15);
            assert_eq!(back.c, point.c);
            assert_eq!(back.alpha, point.alpha);
        }
    }

    /// Single user, single sample, real-valued channel: every entry of the
    /// built problem is checked against values computed by hand.
    /// Setup: h = [1, 0], feed pair (1, 2), P_c = 2, p₁ = [1/2, 0], σ² = 1.
    /// Then T_c = 9/4, T_p = 5/4, g_c = 4/9, u_c = 9/5, g_p = 2/5,
    /// u_p = 5/4; τ̄_c = 16/45, ψ̄_c = 16/45, w̄_c = 4/5, τ̄_p = 1/5,
    /// w̄_p = [1/2, 0].
    #[test]
    fn test_hand_built_single_user_problem() {
        let h: CVector = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let pair = FeedPair::first_two(2).unwrap();
        let p = CMatrix::from_columns(&[DVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)])]);
        let common = CommonModel::SpaceTime {
            pair: &pair,
            p_c: 2.0,
        };
        let w = mmse_update(&h, &common, &p, 0, 1.0);
        assert_relative_eq!(w.g_c.re, 4.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(w.u_c, 9.0 / 5.0, max_relative = 1e-14);
        assert_relative_eq!(w.g_p.re, 2.0 / 5.0, max_relative = 1e-14);
        assert_relative_eq!(w.u_p, 5.0 / 4.0, max_relative = 1e-14);

        let terms = vec![average_terms(&[h], &[w], &common)];
        let sub = build_subproblem(&terms, Mode::StRsma, 2, 4.0, 1.0).unwrap();

        // Layout: y_c = 0, p block = 1..5, c = 5, α = 6, q = 7.
        let l = &sub.layout;
        assert_eq!((l.y_c, l.c_start, l.alpha_start, l.q, l.n_vars), (Some(0), Some(5), Some(6), 7, 8));
        assert_eq!(sub.private_constraints, vec![0]);
        assert_eq!(sub.common_constraints, vec![1]);
        assert_eq!(sub.power_constraint, 2);
        assert_eq!(sub.epigraph_constraints, vec![3]);

        let tol = 1e-13;
        // Every MSE-derived coefficient carries the bits-conversion factor
        // log₂e; the epigraph couplings and portion entries stay at ±1.
        let scale = std::f64::consts::LOG2_E;
        // Private surrogate: τ̄_p = u_p g_p² = 5/4 · 4/25 = 1/5.
        let private = &sub.problem.constraints[0];
        let tau_p = 0.2 * scale;
        for r in 0..8 {
            for cc in 0..8 {
                let expect = if (r, cc) == (1, 1) || (r, cc) == (3, 3) {
                    tau_p
                } else {
                    0.0
                };
                assert_relative_eq!(private.q[(r, cc)], expect, epsilon = tol);
            }
        }
        // a: 2·w̄_p·log₂e at the real part of feed 1, −1 at α.
        let expect_a = [0.0, scale, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0];
        for (i, e) in expect_a.iter().enumerate() {
            assert_relative_eq!(private.a[i], *e, epsilon = tol);
        }
        // b = (τ̄_p σ² + ū_p − v̄_p − 1)·log₂e with v̄_p = ln(5/4).
        let b_p = (0.2 + 1.25 - (1.25f64).ln() - 1.0) * scale;
        assert_relative_eq!(private.b, b_p, max_relative = 1e-14);

        // Common surrogate: τ̄_c = 9/5 · 16/81 = 16/45 and ψ̄_c = τ̄_c.
        let commonc = &sub.problem.constraints[1];
        let tau_c = 16.0 / 45.0 * scale;
        for r in 0..8 {
            for cc in 0..8 {
                let expect = if (r, cc) == (0, 0) || (r, cc) == (1, 1) || (r, cc) == (3, 3) {
                    tau_c
                } else {
                    0.0
                };
                assert_relative_eq!(commonc.q[(r, cc)], expect, epsilon = tol);
            }
        }
        // a: 2·w̄_c·log₂e = 2·(4/5)·log₂e at y_c, −1 at the common portion.
        let expect_a = [1.6 * scale, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        for (i, e) in expect_a.iter().enumerate() {
            assert_relative_eq!(commonc.a[i], *e, epsilon = tol);
        }
        let b_c = (16.0 / 45.0 + 9.0 / 5.0 - (9.0f64 / 5.0).ln() - 1.0) * scale;
        assert_relative_eq!(commonc.b, b_c, max_relative = 1e-14);

        // Power: 2y_c² + ‖p‖² ≤ 4.
        let power = &sub.problem.constraints[2];
        for r in 0..8 {
            let expect = match r {
                0 => 2.0,
                1..=4 => 1.0,
                _ => 0.0,
            };
            assert_relative_eq!(power.q[(r, r)], expect, epsilon = tol);
        }
        assert_eq!(power.b, -4.0);
        assert_eq!(power.a.amax(), 0.0);

        // Epigraph: q − α − c ≤ 0.
        let epi = &sub.problem.constraints[3];
        let expect_a = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, -1.0];
        for (i, e) in expect_a.iter().enumerate() {
            assert_relative_eq!(epi.a[i], *e, epsilon = tol);
        }
        assert_eq!(epi.b, 0.0);

        // Bounds: y_c, c, α at zero; others free.
        let expect_bounds = [
            Some(0.0),
            None,
            None,
            None,
            None,
            Some(0.0),
            Some(0.0),
            None,
        ];
        assert_eq!(sub.problem.lower_bounds, expect_bounds);
    }

    /// Build terms for K users from S random samples and return everything
    /// needed to cross-check constraint values directly.
    #[allow(clippy::type_complexity)]
    fn random_terms(
        mode: Mode,
        n_t: usize,
        k_users: usize,
        s: usize,
        seed: u64,
    ) -> (
        Vec<SampleAveragedTerms>,
        Vec<Vec<CVector>>,
        Vec<Vec<EqualizerWeights>>,
        Point,
        FeedPair,
    ) {
        let mut stream = rng::stream(seed, &[17]);
        let pair = FeedPair::first_two(n_t).unwrap();
        let cols: Vec<CVector> = (0..k_users)
            .map(|_| random_cvec(n_t, &mut stream) * c(0.4, 0.0))
            .collect();
        let precoders = CMatrix::from_columns(&cols);
        let p_c_vec = random_cvec(n_t, &mut stream) * c(0.5, 0.0);
        let p_c_power = 0.8;
        let point = Point {
            y_c: if mode == Mode::StRsma {
                (p_c_power / 2.0_f64).sqrt()
            } else {
                0.0
            },
            p_c: if matches!(mode, Mode::Rsma | Mode::Multicast) {
                p_c_vec.clone()
            } else {
                DVector::from_element(0, c(0.0, 0.0))
            },
            precoders: if mode == Mode::Multicast {
                CMatrix::zeros(n_t, 0)
            } else {
                precoders.clone()
            },
            c: DVector::zeros(if matches!(mode, Mode::StRsma | Mode::Rsma) {
                k_users
            } else {
                0
            }),
            alpha: DVector::zeros(if mode == Mode::Multicast { 0 } else { k_users }),
            q: 0.0,
        };
        let mut all_samples = Vec::new();
        let mut all_weights = Vec::new();
        let mut terms = Vec::new();
        for k in 0..k_users {
            let samples: Vec<CVector> = (0..s).map(|_| random_cvec(n_t, &mut stream)).collect();
            let weights: Vec<EqualizerWeights> = samples
                .iter()
                .map(|h| {
                    let model = match mode {
                        Mode::StRsma => CommonModel::SpaceTime {
                            pair: &pair,
                            p_c: p_c_power,
                        },
                        Mode::Rsma | Mode::Multicast => CommonModel::Beamformed(&p_c_vec),
                        _ => CommonModel::None,
                    };
                    mmse_update(h, &model, &point.precoders, k, 1.0)
                })
                .collect();
            let model = match mode {
                Mode::StRsma => CommonModel::SpaceTime {
                    pair: &pair,
                    p_c: p_c_power,
                },
                Mode::Rsma | Mode::Multicast => CommonModel::Beamformed(&p_c_vec),
                _ => CommonModel::None,
            };
            terms.push(average_terms(&samples, &weights, &model));
            all_samples.push(samples);
            all_weights.push(weights);
        }
        (terms, all_samples, all_weights, point, pair)
    }

    /// The assembled constraints must reproduce the sample-averaged
    /// weighted MSEs they encode: evaluating surrogate constraint `k` at a
    /// packed point with `α = c = 0` gives `(ξ̄ − 1)·log₂e` exactly.
    #[test]
    fn test_constraints_match_directly_averaged_weighted_mse() {
        for (mode, seed) in [
            (Mode::StRsma, 1u64),
            (Mode::Rsma, 2),
            (Mode::Sdma, 3),
            (Mode::Multicast, 4),
        ] {
            let (n_t, k_users, s) = (2, 3, 7);
            let (terms, samples, weights, point, pair) = random_terms(mode, n_t, k_users, s, seed);
            let sub = build_subproblem(&terms, mode, n_t, 10.0, 1.0).unwrap();
            let x = sub.layout.pack(&point);

            for k in 0..k_users {
                // Direct average of the private weighted MSE.
                if mode != Mode::Multicast {
                    let mut xi = 0.0;
                    for (h, w) in samples[k].iter().zip(&weights[k]) {
                        let mut t_p = 1.0;
                        for j in 0..point.precoders.ncols() {
                            t_p += h.dotc(&point.precoders.column(j).into_owned()).norm_sqr();
                        }
                        let a_p = h.dotc(&point.precoders.column(k).into_owned());
                        let eps = w.g_p.norm_sqr() * t_p - 2.0 * (w.g_p * a_p).re + 1.0;
                        xi += w.u_p * eps - w.u_p.ln();
                    }
                    xi /= s as f64;
                    let got = sub
                        .problem
                        .constraint_value(sub.private_constraints[k], &x);
                    let expect = (xi - 1.0) * std::f64::consts::LOG2_E;
                    assert_relative_eq!(got, expect, max_relative = 1e-11, epsilon = 1e-12);
                }

                // Direct average of the common weighted MSE.
                if mode != Mode::Sdma {
                    let mut xi = 0.0;
                    for (h, w) in samples[k].iter().zip(&weights[k]) {
                        let mut t_c = 1.0;
                        for j in 0..point.precoders.ncols() {
                            t_c += h.dotc(&point.precoders.column(j).into_owned()).norm_sqr();
                        }
                        let a_c = if mode == Mode::StRsma {
                            c(pair.pair_energy(h).unwrap().sqrt() * point.y_c, 0.0)
                        } else {
                            t_c += h.dotc(&point.p_c).norm_sqr();
                            h.dotc(&point.p_c)
                        };
                        if mode == Mode::StRsma {
                            t_c += a_c.norm_sqr();
                        }
                        let eps = w.g_c.norm_sqr() * t_c - 2.0 * (w.g_c * a_c).re + 1.0;
                        xi += w.u_c * eps - w.u_c.ln();
                    }
                    xi /= s as f64;
                    let got = sub.problem.constraint_value(sub.common_constraints[k], &x);
                    let expect = (xi - 1.0) * std::f64::consts::LOG2_E;
                    assert_relative_eq!(got, expect, max_relative = 1e-11, epsilon = 1e-12);
                }
            }

            // Power constraint value is total power minus budget.
            let mut total = 2.0 * point.y_c * point.y_c + point.p_c.norm_squared();
            for j in 0..point.precoders.ncols() {
                total += point.precoders.column(j).norm_squared();
            }
            let got = sub.problem.constraint_value(sub.power_constraint, &x);
            assert_relative_eq!(got, total - 10.0, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn test_built_problems_are_valid_for_all_modes() {
        // `QcqpProblem::new` rejects non-PSD quadratics, so a successful
        // build is itself the certificate; exercise a spread of shapes.
        for seed in 0..8u64 {
            for mode in [Mode::StRsma, Mode::Rsma, Mode::Sdma, Mode::Multicast] {
                let k_users = 1 + (seed % 3) as usize;
                let (terms, _, _, _, _) = random_terms(mode, 2, k_users, 4, 50 + seed);
                let sub = build_subproblem(&terms, mode, 2, 5.0, 1.0).unwrap();
                assert_eq!(
                    sub.problem.n_vars,
                    VarLayout::new(mode, 2, k_users).n_vars
                );
                // The objective selects q alone.
                assert_eq!(sub.problem.objective[sub.layout.q], 1.0);
                assert_eq!(sub.problem.objective.iter().filter(|v| **v != 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn test_build_rejects_bad_inputs() {
        let (terms, _, _, _, _) = random_terms(Mode::StRsma, 2, 1, 2, 99);
        assert!(matches!(
            build_subproblem(&terms, Mode::StRsma, 3, 1.0, 1.0),
            Err(WmmseError::Dimension(_))
        ));
        assert!(matches!(
            build_subproblem(&terms, Mode::StRsma, 2, 0.0, 1.0),
            Err(WmmseError::Dimension(_))
        ));
        assert!(matches!(
            build_subproblem(&[], Mode::StRsma, 2, 1.0, 1.0),
            Err(WmmseError::Dimension(_))
        ));
        assert!(matches!(
            build_subproblem(&terms, Mode::Frr, 2, 1.0, 1.0),
            Err(WmmseError::InvalidMode(_))
        ));
    }
}
