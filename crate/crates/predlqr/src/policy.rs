//! Control laws: classic LQR feedback, closed-form MPC with k predictions,
//! receding-horizon MPC (kept deliberately independent of the closed form so
//! their equality is an executable cross-check), the conditional-mean optimal
//! policy for general stochastic disturbances, the per-path offline optimum
//! via finite-horizon backward induction, and the exact piecewise policy for
//! the scalar adversarial instance with its Fibonacci recursion.

use std::sync::Arc;

use crate::disturbance::DisturbanceProcess;
use crate::error::{Error, Result};
use crate::matlin::{self, Mat};
use crate::riccati::RiccatiSolution;
use crate::system::LqrSystem;

/// Everything a policy may look at when choosing the control at step t.
///
/// `observed` is the full prefix w_0..w_{t+m-1} the controller has seen,
/// where m = min(k, remaining); the prediction window is its tail starting
/// at index t. `remaining` is the effective horizon T - t.
#[derive(Debug)]
pub struct StepContext<'a> {
    pub t: usize,
    pub state: &'a [f64],
    pub observed: &'a [Vec<f64>],
    pub remaining: usize,
}

impl StepContext<'_> {
    /// The prediction window w_t..w_{t+m-1} (possibly empty).
    pub fn window(&self) -> &[Vec<f64>] {
        &self.observed[self.t.min(self.observed.len())..]
    }
}

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Number of future disturbances the policy wants to see (k).
    fn prediction_demand(&self) -> usize;

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>>;

    /// Whether the control is affine in (state, observed disturbances).
    /// Vertex enumeration of worst-case disturbances requires this.
    fn is_affine(&self) -> bool {
        false
    }
}

/// u = -K x with a fixed gain; building block for tests and baselines.
pub struct FixedGainPolicy {
    gain: Mat,
    label: String,
}

impl FixedGainPolicy {
    pub fn new(gain: Mat) -> Self {
        FixedGainPolicy {
            gain,
            label: "fixed_gain".into(),
        }
    }
}

impl Policy for FixedGainPolicy {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn prediction_demand(&self) -> usize {
        0
    }

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>> {
        Ok(self.gain.matvec(ctx.state)?.iter().map(|v| -v).collect())
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// Classic infinite-horizon LQR feedback u = -K x (no predictions).
pub fn classic_lqr(sol: &RiccatiSolution) -> FixedGainPolicy {
    FixedGainPolicy {
        gain: sol.k.clone(),
        label: "classic".into(),
    }
}

/// MPC with k predictions in closed form:
/// u_t = -(R + B^T P B)^{-1} B^T (P A x_t + sum_i (F^T)^i P w_{t+i}),
/// the sum running over the window (at most min(k, remaining) terms).
pub struct MpcClosedForm {
    k: usize,
    state_gain: Mat,
    /// window_gain[i] = (R + B^T P B)^{-1} B^T (F^T)^i P
    window_gain: Vec<Mat>,
}

pub fn mpc_closed_form(sol: &RiccatiSolution, k: usize) -> Result<MpcClosedForm> {
    let state_gain = sol.k.clone();
    let mut window_gain = Vec::with_capacity(k);
    let mut g_fti = sol.g.clone(); // G (F^T)^0
    for _ in 0..k {
        window_gain.push(g_fti.matmul(&sol.p)?);
        g_fti = g_fti.matmul(&sol.f.transpose())?;
    }
    Ok(MpcClosedForm {
        k,
        state_gain,
        window_gain,
    })
}

impl Policy for MpcClosedForm {
    fn name(&self) -> String {
        format!("mpc(k={})", self.k)
    }

    fn prediction_demand(&self) -> usize {
        self.k
    }

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>> {
        let window = ctx.window();
        if window.len() > self.k {
            return Err(Error::WindowExceedsPredictions {
                window: window.len(),
                k: self.k,
            });
        }
        let mut u = self.state_gain.matvec(ctx.state)?;
        for (i, w) in window.iter().enumerate() {
            let term = self.window_gain[i].matvec(w)?;
            matlin::add_scaled(&mut u, &term, 1.0);
        }
        Ok(u.iter().map(|v| -v).collect())
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// Receding-horizon MPC solved by backward induction at every step: the
/// deterministic problem over the window with terminal weight `terminal`
/// (defaults to the Riccati fixed point P). Implemented independently of
/// [`MpcClosedForm`] on purpose.
pub struct MpcReceding {
    a: Mat,
    b: Mat,
    q: Mat,
    r: Mat,
    terminal: Mat,
    k: usize,
}

pub fn mpc_receding(
    system: &LqrSystem,
    sol: &RiccatiSolution,
    k: usize,
    terminal: Option<Mat>,
) -> Result<MpcReceding> {
    let terminal = terminal.unwrap_or_else(|| sol.p.clone());
    if terminal.rows() != system.state_dim() || terminal.cols() != system.state_dim() {
        return Err(Error::DimensionMismatch {
            op: "mpc terminal weight",
            left: (system.state_dim(), system.state_dim()),
            right: (terminal.rows(), terminal.cols()),
        });
    }
    let dev = terminal.symmetry_deviation();
    if dev > 1e-10 * (1.0 + terminal.max_abs()) {
        return Err(Error::NotSymmetric {
            op: "mpc terminal weight",
            max_asymmetry: dev,
        });
    }
    check_psd(&terminal, "mpc terminal weight")?;
    Ok(MpcReceding {
        a: system.a.clone(),
        b: system.b.clone(),
        q: system.q.clone(),
        r: system.r.clone(),
        terminal: terminal.symmetrize(),
        k,
    })
}

fn check_psd(m: &Mat, what: &'static str) -> Result<()> {
    let shift = 1e-10 * (1.0 + m.max_abs());
    let shifted = m.symmetrize().add(&Mat::identity(m.rows()).scale(shift))?;
    shifted
        .cholesky()
        .map(|_| ())
        .map_err(|_| Error::Config(format!("{what} must be positive semidefinite")))
}

impl Policy for MpcReceding {
    fn name(&self) -> String {
        format!("mpc_receding(k={})", self.k)
    }

    fn prediction_demand(&self) -> usize {
        self.k
    }

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>> {
        let window = ctx.window();
        if window.len() > self.k {
            return Err(Error::WindowExceedsPredictions {
                window: window.len(),
                k: self.k,
            });
        }
        // No predictions: solve the one-step problem with zero disturbance.
        let zero = vec![vec![0.0; self.a.rows()]; 1];
        let w: &[Vec<f64>] = if window.is_empty() { &zero } else { window };
        let m = w.len();
        // Backward sweep of the value quadratics x^T P_j x + v_j^T x + const
        // over the local horizon j = m..0 with P_m = terminal.
        let mut p_next = self.terminal.clone();
        let mut v_next = vec![0.0; self.a.rows()];
        let mut first: Option<Vec<f64>> = None;
        for j in (0..m).rev() {
            let bt_p = self.b.transpose().matmul(&p_next)?;
            let inner = self.r.add(&bt_p.matmul(&self.b)?)?.symmetrize();
            let g = inner.solve_spd(&self.b.transpose())?; // (R + B^T P B)^{-1} B^T
            let h = self.b.matmul(&g)?;
            // F_j = A - H P_{j+1} A
            let f_j = self.a.sub(&h.matmul(&p_next)?.matmul(&self.a)?)?;
            if j == 0 {
                // u_0 = -(R + B^T P_1 B)^{-1} B^T (P_1 A x + P_1 w_0 + v_1 / 2)
                let mut rhs = p_next.matmul(&self.a)?.matvec(ctx.state)?;
                matlin::add_scaled(&mut rhs, &p_next.matvec(&w[0])?, 1.0);
                matlin::add_scaled(&mut rhs, &v_next, 0.5);
                let u = g.matvec(&rhs)?;
                first = Some(u.iter().map(|x| -x).collect());
                break;
            }
            // v_j = F_j^T (v_{j+1} + 2 P_{j+1} w_j)
            let mut inner_v = v_next.clone();
            matlin::add_scaled(&mut inner_v, &p_next.matvec(&w[j])?, 2.0);
            v_next = f_j.transpose().matvec(&inner_v)?;
            // P_j = Q + A^T P_{j+1} A - A^T P_{j+1} H P_{j+1} A
            let at_p = self.a.transpose().matmul(&p_next)?;
            p_next = self
                .q
                .add(&at_p.matmul(&self.a)?)?
                .sub(&at_p.matmul(&h)?.matmul(&p_next)?.matmul(&self.a)?)?
                .symmetrize();
        }
        Ok(first.expect("local horizon is nonempty"))
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// Optimal policy for general stochastic disturbances: the MPC closed form
/// plus a tail of conditional means,
/// u_t = -(R+B^T P B)^{-1} B^T (P A x_t + sum_{i<m} (F^T)^i P w_{t+i}
///        + sum_{i>=m} (F^T)^i P mu_{t+i|t+m-1}).
/// The tail is truncated once ||F^i|| times the process magnitude bound
/// drops below 1e-12, or at the end of the horizon, whichever comes first.
pub struct OptimalStochastic {
    k: usize,
    state_gain: Mat,
    /// gains[i] = (R + B^T P B)^{-1} B^T (F^T)^i P, i = 0..cutoff
    gains: Vec<Mat>,
    process: Arc<dyn DisturbanceProcess>,
}

pub fn optimal_stochastic(
    sol: &RiccatiSolution,
    process: Arc<dyn DisturbanceProcess>,
    k: usize,
) -> Result<OptimalStochastic> {
    if process.is_adversarial() {
        return Err(Error::Unsupported {
            what: "conditional-mean policy for an adversarial disturbance set",
        });
    }
    let mu_bound = process
        .support_bound()
        .or_else(|| process.correlation_bound().map(|m| m.max(0.0).sqrt()))
        .unwrap_or(1e6);
    let mut gains = Vec::new();
    let mut g_fti = sol.g.clone();
    let mut f_power = Mat::identity(sol.f.rows());
    // always cover the window; extend until the geometric tail is negligible
    for i in 0..100_000 {
        gains.push(g_fti.matmul(&sol.p)?);
        if i + 1 > k && f_power.spectral_norm()? * (1.0 + mu_bound) < 1e-12 {
            break;
        }
        g_fti = g_fti.matmul(&sol.f.transpose())?;
        f_power = f_power.matmul(&sol.f)?;
    }
    Ok(OptimalStochastic {
        k,
        state_gain: sol.k.clone(),
        gains,
        process,
    })
}

impl Policy for OptimalStochastic {
    fn name(&self) -> String {
        format!("optimal_stochastic(k={})", self.k)
    }

    fn prediction_demand(&self) -> usize {
        self.k
    }

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>> {
        let window = ctx.window();
        if window.len() > self.k {
            return Err(Error::WindowExceedsPredictions {
                window: window.len(),
                k: self.k,
            });
        }
        let m = window.len();
        let mut u = self.state_gain.matvec(ctx.state)?;
        for (i, w) in window.iter().enumerate() {
            matlin::add_scaled(&mut u, &self.gains[i].matvec(w)?, 1.0);
        }
        // conditional-mean tail, conditioned on the full observed prefix
        let last = (ctx.remaining - 1).min(self.gains.len() - 1);
        for i in m..=last {
            let mu = self.process.conditional_mean(ctx.t + i, ctx.observed)?;
            matlin::add_scaled(&mut u, &self.gains[i].matvec(&mu)?, 1.0);
        }
        Ok(u.iter().map(|v| -v).collect())
    }

    fn is_affine(&self) -> bool {
        // conditional means of the implemented stochastic processes are
        // linear in the observed prefix
        true
    }
}

/// Backward-induction tables: value function x^T P_t x + v_t^T x + q_t with
/// the control-effect kernels H_t. `dp_table` fills the disturbance-free
/// parts; `offline_optimal` adds the affine terms for a concrete path.
#[derive(Debug, Clone)]
pub struct DpTable {
    /// P_t for t = 0..=T (P_T is the terminal weight, exactly).
    pub p: Vec<Mat>,
    /// H_t = B (R + B^T P_{t+1} B)^{-1} B^T for t = 0..T-1.
    pub h: Vec<Mat>,
    /// v_t for t = 0..=T (zero unless built from a path).
    pub v: Vec<Vec<f64>>,
    /// q_t for t = 0..=T (zero unless built from a path).
    pub q: Vec<f64>,
}

impl DpTable {
    /// Optimal cost from state x0 at time 0: x0^T P_0 x0 + v_0^T x0 + q_0.
    pub fn value(&self, x0: &[f64]) -> Result<f64> {
        Ok(matlin::quad_form(&self.p[0], x0)? + matlin::dot(&self.v[0], x0) + self.q[0])
    }
}

/// Disturbance-independent backward sweep of P_t and H_t from a terminal
/// weight down to t = 0.
pub fn dp_table(system: &LqrSystem, terminal: &Mat) -> Result<DpTable> {
    let n = system.state_dim();
    if terminal.rows() != n || terminal.cols() != n {
        return Err(Error::DimensionMismatch {
            op: "dp terminal",
            left: (n, n),
            right: (terminal.rows(), terminal.cols()),
        });
    }
    check_psd(terminal, "dp terminal weight")?;
    let horizon = system.horizon;
    let mut p = vec![Mat::zeros(n, n); horizon + 1];
    let mut h = vec![Mat::zeros(n, n); horizon];
    p[horizon] = terminal.symmetrize();
    for t in (0..horizon).rev() {
        let bt_p = system.b.transpose().matmul(&p[t + 1])?;
        let inner = system.r.add(&bt_p.matmul(&system.b)?)?.symmetrize();
        let g = inner.solve_spd(&system.b.transpose())?;
        h[t] = system.b.matmul(&g)?.symmetrize();
        let at_p = system.a.transpose().matmul(&p[t + 1])?;
        p[t] = system
            .q
            .add(&at_p.matmul(&system.a)?)?
            .sub(&at_p.matmul(&h[t])?.matmul(&p[t + 1])?.matmul(&system.a)?)?
            .symmetrize();
    }
    Ok(DpTable {
        p,
        h,
        v: vec![vec![0.0; n]; horizon + 1],
        q: vec![0.0; horizon + 1],
    })
}

/// The exact per-path optimum: plays
/// u_t = -(R + B^T P_{t+1} B)^{-1} B^T (P_{t+1} A x_t + P_{t+1} w_t + v_{t+1}/2)
/// against the full disturbance path it was built from.
pub struct OfflineOptimal {
    /// state_gain[t] = G_t P_{t+1} A
    state_gain: Vec<Mat>,
    /// offset[t] = G_t (P_{t+1} w_t + v_{t+1}/2)
    offset: Vec<Vec<f64>>,
    value: f64,
}

impl OfflineOptimal {
    /// The DP optimal cost x0^T P_0 x0 + v_0^T x0 + q_0.
    pub fn optimal_cost(&self) -> f64 {
        self.value
    }
}

/// Builds the offline-optimal policy and its filled DP table for a path.
pub fn offline_optimal(
    system: &LqrSystem,
    disturbance_path: &[Vec<f64>],
) -> Result<(OfflineOptimal, DpTable)> {
    let table = offline_table(system, disturbance_path, None)?;
    let horizon = system.horizon;
    let mut state_gain = Vec::with_capacity(horizon);
    let mut offset = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let bt_p = system.b.transpose().matmul(&table.p[t + 1])?;
        let inner = system.r.add(&bt_p.matmul(&system.b)?)?.symmetrize();
        let g = inner.solve_spd(&system.b.transpose())?;
        state_gain.push(g.matmul(&table.p[t + 1])?.matmul(&system.a)?);
        let mut rhs = table.p[t + 1].matvec(&disturbance_path[t])?;
        matlin::add_scaled(&mut rhs, &table.v[t + 1], 0.5);
        offset.push(g.matvec(&rhs)?);
    }
    let value = table.value(&system.x0)?;
    Ok((
        OfflineOptimal {
            state_gain,
            offset,
            value,
        },
        table,
    ))
}

/// Fills v_t and q_t for a concrete path on top of the P_t/H_t sweep.
/// Passing a precomputed `base` table (from [`dp_table`] with terminal Q_f)
/// skips the matrix sweep, which is what the Monte Carlo regret loops do.
pub fn offline_table(
    system: &LqrSystem,
    disturbance_path: &[Vec<f64>],
    base: Option<&DpTable>,
) -> Result<DpTable> {
    let horizon = system.horizon;
    if disturbance_path.len() != horizon {
        return Err(Error::PathLength {
            expected: horizon,
            got: disturbance_path.len(),
        });
    }
    let mut table = match base {
        Some(t) => t.clone(),
        None => dp_table(system, &system.q_f)?,
    };
    let n = system.state_dim();
    table.v = vec![vec![0.0; n]; horizon + 1];
    table.q = vec![0.0; horizon + 1];
    for t in (0..horizon).rev() {
        let w = &disturbance_path[t];
        let p_next = &table.p[t + 1];
        let h_t = &table.h[t];
        // F_t = A - H_t P_{t+1} A
        let f_t = system.a.sub(&h_t.matmul(p_next)?.matmul(&system.a)?)?;
        let p_w = p_next.matvec(w)?;
        // v_t = F_t^T (v_{t+1} + 2 P_{t+1} w_t)
        let mut inner_v = table.v[t + 1].clone();
        matlin::add_scaled(&mut inner_v, &p_w, 2.0);
        table.v[t] = f_t.transpose().matvec(&inner_v)?;
        // q_t = w^T (P_{t+1} - P_{t+1} H_t P_{t+1}) w
        //     + w^T (I - P_{t+1} H_t) v_{t+1} - v_{t+1}^T H_t v_{t+1} / 4 + q_{t+1}
        let h_pw = h_t.matvec(&p_w)?;
        let quad_w = matlin::dot(w, &p_w) - matlin::dot(&p_w, &h_pw);
        let v_next = &table.v[t + 1];
        let lin = matlin::dot(w, v_next) - matlin::dot(&h_pw, v_next);
        let h_v = h_t.matvec(v_next)?;
        table.q[t] = quad_w + lin - 0.25 * matlin::dot(v_next, &h_v) + table.q[t + 1];
    }
    Ok(table)
}

/// Offline optimal cost for a path, reusing a precomputed P/H sweep.
pub fn offline_value_with_table(
    system: &LqrSystem,
    disturbance_path: &[Vec<f64>],
    base: &DpTable,
) -> Result<f64> {
    offline_table(system, disturbance_path, Some(base))?.value(&system.x0)
}

impl Policy for OfflineOptimal {
    fn name(&self) -> String {
        "offline".into()
    }

    fn prediction_demand(&self) -> usize {
        0
    }

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>> {
        if ctx.t >= self.state_gain.len() {
            return Err(Error::Config(format!(
                "offline policy asked for step {} beyond its horizon {}",
                ctx.t,
                self.state_gain.len()
            )));
        }
        let mut u = self.state_gain[ctx.t].matvec(ctx.state)?;
        matlin::add_scaled(&mut u, &self.offset[ctx.t], 1.0);
        Ok(u.iter().map(|v| -v).collect())
    }

    fn is_affine(&self) -> bool {
        // affine in the state, but tied to the path it was built from, so
        // vertex enumeration over other paths would mis-evaluate it
        false
    }
}

const GOLDEN_SHRINK: f64 = 0.3819660112501051; // (3 - sqrt(5)) / 2

/// The exact optimal policy for the scalar adversarial instance
/// A = B = Q = R = 1, disturbances in [-1, 1], one prediction:
/// dead-beat inside |x + w| <= 1, golden-ratio relaxation outside.
pub struct Example2Policy;

pub fn example2_policy() -> Example2Policy {
    Example2Policy
}

impl Policy for Example2Policy {
    fn name(&self) -> String {
        "example2".into()
    }

    fn prediction_demand(&self) -> usize {
        1
    }

    fn act(&self, ctx: &StepContext) -> Result<Vec<f64>> {
        if ctx.state.len() != 1 {
            return Err(Error::DimensionMismatch {
                op: "example2 policy state",
                left: (1, 1),
                right: (ctx.state.len(), 1),
            });
        }
        let window = ctx.window();
        if window.is_empty() {
            return Err(Error::Unsupported {
                what: "example2 policy needs one prediction",
            });
        }
        if window[0].len() != 1 {
            return Err(Error::DimensionMismatch {
                op: "example2 policy disturbance",
                left: (1, 1),
                right: (window[0].len(), 1),
            });
        }
        let z = ctx.state[0] + window[0][0];
        let u = if z.abs() <= 1.0 {
            -z
        } else {
            -z + GOLDEN_SHRINK * (z - z.signum())
        };
        Ok(vec![u])
    }
}

/// Coefficients of the adversarial cost-to-go g_t(x) = a_t x^2 + 2 b_t |x| + c_t
/// for the scalar instance, from the exact backward recursion.
#[derive(Debug, Clone)]
pub struct Example2Dp {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Example2Dp {
    /// Per-step value increments c_t - c_{t+1}, oldest first.
    pub fn c_increments(&self) -> Vec<f64> {
        self.c.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

/// Exact backward recursion for the scalar adversarial instance:
/// a_{t-1} = (a_t + 1) / (a_t + 2),
/// b_{t-1} = (a_t + b_t + 1) / (a_t + 2),
/// c_{t-1} = c_t + (a_t + 1 + 2 b_t - b_t^2) / (a_t + 2),
/// initialized a_{T-1} = b_{T-1} = c_{T-1} = 1/2. The a-sequence walks the
/// Fibonacci ratios toward (sqrt(5) - 1) / 2 and the c-increments approach
/// the stationary per-step value 1.
pub fn example2_exact_dp(horizon: usize) -> Result<Example2Dp> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let mut a = vec![0.0; horizon];
    let mut b = vec![0.0; horizon];
    let mut c = vec![0.0; horizon];
    a[horizon - 1] = 0.5;
    b[horizon - 1] = 0.5;
    c[horizon - 1] = 0.5;
    for t in (1..horizon).rev() {
        let (at, bt, ct) = (a[t], b[t], c[t]);
        a[t - 1] = (at + 1.0) / (at + 2.0);
        b[t - 1] = (at + bt + 1.0) / (at + 2.0);
        c[t - 1] = ct + (at + 1.0 + 2.0 * bt - bt * bt) / (at + 2.0);
    }
    Ok(Example2Dp { a, b, c })
}
