//! Cost, dynamic-regret, and performance-ratio estimation.
//!
//! Monte Carlo estimates pair every policy rollout with the offline optimum
//! on the same sampled path, which is what the regret definition asks for and
//! also slashes the estimator variance. Exact instruments cover the rest:
//! trace closed forms for i.i.d. costs, full scenario-tree enumeration for
//! finite-support processes, vertex maximization for affine policies under
//! box-bounded adversaries, and a gridded minimax DP for the scalar case.

use std::sync::Mutex;

use serde::Serialize;

use crate::disturbance::{BoxAdversarial, DisturbanceProcess};
use crate::error::{Error, Result};
use crate::matlin::{self, Mat};
use crate::policy::{self, Policy, StepContext};
use crate::riccati::RiccatiSolution;
use crate::rng;
use crate::system::{self, LqrSystem};

/// Visited-node budget for exact scenario-tree enumeration.
const TREE_NODE_LIMIT: u64 = 4_000_000;
/// Vertex enumeration cap: at most 2^20 corner rollouts.
const VERTEX_BIT_LIMIT: usize = 20;

/// Evaluation summary for one (policy, k, horizon) cell, or a sweep of them.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub policy: String,
    pub k: usize,
    pub horizon: usize,
    pub trials: usize,
    pub mean_cost: f64,
    pub se_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_regret: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_regret: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub performance_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pr_se: Option<f64>,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<EvalReport>,
}

impl EvalReport {
    /// Report wrapping an exactly computed value (zero standard error).
    pub fn exact(policy: impl Into<String>, k: usize, horizon: usize, value: f64) -> EvalReport {
        EvalReport {
            policy: policy.into(),
            k,
            horizon,
            trials: 0,
            mean_cost: value,
            se_cost: 0.0,
            mean_regret: None,
            se_regret: None,
            performance_ratio: None,
            pr_se: None,
            base_seed: 0,
            sweep: Vec::new(),
        }
    }

    pub fn csv_header() -> &'static str {
        "policy,k,T,trials,mean_cost,se_cost,mean_regret,se_regret,pr,seed"
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.k,
            self.horizon,
            self.trials,
            self.mean_cost,
            self.se_cost,
            opt(self.mean_regret),
            opt(self.se_regret),
            opt(self.performance_ratio),
            self.base_seed
        )
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `f(trial)` for every trial index, on parallel workers when available.
/// Results land in trial order so the final reduction is deterministic
/// regardless of worker count.
fn parallel_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send + Default + Clone,
    F: Fn(usize) -> Result<T> + Sync,
{
    let mut out = vec![T::default(); trials];
    if trials == 0 {
        return Ok(out);
    }
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(trials);
    if workers <= 1 {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i)?;
        }
        return Ok(out);
    }
    let chunk = trials.div_ceil(workers);
    let first_err: Mutex<Option<Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for (ci, slot) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            let first_err = &first_err;
            scope.spawn(move || {
                for (j, o) in slot.iter_mut().enumerate() {
                    match f(ci * chunk + j) {
                        Ok(v) => *o = v,
                        Err(e) => {
                            let mut guard = first_err.lock().unwrap();
                            if guard.is_none() {
                                *guard = Some(e);
                            }
                            return;
                        }
                    }
                }
            });
        }
    });
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(out)
}

/// Exact average per-step cost of the optimal k-prediction policy under
/// i.i.d. zero-mean disturbances with covariance W:
/// trace((P - sum_{i<k} P F^i H (F^T)^i P) W). `k = None` means infinite
/// predictions; the geometric sum is iterated until the trace increment
/// drops below 1e-14.
pub fn sto_k_closed_form(sol: &RiccatiSolution, w_cov: &Mat, k: Option<usize>) -> Result<f64> {
    let n = sol.p.rows();
    if w_cov.rows() != n || w_cov.cols() != n {
        return Err(Error::DimensionMismatch {
            op: "sto_k covariance",
            left: (n, n),
            right: (w_cov.rows(), w_cov.cols()),
        });
    }
    let mut reduction = Mat::zeros(n, n);
    let mut pf = sol.p.clone(); // P F^i
    match k {
        Some(k) => {
            for _ in 0..k {
                let term = pf.matmul(&sol.h)?.matmul(&pf.transpose())?;
                reduction = reduction.add(&term)?;
                pf = pf.matmul(&sol.f)?;
            }
        }
        None => {
            for _ in 0..1_000_000usize {
                let term = pf.matmul(&sol.h)?.matmul(&pf.transpose())?;
                let inc = term.matmul(w_cov)?.trace()?.abs();
                reduction = reduction.add(&term)?;
                pf = pf.matmul(&sol.f)?;
                if inc < 1e-14 {
                    break;
                }
            }
        }
    }
    sol.p.sub(&reduction)?.matmul(w_cov)?.trace()
}

/// Mean and standard error of the rollout cost over independent trials;
/// trial i uses seed hash(base_seed, i).
pub fn monte_carlo_cost(
    system: &LqrSystem,
    policy: &dyn Policy,
    process: &dyn DisturbanceProcess,
    trials: usize,
    base_seed: u64,
) -> Result<EvalReport> {
    if process.is_adversarial() {
        return Err(Error::Unsupported {
            what: "Monte Carlo over an adversarial disturbance set",
        });
    }
    let costs = parallel_trials(trials, |i| {
        let path = process.sample_path(rng::hash2(base_seed, i as u64), system.horizon)?;
        let traj = system::rollout(system, policy, &path)?;
        Ok(traj.total_cost())
    })?;
    let (mean_cost, se_cost) = mean_se(&costs);
    Ok(EvalReport {
        policy: policy.name(),
        k: policy.prediction_demand(),
        horizon: system.horizon,
        trials,
        mean_cost,
        se_cost,
        mean_regret: None,
        se_regret: None,
        performance_ratio: None,
        pr_se: None,
        base_seed,
        sweep: Vec::new(),
    })
}

/// Per-path dynamic regret: rolls the policy out and solves the offline
/// optimum on the same sampled path, reporting the mean difference.
pub fn dynamic_regret_stochastic(
    system: &LqrSystem,
    policy: &dyn Policy,
    process: &dyn DisturbanceProcess,
    trials: usize,
    base_seed: u64,
) -> Result<EvalReport> {
    if process.is_adversarial() {
        return Err(Error::Unsupported {
            what: "Monte Carlo regret over an adversarial disturbance set",
        });
    }
    let base_table = policy::dp_table(system, &system.q_f)?;
    let pairs = parallel_trials(trials, |i| {
        let path = process.sample_path(rng::hash2(base_seed, i as u64), system.horizon)?;
        let traj = system::rollout(system, policy, &path)?;
        let offline = policy::offline_value_with_table(system, &path, &base_table)?;
        Ok((traj.total_cost(), traj.total_cost() - offline))
    })?;
    let costs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let regrets: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mean_cost, se_cost) = mean_se(&costs);
    let (mean_regret, se_regret) = mean_se(&regrets);
    Ok(EvalReport {
        policy: policy.name(),
        k: policy.prediction_demand(),
        horizon: system.horizon,
        trials,
        mean_cost,
        se_cost,
        mean_regret: Some(mean_regret),
        se_regret: Some(se_regret),
        performance_ratio: None,
        pr_se: None,
        base_seed,
        sweep: Vec::new(),
    })
}

/// Regret report for the per-path offline optimum against itself: the
/// rolled-out cost of the offline policy minus its DP value, which is zero
/// up to accumulated rounding. This is the k = T row of a regret sweep and a
/// live check of the value-function identity.
pub fn offline_regret_report(
    system: &LqrSystem,
    process: &dyn DisturbanceProcess,
    trials: usize,
    base_seed: u64,
) -> Result<EvalReport> {
    if process.is_adversarial() {
        return Err(Error::Unsupported {
            what: "Monte Carlo regret over an adversarial disturbance set",
        });
    }
    let pairs = parallel_trials(trials, |i| {
        let path = process.sample_path(rng::hash2(base_seed, i as u64), system.horizon)?;
        let (policy, _) = policy::offline_optimal(system, &path)?;
        let traj = system::rollout(system, &policy, &path)?;
        Ok((traj.total_cost(), traj.total_cost() - policy.optimal_cost()))
    })?;
    let costs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let regrets: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mean_cost, se_cost) = mean_se(&costs);
    let (mean_regret, se_regret) = mean_se(&regrets);
    Ok(EvalReport {
        policy: "offline".into(),
        k: system.horizon,
        horizon: system.horizon,
        trials,
        mean_cost,
        se_cost,
        mean_regret: Some(mean_regret),
        se_regret: Some(se_regret),
        performance_ratio: None,
        pr_se: None,
        base_seed,
        sweep: Vec::new(),
    })
}

/// Quadratic value function x^T P x + v^T x + q used by the tree recursion.
#[derive(Clone)]
struct Quad {
    p: Mat,
    v: Vec<f64>,
    q: f64,
}

impl Quad {
    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(matlin::quad_form(&self.p, x)? + matlin::dot(&self.v, x) + self.q)
    }

    /// Value function of x -> self(x + w).
    fn shift(&self, w: &[f64]) -> Result<Quad> {
        let pw = self.p.matvec(w)?;
        let mut v = self.v.clone();
        matlin::add_scaled(&mut v, &pw, 2.0);
        let q = self.q + matlin::dot(w, &pw) + matlin::dot(&self.v, w);
        Ok(Quad {
            p: self.p.clone(),
            v,
            q,
        })
    }
}

struct TreeCtx<'a> {
    system: &'a LqrSystem,
    process: &'a dyn DisturbanceProcess,
    k: usize,
    nodes: u64,
    node_limit: u64,
}

/// Exact optimal cost with k predictions for a finitely supported process,
/// by backward induction over the full scenario tree. At each decision node
/// the control minimization is solved in closed form (the cost-to-go is a
/// quadratic); expectations run over the conditional atoms of the process.
pub fn scenario_tree_optimal(
    system: &LqrSystem,
    process: &dyn DisturbanceProcess,
    k: usize,
) -> Result<f64> {
    scenario_tree_optimal_with_limit(system, process, k, TREE_NODE_LIMIT)
}

fn scenario_tree_optimal_with_limit(
    system: &LqrSystem,
    process: &dyn DisturbanceProcess,
    k: usize,
    node_limit: u64,
) -> Result<f64> {
    if process.finite_support(&[]).is_none() {
        return Err(Error::Unsupported {
            what: "scenario tree over a process without finite support",
        });
    }
    let mut ctx = TreeCtx {
        system,
        process,
        k,
        nodes: 0,
        node_limit,
    };
    // enumerate the initial observation prefix w_0..w_{min(k,T)-1}
    let mut prefix: Vec<Vec<f64>> = Vec::new();
    root_average(&mut ctx, &mut prefix)
}

fn conditional_atoms(
    process: &dyn DisturbanceProcess,
    prefix: &[Vec<f64>],
) -> Result<Vec<(Vec<f64>, f64)>> {
    let atoms = process.finite_support(prefix).ok_or(Error::Unsupported {
        what: "finite support vanished mid-tree",
    })?;
    let total: f64 = atoms.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "conditional atom probabilities sum to {total}, expected 1"
        )));
    }
    Ok(atoms)
}

fn root_average(ctx: &mut TreeCtx, prefix: &mut Vec<Vec<f64>>) -> Result<f64> {
    let depth = ctx.k.min(ctx.system.horizon);
    if prefix.len() == depth {
        let quad = tree_value(ctx, 0, prefix)?;
        return quad.eval(&ctx.system.x0);
    }
    let atoms = conditional_atoms(ctx.process, prefix)?;
    let mut acc = 0.0;
    for (atom, p) in atoms {
        prefix.push(atom);
        acc += p * root_average(ctx, prefix)?;
        prefix.pop();
    }
    Ok(acc)
}

/// Value function V_t(.; history) of the min player at decision time t,
/// knowing the observed history of length min(t + k, T).
fn tree_value(ctx: &mut TreeCtx, t: usize, history: &mut Vec<Vec<f64>>) -> Result<Quad> {
    let horizon = ctx.system.horizon;
    let n = ctx.system.state_dim();
    if t == horizon {
        return Ok(Quad {
            p: ctx.system.q_f.symmetrize(),
            v: vec![0.0; n],
            q: 0.0,
        });
    }
    ctx.nodes += 1;
    if ctx.nodes > ctx.node_limit {
        return Err(Error::TreeBudgetExceeded {
            nodes: ctx.nodes,
            limit: ctx.node_limit,
        });
    }
    // Expected child value as a quadratic in y = A x + B u. With k >= 1 the
    // transition disturbance w_t is already observed; with k = 0 the new
    // atom is the transition disturbance itself.
    let expected: Quad = if t + ctx.k < horizon {
        let atoms = conditional_atoms(ctx.process, history)?;
        let mut acc: Option<Quad> = None;
        for (atom, p) in atoms {
            history.push(atom.clone());
            let child = tree_value(ctx, t + 1, history)?;
            history.pop();
            let shift_w = if ctx.k == 0 { &atom } else { &history[t] };
            let shifted = child.shift(shift_w)?;
            acc = Some(match acc {
                None => Quad {
                    p: shifted.p.scale(p),
                    v: shifted.v.iter().map(|x| x * p).collect(),
                    q: shifted.q * p,
                },
                Some(mut a) => {
                    a.p = a.p.add(&shifted.p.scale(p))?;
                    matlin::add_scaled(&mut a.v, &shifted.v, p);
                    a.q += shifted.q * p;
                    a
                }
            });
        }
        acc.ok_or_else(|| Error::Config("empty conditional support".into()))?
    } else {
        // no new observation arrives; w_t is known from the history
        let child = tree_value(ctx, t + 1, history)?;
        child.shift(&history[t])?
    };
    // min over u of u^T R u + expected(A x + B u), solved by completing the
    // square with generic matrix algebra.
    let b = &ctx.system.b;
    let bt_p = b.transpose().matmul(&expected.p)?;
    let inner = ctx.system.r.add(&bt_p.matmul(b)?)?.symmetrize();
    let g = inner.solve_spd(&b.transpose())?;
    let h = b.matmul(&g)?;
    let a = &ctx.system.a;
    let at_p = a.transpose().matmul(&expected.p)?;
    let p_res = ctx
        .system
        .q
        .add(&at_p.matmul(a)?)?
        .sub(&at_p.matmul(&h)?.matmul(&expected.p)?.matmul(a)?)?
        .symmetrize();
    // v_res = A^T (I - P H) v  (P, v of the expected child)
    let hv = h.matvec(&expected.v)?;
    let mut inner_v = expected.v.clone();
    matlin::add_scaled(&mut inner_v, &expected.p.matvec(&hv)?, -1.0);
    let v_res = a.transpose().matvec(&inner_v)?;
    let q_res = expected.q - 0.25 * matlin::dot(&expected.v, &hv);
    Ok(Quad {
        p: p_res,
        v: v_res,
        q: q_res,
    })
}

/// Exact expected rollout cost of a policy under a finitely supported
/// process, by enumerating every disturbance path with its probability.
pub fn enumerate_expected_cost(
    system: &LqrSystem,
    policy: &dyn Policy,
    process: &dyn DisturbanceProcess,
) -> Result<f64> {
    fn recurse(
        system: &LqrSystem,
        policy: &dyn Policy,
        process: &dyn DisturbanceProcess,
        prefix: &mut Vec<Vec<f64>>,
        nodes: &mut u64,
    ) -> Result<f64> {
        if prefix.len() == system.horizon {
            let traj = system::rollout(system, policy, prefix)?;
            return Ok(traj.total_cost());
        }
        *nodes += 1;
        if *nodes > TREE_NODE_LIMIT {
            return Err(Error::TreeBudgetExceeded {
                nodes: *nodes,
                limit: TREE_NODE_LIMIT,
            });
        }
        let atoms = conditional_atoms(process, prefix)?;
        let mut acc = 0.0;
        for (atom, p) in atoms {
            prefix.push(atom);
            acc += p * recurse(system, policy, process, prefix, nodes)?;
            prefix.pop();
        }
        Ok(acc)
    }
    let mut nodes = 0;
    recurse(system, policy, process, &mut Vec::new(), &mut nodes)
}

/// Exact worst-case cost sup over the box Omega^T for an affine policy.
/// The cost is convex quadratic in the disturbances, so the supremum sits at
/// a vertex; all 2^(nT) vertices are enumerated (guarded at n*T <= 20).
pub fn adversarial_vertex_cost(
    system: &LqrSystem,
    policy: &dyn Policy,
    box_set: &BoxAdversarial,
) -> Result<f64> {
    if !policy.is_affine() {
        return Err(Error::Unsupported {
            what: "vertex maximization of a nonlinear policy (max may be interior)",
        });
    }
    if box_set.dim != system.state_dim() {
        return Err(Error::DimensionMismatch {
            op: "adversarial box",
            left: (system.state_dim(), 1),
            right: (box_set.dim, 1),
        });
    }
    let n = system.state_dim();
    let bits = n * system.horizon;
    if bits > VERTEX_BIT_LIMIT {
        return Err(Error::VertexBudgetExceeded {
            bits,
            limit: VERTEX_BIT_LIMIT,
        });
    }
    let r = box_set.r;
    let mut worst = f64::NEG_INFINITY;
    let mut path = vec![vec![0.0; n]; system.horizon];
    for mask in 0u64..(1u64 << bits) {
        for t in 0..system.horizon {
            for i in 0..n {
                let bit = mask >> (t * n + i) & 1;
                path[t][i] = if bit == 0 { r } else { -r };
            }
        }
        let traj = system::rollout(system, policy, &path)?;
        worst = worst.max(traj.total_cost());
    }
    Ok(worst)
}

/// Parameters of the state grid for the scalar minimax DP.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// States live on [-x_max, x_max].
    pub x_max: f64,
    /// Grid spacing h.
    pub spacing: f64,
}

/// Outcome of a grid DP run.
#[derive(Debug, Clone, Copy)]
pub struct GridDpResult {
    /// Average per-step value over the last half of the backward sweeps.
    pub per_step_value: f64,
    /// Number of grid evaluations clamped at the boundary; nonzero means
    /// x_max was too small and the run is invalid.
    pub clamp_count: u64,
    /// Value change against a 2h-coarse rerun, when requested.
    pub refinement_delta: Option<f64>,
}

struct Grid {
    x_min: f64,
    h: f64,
    len: usize,
}

impl Grid {
    fn new(x_max: f64, h: f64) -> Grid {
        let half = (x_max / h).round() as usize;
        Grid {
            x_min: -(half as f64) * h,
            h,
            len: 2 * half + 1,
        }
    }

    fn x(&self, i: usize) -> f64 {
        self.x_min + self.h * i as f64
    }

    fn interp(&self, values: &[f64], x: f64, clamps: &mut u64) -> f64 {
        let pos = (x - self.x_min) / self.h;
        if pos <= 0.0 {
            if pos < -1e-9 {
                *clamps += 1;
            }
            return values[0];
        }
        let max = (self.len - 1) as f64;
        if pos >= max {
            if pos > max + 1e-9 {
                *clamps += 1;
            }
            return values[self.len - 1];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }
}

fn scalar_params(system: &LqrSystem) -> Result<(f64, f64, f64, f64, f64)> {
    if system.state_dim() != 1 || system.control_dim() != 1 {
        return Err(Error::Unsupported {
            what: "grid DP on a non-scalar system",
        });
    }
    let b = system.b.get(0, 0);
    if b == 0.0 {
        return Err(Error::Unsupported {
            what: "grid DP with zero control authority",
        });
    }
    Ok((
        system.a.get(0, 0),
        b,
        system.q.get(0, 0),
        system.r.get(0, 0),
        system.q_f.get(0, 0),
    ))
}

/// Numerical minimax value iteration for the scalar system with one
/// prediction: alternate the controller's minimization over gridded next
/// states against the adversary's maximization over gridded disturbances in
/// [-r, r]. Returns the average per-step value at x = 0 over the last T/2
/// backward sweeps. With `refine_tol` set, a 2h-coarse rerun must agree to
/// within the tolerance, otherwise the grid is flagged as too coarse.
pub fn minimax_grid_dp(
    system: &LqrSystem,
    r_bound: f64,
    grid: GridSpec,
    refine_tol: Option<f64>,
) -> Result<GridDpResult> {
    let run = |h: f64| minimax_grid_pass(system, r_bound, grid.x_max, h);
    let (value, clamps) = run(grid.spacing)?;
    let mut refinement_delta = None;
    if let Some(tol) = refine_tol {
        let (coarse, _) = run(grid.spacing * 2.0)?;
        let delta = (value - coarse).abs();
        refinement_delta = Some(delta);
        if delta > tol {
            return Err(Error::GridTooCoarse {
                change: delta,
                tolerance: tol,
            });
        }
    }
    Ok(GridDpResult {
        per_step_value: value,
        clamp_count: clamps,
        refinement_delta,
    })
}

fn minimax_grid_pass(system: &LqrSystem, r_bound: f64, x_max: f64, h: f64) -> Result<(f64, u64)> {
    let (a, b, q, r_cost, q_f) = scalar_params(system)?;
    let horizon = system.horizon;
    if horizon < 2 {
        return Err(Error::Config(
            "grid DP needs a horizon of at least 2".into(),
        ));
    }
    let x_grid = Grid::new(x_max, h);
    let z_max = a.abs() * x_max + r_bound + h;
    let z_grid = Grid::new(z_max, h);
    let mut clamps: u64 = 0;
    // g_t(x) over the x grid; f_t(z) over the wider z grid.
    // Terminal: g_T == 0 (the stage written as u^2 r + c_{t+1} x_{t+1}^2
    // charges x_T^2 with weight q_f at the last step).
    let mut g: Vec<f64> = vec![0.0; x_grid.len];
    let mut f: Vec<f64> = vec![0.0; z_grid.len];
    let zero_idx = (x_grid.len - 1) / 2;
    let mut value_at_zero = vec![0.0f64; horizon + 1];
    value_at_zero[0] = 0.0;
    let w_steps = (r_bound / h).floor() as i64;
    for sweep in 0..horizon {
        let t = horizon - 1 - sweep; // computing f_t, g_t
        let c_next = if t + 1 == horizon { q_f } else { q };
        // f_t(z) = min over gridded y of r u^2 + c y^2 + g_{t+1}(y), u = (y - z)/b
        let mut arg = 0usize;
        for zi in 0..z_grid.len {
            let z = z_grid.x(zi);
            let eval = |yi: usize| {
                let y = x_grid.x(yi);
                let u = (y - z) / b;
                r_cost * u * u + c_next * y * y + g[yi]
            };
            // the objective is convex in y and the argmin is monotone in z:
            // walk from the previous argmin to the local (= global) minimum
            let mut best = eval(arg);
            loop {
                let mut moved = false;
                if arg + 1 < x_grid.len {
                    let v = eval(arg + 1);
                    if v < best {
                        best = v;
                        arg += 1;
                        moved = true;
                    }
                }
                if !moved && arg > 0 {
                    let v = eval(arg - 1);
                    if v < best {
                        best = v;
                        arg -= 1;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
            if (arg == 0 || arg == x_grid.len - 1) && best.is_finite() {
                clamps += 1;
            }
            f[zi] = best;
        }
        // g_t(x) = max over w in [-r, r] (gridded, endpoints included) of f_t(a x + w)
        let mut new_g = vec![0.0; x_grid.len];
        for xi in 0..x_grid.len {
            let base = a * x_grid.x(xi);
            let mut best = f64::NEG_INFINITY;
            for wi in -w_steps..=w_steps {
                let w = wi as f64 * h;
                best = best.max(z_grid.interp(&f, base + w, &mut clamps));
            }
            for w in [-r_bound, r_bound] {
                best = best.max(z_grid.interp(&f, base + w, &mut clamps));
            }
            new_g[xi] = best;
        }
        g = new_g;
        value_at_zero[sweep + 1] = g[zero_idx];
    }
    // average per-step increment over the last half of the sweeps
    let half = horizon / 2;
    let steps = horizon - half;
    let value = (value_at_zero[horizon] - value_at_zero[half]) / steps as f64;
    Ok((value, clamps))
}

/// Worst-case per-step value of a fixed policy on the same grid: only the
/// adversary optimizes, the control comes from the policy.
pub fn fixed_policy_grid_value(
    system: &LqrSystem,
    policy: &dyn Policy,
    r_bound: f64,
    grid: GridSpec,
) -> Result<GridDpResult> {
    let (a, b, q, r_cost, q_f) = scalar_params(system)?;
    let horizon = system.horizon;
    if horizon < 2 {
        return Err(Error::Config(
            "grid DP needs a horizon of at least 2".into(),
        ));
    }
    let h = grid.spacing;
    let x_grid = Grid::new(grid.x_max, h);
    let mut clamps: u64 = 0;
    let mut g: Vec<f64> = vec![0.0; x_grid.len];
    let zero_idx = (x_grid.len - 1) / 2;
    let mut value_at_zero = vec![0.0f64; horizon + 1];
    let w_steps = (r_bound / h).floor() as i64;
    let mut w_values: Vec<f64> = (-w_steps..=w_steps).map(|i| i as f64 * h).collect();
    if (r_bound - w_steps as f64 * h).abs() > 1e-12 {
        w_values.push(r_bound);
        w_values.push(-r_bound);
    }
    for sweep in 0..horizon {
        let t = horizon - 1 - sweep;
        let c_next = if t + 1 == horizon { q_f } else { q };
        let mut new_g = vec![0.0; x_grid.len];
        for xi in 0..x_grid.len {
            let x = x_grid.x(xi);
            let mut worst = f64::NEG_INFINITY;
            for &w in &w_values {
                let observed = vec![vec![w]];
                let ctx = StepContext {
                    t: 0,
                    state: &[x],
                    observed: &observed,
                    remaining: 2,
                };
                let u = policy.act(&ctx)?[0];
                let y = a * x + b * u + w;
                let val = r_cost * u * u + c_next * y * y + x_grid.interp(&g, y, &mut clamps);
                worst = worst.max(val);
            }
            new_g[xi] = worst;
        }
        g = new_g;
        value_at_zero[sweep + 1] = g[zero_idx];
    }
    let half = horizon / 2;
    let steps = horizon - half;
    Ok(GridDpResult {
        per_step_value: (value_at_zero[horizon] - value_at_zero[half]) / steps as f64,
        clamp_count: clamps,
        refinement_delta: None,
    })
}

/// Stationary per-step cost of the offline optimum under a periodic scalar
/// disturbance pattern: (1/L) sum_t (2 w_t psi_t - P w_t^2 - H psi_t^2) with
/// psi_t = sum_i F^i P w_{t+i} evaluated by geometric summation.
pub fn stationary_offline_per_step(sol: &RiccatiSolution, pattern: &[f64]) -> Result<f64> {
    if sol.p.rows() != 1 {
        return Err(Error::Unsupported {
            what: "stationary per-step value on a non-scalar system",
        });
    }
    if pattern.is_empty() {
        return Err(Error::Config("disturbance pattern must be nonempty".into()));
    }
    let p = sol.p.get(0, 0);
    let f = sol.f.get(0, 0);
    let h = sol.h.get(0, 0);
    if f.abs() >= 1.0 {
        return Err(Error::UnstableClosedLoop { rho: f.abs() });
    }
    let len = pattern.len();
    let f_l = f.powi(len as i32);
    let geom = 1.0 / (1.0 - f_l);
    let mut total = 0.0;
    for t in 0..len {
        let mut psi = 0.0;
        for (r, f_r) in (0..len).scan(1.0, |acc, r| {
            let out = (r, *acc);
            *acc *= f;
            Some(out)
        }) {
            psi += f_r * pattern[(t + r) % len];
        }
        let psi = p * psi * geom;
        total += 2.0 * pattern[t] * psi - p * pattern[t] * pattern[t] - h * psi * psi;
    }
    Ok(total / len as f64)
}

/// Ratio of two evaluated mean costs with first-order error propagation.
pub fn performance_ratio(numerator: &EvalReport, denominator: &EvalReport) -> Result<(f64, f64)> {
    if denominator.mean_cost <= 0.0 || denominator.mean_cost.is_nan() {
        return Err(Error::NonPositiveDenominator {
            value: denominator.mean_cost,
        });
    }
    let ratio = numerator.mean_cost / denominator.mean_cost;
    let rel_n = if numerator.mean_cost != 0.0 {
        numerator.se_cost / numerator.mean_cost.abs()
    } else {
        0.0
    };
    let rel_d = denominator.se_cost / denominator.mean_cost;
    let se = ratio.abs() * (rel_n * rel_n + rel_d * rel_d).sqrt();
    Ok((ratio, se))
}
