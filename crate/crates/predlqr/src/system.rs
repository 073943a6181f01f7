//! LQR problem instances, trajectory rollout, quadratic cost, and the
//! reduction from quadratic tracking to LQR with shifted disturbances.

use crate::error::{Error, Result};
use crate::matlin::{self, Mat};
use crate::policy::{Policy, StepContext};

/// The tuple (A, B, Q, R, Q_f, x0) plus the horizon T. Stage cost is
/// x_t^T Q x_t + u_t^T R u_t for t = 0..T-1 with terminal x_T^T Q_f x_T.
#[derive(Debug, Clone)]
pub struct LqrSystem {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
    pub q_f: Mat,
    pub x0: Vec<f64>,
    pub horizon: usize,
}

fn check_symmetric_psd(m: &Mat, name: &'static str) -> Result<()> {
    let dev = m.symmetry_deviation();
    if dev > 1e-10 * (1.0 + m.max_abs()) {
        return Err(Error::NotSymmetric {
            op: name,
            max_asymmetry: dev,
        });
    }
    // PSD up to tolerance: a shifted Cholesky must go through.
    let shift = 1e-10 * (1.0 + m.max_abs());
    let shifted = m.add(&Mat::identity(m.rows()).scale(shift))?;
    shifted
        .symmetrize()
        .cholesky()
        .map(|_| ())
        .map_err(|_| Error::Config(format!("{name} must be positive semidefinite")))
}

impl LqrSystem {
    pub fn new(
        a: Mat,
        b: Mat,
        q: Mat,
        r: Mat,
        q_f: Mat,
        x0: Vec<f64>,
        horizon: usize,
    ) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let d = b.cols();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                op: "system B",
                left: (n, n),
                right: (b.rows(), b.cols()),
            });
        }
        for (m, name) in [(&q, "Q"), (&q_f, "Q_f")] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch {
                    op: "system state cost",
                    left: (n, n),
                    right: (m.rows(), m.cols()),
                });
            }
            check_symmetric_psd(m, name)?;
        }
        if r.rows() != d || r.cols() != d {
            return Err(Error::DimensionMismatch {
                op: "system R",
                left: (d, d),
                right: (r.rows(), r.cols()),
            });
        }
        let r_dev = r.symmetry_deviation();
        if r_dev > 1e-10 * (1.0 + r.max_abs()) {
            return Err(Error::NotSymmetric {
                op: "R",
                max_asymmetry: r_dev,
            });
        }
        r.symmetrize().cholesky()?; // R must be strictly positive definite
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                op: "system x0",
                left: (n, 1),
                right: (x0.len(), 1),
            });
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(LqrSystem {
            a,
            b,
            q,
            r,
            q_f,
            x0,
            horizon,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.cols()
    }

    /// Same system at a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> LqrSystem {
        let mut s = self.clone();
        s.horizon = horizon.max(1);
        s
    }

    /// Same system with a different initial state (dimension must match).
    pub fn with_x0(&self, x0: Vec<f64>) -> Result<LqrSystem> {
        if x0.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                op: "with_x0",
                left: (self.state_dim(), 1),
                right: (x0.len(), 1),
            });
        }
        let mut s = self.clone();
        s.x0 = x0;
        Ok(s)
    }
}

/// A realized rollout: T+1 states, T controls, the disturbances that drove
/// them, and per-step stage costs (T stage terms plus the terminal term).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    pub stage_costs: Vec<f64>,
}

impl Trajectory {
    pub fn total_cost(&self) -> f64 {
        self.stage_costs.iter().sum()
    }

    /// CSV export: header `t,x_0..,u_0..,w_0..,stage_cost`, one row per step,
    /// terminal row with empty control/disturbance fields.
    pub fn to_csv(&self) -> String {
        let n = self.states[0].len();
        let d = if self.controls.is_empty() {
            0
        } else {
            self.controls[0].len()
        };
        let mut out = String::from("t");
        for i in 0..n {
            out.push_str(&format!(",x_{i}"));
        }
        for i in 0..d {
            out.push_str(&format!(",u_{i}"));
        }
        for i in 0..n {
            out.push_str(&format!(",w_{i}"));
        }
        out.push_str(",stage_cost\n");
        let horizon = self.controls.len();
        for t in 0..=horizon {
            out.push_str(&t.to_string());
            for x in &self.states[t] {
                out.push_str(&format!(",{x}"));
            }
            if t < horizon {
                for u in &self.controls[t] {
                    out.push_str(&format!(",{u}"));
                }
                for w in &self.disturbances[t] {
                    out.push_str(&format!(",{w}"));
                }
            } else {
                for _ in 0..(d + n) {
                    out.push(',');
                }
            }
            out.push_str(&format!(",{}\n", self.stage_costs[t]));
        }
        out
    }
}

/// Rolls the policy out against a fixed disturbance path of length T.
///
/// At step t the policy sees the observed prefix w_0..w_{t+m-1} where
/// m = min(k, T - t): the prediction window is truncated at w_{T-1} near the
/// end of the horizon and the policy is told the effective remaining horizon.
pub fn rollout(
    system: &LqrSystem,
    policy: &dyn Policy,
    disturbance_path: &[Vec<f64>],
) -> Result<Trajectory> {
    let horizon = system.horizon;
    let n = system.state_dim();
    let d = system.control_dim();
    if disturbance_path.len() != horizon {
        return Err(Error::PathLength {
            expected: horizon,
            got: disturbance_path.len(),
        });
    }
    for w in disturbance_path {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                op: "disturbance entry",
                left: (n, 1),
                right: (w.len(), 1),
            });
        }
    }
    let k = policy.prediction_demand();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    let mut stage_costs = Vec::with_capacity(horizon + 1);
    let mut x = system.x0.clone();
    states.push(x.clone());
    for (t, w) in disturbance_path.iter().enumerate() {
        let remaining = horizon - t;
        let m = k.min(remaining);
        let ctx = StepContext {
            t,
            state: &x,
            observed: &disturbance_path[..t + m],
            remaining,
        };
        let u = policy.act(&ctx)?;
        if u.len() != d {
            return Err(Error::DimensionMismatch {
                op: "policy output",
                left: (d, 1),
                right: (u.len(), 1),
            });
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteControl { step: t });
        }
        stage_costs.push(matlin::quad_form(&system.q, &x)? + matlin::quad_form(&system.r, &u)?);
        let mut next = system.a.matvec(&x)?;
        let bu = system.b.matvec(&u)?;
        matlin::add_scaled(&mut next, &bu, 1.0);
        matlin::add_scaled(&mut next, w, 1.0);
        controls.push(u);
        states.push(next.clone());
        x = next;
    }
    stage_costs.push(matlin::quad_form(&system.q_f, &x)?);
    Ok(Trajectory {
        states,
        controls,
        disturbances: disturbance_path.to_vec(),
        stage_costs,
    })
}

/// Quadratic cost of a trajectory under the system's weights.
pub fn cost(system: &LqrSystem, trajectory: &Trajectory) -> Result<f64> {
    let horizon = trajectory.controls.len();
    let mut total = 0.0;
    for t in 0..horizon {
        total += matlin::quad_form(&system.q, &trajectory.states[t])?;
        total += matlin::quad_form(&system.r, &trajectory.controls[t])?;
    }
    total += matlin::quad_form(&system.q_f, &trajectory.states[horizon])?;
    Ok(total)
}

/// A quadratic tracking problem: follow `desired` (T+1 reference states)
/// under the usual linear dynamics, paying
/// sum_t (x_{t+1} - d_{t+1})^T Q (x_{t+1} - d_{t+1}) + u_t^T R u_t.
#[derive(Debug, Clone)]
pub struct TrackingProblem {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
    pub desired: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
}

impl TrackingProblem {
    /// Tracking objective of a trajectory expressed in original coordinates.
    pub fn tracking_cost(&self, trajectory: &Trajectory) -> Result<f64> {
        let horizon = trajectory.controls.len();
        let mut total = 0.0;
        for t in 0..horizon {
            let err: Vec<f64> = trajectory.states[t + 1]
                .iter()
                .zip(&self.desired[t + 1])
                .map(|(x, d)| x - d)
                .collect();
            total += matlin::quad_form(&self.q, &err)?;
            total += matlin::quad_form(&self.r, &trajectory.controls[t])?;
        }
        Ok(total)
    }
}

/// Result of the tracking-to-LQR reduction: an LQR instance in error
/// coordinates plus the transformer for raw noise paths.
///
/// The reduced system uses stage cost Q and terminal Q_f = Q, which charges
/// the reduced initial state once more than the tracking objective does; the
/// constant gap is `initial_offset` and cancels out of every regret
/// comparison. When the initial state starts on the reference the offset is
/// zero and costs agree exactly.
#[derive(Debug, Clone)]
pub struct TrackingReduction {
    pub system: LqrSystem,
    pub desired: Vec<Vec<f64>>,
    pub initial_offset: f64,
}

impl TrackingReduction {
    /// Maps a raw noise path to reduced disturbances w_t = w~_t + A d_t - d_{t+1}.
    pub fn transform_noise(&self, raw: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if raw.len() + 1 > self.desired.len() {
            return Err(Error::PathLength {
                expected: self.desired.len() - 1,
                got: raw.len(),
            });
        }
        let mut out = Vec::with_capacity(raw.len());
        for (t, w_raw) in raw.iter().enumerate() {
            let mut w = self.system.a.matvec(&self.desired[t])?;
            matlin::add_scaled(&mut w, &self.desired[t + 1], -1.0);
            matlin::add_scaled(&mut w, w_raw, 1.0);
            out.push(w);
        }
        Ok(out)
    }

    /// Tracking objective corresponding to a reduced-problem cost.
    pub fn reduced_to_tracking_cost(&self, reduced_cost: f64) -> f64 {
        reduced_cost - self.initial_offset
    }

    /// Rebuilds the original-coordinate trajectory x_t = x~_t + d_t from a
    /// reduced rollout, restoring the raw disturbances as well.
    pub fn to_original_coordinates(&self, reduced: &Trajectory) -> Result<Trajectory> {
        let horizon = reduced.controls.len();
        let mut states = Vec::with_capacity(horizon + 1);
        for (t, x) in reduced.states.iter().enumerate() {
            let mut orig = x.clone();
            matlin::add_scaled(&mut orig, &self.desired[t], 1.0);
            states.push(orig);
        }
        let mut disturbances = Vec::with_capacity(horizon);
        for (t, w) in reduced.disturbances.iter().enumerate() {
            // invert w = w~ + A d_t - d_{t+1}
            let mut raw = w.clone();
            let ad = self.system.a.matvec(&self.desired[t])?;
            matlin::add_scaled(&mut raw, &ad, -1.0);
            matlin::add_scaled(&mut raw, &self.desired[t + 1], 1.0);
            disturbances.push(raw);
        }
        Ok(Trajectory {
            states,
            controls: reduced.controls.clone(),
            disturbances,
            stage_costs: reduced.stage_costs.clone(),
        })
    }
}

/// Reduces a tracking problem to LQR in error coordinates x~_t = x_t - d_t
/// with disturbances w_t = w~_t + A d_t - d_{t+1}.
pub fn reduce_tracking(problem: &TrackingProblem) -> Result<TrackingReduction> {
    let n = problem.a.rows();
    if problem.desired.len() < 2 {
        return Err(Error::Config(
            "tracking problem needs at least 2 reference states".into(),
        ));
    }
    for d in &problem.desired {
        if d.len() != n {
            return Err(Error::DimensionMismatch {
                op: "tracking reference",
                left: (n, 1),
                right: (d.len(), 1),
            });
        }
    }
    if problem.x0.len() != n {
        return Err(Error::DimensionMismatch {
            op: "tracking x0",
            left: (n, 1),
            right: (problem.x0.len(), 1),
        });
    }
    let horizon = problem.desired.len() - 1;
    let x0_reduced: Vec<f64> = problem
        .x0
        .iter()
        .zip(&problem.desired[0])
        .map(|(x, d)| x - d)
        .collect();
    let initial_offset = matlin::quad_form(&problem.q, &x0_reduced)?;
    let system = LqrSystem::new(
        problem.a.clone(),
        problem.b.clone(),
        problem.q.clone(),
        problem.r.clone(),
        problem.q.clone(),
        x0_reduced,
        horizon,
    )?;
    Ok(TrackingReduction {
        system,
        desired: problem.desired.clone(),
        initial_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::classic_lqr;
    use crate::riccati::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::rng;

    const PHI: f64 = 1.618033988749895;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn golden_scalar(horizon: usize, x0: f64) -> LqrSystem {
        let one = Mat::identity(1);
        LqrSystem::new(
            one.clone(),
            one.clone(),
            one.clone(),
            one.clone(),
            Mat::from_rows(&[vec![PHI]]).unwrap(),
            vec![x0],
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn zero_everything_rolls_out_to_zero_cost() {
        let sys = golden_scalar(6, 0.0);
        let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let policy = classic_lqr(&sol);
        let path = vec![vec![0.0]; 6];
        let traj = rollout(&sys, &policy, &path).unwrap();
        assert_eq!(traj.total_cost(), 0.0);
        assert_eq!(cost(&sys, &traj).unwrap(), 0.0);
    }

    #[test]
    fn golden_one_step_hand_expansion() {
        // T=1, x0=1, w=0 under u = -Kx: cost equals x0^T P x0.
        let sys = golden_scalar(1, 1.0);
        let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let policy = classic_lqr(&sol);
        let traj = rollout(&sys, &policy, &[vec![0.0]]).unwrap();
        assert_close(traj.states[1][0], 0.3819660112501051, 1e-9);
        assert_close(traj.total_cost(), PHI, 1e-9);
        assert_close(cost(&sys, &traj).unwrap(), PHI, 1e-9);
    }

    #[test]
    fn rollout_matches_independent_resimulation() {
        let sys = crate::riccati::tests::random_system(3);
        let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let policy = classic_lqr(&sol);
        let path: Vec<Vec<f64>> = (0..sys.horizon)
            .map(|t| {
                (0..sys.state_dim())
                    .map(|i| 2.0 * rng::uniform(5, t as u64, i as u64, 0) - 1.0)
                    .collect()
            })
            .collect();
        let traj = rollout(&sys, &policy, &path).unwrap();
        // Re-simulate by hand and check states and summed cost.
        let mut x = sys.x0.clone();
        let mut total = 0.0;
        for t in 0..sys.horizon {
            let u = &traj.controls[t];
            total += matlin::quad_form(&sys.q, &x).unwrap();
            total += matlin::quad_form(&sys.r, u).unwrap();
            let mut next = sys.a.matvec(&x).unwrap();
            matlin::add_scaled(&mut next, &sys.b.matvec(u).unwrap(), 1.0);
            matlin::add_scaled(&mut next, &path[t], 1.0);
            for (a, b) in next.iter().zip(&traj.states[t + 1]) {
                assert!((a - b).abs() <= 1e-10);
            }
            x = next;
        }
        total += matlin::quad_form(&sys.q_f, &x).unwrap();
        assert_close(
            cost(&sys, &traj).unwrap(),
            total,
            1e-10 * total.abs().max(1.0),
        );
        assert_close(traj.total_cost(), total, 1e-8 * total.abs().max(1.0));
    }

    #[test]
    fn rollout_is_deterministic() {
        let sys = golden_scalar(5, 0.3);
        let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let policy = classic_lqr(&sol);
        let path = vec![vec![0.5], vec![-0.2], vec![0.1], vec![0.9], vec![-0.7]];
        let a = rollout(&sys, &policy, &path).unwrap();
        let b = rollout(&sys, &policy, &path).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.controls, b.controls);
        assert_eq!(a.stage_costs, b.stage_costs);
    }

    #[test]
    fn rollout_rejects_non_finite_policy() {
        struct BrokenPolicy;
        impl crate::policy::Policy for BrokenPolicy {
            fn name(&self) -> String {
                "broken".into()
            }
            fn prediction_demand(&self) -> usize {
                0
            }
            fn act(&self, _ctx: &StepContext) -> crate::error::Result<Vec<f64>> {
                Ok(vec![f64::NAN])
            }
        }
        let sys = golden_scalar(3, 0.0);
        match rollout(&sys, &BrokenPolicy, &vec![vec![1.0]; 3]) {
            Err(Error::NonFiniteControl { step }) => assert_eq!(step, 0),
            other => panic!("expected non-finite control error, got {other:?}"),
        }
    }

    #[test]
    fn tracking_reduction_constant_reference_identity_dynamics() {
        // A = I, constant d, zero noise: reduced disturbances vanish.
        let problem = TrackingProblem {
            a: Mat::identity(2),
            b: Mat::identity(2),
            q: Mat::identity(2),
            r: Mat::identity(2),
            desired: vec![vec![1.0, 2.0]; 5],
            x0: vec![1.0, 2.0],
        };
        let red = reduce_tracking(&problem).unwrap();
        let w = red.transform_noise(&vec![vec![0.0, 0.0]; 4]).unwrap();
        for wt in &w {
            assert!(wt.iter().all(|x| x.abs() <= 1e-12));
        }
        assert_eq!(red.initial_offset, 0.0);
    }

    #[test]
    fn tracking_reduction_cost_preserving() {
        // Random tracking instance, arbitrary control sequence: the tracking
        // objective equals the reduced-problem cost minus the initial offset.
        for seed in 0..6u64 {
            let n = 2;
            let a = Mat::new(
                n,
                n,
                (0..n * n)
                    .map(|i| 2.0 * rng::uniform(seed, 20, i as u64, 0) - 1.0)
                    .collect(),
            )
            .unwrap();
            let problem = TrackingProblem {
                a: a.clone(),
                b: Mat::identity(n),
                q: Mat::identity(n),
                r: Mat::identity(n).scale(0.5),
                desired: (0..6)
                    .map(|t| (0..n).map(|i| (t as f64 * 0.3 + i as f64).sin()).collect())
                    .collect(),
                x0: (0..n)
                    .map(|i| 2.0 * rng::uniform(seed, 21, i as u64, 0) - 1.0)
                    .collect(),
            };
            let red = reduce_tracking(&problem).unwrap();
            let horizon = red.system.horizon;
            let raw_noise: Vec<Vec<f64>> = (0..horizon)
                .map(|t| {
                    (0..n)
                        .map(|i| 2.0 * rng::uniform(seed, 22, (t * n + i) as u64, 0) - 1.0)
                        .collect()
                })
                .collect();
            let controls: Vec<Vec<f64>> = (0..horizon)
                .map(|t| {
                    (0..n)
                        .map(|i| 2.0 * rng::uniform(seed, 23, (t * n + i) as u64, 0) - 1.0)
                        .collect()
                })
                .collect();
            // Roll the original system with raw noise.
            let mut x = problem.x0.clone();
            let mut orig_states = vec![x.clone()];
            for t in 0..horizon {
                let mut next = problem.a.matvec(&x).unwrap();
                matlin::add_scaled(&mut next, &problem.b.matvec(&controls[t]).unwrap(), 1.0);
                matlin::add_scaled(&mut next, &raw_noise[t], 1.0);
                orig_states.push(next.clone());
                x = next;
            }
            let orig_traj = Trajectory {
                states: orig_states.clone(),
                controls: controls.clone(),
                disturbances: raw_noise.clone(),
                stage_costs: vec![0.0; horizon + 1],
            };
            let tracking_j = problem.tracking_cost(&orig_traj).unwrap();
            // Roll the reduced system with transformed noise and same controls.
            let w = red.transform_noise(&raw_noise).unwrap();
            let mut xr = red.system.x0.clone();
            let mut reduced_states = vec![xr.clone()];
            for t in 0..horizon {
                let mut next = red.system.a.matvec(&xr).unwrap();
                matlin::add_scaled(&mut next, &red.system.b.matvec(&controls[t]).unwrap(), 1.0);
                matlin::add_scaled(&mut next, &w[t], 1.0);
                reduced_states.push(next.clone());
                xr = next;
            }
            let reduced_traj = Trajectory {
                states: reduced_states,
                controls,
                disturbances: w,
                stage_costs: vec![0.0; horizon + 1],
            };
            let reduced_j = cost(&red.system, &reduced_traj).unwrap();
            let back = red.reduced_to_tracking_cost(reduced_j);
            assert_close(back, tracking_j, 1e-8 * tracking_j.abs().max(1.0));
            // Error coordinates line up with original minus reference.
            for t in 0..=horizon {
                for i in 0..n {
                    assert!(
                        (reduced_traj.states[t][i]
                            - (orig_traj.states[t][i] - problem.desired[t][i]))
                            .abs()
                            <= 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn csv_export_shape() {
        let sys = golden_scalar(2, 1.0);
        let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let policy = classic_lqr(&sol);
        let traj = rollout(&sys, &policy, &[vec![0.5], vec![-0.5]]).unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4); // header + 2 steps + terminal
        assert_eq!(lines[0], "t,x_0,u_0,w_0,stage_cost");
        // terminal row has empty u/w fields
        assert!(lines[3].starts_with("2,"));
        let fields: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[2], "");
        assert_eq!(fields[3], "");
    }
}
