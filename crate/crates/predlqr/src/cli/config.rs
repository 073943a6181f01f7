//! Experiment configuration: strict JSON (unknown keys rejected) mapping to
//! library objects, plus the two named presets.

use std::sync::Arc;

use serde::Deserialize;

use crate::disturbance::{
    Ar1Process, BoxAdversarial, DisturbanceProcess, IidZeroMean, SignCoupled, TrackingResidual,
};
use crate::error::{Error, Result};
use crate::matlin::Mat;
use crate::policy::{self, Policy};
use crate::riccati::RiccatiSolution;
use crate::system::{LqrSystem, TrackingProblem};

pub const GOLDEN_P: f64 = 1.618033988749895;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub process: Option<ProcessSpec>,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub k_values: Option<Vec<usize>>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub q_f: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub horizon: Option<usize>,
}

impl SystemSpec {
    /// Builds the LQR instance; `horizon_override` (from the top-level config
    /// or CLI flag) wins over the spec's own horizon.
    pub fn build(&self, horizon_override: Option<usize>) -> Result<LqrSystem> {
        let horizon = horizon_override.or(self.horizon);
        if let Some(name) = &self.preset {
            if self.a.is_some() || self.b.is_some() || self.q.is_some() {
                return Err(Error::Config(
                    "system spec must use either a preset or explicit matrices, not both".into(),
                ));
            }
            return match name.as_str() {
                "golden_scalar" => golden_scalar_system(horizon.unwrap_or(100)),
                "double_integrator_tracking" => {
                    Ok(double_integrator_tracking(horizon.unwrap_or(200))?.0)
                }
                other => Err(Error::Config(format!("unknown system preset '{other}'"))),
            };
        }
        let mat = |field: &Option<Vec<Vec<f64>>>, name: &str| -> Result<Mat> {
            field
                .as_ref()
                .ok_or_else(|| Error::Config(format!("system spec missing '{name}'")))
                .and_then(|rows| Mat::from_rows(rows))
        };
        let a = mat(&self.a, "a")?;
        let b = mat(&self.b, "b")?;
        let q = mat(&self.q, "q")?;
        let r = mat(&self.r, "r")?;
        let q_f = match &self.q_f {
            Some(rows) => Mat::from_rows(rows)?,
            None => q.clone(),
        };
        let x0 = self.x0.clone().unwrap_or_else(|| vec![0.0; a.rows()]);
        // invalid user-supplied matrices are config errors, not numerical ones
        LqrSystem::new(
            a,
            b,
            q,
            r,
            q_f,
            x0,
            horizon.ok_or_else(|| Error::Config("system spec missing 'horizon'".into()))?,
        )
        .map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("system spec: {other}")),
        })
    }

    pub fn is_preset(&self, name: &str) -> bool {
        self.preset.as_deref() == Some(name)
    }
}

/// The scalar instance whose Riccati solution is built from golden-ratio
/// constants; terminal weight pinned to P so finite-horizon and stationary
/// quantities coincide.
pub fn golden_scalar_system(horizon: usize) -> Result<LqrSystem> {
    let one = Mat::identity(1);
    LqrSystem::new(
        one.clone(),
        one.clone(),
        one.clone(),
        one,
        Mat::from_rows(&[vec![GOLDEN_P]])?,
        vec![0.0],
        horizon,
    )
}

/// Reference trajectory of the tracking demo: a figure-eight
/// d_t = [8 sin(t/3) cos(t/3); 8 sin(t/3)], embedded in the 4-state
/// double-integrator coordinates (positions tracked, velocities free).
pub fn tracking_reference(horizon: usize) -> Vec<Vec<f64>> {
    (0..=horizon)
        .map(|t| {
            let s = t as f64 / 3.0;
            vec![8.0 * s.sin() * s.cos(), 8.0 * s.sin(), 0.0, 0.0]
        })
        .collect()
}

/// Double-integrator tracking preset: returns the demo LQR system, the
/// tracking problem, and its reduction. The initial state starts on the
/// reference with zero velocity, so the reduction offset is zero.
///
/// The demo system's terminal weight is the Riccati solution P of the
/// reduced problem rather than the reduction's Q: the k-prediction policies
/// plan with terminal P, and aligning the objective removes an O(1)
/// horizon-boundary regret floor that would otherwise mask the prediction
/// signal the sweep is after.
pub fn double_integrator_tracking(
    horizon: usize,
) -> Result<(LqrSystem, TrackingProblem, crate::system::TrackingReduction)> {
    let a = Mat::from_rows(&[
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])?;
    let b = Mat::from_rows(&[
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
    ])?;
    let q = Mat::diag(&[1.0, 1.0, 0.0, 0.0])?;
    let r = Mat::identity(2);
    let desired = tracking_reference(horizon);
    let x0 = desired[0].clone();
    let problem = TrackingProblem {
        a,
        b,
        q,
        r,
        desired,
        x0,
    };
    let reduction = crate::system::reduce_tracking(&problem)?;
    let sol = crate::riccati::solve_dare(
        &reduction.system,
        crate::riccati::DEFAULT_TOL,
        crate::riccati::DEFAULT_MAX_ITER,
    )?;
    let system = LqrSystem::new(
        reduction.system.a.clone(),
        reduction.system.b.clone(),
        reduction.system.q.clone(),
        reduction.system.r.clone(),
        sol.p.clone(),
        reduction.system.x0.clone(),
        reduction.system.horizon,
    )?;
    Ok((system, problem, reduction))
}

/// Noise of the tracking demo: independent U[-1, 1] on every coordinate.
pub fn tracking_noise() -> Result<IidZeroMean> {
    IidZeroMean::uniform_box(vec![1.0, 1.0, 1.0, 1.0])
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub kind: String,
    #[serde(default)]
    pub covariance: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub scale: Option<Vec<f64>>,
    #[serde(default)]
    pub half_width: Option<Vec<f64>>,
    #[serde(default)]
    pub phi: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub w0: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: Option<Box<ProcessSpec>>,
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
}

impl ProcessSpec {
    fn iid(&self) -> Result<IidZeroMean> {
        match self.kind.as_str() {
            "iid_gaussian" => {
                let cov = self
                    .covariance
                    .as_ref()
                    .ok_or_else(|| Error::Config("iid_gaussian needs 'covariance'".into()))?;
                IidZeroMean::gaussian(Mat::from_rows(cov)?)
            }
            "iid_rademacher" => {
                let scale = self
                    .scale
                    .clone()
                    .ok_or_else(|| Error::Config("iid_rademacher needs 'scale'".into()))?;
                IidZeroMean::rademacher(scale)
            }
            "iid_uniform" => {
                let hw = self
                    .half_width
                    .clone()
                    .ok_or_else(|| Error::Config("iid_uniform needs 'half_width'".into()))?;
                IidZeroMean::uniform_box(hw)
            }
            other => Err(Error::Config(format!("'{other}' is not an i.i.d. kind"))),
        }
    }

    pub fn build(
        &self,
        tracking: Option<(&Mat, &[Vec<f64>])>,
    ) -> Result<Arc<dyn DisturbanceProcess>> {
        Ok(match self.kind.as_str() {
            "iid_gaussian" | "iid_rademacher" | "iid_uniform" => Arc::new(self.iid()?),
            "ar1" => {
                let phi = Mat::from_rows(
                    self.phi
                        .as_ref()
                        .ok_or_else(|| Error::Config("ar1 needs 'phi'".into()))?,
                )?;
                let w0 = self
                    .w0
                    .clone()
                    .ok_or_else(|| Error::Config("ar1 needs 'w0'".into()))?;
                let noise = self
                    .noise
                    .as_ref()
                    .ok_or_else(|| Error::Config("ar1 needs 'noise'".into()))?
                    .iid()?;
                Arc::new(Ar1Process::new(phi, w0, noise)?)
            }
            "sign_coupled" => {
                let w = self
                    .w
                    .clone()
                    .ok_or_else(|| Error::Config("sign_coupled needs 'w'".into()))?;
                Arc::new(SignCoupled::new(w)?)
            }
            "tracking_residual" => {
                let (a, desired) = tracking.ok_or_else(|| {
                    Error::Config("tracking_residual is only valid with a tracking preset".into())
                })?;
                let noise = self
                    .noise
                    .as_ref()
                    .ok_or_else(|| Error::Config("tracking_residual needs 'noise'".into()))?
                    .iid()?;
                Arc::new(TrackingResidual::new(a.clone(), desired.to_vec(), noise)?)
            }
            "box_adversarial" => {
                let r = self
                    .r
                    .ok_or_else(|| Error::Config("box_adversarial needs 'r'".into()))?;
                let dim = self
                    .dim
                    .ok_or_else(|| Error::Config("box_adversarial needs 'dim'".into()))?;
                Arc::new(BoxAdversarial::new(r, dim)?)
            }
            other => return Err(Error::Config(format!("unknown process kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub policy: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub terminal: Option<String>,
}

impl PolicySpec {
    pub fn mpc_default() -> PolicySpec {
        PolicySpec {
            policy: "mpc".into(),
            k: None,
            terminal: None,
        }
    }

    /// Instantiates the policy for a concrete k (overriding the spec's own).
    pub fn build(
        &self,
        system: &LqrSystem,
        sol: &RiccatiSolution,
        process: Option<&Arc<dyn DisturbanceProcess>>,
        k: usize,
    ) -> Result<Box<dyn Policy>> {
        Ok(match self.policy.as_str() {
            "classic" => Box::new(policy::classic_lqr(sol)),
            "mpc" => Box::new(policy::mpc_closed_form(sol, k)?),
            "mpc_receding" => {
                let terminal = match self.terminal.as_deref() {
                    None | Some("riccati") => None,
                    Some("zero") => Some(Mat::zeros(system.state_dim(), system.state_dim())),
                    Some("qf") => Some(system.q_f.clone()),
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "unknown terminal weight '{other}' (riccati|zero|qf)"
                        )))
                    }
                };
                Box::new(policy::mpc_receding(system, sol, k, terminal)?)
            }
            "optimal_stochastic" => {
                let process = process.ok_or_else(|| {
                    Error::Config("optimal_stochastic needs a process spec".into())
                })?;
                Box::new(policy::optimal_stochastic(sol, process.clone(), k)?)
            }
            "example2" => Box::new(policy::example2_policy()),
            "offline" => {
                // the offline policy is built per path by the evaluator
                return Err(Error::Config(
                    "the offline policy is path-dependent; sweeps handle it directly".into(),
                ));
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown policy '{other}' \
                     (classic|mpc|mpc_receding|optimal_stochastic|offline|example2)"
                )))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_presets_and_rejects_unknown_keys() {
        let cfg = ExperimentConfig::parse(r#"{"system": {"preset": "golden_scalar"}, "seed": 7}"#)
            .unwrap();
        assert_eq!(cfg.seed, Some(7));
        let sys = cfg.system.build(Some(10)).unwrap();
        assert_eq!(sys.horizon, 10);
        assert!(
            ExperimentConfig::parse(r#"{"system": {"preset": "golden_scalar"}, "seeed": 7}"#)
                .is_err()
        );
        assert!(
            ExperimentConfig::parse(r#"{"system": {"preset": "golden_scalar", "bogus": 1}}"#)
                .is_err()
        );
    }

    #[test]
    fn explicit_system_roundtrip() {
        let cfg = ExperimentConfig::parse(
            r#"{"system": {"a": [[1.0]], "b": [[1.0]], "q": [[1.0]], "r": [[1.0]], "horizon": 5}}"#,
        )
        .unwrap();
        let sys = cfg.system.build(None).unwrap();
        assert_eq!(sys.horizon, 5);
        assert_eq!(sys.q_f.get(0, 0), 1.0); // defaults to Q
    }

    #[test]
    fn tracking_preset_shapes() {
        let (sys, problem, reduction) = double_integrator_tracking(200).unwrap();
        assert_eq!(sys.state_dim(), 4);
        assert_eq!(sys.control_dim(), 2);
        assert_eq!(sys.horizon, 200);
        assert_eq!(problem.desired.len(), 201);
        assert_eq!(reduction.initial_offset, 0.0);
        // x0 starts on the reference
        for v in &sys.x0 {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn tracking_residual_first_step_by_substitution() {
        // at t = 0 the reference starts at the origin, so the deterministic
        // part of w_0 is A d_0 - d_1 = -d_1
        let (_, problem, reduction) = double_integrator_tracking(10).unwrap();
        let w = reduction.transform_noise(&[vec![0.0; 4]]).unwrap();
        let s = 1.0f64 / 3.0;
        let expect = [-8.0 * s.sin() * s.cos(), -8.0 * s.sin(), 0.0, 0.0];
        for (got, want) in w[0].iter().zip(expect) {
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
        // the process contract exposes the same value as the prior mean
        let process = crate::disturbance::TrackingResidual::new(
            problem.a.clone(),
            problem.desired.clone(),
            tracking_noise().unwrap(),
        )
        .unwrap();
        use crate::disturbance::DisturbanceProcess;
        let mu = process.conditional_mean(0, &[]).unwrap();
        for (got, want) in mu.iter().zip(expect) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn process_spec_validation() {
        let spec: ProcessSpec =
            serde_json::from_str(r#"{"kind": "iid_rademacher", "scale": [1.0]}"#).unwrap();
        let p = spec.build(None).unwrap();
        assert_eq!(p.dim(), 1);
        let bad: ProcessSpec = serde_json::from_str(r#"{"kind": "iid_gaussian"}"#).unwrap();
        assert!(bad.build(None).is_err());
        assert!(serde_json::from_str::<ProcessSpec>(
            r#"{"kind": "iid_gaussian", "covarianc": [[1.0]]}"#
        )
        .is_err());
    }
}
