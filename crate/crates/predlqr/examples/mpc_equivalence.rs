//! Receding-horizon MPC with terminal weight P and the closed-form
//! prediction policy are the same controller. The two implementations share
//! no code path, so running them against each other is a real cross-check.
//!
//! ```bash
//! cargo run --release -p predlqr --example mpc_equivalence
//! ```

use predlqr::matlin::Mat;
use predlqr::policy::{mpc_closed_form, mpc_receding};
use predlqr::riccati::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use predlqr::rng;
use predlqr::system::{rollout, LqrSystem};

fn main() {
    let mut max_gap = 0.0f64;
    let mut instances = 0;
    let mut seed = 0u64;
    while instances < 50 {
        seed += 1;
        let n = 1 + (rng::uniform(seed, 0, 0, 0) * 4.0) as usize;
        let d = 1 + (rng::uniform(seed, 0, 1, 0) * 2.0) as usize;
        let rand_mat = |stream: u64, rows: usize, cols: usize, scale: f64| {
            Mat::new(
                rows,
                cols,
                (0..rows * cols)
                    .map(|i| scale * (2.0 * rng::uniform(seed, stream, i as u64, 0) - 1.0))
                    .collect(),
            )
            .unwrap()
        };
        let a = rand_mat(1, n, n, 1.2);
        let b = rand_mat(2, n, d, 1.0);
        let gq = rand_mat(3, n, n, 1.0);
        let q = gq
            .transpose()
            .matmul(&gq)
            .unwrap()
            .add(&Mat::identity(n).scale(0.1))
            .unwrap();
        let gr = rand_mat(4, d, d, 1.0);
        let r = gr
            .transpose()
            .matmul(&gr)
            .unwrap()
            .add(&Mat::identity(d))
            .unwrap();
        let x0: Vec<f64> = (0..n)
            .map(|i| 2.0 * rng::uniform(seed, 5, i as u64, 0) - 1.0)
            .collect();
        let Ok(sys) = LqrSystem::new(a, b, q.clone(), r, q, x0, 12) else {
            continue;
        };
        let Ok(sol) = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER) else {
            continue;
        };
        let k = (rng::uniform(seed, 6, 0, 0) * 9.0) as usize;
        let closed = mpc_closed_form(&sol, k).unwrap();
        let receding = mpc_receding(&sys, &sol, k, None).unwrap();
        let path: Vec<Vec<f64>> = (0..sys.horizon)
            .map(|t| {
                (0..n)
                    .map(|i| rng::normal(seed, 7, (t * n + i) as u64))
                    .collect()
            })
            .collect();
        let ta = rollout(&sys, &closed, &path).unwrap();
        let tb = rollout(&sys, &receding, &path).unwrap();
        for t in 0..sys.horizon {
            for (ua, ub) in ta.controls[t].iter().zip(&tb.controls[t]) {
                max_gap = max_gap.max((ua - ub).abs());
            }
        }
        instances += 1;
    }
    println!("{instances} random instances (n <= 4, d <= 2, k <= 8), full rollouts");
    println!("max |u_closed - u_receding| = {max_gap:.3e}");
    assert!(max_gap <= 1e-8);
    println!("the two MPC implementations agree to 1e-8");
}
