//! Dynamic regret of the k-prediction policy against the per-path offline
//! optimum, swept over k: the decay is geometric with ratio F^2, and
//! O(log T) predictions already pin the regret to a T-independent constant.
//!
//! ```bash
//! cargo run --release -p predlqr --example regret_decay
//! ```

use predlqr::disturbance::IidZeroMean;
use predlqr::evaluate::dynamic_regret_stochastic;
use predlqr::matlin::Mat;
use predlqr::policy::mpc_closed_form;
use predlqr::riccati::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use predlqr::system::LqrSystem;

fn main() {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let one = Mat::identity(1);
    let sys = LqrSystem::new(
        one.clone(),
        one.clone(),
        one.clone(),
        one,
        Mat::from_rows(&[vec![phi]]).unwrap(),
        vec![0.0],
        1_000,
    )
    .unwrap();
    let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let process = IidZeroMean::gaussian(Mat::identity(1)).unwrap();
    let f2 = sol.f.get(0, 0) * sol.f.get(0, 0);

    println!("golden scalar, T = {}, 800 trials per k", sys.horizon);
    println!(
        "{:>3} {:>14} {:>10} {:>8}",
        "k", "mean regret", "se", "ratio"
    );
    let mut prev: Option<f64> = None;
    for k in 0..=6usize {
        let policy = mpc_closed_form(&sol, k).unwrap();
        let report = dynamic_regret_stochastic(&sys, &policy, &process, 800, 5).unwrap();
        let regret = report.mean_regret.unwrap();
        let ratio = prev
            .map(|p| format!("{:.4}", regret / p))
            .unwrap_or_default();
        println!(
            "{k:>3} {regret:>14.6} {:>10.4} {ratio:>8}",
            report.se_regret.unwrap()
        );
        prev = Some(regret);
    }
    println!("expected ratio F^2 = {f2:.4}");

    println!("\nconstant regret with k = ceil(log T / (2 log(1/lambda))):");
    for horizon in [50usize, 100, 200, 400] {
        let k = ((horizon as f64).ln() / (2.0 * (1.0 / sol.lambda).ln())).ceil() as usize;
        let sys_t = sys.with_horizon(horizon);
        let policy = mpc_closed_form(&sol, k).unwrap();
        let report = dynamic_regret_stochastic(&sys_t, &policy, &process, 800, 5).unwrap();
        println!(
            "  T={horizon:>3} k={k}: regret = {:.3e}",
            report.mean_regret.unwrap()
        );
    }
}
