//! How much is each extra prediction worth? Closed-form per-step optimal
//! costs STO_k against Monte Carlo simulation of the k-prediction policy.
//!
//! ```bash
//! cargo run --release -p predlqr --example prediction_value
//! ```

use predlqr::disturbance::IidZeroMean;
use predlqr::evaluate::{monte_carlo_cost, sto_k_closed_form};
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
        Mat::from_rows(&[vec![phi]]).unwrap(), // terminal = P
        vec![0.0],
        5_000,
    )
    .unwrap();
    let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let process = IidZeroMean::gaussian(Mat::identity(1)).unwrap();
    let w = Mat::identity(1);

    let sto_inf = sto_k_closed_form(&sol, &w, None).unwrap();
    println!("golden scalar, unit-variance i.i.d. disturbances");
    println!("STO_inf = {sto_inf:.6} (= 1/sqrt(5))");
    println!(
        "{:>3} {:>12} {:>12} {:>12}",
        "k", "STO_k", "sim cost/T", "STO_k-STO_inf"
    );
    for k in 0..=8usize {
        let sto = sto_k_closed_form(&sol, &w, Some(k)).unwrap();
        let policy = mpc_closed_form(&sol, k).unwrap();
        let report = monte_carlo_cost(&sys, &policy, &process, 50, 11).unwrap();
        let per_step = report.mean_cost / sys.horizon as f64;
        println!(
            "{k:>3} {sto:>12.6} {per_step:>12.6} {:>12.3e}",
            sto - sto_inf
        );
    }
    println!(
        "\nthe gap to STO_inf shrinks by F^2 = {:.6} per extra prediction",
        {
            let f = sol.f.get(0, 0);
            f * f
        }
    );
}
