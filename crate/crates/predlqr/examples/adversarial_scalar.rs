//! The scalar adversarial instance (A = B = Q = R = 1, disturbances in
//! [-1, 1]): the exact backward recursion walks Fibonacci ratios, the
//! minimax grid DP and the certified piecewise policy both put the per-step
//! game value at 1, and so does the offline stationary value under the
//! worst constant disturbance.
//!
//! ```bash
//! cargo run --release -p predlqr --example adversarial_scalar
//! ```

use predlqr::disturbance::BoxAdversarial;
use predlqr::evaluate::{
    adversarial_vertex_cost, fixed_policy_grid_value, minimax_grid_dp, stationary_offline_per_step,
    GridSpec,
};
use predlqr::matlin::Mat;
use predlqr::policy::{classic_lqr, example2_exact_dp, example2_policy, mpc_closed_form};
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
        200,
    )
    .unwrap();
    let sol = solve_dare(&sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();

    let dp = example2_exact_dp(40).unwrap();
    println!("exact backward recursion g_t(x) = a_t x^2 + 2 b_t |x| + c_t:");
    println!("  a walks 1/2, 3/5, 8/13, ... -> {:.12}", dp.a[0]);
    println!(
        "  (sqrt(5)-1)/2             =  {:.12}",
        (5.0f64.sqrt() - 1.0) / 2.0
    );
    println!(
        "  per-step value increment  -> {:.12}",
        dp.c_increments()[0]
    );

    let spec = GridSpec {
        x_max: 10.0,
        spacing: 0.01,
    };
    let minimax = minimax_grid_dp(&sys, 1.0, spec, Some(0.02)).unwrap();
    println!("\nminimax grid DP (h = 0.01, X = 10, T = 200):");
    println!(
        "  per-step value = {:.5} (clamps {}, refinement delta {:.1e})",
        minimax.per_step_value,
        minimax.clamp_count,
        minimax.refinement_delta.unwrap()
    );

    let fixed = fixed_policy_grid_value(&sys, &example2_policy(), 1.0, spec).unwrap();
    println!(
        "  piecewise policy worst case = {:.5} (optimal to grid accuracy)",
        fixed.per_step_value
    );

    let stationary = stationary_offline_per_step(&sol, &[1.0]).unwrap();
    println!("\noffline stationary per-step value under w == 1: {stationary:.12}");

    // small-horizon exact worst cases for affine policies via vertex
    // enumeration of the disturbance box
    println!("\nvertex-exact worst-case costs (T = 8, unit box):");
    let sys8 = sys.with_horizon(8);
    let bx = BoxAdversarial::new(1.0, 1).unwrap();
    let classic = classic_lqr(&sol);
    println!(
        "  classic feedback (k=0): {:.6}",
        adversarial_vertex_cost(&sys8, &classic, &bx).unwrap()
    );
    for k in [1usize, 2, 4] {
        let mpc = mpc_closed_form(&sol, k).unwrap();
        println!(
            "  MPC with k={k}:          {:.6}",
            adversarial_vertex_cost(&sys8, &mpc, &bx).unwrap()
        );
    }
}
