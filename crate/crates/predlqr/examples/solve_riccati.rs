//! Solve the Riccati equation for two fixture systems and print the derived
//! closed-loop quantities.
//!
//! ```bash
//! cargo run --release -p predlqr --example solve_riccati
//! ```

use predlqr::matlin::Mat;
use predlqr::riccati::{gelfand_profile, solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use predlqr::system::LqrSystem;

fn show(name: &str, sys: &LqrSystem) {
    let sol = solve_dare(sys, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    println!("== {name} ==");
    println!("P        = {:?}", sol.p.to_rows());
    println!("K        = {:?}", sol.k.to_rows());
    println!("F        = {:?}", sol.f.to_rows());
    println!("H        = {:?}", sol.h.to_rows());
    println!("rho(F)   = {:.9}", sol.rho_f);
    println!("lambda   = {:.9}", sol.lambda);
    println!(
        "iters    = {}, residual = {:.2e}",
        sol.iterations, sol.residual
    );
    let prof = gelfand_profile(&sol, 8).unwrap();
    let prof: Vec<String> = prof.iter().map(|v| format!("{v:.4}")).collect();
    println!("|F^k| k=0..8: [{}]", prof.join(", "));
    println!();
}

fn main() {
    // scalar instance whose solution is golden-ratio arithmetic:
    // P = (1+sqrt(5))/2, K = (sqrt(5)-1)/2, F = H = (3-sqrt(5))/2
    let one = Mat::identity(1);
    let golden = LqrSystem::new(
        one.clone(),
        one.clone(),
        one.clone(),
        one.clone(),
        one,
        vec![0.0],
        10,
    )
    .unwrap();
    show("golden scalar (A=B=Q=R=1)", &golden);

    let double_integrator = LqrSystem::new(
        Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap(),
        Mat::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        Mat::identity(2),
        Mat::identity(1),
        Mat::identity(2),
        vec![0.0, 0.0],
        10,
    )
    .unwrap();
    show("double integrator", &double_integrator);
}
