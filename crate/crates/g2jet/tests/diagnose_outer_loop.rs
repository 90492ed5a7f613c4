//! Exploratory: behavior of the gauged outer loop on manufactured
//! right-hand sides near the quadratic seed.

use g2jet::form::Form;
use g2jet::g2::G2Structure;
use g2jet::sample::random_form;
use g2jet::scalar::Rational;
use g2jet::solver::{quadratic_seed, solve_gauged_near};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
#[ignore = "diagnostic, run on demand"]
fn manufactured_solution_near_seed() {
    let order = 5;
    let seed: G2Structure<Rational> = quadratic_seed(1, order).unwrap();
    let mut rng = StdRng::seed_from_u64(151);
    // σ_true = seed + d(potential with valuation >= 4): closed, positive,
    // differs from the seed in valuation >= 3
    let mut pot: Form<Rational> = random_form(&mut rng, 2, order, 5);
    pot = pot.taylor_project(3, false).unwrap();
    let diff = pot.d().unwrap().with_eff(order as i64).scale_ratio(1, 7);
    let sigma_true = G2Structure::new_closed(seed.form().add(&diff).unwrap()).unwrap();
    let eta = sigma_true.laplacian_of_self().unwrap();
    let eta = eta.taylor_project(eta.eff().max(0) as u32, true).unwrap();
    println!("eta valuation: {}", eta.valuation());
    println!(
        "seed residual valuation: {}",
        seed.laplacian_of_self()
            .unwrap()
            .sub(&eta)
            .unwrap()
            .valuation()
    );
    match solve_gauged_near(&seed, &eta, 1) {
        Ok(sol) => {
            println!(
                "converged: residual valuation {} (target > {}), trace {:?}",
                sol.residual_valuation,
                order - 2,
                sol.trace
            );
        }
        Err(e) => println!("solver reported: {e}"),
    }
}
