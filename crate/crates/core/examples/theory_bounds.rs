//! Closed-form guarantees and empirical checks against them.

use hapaltmin::theory::{self, TheoryParams};
use hapaltmin::SolverConfig;

fn main() -> hapaltmin::Result<()> {
    let tp = TheoryParams::new(200, 400, 0.02);
    for (name, value) in theory::report(&tp)? {
        println!("{name:>32} = {value:.6e}");
    }

    let noise = TheoryParams::new(200, 200, 0.05);
    let seeds: Vec<u64> = (0..10).collect();
    let v = theory::validate_noise_bound(&noise, 0.5, &seeds)?;
    let max = v.measured.iter().cloned().fold(0.0, f64::max);
    println!("noise: bound {:.2}, largest measured {max:.2}, pass rate {:.2}", v.bound, v.pass_rate());

    let checks = theory::validate_recovery(&tp, 1.0, &SolverConfig::default(), &seeds[..3])?;
    for c in &checks {
        println!(
            "recovery: error {:.3e} <= {:.3e}: {}, MEC {:.3e} <= {:.3e}: {}",
            c.error,
            c.error_bound,
            c.error_ok(),
            c.normalized_mec,
            c.mec_bound,
            c.mec_ok()
        );
    }
    Ok(())
}
