//! Run all three solver variants on one noisy uniform instance and print
//! the distance trace of the soft variant.

use hapaltmin::{assemble, evaluate, Algorithm, Reference, SimulationSpec, SolverConfig};

fn main() -> hapaltmin::Result<()> {
    let (truth, f) = SimulationSpec::uniform(200, 400, 0.1, 0.05, 3).simulate()?;
    let reference = Reference::from(&truth);

    for algorithm in Algorithm::ALL {
        let cfg = SolverConfig::with_algorithm(algorithm);
        let result = assemble(&f, &cfg, Some(&reference))?;
        let report = evaluate(&f, &result.haplotype, Some(&truth))?;
        println!(
            "{:>5}: iterations {:>3}, converged {}, MEC {}, rate {:.4}, dist {:.2e}",
            algorithm.name(),
            result.iterations,
            result.converged,
            report.mec,
            report.reconstruction_rate.unwrap(),
            report.dist_u.unwrap()
        );
    }

    let result = assemble(&f, &SolverConfig::default(), Some(&reference))?;
    println!("soft trace (power iterations {}, clipped {}):", result.trace.power_iterations, result.trace.clipped);
    result.trace.write_csv(std::io::stdout())?;
    Ok(())
}
