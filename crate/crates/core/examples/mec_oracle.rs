//! Compare solver MEC with the exhaustive optimum on small instances.

use hapaltmin::{assemble, mec_bruteforce, mec_score, SimulationSpec, SolverConfig};

fn main() -> hapaltmin::Result<()> {
    let (mut equal, mut total) = (0, 0);
    for seed in 0..40 {
        let (_, f) = SimulationSpec::uniform(10, 12, 0.6, 0.1, seed).simulate()?;
        let (opt, _) = mec_bruteforce(&f)?;
        let found = mec_score(&f, &assemble(&f, &SolverConfig::default(), None)?.haplotype)?;
        assert!(found >= opt);
        total += 1;
        if found == opt {
            equal += 1;
        }
        if seed < 5 {
            println!("seed {seed}: solver {found}, optimum {opt}");
        }
    }
    println!("solver matched the optimum on {equal}/{total} instances");
    Ok(())
}
