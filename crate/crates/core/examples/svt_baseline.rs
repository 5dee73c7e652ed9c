//! Singular value thresholding against the alternating solver on one
//! uniform instance.

use std::time::Instant;

use hapaltmin::{assemble, mec_score, svt_complete, SimulationSpec, SolverConfig, SvtConfig};

fn main() -> hapaltmin::Result<()> {
    let (m, n) = (50, 100);
    for k in [2.0, 8.0] {
        let p = k / m as f64;
        let (_, f) = SimulationSpec::uniform(m, n, p, 0.05, 11).simulate()?;

        let start = Instant::now();
        let alt = assemble(&f, &SolverConfig::default(), None)?;
        let alt_ms = start.elapsed().as_secs_f64() * 1e3;

        let start = Instant::now();
        let svt = svt_complete(&f, &SvtConfig::default())?;
        let svt_ms = start.elapsed().as_secs_f64() * 1e3;
        let svt_mec = svt.haplotype().map(|h| mec_score(&f, &h)).transpose()?;

        println!("p = {p:.3}, |Ω| = {}", f.nnz());
        println!("  altmin: MEC {:>4}  {alt_ms:.2} ms", mec_score(&f, &alt.haplotype)?);
        println!(
            "  svt:    MEC {:>4}  {svt_ms:.2} ms  (iterations {}, rank {}, converged {}, diverged {})",
            svt_mec.map_or("-".into(), |v| v.to_string()),
            svt.iterations,
            svt.rank,
            svt.converged,
            svt.diverged
        );
    }
    Ok(())
}
