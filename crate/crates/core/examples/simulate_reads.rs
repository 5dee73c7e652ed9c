//! Simulate fragment matrices under both observation models.

use hapaltmin::simread::{Placement, ReadLengths};
use hapaltmin::{ObservationModel, SimulationSpec};

fn main() -> hapaltmin::Result<()> {
    let uniform = SimulationSpec::uniform(50, 100, 0.2, 0.05, 1);
    let (truth, f) = uniform.simulate()?;
    println!("uniform: {} x {}, |Ω| = {}, p = {:.3}", f.m(), f.n(), f.nnz(), f.sample_probability());
    let flipped = f.entries().filter(|e| e.value != truth.value(e.snp, e.read)).count();
    println!("  flipped entries: {flipped} ({:.3} of Ω)", flipped as f64 / f.nnz() as f64);

    for placement in [Placement::Tiled, Placement::UniformStart] {
        let spec = SimulationSpec {
            m: 700,
            model: ObservationModel::Contiguous { coverage: 5.0, lengths: ReadLengths::default(), placement },
            error_rate: 0.1,
            seed: 7,
        };
        let (_, f) = spec.simulate()?;
        let cover: Vec<usize> = (0..f.m()).map(|i| f.row_len(i)).collect();
        let mean = cover.iter().sum::<usize>() as f64 / cover.len() as f64;
        println!(
            "{placement}: n = {} reads, mean coverage {mean:.2}, min {}, max {}",
            f.n(),
            cover.iter().min().unwrap(),
            cover.iter().max().unwrap()
        );
    }
    Ok(())
}
