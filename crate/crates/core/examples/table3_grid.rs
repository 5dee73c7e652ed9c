//! A reduced reconstruction-rate grid; `hapaltmin bench` runs the full one.

use hapaltmin::bench::{run_table3, write_table3_csv, CsvOptions, Table3Spec};
use hapaltmin::Algorithm;

fn main() -> hapaltmin::Result<()> {
    let spec = Table3Spec {
        error_rates: vec![0.0, 0.1],
        coverages: vec![5.0, 10.0],
        algorithms: vec![Algorithm::Hard, Algorithm::Soft],
        replicates: 5,
        ..Table3Spec::default()
    };
    let rows = run_table3(&spec)?;
    write_table3_csv(&rows, std::io::stdout(), CsvOptions { timestamp: false, timing: true })
}
