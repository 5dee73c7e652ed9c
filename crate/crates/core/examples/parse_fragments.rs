//! Parse a fragment file, inspect it, and write it back.
//!
//! Run with `cargo run --example parse_fragments [FILE]`; without a file a
//! small built-in matrix is used.

use std::io::BufReader;

use hapaltmin::fragmat::to_fragment_string;
use hapaltmin::{mec_bruteforce, parse_fragments};

const DEMO: &str = "\
# three SNPs, three reads
3 3
1 1 0 2 0 3 1
2 1 1 2 1
3 2 1 3 0
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = match std::env::args().nth(1) {
        Some(path) => parse_fragments(BufReader::new(std::fs::File::open(path)?))?,
        None => parse_fragments(DEMO.as_bytes())?,
    };
    println!("m = {}, n = {}, |Ω| = {}, p = {:.4}", f.m(), f.n(), f.nnz(), f.sample_probability());
    for j in 0..f.n().min(5) {
        let col: Vec<String> = f.column(j).map(|(i, v)| format!("{}:{:+}", i + 1, v)).collect();
        println!("read {}: {}", j + 1, col.join(" "));
    }
    if f.m() <= 16 {
        let (mec, h) = mec_bruteforce(&f)?;
        println!("exhaustive MEC = {mec}, haplotype {}", h.to_allele_string());
    }
    print!("{}", to_fragment_string(&f));
    Ok(())
}
