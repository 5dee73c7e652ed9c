//! Single-individual haplotype assembly as rank-one binary matrix completion.
//!
//! Reads from the two homologous chromosomes are arranged in an `m × n`
//! fragment matrix with entries in `{±1}` on the observed set `Ω`. The
//! underlying matrix is `u* v*ᵀ`, where `u*` is the haplotype and `v*` the
//! read-to-chromosome membership. [`solver`] recovers `u*` by alternating
//! minimization, [`svtbase`] provides a nuclear-norm baseline, [`metrics`]
//! scores results and [`theory`] evaluates the recovery guarantees.
//!
//! ```
//! use hapaltmin::{assemble, generate_truth, observe_uniform, mec_score, SolverConfig};
//!
//! let truth = generate_truth(60, 200, 7).unwrap();
//! let frags = observe_uniform(&truth, 0.3, 0.0, 7).unwrap();
//! let result = assemble(&frags, &SolverConfig::default(), None).unwrap();
//! assert_eq!(result.haplotype, truth.haplotype.canonical());
//! assert_eq!(mec_score(&frags, &result.haplotype).unwrap(), 0);
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod fragmat;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod simread;
pub mod solver;
pub mod svtbase;
pub mod theory;

pub use error::{Error, ParseErrorKind, Result};
pub use fragmat::{parse_fragments, write_fragments, AlleleConvention, Entry, FragmentMatrix, Haplotype};
pub use metrics::{
    evaluate, incoherence, mec_bruteforce, mec_score, principal_angle_dist, reconstruction_rate, EvalReport,
    HaplotypePair,
};
pub use simread::{generate_truth, observe_contiguous, observe_uniform, GroundTruth, ObservationModel, SimulationSpec};
pub use solver::{assemble, assemble_from, init_power_clip, Algorithm, AssemblyResult, Reference, SolverConfig};
pub use svtbase::{round_to_sign, svt_complete, DenseMatrix, SvtConfig, SvtOutcome};
