//! Summary-statistics TWAS engine.
//!
//! Pipeline: parse GWAS summary statistics and reference genotypes
//! ([`ingest`]), estimate and shrink the SNP correlation matrix ([`ld`]),
//! train per-gene cis expression weights with cross-validation ([`train`]),
//! combine weights with GWAS z-scores into gene-level association statistics
//! ([`assoc`]), apply per-tissue multiple-testing procedures ([`mtp`]), and
//! validate the whole stack against simulated causality scenarios ([`sim`]).

pub mod assoc;
pub mod ingest;
pub mod ld;
pub mod mtp;
pub mod normal;
pub mod rng;
pub mod sim;
pub mod train;

mod linalg;
