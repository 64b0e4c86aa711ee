//! SNP correlation matrix estimation, shrinkage, and solves.
//!
//! The correlation matrix estimated from a finite reference panel is rank
//! deficient whenever p > n and near-singular under strong LD, so every
//! solve goes through a convex shrink toward the identity
//! (`(1-λ)·Σ + λ·I`) followed by a Cholesky factorization. A failed
//! factorization is reported as [`LdError::SingularMatrix`], never papered
//! over with a pseudoinverse.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::ingest::GenotypePanel;
use crate::linalg;

#[derive(Debug, Error)]
pub enum LdError {
    #[error("standardization needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("LD estimation requires at least one SNP column")]
    EmptyPanel,
    #[error("shrinkage lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("LD matrix is numerically singular (Cholesky failed at shrinkage {0})")]
    SingularMatrix(f64),
    #[error("dimension mismatch: matrix is {p}x{p}, vector has length {len}")]
    DimensionMismatch { p: usize, len: usize },
    #[error("SNP '{0}' not present in the LD matrix")]
    UnknownSnp(String),
    #[error("invalid LD matrix: {0}")]
    InvalidMatrix(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
}

// ---------------------------------------------------------------------------
// Standardized genotypes
// ---------------------------------------------------------------------------

/// Column-standardized genotype matrix (mean 0, sample variance 1), with
/// per-column provenance and the ids of excluded zero-variance columns.
#[derive(Debug, Clone)]
pub struct StandardizedGenotypes {
    pub matrix: Array2<f64>,
    /// Ids of retained columns, aligned with `matrix`.
    pub snp_ids: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Ids of zero-variance columns that were dropped.
    pub excluded: Vec<String>,
}

/// Center and scale each dosage column to mean 0 and sample variance 1
/// (divisor n-1). Zero-variance columns are excluded and reported.
pub fn standardize_columns(panel: &GenotypePanel) -> Result<StandardizedGenotypes, LdError> {
    let ids: Vec<String> = panel.snps.iter().map(|s| s.id.clone()).collect();
    standardize_matrix(panel.dosages(), &ids)
}

/// Same as [`standardize_columns`] but on a bare matrix with supplied ids.
pub fn standardize_matrix(
    x: &Array2<f64>,
    ids: &[String],
) -> Result<StandardizedGenotypes, LdError> {
    let n = x.nrows();
    if n < 2 {
        return Err(LdError::TooFewSamples(n));
    }
    assert_eq!(x.ncols(), ids.len());

    let mut matrix_cols: Vec<f64> = Vec::new();
    let mut kept_ids = Vec::new();
    let mut means = Vec::new();
    let mut sds = Vec::new();
    let mut excluded = Vec::new();
    for (j, id) in ids.iter().enumerate() {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        if var <= 0.0 {
            excluded.push(id.clone());
            continue;
        }
        let sd = var.sqrt();
        kept_ids.push(id.clone());
        means.push(mean);
        sds.push(sd);
        matrix_cols.extend(col.iter().map(|v| (v - mean) / sd));
    }
    let p = kept_ids.len();
    // Columns were gathered contiguously; build as p x n then transpose.
    let matrix = Array2::from_shape_vec((p, n), matrix_cols)
        .expect("shape consistent")
        .reversed_axes()
        .to_owned();
    Ok(StandardizedGenotypes {
        matrix,
        snp_ids: kept_ids,
        means,
        sds,
        excluded,
    })
}

/// Standardize a single vector to mean 0, sample variance 1.
pub fn standardize_vector(y: &[f64]) -> Result<Array1<f64>, LdError> {
    let n = y.len();
    if n < 2 {
        return Err(LdError::TooFewSamples(n));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var <= 0.0 {
        return Err(LdError::InvalidMatrix("zero-variance vector".into()));
    }
    let sd = var.sqrt();
    Ok(Array1::from_iter(y.iter().map(|v| (v - mean) / sd)))
}

// ---------------------------------------------------------------------------
// LD matrix
// ---------------------------------------------------------------------------

/// Symmetric SNP-by-SNP correlation matrix with optional shrinkage toward
/// the identity.
#[derive(Debug, Clone)]
pub struct LdMatrix {
    snp_ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Array2<f64>,
    shrinkage: f64,
}

impl LdMatrix {
    /// Validate (symmetry within 1e-12, unit diagonal, entries in [-1, 1])
    /// and canonicalize: exact symmetrization, clamped entries, diagonal
    /// set to exactly 1.
    pub fn new(snp_ids: Vec<String>, values: Array2<f64>) -> Result<Self, LdError> {
        let p = snp_ids.len();
        if values.nrows() != p || values.ncols() != p {
            return Err(LdError::InvalidMatrix(format!(
                "expected {p}x{p} values, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let mut canon = values;
        for i in 0..p {
            let d = canon[[i, i]];
            if (d - 1.0).abs() > 1e-6 {
                return Err(LdError::InvalidMatrix(format!(
                    "diagonal entry {i} is {d}, expected 1"
                )));
            }
            canon[[i, i]] = 1.0;
            for j in 0..i {
                let a = canon[[i, j]];
                let b = canon[[j, i]];
                if (a - b).abs() > 1e-12 {
                    return Err(LdError::InvalidMatrix(format!(
                        "asymmetry at ({i},{j}): {a} vs {b}"
                    )));
                }
                if a.abs() > 1.0 + 1e-9 {
                    return Err(LdError::InvalidMatrix(format!(
                        "entry ({i},{j}) = {a} outside [-1, 1]"
                    )));
                }
                let v = (0.5 * (a + b)).clamp(-1.0, 1.0);
                canon[[i, j]] = v;
                canon[[j, i]] = v;
            }
        }
        let index = snp_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(LdMatrix {
            snp_ids,
            index,
            values: canon,
            shrinkage: 0.0,
        })
    }

    pub fn p(&self) -> usize {
        self.snp_ids.len()
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Extract the principal submatrix over the given ids, in the given
    /// order. Shrinkage carries over.
    pub fn submatrix(&self, ids: &[&str]) -> Result<LdMatrix, LdError> {
        let positions: Vec<usize> = ids
            .iter()
            .map(|id| {
                self.position(id)
                    .ok_or_else(|| LdError::UnknownSnp((*id).to_string()))
            })
            .collect::<Result<_, _>>()?;
        let k = positions.len();
        let mut values = Array2::<f64>::zeros((k, k));
        for (a, &i) in positions.iter().enumerate() {
            for (b, &j) in positions.iter().enumerate() {
                values[[a, b]] = self.values[[i, j]];
            }
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| ((*id).to_string(), i))
            .collect();
        Ok(LdMatrix {
            snp_ids: ids.iter().map(|s| s.to_string()).collect(),
            index,
            values,
            shrinkage: self.shrinkage,
        })
    }
}

/// Estimate the correlation matrix `XᵀX / (n-1)` from standardized
/// genotypes. No shrinkage is applied (`shrinkage` is recorded as 0).
pub fn estimate_ld(std: &StandardizedGenotypes) -> Result<LdMatrix, LdError> {
    let p = std.matrix.ncols();
    if p == 0 {
        return Err(LdError::EmptyPanel);
    }
    let n = std.matrix.nrows() as f64;
    let values = std.matrix.t().dot(&std.matrix) / (n - 1.0);
    LdMatrix::new(std.snp_ids.clone(), values)
}

/// Convex shrink toward the identity: `(1-λ)·Σ + λ·I`. Preserves symmetry
/// and the unit diagonal exactly; λ ≥ 0.05 guarantees positive definiteness
/// for any valid correlation input.
pub fn shrink_ld(ld: &LdMatrix, lambda: f64) -> Result<LdMatrix, LdError> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(LdError::LambdaOutOfRange(lambda));
    }
    let p = ld.p();
    let mut values = ld.values.clone();
    for i in 0..p {
        for j in 0..p {
            if i == j {
                values[[i, j]] = 1.0;
            } else {
                values[[i, j]] *= 1.0 - lambda;
            }
        }
    }
    Ok(LdMatrix {
        snp_ids: ld.snp_ids.clone(),
        index: ld.index.clone(),
        values,
        shrinkage: lambda,
    })
}

/// Solve `Σ x = rhs` via Cholesky. Fails with [`LdError::SingularMatrix`]
/// when the matrix is not numerically positive definite (e.g. unshrunk and
/// rank deficient).
pub fn ld_solve(ld: &LdMatrix, rhs: &[f64]) -> Result<Vec<f64>, LdError> {
    if rhs.len() != ld.p() {
        return Err(LdError::DimensionMismatch {
            p: ld.p(),
            len: rhs.len(),
        });
    }
    let factor =
        linalg::cholesky(&ld.values).ok_or(LdError::SingularMatrix(ld.shrinkage))?;
    Ok(factor.solve(rhs))
}

/// Quadratic form `wᵀ Σ w`.
pub fn quadratic_form(ld: &LdMatrix, w: &[f64]) -> Result<f64, LdError> {
    if w.len() != ld.p() {
        return Err(LdError::DimensionMismatch {
            p: ld.p(),
            len: w.len(),
        });
    }
    Ok(linalg::quadratic_form(&ld.values, w))
}

// ---------------------------------------------------------------------------
// Precomputed-LD TSV
// ---------------------------------------------------------------------------

/// Read a square LD matrix TSV: header row of ids (corner cell ignored),
/// one labeled row per SNP. Symmetry and diagonal are validated.
pub fn read_ld_tsv(path: &Path) -> Result<LdMatrix, LdError> {
    let file = File::open(path).map_err(|e| LdError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, reason: String| LdError::Parse {
        path: path.display().to_string(),
        line,
        reason,
    };
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| LdError::Io {
            path: path.display().to_string(),
            source: e,
        })?,
        None => return Err(parse_err(1, "empty file".into())),
    };
    let ids: Vec<String> = header
        .trim_end()
        .split('\t')
        .skip(1)
        .map(|s| s.to_string())
        .collect();
    let p = ids.len();
    if p == 0 {
        return Err(parse_err(1, "no SNP columns in header".into()));
    }
    let mut values = Array2::<f64>::zeros((p, p));
    let mut row = 0usize;
    for (i, line) in lines {
        let line = line.map_err(|e| LdError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if row >= p {
            return Err(parse_err(lineno, format!("more than {p} data rows")));
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != p + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", p + 1, fields.len()),
            ));
        }
        if fields[0] != ids[row] {
            return Err(parse_err(
                lineno,
                format!("row label '{}' does not match header '{}'", fields[0], ids[row]),
            ));
        }
        for (j, token) in fields[1..].iter().enumerate() {
            values[[row, j]] = token
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value '{token}'")))?;
        }
        row += 1;
    }
    if row != p {
        return Err(parse_err(0, format!("expected {p} data rows, found {row}")));
    }
    LdMatrix::new(ids, values)
}

/// Write an LD matrix in the square TSV layout accepted by [`read_ld_tsv`].
pub fn write_ld_tsv<W: Write>(ld: &LdMatrix, mut out: W) -> std::io::Result<()> {
    write!(out, "SNP")?;
    for id in ld.snp_ids() {
        write!(out, "\t{id}")?;
    }
    writeln!(out)?;
    for (i, id) in ld.snp_ids().iter().enumerate() {
        write!(out, "{id}")?;
        for j in 0..ld.p() {
            write!(out, "\t{}", ld.values()[[i, j]])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
