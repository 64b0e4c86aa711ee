//! Parsing and harmonization of GWAS summary files, genotype reference
//! panels, and expression weight panels.
//!
//! All interchange formats are plain TSV with mandatory headers:
//!
//! * GWAS summary: `SNP CHR BP A1 A2 Z`
//! * Genotypes: first row `IID` followed by SNP ids, one row per individual,
//!   plus a sidecar SNP info file `SNP CHR BP A1 A2`
//! * Weight panel: `GENE TISSUE CHR TSS SNP BP A1 A2 WEIGHT MODEL CVR2`

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use thiserror::Error;

use crate::train::{GeneWeightSet, ModelKind};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing required column '{column}' in header")]
    MissingColumn { path: String, column: String },
    #[error("line {line}: duplicate SNP id '{id}'")]
    DuplicateSnp { line: usize, id: String },
    #[error("line {line}: non-finite z-score for SNP '{id}'")]
    NonFiniteZ { line: usize, id: String },
    #[error("line {line}: malformed or inconsistent allele '{token}'")]
    MalformedAllele { line: usize, token: String },
    #[error("line {line}: expected {expected} fields, found {got}")]
    RaggedRow {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: dosage {value} outside [0, 2]")]
    ValueOutOfRange { line: usize, value: f64 },
    #[error("line {line}: cannot parse {field} from '{token}'")]
    MalformedField {
        line: usize,
        field: &'static str,
        token: String,
    },
    #[error("SNP '{id}' present in genotype header but absent from the info file")]
    MissingSnpInfo { id: String },
    #[error("harmonization requires matching ids, got '{weight_id}' vs '{gwas_id}'")]
    IdMismatch { weight_id: String, gwas_id: String },
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A single-nucleotide allele.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Allele {
    A,
    C,
    G,
    T,
}

impl Allele {
    pub fn complement(self) -> Allele {
        match self {
            Allele::A => Allele::T,
            Allele::T => Allele::A,
            Allele::C => Allele::G,
            Allele::G => Allele::C,
        }
    }
}

impl FromStr for Allele {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "A" => Ok(Allele::A),
            "C" => Ok(Allele::C),
            "G" => Ok(Allele::G),
            "T" => Ok(Allele::T),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Allele {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Allele::A => 'A',
            Allele::C => 'C',
            Allele::G => 'G',
            Allele::T => 'T',
        };
        write!(f, "{c}")
    }
}

/// Identity of one SNP: id, position, and effect/other allele pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnpRecord {
    pub id: String,
    pub chrom: u8,
    pub pos: u64,
    /// Effect allele: the z-score (or weight) is oriented to this allele.
    pub a1: Allele,
    pub a2: Allele,
}

impl SnpRecord {
    /// Build a record, enforcing `a1 != a2`, `pos >= 1`, nonempty id,
    /// chromosome in 1..=22.
    pub fn new(id: &str, chrom: u8, pos: u64, a1: Allele, a2: Allele) -> Result<Self, String> {
        if id.is_empty() {
            return Err("empty SNP id".into());
        }
        if !(1..=22).contains(&chrom) {
            return Err(format!("chromosome {chrom} outside 1-22"));
        }
        if pos < 1 {
            return Err("position must be >= 1".into());
        }
        if a1 == a2 {
            return Err(format!("identical alleles {a1}/{a1}"));
        }
        Ok(SnpRecord {
            id: id.to_string(),
            chrom,
            pos,
            a1,
            a2,
        })
    }

    /// Strand-ambiguous pairs (A/T or C/G) cannot be oriented between
    /// datasets without frequency information.
    pub fn is_strand_ambiguous(&self) -> bool {
        self.a2 == self.a1.complement()
    }
}

/// Per-SNP GWAS association z-scores, ordered as in the source file, with an
/// id lookup index.
#[derive(Debug, Clone)]
pub struct GwasSummary {
    records: Vec<(SnpRecord, f64)>,
    index: HashMap<String, usize>,
}

impl GwasSummary {
    /// Construct from records, rejecting duplicate ids and non-finite z.
    pub fn new(records: Vec<(SnpRecord, f64)>) -> Result<Self, IngestError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, (snp, z)) in records.iter().enumerate() {
            if !z.is_finite() {
                return Err(IngestError::NonFiniteZ {
                    line: i + 2,
                    id: snp.id.clone(),
                });
            }
            if index.insert(snp.id.clone(), i).is_some() {
                return Err(IngestError::DuplicateSnp {
                    line: i + 2,
                    id: snp.id.clone(),
                });
            }
        }
        Ok(GwasSummary { records, index })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<(&SnpRecord, f64)> {
        self.index.get(id).map(|&i| {
            let (snp, z) = &self.records[i];
            (snp, *z)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SnpRecord, f64)> {
        self.records.iter()
    }
}

/// Reference genotype dosages, one row per individual, one column per SNP.
#[derive(Debug, Clone)]
pub struct GenotypePanel {
    pub sample_ids: Vec<String>,
    pub snps: Vec<SnpRecord>,
    dosages: Array2<f64>,
}

impl GenotypePanel {
    pub fn new(
        sample_ids: Vec<String>,
        snps: Vec<SnpRecord>,
        dosages: Array2<f64>,
    ) -> Result<Self, IngestError> {
        assert_eq!(dosages.nrows(), sample_ids.len());
        assert_eq!(dosages.ncols(), snps.len());
        Ok(GenotypePanel {
            sample_ids,
            snps,
            dosages,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.dosages.nrows()
    }

    pub fn snp_count(&self) -> usize {
        self.dosages.ncols()
    }

    pub fn dosages(&self) -> &Array2<f64> {
        &self.dosages
    }
}

/// What to do with one weight-panel SNP when matched against the GWAS side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonizeAction {
    /// Allele pairs identical: use the GWAS z as is.
    Keep,
    /// Allele pairs exactly swapped: negate the GWAS z.
    FlipSign,
    /// A/T or C/G pair on either side: orientation unknowable, drop.
    DropAmbiguous,
    /// Any other allele combination: different variant, drop.
    DropMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonizationOutcome {
    pub action: HarmonizeAction,
    pub matched_id: String,
}

/// Decide how a weight-panel SNP and a GWAS SNP with the same id relate.
///
/// Ambiguity dominates: a strand-ambiguous pair on either side is dropped
/// even when the pairs nominally match.
pub fn harmonize_snp(
    weight_side: &SnpRecord,
    gwas_side: &SnpRecord,
) -> Result<HarmonizationOutcome, IngestError> {
    if weight_side.id != gwas_side.id {
        return Err(IngestError::IdMismatch {
            weight_id: weight_side.id.clone(),
            gwas_id: gwas_side.id.clone(),
        });
    }
    let action = if weight_side.is_strand_ambiguous() || gwas_side.is_strand_ambiguous() {
        HarmonizeAction::DropAmbiguous
    } else if weight_side.a1 == gwas_side.a1 && weight_side.a2 == gwas_side.a2 {
        HarmonizeAction::Keep
    } else if weight_side.a1 == gwas_side.a2 && weight_side.a2 == gwas_side.a1 {
        HarmonizeAction::FlipSign
    } else {
        HarmonizeAction::DropMismatch
    };
    Ok(HarmonizationOutcome {
        action,
        matched_id: weight_side.id.clone(),
    })
}

// ---------------------------------------------------------------------------
// Low-level TSV helpers
// ---------------------------------------------------------------------------

fn check_header(path: &Path, line: &str, expected: &[&str]) -> Result<(), IngestError> {
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    for (i, want) in expected.iter().enumerate() {
        if fields.get(i).copied() != Some(*want) {
            return Err(IngestError::MissingColumn {
                path: path.display().to_string(),
                column: (*want).to_string(),
            });
        }
    }
    if fields.len() != expected.len() {
        return Err(IngestError::RaggedRow {
            line: 1,
            expected: expected.len(),
            got: fields.len(),
        });
    }
    Ok(())
}

fn parse_field<T: FromStr>(
    token: &str,
    field: &'static str,
    line: usize,
) -> Result<T, IngestError> {
    token.parse::<T>().map_err(|_| IngestError::MalformedField {
        line,
        field,
        token: token.to_string(),
    })
}

fn parse_allele(token: &str, line: usize) -> Result<Allele, IngestError> {
    token.parse().map_err(|_| IngestError::MalformedAllele {
        line,
        token: token.to_string(),
    })
}

fn snp_from_fields(
    line: usize,
    id: &str,
    chrom: &str,
    pos: &str,
    a1: &str,
    a2: &str,
) -> Result<SnpRecord, IngestError> {
    let chrom: u8 = parse_field(chrom, "CHR", line)?;
    let pos: u64 = parse_field(pos, "BP", line)?;
    let a1 = parse_allele(a1, line)?;
    let a2 = parse_allele(a2, line)?;
    SnpRecord::new(id, chrom, pos, a1, a2).map_err(|reason| {
        if reason.starts_with("identical alleles") {
            IngestError::MalformedAllele {
                line,
                token: a1.to_string(),
            }
        } else {
            IngestError::MalformedField {
                line,
                field: "SNP",
                token: format!("{id} ({reason})"),
            }
        }
    })
}

// ---------------------------------------------------------------------------
// GWAS summary
// ---------------------------------------------------------------------------

pub const GWAS_HEADER: [&str; 6] = ["SNP", "CHR", "BP", "A1", "A2", "Z"];

/// Parse a GWAS summary TSV. Row order is preserved.
pub fn parse_gwas(path: &Path) -> Result<GwasSummary, IngestError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_gwas_reader(path, BufReader::new(file))
}

fn parse_gwas_reader<R: BufRead>(path: &Path, reader: R) -> Result<GwasSummary, IngestError> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| io_err(path, e))?,
        None => {
            return Err(IngestError::MissingColumn {
                path: path.display().to_string(),
                column: "SNP".into(),
            })
        }
    };
    check_header(path, &header, &GWAS_HEADER)?;

    let mut records = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != 6 {
            return Err(IngestError::RaggedRow {
                line: lineno,
                expected: 6,
                got: fields.len(),
            });
        }
        let snp = snp_from_fields(lineno, fields[0], fields[1], fields[2], fields[3], fields[4])?;
        let z: f64 = parse_field(fields[5], "Z", lineno)?;
        if !z.is_finite() {
            return Err(IngestError::NonFiniteZ {
                line: lineno,
                id: snp.id.clone(),
            });
        }
        if index.insert(snp.id.clone(), records.len()).is_some() {
            return Err(IngestError::DuplicateSnp {
                line: lineno,
                id: snp.id,
            });
        }
        records.push((snp, z));
    }
    Ok(GwasSummary { records, index })
}

/// Serialize a GWAS summary in canonical form. Parsing the output and
/// serializing again reproduces it byte for byte.
pub fn write_gwas<W: Write>(summary: &GwasSummary, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", GWAS_HEADER.join("\t"))?;
    for (snp, z) in summary.iter() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            snp.id, snp.chrom, snp.pos, snp.a1, snp.a2, z
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Genotype panel
// ---------------------------------------------------------------------------

pub const SNP_INFO_HEADER: [&str; 5] = ["SNP", "CHR", "BP", "A1", "A2"];

fn is_missing(token: &str) -> bool {
    matches!(token, "" | "NA" | "na" | "NaN" | "nan" | ".")
}

/// Parse a genotype dosage TSV plus its SNP info sidecar.
///
/// Missing cells are mean-imputed per column; out-of-range dosages are
/// rejected.
pub fn parse_genotypes(geno_path: &Path, info_path: &Path) -> Result<GenotypePanel, IngestError> {
    let info = parse_snp_info(info_path)?;

    let file = File::open(geno_path).map_err(|e| io_err(geno_path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| io_err(geno_path, e))?,
        None => {
            return Err(IngestError::MissingColumn {
                path: geno_path.display().to_string(),
                column: "IID".into(),
            })
        }
    };
    let head_fields: Vec<&str> = header.trim_end().split('\t').collect();
    if head_fields.first().copied() != Some("IID") {
        return Err(IngestError::MissingColumn {
            path: geno_path.display().to_string(),
            column: "IID".into(),
        });
    }
    let snp_ids: Vec<String> = head_fields[1..].iter().map(|s| s.to_string()).collect();
    let p = snp_ids.len();
    let snps: Vec<SnpRecord> = snp_ids
        .iter()
        .map(|id| {
            info.get(id)
                .cloned()
                .ok_or_else(|| IngestError::MissingSnpInfo { id: id.clone() })
        })
        .collect::<Result<_, _>>()?;

    let mut sample_ids = Vec::new();
    let mut values: Vec<f64> = Vec::new(); // row-major, NaN marks missing
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(geno_path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != p + 1 {
            return Err(IngestError::RaggedRow {
                line: lineno,
                expected: p + 1,
                got: fields.len(),
            });
        }
        sample_ids.push(fields[0].to_string());
        for token in &fields[1..] {
            if is_missing(token) {
                values.push(f64::NAN);
                continue;
            }
            let v: f64 = parse_field(token, "dosage", lineno)?;
            if !(0.0..=2.0).contains(&v) {
                return Err(IngestError::ValueOutOfRange {
                    line: lineno,
                    value: v,
                });
            }
            values.push(v);
        }
    }
    let n = sample_ids.len();
    let mut dosages = Array2::from_shape_vec((n, p), values).expect("row-major shape");

    // Mean-impute missing cells per column; an all-missing column becomes 0
    // and is excluded later as zero-variance.
    for j in 0..p {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            let v = dosages[[i, j]];
            if v.is_finite() {
                sum += v;
                count += 1;
            }
        }
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        for i in 0..n {
            if !dosages[[i, j]].is_finite() {
                dosages[[i, j]] = mean;
            }
        }
    }

    GenotypePanel::new(sample_ids, snps, dosages)
}

/// Parse the `SNP CHR BP A1 A2` sidecar into an id-keyed map.
pub fn parse_snp_info(path: &Path) -> Result<HashMap<String, SnpRecord>, IngestError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| io_err(path, e))?,
        None => {
            return Err(IngestError::MissingColumn {
                path: path.display().to_string(),
                column: "SNP".into(),
            })
        }
    };
    check_header(path, &header, &SNP_INFO_HEADER)?;
    let mut map = HashMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != 5 {
            return Err(IngestError::RaggedRow {
                line: lineno,
                expected: 5,
                got: fields.len(),
            });
        }
        let snp = snp_from_fields(lineno, fields[0], fields[1], fields[2], fields[3], fields[4])?;
        if map.insert(snp.id.clone(), snp.clone()).is_some() {
            return Err(IngestError::DuplicateSnp {
                line: lineno,
                id: snp.id,
            });
        }
    }
    Ok(map)
}

/// Write a genotype panel and its sidecar (used by the simulator).
pub fn write_genotypes<W: Write, V: Write>(
    panel: &GenotypePanel,
    mut geno_out: W,
    mut info_out: V,
) -> std::io::Result<()> {
    write!(geno_out, "IID")?;
    for snp in &panel.snps {
        write!(geno_out, "\t{}", snp.id)?;
    }
    writeln!(geno_out)?;
    for (i, iid) in panel.sample_ids.iter().enumerate() {
        write!(geno_out, "{iid}")?;
        for j in 0..panel.snp_count() {
            write!(geno_out, "\t{}", panel.dosages()[[i, j]])?;
        }
        writeln!(geno_out)?;
    }
    writeln!(info_out, "{}", SNP_INFO_HEADER.join("\t"))?;
    for snp in &panel.snps {
        writeln!(
            info_out,
            "{}\t{}\t{}\t{}\t{}",
            snp.id, snp.chrom, snp.pos, snp.a1, snp.a2
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Weight panel
// ---------------------------------------------------------------------------

pub const WEIGHT_HEADER: [&str; 11] = [
    "GENE", "TISSUE", "CHR", "TSS", "SNP", "BP", "A1", "A2", "WEIGHT", "MODEL", "CVR2",
];

/// Ordered collection of per-gene, per-tissue weight sets.
#[derive(Debug, Clone, Default)]
pub struct WeightPanel {
    pub sets: Vec<GeneWeightSet>,
}

/// Parse a weight panel TSV, grouping rows by (gene, tissue) in first
/// appearance order.
pub fn read_weight_panel(path: &Path) -> Result<WeightPanel, IngestError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_weight_panel_reader(path, BufReader::new(file))
}

fn read_weight_panel_reader<R: Read>(path: &Path, reader: R) -> Result<WeightPanel, IngestError> {
    struct Group {
        chrom: u8,
        tss: u64,
        model: ModelKind,
        cv_r2: f64,
        snps: Vec<SnpRecord>,
        weights: Vec<f64>,
        seen: HashMap<String, usize>,
    }

    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| io_err(path, e))?,
        None => {
            return Err(IngestError::MissingColumn {
                path: path.display().to_string(),
                column: "GENE".into(),
            })
        }
    };
    check_header(path, &header, &WEIGHT_HEADER)?;

    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Group> = HashMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != 11 {
            return Err(IngestError::RaggedRow {
                line: lineno,
                expected: 11,
                got: fields.len(),
            });
        }
        let gene = fields[0].to_string();
        let tissue = fields[1].to_string();
        let chrom: u8 = parse_field(fields[2], "CHR", lineno)?;
        let tss: u64 = parse_field(fields[3], "TSS", lineno)?;
        let snp = snp_from_fields(lineno, fields[4], fields[2], fields[5], fields[6], fields[7])?;
        let weight: f64 = parse_field(fields[8], "WEIGHT", lineno)?;
        let model: ModelKind = fields[9]
            .parse()
            .map_err(|_| IngestError::MalformedField {
                line: lineno,
                field: "MODEL",
                token: fields[9].to_string(),
            })?;
        let cv_r2: f64 = parse_field(fields[10], "CVR2", lineno)?;

        let key = (gene, tissue);
        let group = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            Group {
                chrom,
                tss,
                model,
                cv_r2,
                snps: Vec::new(),
                weights: Vec::new(),
                seen: HashMap::new(),
            }
        });
        if group.seen.insert(snp.id.clone(), lineno).is_some() {
            return Err(IngestError::DuplicateSnp {
                line: lineno,
                id: snp.id,
            });
        }
        if group.chrom != chrom || group.tss != tss || group.model != model {
            return Err(IngestError::MalformedField {
                line: lineno,
                field: "GENE",
                token: format!("{}/{} has inconsistent CHR/TSS/MODEL", key.0, key.1),
            });
        }
        group.snps.push(snp);
        group.weights.push(weight);
    }

    let mut sets = Vec::with_capacity(order.len());
    for key in order {
        let g = groups.remove(&key).expect("group recorded in order");
        let set = GeneWeightSet::new(
            key.0.clone(),
            key.1.clone(),
            g.chrom,
            g.tss,
            g.snps,
            g.weights,
            g.model,
            g.cv_r2,
        )
        .map_err(|reason| IngestError::MalformedField {
            line: 0,
            field: "GENE",
            token: format!("{}/{}: {reason}", key.0, key.1),
        })?;
        sets.push(set);
    }
    Ok(WeightPanel { sets })
}

/// Write a weight panel in canonical form (one row per SNP).
pub fn write_weight_panel<W: Write>(panel: &WeightPanel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", WEIGHT_HEADER.join("\t"))?;
    for set in &panel.sets {
        for (snp, w) in set.snps.iter().zip(&set.weights) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                set.gene,
                set.tissue,
                set.chrom,
                set.tss,
                snp.id,
                snp.pos,
                snp.a1,
                snp.a2,
                w,
                set.model,
                set.cv_r2
            )?;
        }
    }
    Ok(())
}
