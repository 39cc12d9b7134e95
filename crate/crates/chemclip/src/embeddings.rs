//! Embedding CSV export/import and whole-corpus embedding.
//!
//! The on-disk schema is `record_id,compound_id,cell_line,domain,active,`
//! followed by one `e{i}` column per embedding dimension. Import accepts
//! any width, so externally computed embeddings can flow through the same
//! evaluation path.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::data::{ActivityRecord, DataError};
use crate::featurize::Domain;
use crate::model::ChemClipModel;
use crate::train::{DomainSet, TrainError};

/// One record with its embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedRecord {
    pub record_id: String,
    pub compound_id: String,
    pub cell_line: String,
    pub domain: Domain,
    pub active: bool,
    pub embedding: Vec<f64>,
}

/// What [`import_embeddings_csv`] found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct ImportReport {
    pub rows: usize,
    pub width: usize,
    /// Rows whose norm deviated from 1 by more than 1e-6 before the
    /// renormalization pass.
    pub renormalized: usize,
    /// All-zero rows, which cannot be normalized and are kept as zeros.
    pub zero_rows: usize,
}

/// Embed every record through its domain head, preserving input order.
/// Records whose structure cannot be featurized are skipped; their ids are
/// returned alongside.
pub fn embed_records(
    model: &ChemClipModel,
    records: &[ActivityRecord],
) -> Result<(Vec<EmbeddedRecord>, Vec<String>), TrainError> {
    let mut skipped = Vec::new();
    let mut by_id: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for domain in [Domain::Inorganic, Domain::Organic] {
        let (set, missed) = DomainSet::build(records, domain)?;
        skipped.extend(missed);
        if set.is_empty() {
            continue;
        }
        let embedded = match domain {
            Domain::Inorganic => model.embed_inorganic(&set.features)?,
            Domain::Organic => model.embed_organic(&set.features)?,
        };
        for (i, id) in set.record_ids.iter().enumerate() {
            let key = records
                .iter()
                .find(|r| &r.record_id == id)
                .map(|r| r.record_id.as_str())
                .expect("record id came from this slice");
            by_id.insert(key, embedded.row(i).to_vec());
        }
    }
    let out = records
        .iter()
        .filter_map(|r| {
            by_id.remove(r.record_id.as_str()).map(|embedding| EmbeddedRecord {
                record_id: r.record_id.clone(),
                compound_id: r.compound_id.clone(),
                cell_line: r.cell_line.clone(),
                domain: r.domain,
                active: r.active,
                embedding,
            })
        })
        .collect();
    Ok((out, skipped))
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write embeddings in the shared CSV schema. All rows must share one
/// embedding width.
pub fn export_embeddings_csv(path: &Path, records: &[EmbeddedRecord]) -> Result<(), DataError> {
    let width = records.first().map_or(0, |r| r.embedding.len());
    assert!(
        records.iter().all(|r| r.embedding.len() == width),
        "mixed embedding widths"
    );
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = String::from("record_id,compound_id,cell_line,domain,active");
    for i in 0..width {
        header.push_str(&format!(",e{i}"));
    }
    writeln!(w, "{header}").map_err(|e| io_err(path, e))?;
    for r in records {
        write!(
            w,
            "{},{},{},{},{}",
            r.record_id, r.compound_id, r.cell_line, r.domain, r.active
        )
        .map_err(|e| io_err(path, e))?;
        for v in &r.embedding {
            write!(w, ",{v}").map_err(|e| io_err(path, e))?;
        }
        writeln!(w).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Read an embeddings CSV of any width. Every row is renormalized to unit
/// length; a warning is printed when any stored norm deviates from 1 by
/// more than 1e-6.
pub fn import_embeddings_csv(path: &Path) -> Result<(Vec<EmbeddedRecord>, ImportReport), DataError> {
    let malformed = |line: u64, reason: String| DataError::MalformedRow {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io_err(path, source),
            other => malformed(0, format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let fixed = ["record_id", "compound_id", "cell_line", "domain", "active"];
    for (i, name) in fixed.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(DataError::MissingColumn {
                path: path.display().to_string(),
                column: name.to_string(),
            });
        }
    }
    let width = headers.len().saturating_sub(fixed.len());
    if width == 0 {
        return Err(DataError::MissingColumn {
            path: path.display().to_string(),
            column: "e0".to_string(),
        });
    }

    let mut out = Vec::new();
    let mut report = ImportReport {
        width,
        ..ImportReport::default()
    };
    for (idx, row) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        if row.len() != headers.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", headers.len(), row.len()),
            ));
        }
        let domain: Domain = row[3]
            .parse()
            .map_err(|e: String| malformed(line, e))?;
        let active = match &row[4] {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(malformed(line, format!("bad active flag '{other}'"))),
        };
        let mut embedding = Vec::with_capacity(width);
        for (j, field) in row.iter().skip(fixed.len()).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| malformed(line, format!("non-numeric value '{field}' in e{j}")))?;
            embedding.push(v);
        }
        let norm = embedding.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            report.zero_rows += 1;
        } else {
            if (norm - 1.0).abs() > 1e-6 {
                report.renormalized += 1;
            }
            for v in &mut embedding {
                *v /= norm;
            }
        }
        out.push(EmbeddedRecord {
            record_id: row[0].to_string(),
            compound_id: row[1].to_string(),
            cell_line: row[2].to_string(),
            domain,
            active,
            embedding,
        });
        report.rows += 1;
    }
    if report.renormalized > 0 {
        eprintln!(
            "warning: {}: {} of {} embedding rows deviated from unit norm by more \
             than 1e-6 and were renormalized",
            path.display(),
            report.renormalized,
            report.rows
        );
    }
    if report.zero_rows > 0 {
        eprintln!(
            "warning: {}: {} all-zero embedding rows kept as zeros",
            path.display(),
            report.zero_rows
        );
    }
    Ok((out, report))
}
