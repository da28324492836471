//! CSV ingestion and writing.
//!
//! Segments file: header row, `segment_id` plus one column per declared
//! segment covariate. Panel file: header row, `segment_id, month, avc_count`
//! plus one column per declared time-varying covariate. Extra columns are
//! ignored so a wide export can be used directly; the schema selects what
//! enters the model.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::data::{DataSchema, Dataset, PanelCell, SegmentCovariates};
use crate::error::{Error, Result};

fn ingest_err(file: &Path, row: u64, message: impl Into<String>) -> Error {
    Error::Ingestion {
        file: file.display().to_string(),
        row,
        message: message.into(),
    }
}

struct Header {
    /// Column index per requested name.
    columns: Vec<usize>,
}

fn resolve_header(
    file: &Path,
    headers: &csv::StringRecord,
    names: &[&str],
) -> Result<Header> {
    let mut columns = Vec::with_capacity(names.len());
    for name in names {
        match headers.iter().position(|h| h.trim() == *name) {
            Some(i) => columns.push(i),
            None => {
                return Err(ingest_err(
                    file,
                    1,
                    format!("missing column `{name}` (header: {headers:?})"),
                ))
            }
        }
    }
    Ok(Header { columns })
}

fn parse_field(file: &Path, row: u64, name: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        ingest_err(
            file,
            row,
            format!("non-numeric value `{raw}` in column `{name}`"),
        )
    })
}

/// Load and validate a dataset from the two CSV files.
pub fn load_dataset(
    segments_path: &Path,
    panel_path: &Path,
    schema: &DataSchema,
) -> Result<Dataset> {
    schema.validate()?;

    let mut reader = csv::Reader::from_path(segments_path)?;
    let names: Vec<&str> = std::iter::once("segment_id")
        .chain(schema.x_names.iter().map(String::as_str))
        .collect();
    let header = resolve_header(segments_path, reader.headers()?, &names)?;

    let mut segments = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let id = record
            .get(header.columns[0])
            .unwrap_or_default()
            .trim()
            .to_string();
        if id.is_empty() {
            return Err(ingest_err(segments_path, row, "empty segment_id"));
        }
        if index_of.contains_key(&id) {
            return Err(ingest_err(
                segments_path,
                row,
                format!("duplicate segment_id `{id}`"),
            ));
        }
        let mut x = Vec::with_capacity(schema.x_dim());
        for (name, &col) in schema.x_names.iter().zip(&header.columns[1..]) {
            let raw = record.get(col).unwrap_or_default();
            x.push(parse_field(segments_path, row, name, raw)?);
        }
        index_of.insert(id.clone(), segments.len());
        segments.push(SegmentCovariates { id, x });
    }
    if segments.is_empty() {
        return Err(ingest_err(segments_path, 0, "no segment rows"));
    }

    let mut reader = csv::Reader::from_path(panel_path)?;
    let names: Vec<&str> = ["segment_id", "month", "avc_count"]
        .into_iter()
        .chain(schema.y_names.iter().map(String::as_str))
        .collect();
    let header = resolve_header(panel_path, reader.headers()?, &names)?;

    let mut cells = Vec::new();
    let mut seen = vec![false; segments.len() * schema.months as usize];
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let id = record.get(header.columns[0]).unwrap_or_default().trim();
        let segment = *index_of.get(id).ok_or_else(|| {
            ingest_err(panel_path, row, format!("unknown segment_id `{id}`"))
        })?;
        let month: u32 = record
            .get(header.columns[1])
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| ingest_err(panel_path, row, "month must be a positive integer"))?;
        if month == 0 || month > schema.months {
            return Err(ingest_err(
                panel_path,
                row,
                format!("month {month} out of range 1..={}", schema.months),
            ));
        }
        let count_raw = record.get(header.columns[2]).unwrap_or_default().trim();
        let count: i64 = count_raw.parse().map_err(|_| {
            ingest_err(
                panel_path,
                row,
                format!("non-numeric avc_count `{count_raw}`"),
            )
        })?;
        if count < 0 {
            return Err(ingest_err(
                panel_path,
                row,
                format!("avc_count must be nonnegative, got {count}"),
            ));
        }
        let flat = segment * schema.months as usize + (month - 1) as usize;
        if seen[flat] {
            return Err(ingest_err(
                panel_path,
                row,
                format!("duplicate (segment `{id}`, month {month}) pair"),
            ));
        }
        seen[flat] = true;
        let mut y = Vec::with_capacity(schema.y_dim());
        for (name, &col) in schema.y_names.iter().zip(&header.columns[3..]) {
            let raw = record.get(col).unwrap_or_default();
            y.push(parse_field(panel_path, row, name, raw)?);
        }
        cells.push(PanelCell {
            segment,
            month,
            count: count as u32,
            y,
        });
    }
    if let Some(flat) = seen.iter().position(|&s| !s) {
        let seg = &segments[flat / schema.months as usize].id;
        let month = flat % schema.months as usize + 1;
        return Err(ingest_err(
            panel_path,
            0,
            format!("incomplete panel: missing (segment `{seg}`, month {month})"),
        ));
    }

    Dataset::new(schema.clone(), segments, cells)
}

/// Write a dataset back to the two-file CSV layout. Floats use the shortest
/// round-trip representation, so a write/load cycle reproduces every field.
pub fn write_dataset(dataset: &Dataset, segments_path: &Path, panel_path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(segments_path)?);
    write!(out, "segment_id")?;
    for name in &dataset.schema.x_names {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for seg in &dataset.segments {
        write!(out, "{}", seg.id)?;
        for v in &seg.x {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;

    let mut out = std::io::BufWriter::new(std::fs::File::create(panel_path)?);
    write!(out, "segment_id,month,avc_count")?;
    for name in &dataset.schema.y_names {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for cell in dataset.cells() {
        write!(
            out,
            "{},{},{}",
            dataset.segments[cell.segment].id, cell.month, cell.count
        )?;
        for v in &cell.y {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> DataSchema {
        DataSchema::new(
            vec!["speed_limit".into(), "urban".into()],
            vec!["rainfall".into()],
            3,
        )
        .unwrap()
    }

    fn write_file(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn good_segments() -> &'static str {
        "segment_id,speed_limit,urban\nA,60,0\nB,45,1\n"
    }

    fn good_panel() -> String {
        let mut s = String::from("segment_id,month,avc_count,rainfall\n");
        for id in ["A", "B"] {
            for m in 1..=3 {
                s.push_str(&format!("{id},{m},0,1.5\n"));
            }
        }
        s
    }

    #[test]
    fn loads_well_formed_files() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(dir.path(), "segments.csv", good_segments());
        let pan = write_file(dir.path(), "panel.csv", &good_panel());
        let ds = load_dataset(&seg, &pan, &schema()).unwrap();
        assert_eq!(ds.num_segments(), 2);
        assert_eq!(ds.months(), 3);
        assert_eq!(ds.cell(1, 2).y, vec![1.5]);
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(dir.path(), "segments.csv", "segment_id,speed_limit\nA,60\n");
        let pan = write_file(dir.path(), "panel.csv", &good_panel());
        let err = load_dataset(&seg, &pan, &schema()).unwrap_err();
        assert!(err.to_string().contains("missing column `urban`"), "{err}");
    }

    #[test]
    fn missing_cell_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(dir.path(), "segments.csv", good_segments());
        let panel = good_panel().replace("B,2,0,1.5\n", "");
        let pan = write_file(dir.path(), "panel.csv", &panel);
        let err = load_dataset(&seg, &pan, &schema()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing (segment `B`, month 2)"), "{msg}");
    }

    #[test]
    fn negative_count_is_rejected_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(dir.path(), "segments.csv", good_segments());
        let panel = good_panel().replace("A,2,0,1.5", "A,2,-1,1.5");
        let pan = write_file(dir.path(), "panel.csv", &panel);
        let err = load_dataset(&seg, &pan, &schema()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nonnegative"), "{msg}");
        assert!(msg.contains("row 3"), "{msg}");
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(dir.path(), "segments.csv", good_segments());
        let panel = format!("{}A,1,0,9.0\n", good_panel());
        let pan = write_file(dir.path(), "panel.csv", &panel);
        let err = load_dataset(&seg, &pan, &schema()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn non_numeric_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(
            dir.path(),
            "segments.csv",
            "segment_id,speed_limit,urban\nA,fast,0\nB,45,1\n",
        );
        let pan = write_file(dir.path(), "panel.csv", &good_panel());
        let err = load_dataset(&seg, &pan, &schema()).unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn roundtrip_preserves_all_fields() {
        let dir = tempfile::tempdir().unwrap();
        let seg = write_file(dir.path(), "segments.csv", good_segments());
        let pan = write_file(dir.path(), "panel.csv", &good_panel());
        let ds = load_dataset(&seg, &pan, &schema()).unwrap();

        let seg2 = dir.path().join("segments2.csv");
        let pan2 = dir.path().join("panel2.csv");
        write_dataset(&ds, &seg2, &pan2).unwrap();
        let ds2 = load_dataset(&seg2, &pan2, &schema()).unwrap();
        assert_eq!(ds, ds2);
    }
}
