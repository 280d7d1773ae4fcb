//! The placement CSV format: one header row, one record per row.
//!
//! ```text
//! comp_size,comp_type,pad_size,pad_gap,pad_length,pad_width,vol_avg,vol_diff,
//! paste_x1,paste_y1,paste_x2,paste_y2,pre_x,pre_y,pre_theta[,post_x,post_y,post_theta]
//! ```
//!
//! Units are um, % and degrees; the three post columns are omitted (or left
//! empty) for unlabeled rows.

use std::io::{Read, Write};
use std::path::Path;

use smtplace_core::domain::{
    ComponentDirectory, ComponentSize, ComponentType, PadGap, PadSize, PasteState, PlacementRecord,
    PlacementSetting, PostOffsets,
};

use crate::error::{CliError, Result};

pub const INPUT_COLUMNS: [&str; 15] = [
    "comp_size",
    "comp_type",
    "pad_size",
    "pad_gap",
    "pad_length",
    "pad_width",
    "vol_avg",
    "vol_diff",
    "paste_x1",
    "paste_y1",
    "paste_x2",
    "paste_y2",
    "pre_x",
    "pre_y",
    "pre_theta",
];

pub const TARGET_COLUMNS: [&str; 3] = ["post_x", "post_y", "post_theta"];

fn check_header(path: &Path, header: &csv::StringRecord) -> Result<bool> {
    let expected = INPUT_COLUMNS.iter().chain(TARGET_COLUMNS.iter());
    for (k, (found, want)) in header.iter().zip(expected).enumerate() {
        if found.trim() != *want {
            return Err(CliError::input(
                path,
                format!("column {}: expected `{want}`, found `{found}`", k + 1),
            ));
        }
    }
    match header.len() {
        15 => Ok(false),
        18 => Ok(true),
        n if n < 15 => Err(CliError::input(
            path,
            format!("missing column `{}`", INPUT_COLUMNS[n]),
        )),
        n if n < 18 => Err(CliError::input(
            path,
            format!("missing column `{}`", TARGET_COLUMNS[n - 15]),
        )),
        _ => Err(CliError::input(
            path,
            format!("unexpected column `{}`", header.get(18).unwrap_or_default()),
        )),
    }
}

fn field<'r>(
    path: &Path,
    row: &'r csv::StringRecord,
    line: usize,
    k: usize,
    name: &str,
) -> Result<&'r str> {
    row.get(k)
        .map(str::trim)
        .ok_or_else(|| CliError::input(path, format!("row {line}: missing value for `{name}`")))
}

fn number(path: &Path, row: &csv::StringRecord, line: usize, name: &'static str) -> Result<f64> {
    let k = column_index(name);
    let text = field(path, row, line, k, name)?;
    let value: f64 = text.parse().map_err(|_| {
        CliError::input(
            path,
            format!("row {line}, column `{name}`: `{text}` is not a number"),
        )
    })?;
    if !value.is_finite() {
        return Err(CliError::input(
            path,
            format!("row {line}, column `{name}`: value must be finite"),
        ));
    }
    Ok(value)
}

fn column_index(name: &str) -> usize {
    INPUT_COLUMNS
        .iter()
        .chain(TARGET_COLUMNS.iter())
        .position(|c| *c == name)
        .expect("known column")
}

fn level<T>(path: &Path, line: usize, name: &str, parsed: smtplace_core::Result<T>) -> Result<T> {
    parsed.map_err(|e| CliError::input(path, format!("row {line}, column `{name}`: {e}")))
}

fn parse_row(
    path: &Path,
    row: &csv::StringRecord,
    line: usize,
    labeled: bool,
) -> Result<PlacementRecord> {
    let comp_size = level(
        path,
        line,
        "comp_size",
        ComponentSize::from_value(number(path, row, line, "comp_size")?),
    )?;
    let comp_type = level(
        path,
        line,
        "comp_type",
        ComponentType::from_code(field(path, row, line, 1, "comp_type")?),
    )?;
    let pad_size = level(
        path,
        line,
        "pad_size",
        PadSize::from_value(number(path, row, line, "pad_size")?),
    )?;
    let pad_gap = level(
        path,
        line,
        "pad_gap",
        PadGap::from_value(number(path, row, line, "pad_gap")?),
    )?;
    let directory = level(
        path,
        line,
        "pad_length",
        ComponentDirectory::new(
            comp_size,
            comp_type,
            pad_size,
            pad_gap,
            number(path, row, line, "pad_length")?,
            number(path, row, line, "pad_width")?,
        ),
    )?;
    let paste = PasteState {
        volume_avg_pct: number(path, row, line, "vol_avg")?,
        volume_diff_pct: number(path, row, line, "vol_diff")?,
        paste_offset_x1: number(path, row, line, "paste_x1")?,
        paste_offset_y1: number(path, row, line, "paste_y1")?,
        paste_offset_x2: number(path, row, line, "paste_x2")?,
        paste_offset_y2: number(path, row, line, "paste_y2")?,
    };
    level(path, line, "vol_avg", paste.validate())?;
    let placement = PlacementSetting::new(
        number(path, row, line, "pre_x")?,
        number(path, row, line, "pre_y")?,
        number(path, row, line, "pre_theta")?,
    );
    let targets = if labeled {
        let blank = (15..18)
            .filter(|&k| row.get(k).is_none_or(|v| v.trim().is_empty()))
            .count();
        match blank {
            3 => None,
            0 => Some(PostOffsets {
                post_x: number(path, row, line, "post_x")?,
                post_y: number(path, row, line, "post_y")?,
                post_theta: number(path, row, line, "post_theta")?,
            }),
            _ => {
                return Err(CliError::input(
                    path,
                    format!(
                        "row {line}: post_x, post_y and post_theta must be all set or all empty"
                    ),
                ))
            }
        }
    } else {
        None
    };
    Ok(PlacementRecord {
        directory,
        paste,
        placement,
        targets,
    })
}

/// Parses records from CSV text; `path` only labels error messages.
pub fn parse_records<R: Read>(reader: R, path: &Path) -> Result<Vec<PlacementRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| CliError::input(path, e.to_string()))?
        .clone();
    let labeled = check_header(path, &header)?;
    let mut out = Vec::new();
    for (k, row) in csv.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| CliError::input(path, e.to_string()))?;
        if row.len() != header.len() && !(labeled && row.len() == 15) {
            return Err(CliError::input(
                path,
                format!(
                    "row {line}: expected {} fields, found {}",
                    header.len(),
                    row.len()
                ),
            ));
        }
        out.push(parse_row(path, &row, line, labeled)?);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<PlacementRecord>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_records(std::io::BufReader::new(file), path)
}

/// Reads a file whose rows must all carry targets.
pub fn read_labeled(path: &Path) -> Result<Vec<PlacementRecord>> {
    let records = read_records(path)?;
    if let Some(k) = records.iter().position(|r| !r.is_labeled()) {
        return Err(CliError::input(
            path,
            format!("row {}: post offsets are required", k + 2),
        ));
    }
    Ok(records)
}

fn record_fields(r: &PlacementRecord) -> Vec<String> {
    let d = &r.directory;
    let p = &r.paste;
    let x = &r.placement;
    let mut fields = vec![
        d.component_size.value().to_string(),
        d.component_type.code().to_string(),
        d.pad_size.value().to_string(),
        d.pad_gap.value().to_string(),
        d.pad_length.to_string(),
        d.pad_width.to_string(),
        p.volume_avg_pct.to_string(),
        p.volume_diff_pct.to_string(),
        p.paste_offset_x1.to_string(),
        p.paste_offset_y1.to_string(),
        p.paste_offset_x2.to_string(),
        p.paste_offset_y2.to_string(),
        x.pre_offset_x.to_string(),
        x.pre_offset_y.to_string(),
        x.pre_offset_theta.to_string(),
    ];
    if let Some(t) = &r.targets {
        fields.extend([
            t.post_x.to_string(),
            t.post_y.to_string(),
            t.post_theta.to_string(),
        ]);
    }
    fields
}

/// Writes the full 18-column schema when any record is labeled, the
/// 15-column one otherwise. Floats use the shortest round-trip form.
pub fn write_records<W: Write>(writer: W, records: &[PlacementRecord]) -> std::io::Result<()> {
    let labeled = records.iter().any(|r| r.is_labeled());
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = INPUT_COLUMNS.to_vec();
    if labeled {
        header.extend(TARGET_COLUMNS);
    }
    csv.write_record(&header)?;
    for r in records {
        let mut fields = record_fields(r);
        fields.resize(header.len(), String::new());
        csv.write_record(&fields)?;
    }
    csv.flush()
}

pub fn save_records(path: &Path, records: &[PlacementRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records).map_err(|e| CliError::io(path, e))
}
