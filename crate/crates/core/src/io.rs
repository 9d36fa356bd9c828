// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk formats.
//!
//! Series sets are stored either as one JSON document or as CSV: a
//! metadata file (`series_id,class,length,change_point,magnitude`), a values
//! file (`series_id,v0,v1,...`) and the generating spec as JSON. Floats are
//! written in shortest round-trip form, so both formats reload bit-exactly.
//!
//! Binarized datasets use a little-endian binary layout, with the grid in a
//! JSON sidecar (`train.bin` next to `train.grid.json`):
//!
//! ```text
//! magic   b"NBSBITS1"
//! u64     rows N
//! u64     columns P
//! u64     class count K
//! [u64]   N rows of ceil(P / 64) words, column j at bit j % 64 of word j / 64
//! [u8; N] labels
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::datagen::{DatasetSpec, LabeledSeriesSet, SeriesClass, TimeSeries};
use crate::error::{Error, Result};
use crate::indicators::{BinaryDataset, IndicatorGrid};

const BITS_MAGIC: &[u8; 8] = b"NBSBITS1";

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_series_json(set: &LabeledSeriesSet, path: &Path) -> Result<()> {
    write_file(path, serde_json::to_vec(set)?)
}

pub fn read_series_json(path: &Path) -> Result<LabeledSeriesSet> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Paths of the three CSV-format files for a dataset named `stem` in `dir`.
pub fn csv_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}.meta.csv")),
        dir.join(format!("{stem}.values.csv")),
        dir.join(format!("{stem}.spec.json")),
    )
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    series_id: usize,
    class: String,
    length: usize,
    change_point: Option<usize>,
    magnitude: Option<f64>,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        _ => Error::format(path, message),
    }
}

pub fn write_series_csv(set: &LabeledSeriesSet, dir: &Path, stem: &str) -> Result<()> {
    let (meta_path, values_path, spec_path) = csv_paths(dir, stem);
    let mut meta = csv_writer(&meta_path)?;
    let mut values = csv_writer(&values_path)?;
    for (id, s) in set.series.iter().enumerate() {
        meta.serialize(MetaRecord {
            series_id: id,
            class: s.class.name().to_string(),
            length: s.len(),
            change_point: s.change_point,
            magnitude: s.anomaly_magnitude,
        })
        .map_err(|e| csv_error(&meta_path, e))?;
        let row = std::iter::once(id.to_string()).chain(s.values.iter().map(f64::to_string));
        values
            .write_record(row)
            .map_err(|e| csv_error(&values_path, e))?;
    }
    meta.flush().map_err(|e| Error::io(&meta_path, e))?;
    values.flush().map_err(|e| Error::io(&values_path, e))?;
    write_file(&spec_path, serde_json::to_vec_pretty(&set.spec)?)
}

pub fn read_series_csv(dir: &Path, stem: &str) -> Result<LabeledSeriesSet> {
    let (meta_path, values_path, spec_path) = csv_paths(dir, stem);
    let spec: DatasetSpec = serde_json::from_str(&read_to_string(&spec_path)?)
        .map_err(|e| Error::format(&spec_path, e.to_string()))?;
    let mut meta = csv::Reader::from_path(&meta_path).map_err(|e| csv_error(&meta_path, e))?;
    let mut values = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(&values_path)
        .map_err(|e| csv_error(&values_path, e))?;

    let mut series = Vec::new();
    let mut value_rows = values.records();
    for record in meta.deserialize() {
        let m: MetaRecord = record.map_err(|e| csv_error(&meta_path, e))?;
        let id = m.series_id;
        let class = SeriesClass::from_name(&m.class).ok_or_else(|| {
            Error::format(
                &meta_path,
                format!("series {id}: unknown class {}", m.class),
            )
        })?;
        let row = value_rows
            .next()
            .ok_or_else(|| Error::format(&values_path, format!("missing values for series {id}")))?
            .map_err(|e| csv_error(&values_path, e))?;
        let mut fields = row.iter();
        let vid = fields.next().and_then(|f| f.parse::<usize>().ok());
        if vid != Some(id) {
            return Err(Error::format(
                &values_path,
                format!("expected series {id}, found {:?}", row.get(0)),
            ));
        }
        let values = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(&values_path, format!("series {id}: {e}")))?;
        if values.len() != m.length {
            return Err(Error::format(
                &meta_path,
                format!("series {id}: length does not match the values file"),
            ));
        }
        series.push(TimeSeries {
            values,
            class,
            change_point: m.change_point,
            anomaly_magnitude: m.magnitude,
        });
    }
    Ok(LabeledSeriesSet { series, spec })
}

/// Grid sidecar written next to a binarized dataset file.
pub fn grid_sidecar(path: &Path) -> PathBuf {
    path.with_extension("grid.json")
}

pub fn write_bits(data: &BinaryDataset, path: &Path) -> Result<()> {
    let (rows, cols) = (data.n_rows(), data.n_features());
    let row_words = cols.div_ceil(64);
    let mut buf = Vec::with_capacity(32 + rows * row_words * 8 + rows);
    buf.extend_from_slice(BITS_MAGIC);
    for v in [rows, cols, data.class_count] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let mut packed = vec![0u64; row_words];
    for i in 0..rows {
        packed.iter_mut().for_each(|w| *w = 0);
        for j in 0..cols {
            if data.bits.get(i, j) {
                packed[j / 64] |= 1 << (j % 64);
            }
        }
        for w in &packed {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
    buf.extend(data.labels.iter().map(|&l| l as u8));
    write_file(path, buf)?;
    write_file(&grid_sidecar(path), serde_json::to_vec(&data.grid)?)
}

pub fn read_bits(path: &Path) -> Result<BinaryDataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 32 || &bytes[..8] != BITS_MAGIC {
        return Err(Error::format(path, "not a binarized dataset"));
    }
    let header =
        |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
    let (rows, cols, class_count) = (header(0), header(1), header(2));
    let row_words = cols.div_ceil(64);
    let expected = rows
        .checked_mul(row_words * 8)
        .and_then(|b| b.checked_add(32 + rows))
        .ok_or_else(|| Error::format(path, "header sizes overflow"))?;
    if bytes.len() < expected {
        return Err(Error::format(path, "truncated file"));
    }
    if bytes.len() > expected {
        return Err(Error::format(path, "trailing bytes"));
    }
    let mut bits = BitMatrix::zeros(rows, cols);
    for (i, chunk) in bytes[32..32 + rows * row_words * 8]
        .chunks_exact(row_words * 8)
        .enumerate()
    {
        for (wi, w) in chunk.chunks_exact(8).enumerate() {
            let mut w = u64::from_le_bytes(w.try_into().unwrap());
            while w != 0 {
                let j = wi * 64 + w.trailing_zeros() as usize;
                if j >= cols {
                    return Err(Error::format(
                        path,
                        format!("row {i} sets bit {j} beyond {cols} columns"),
                    ));
                }
                bits.set(i, j, true);
                w &= w - 1;
            }
        }
    }
    let labels = bytes[expected - rows..]
        .iter()
        .map(|&b| b as usize)
        .collect();

    let sidecar = grid_sidecar(path);
    let grid: IndicatorGrid = serde_json::from_str(&read_to_string(&sidecar)?)
        .map_err(|e| Error::format(&sidecar, e.to_string()))?;
    BinaryDataset::new(bits, labels, class_count, grid)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// One row per instance: the class name, then one 0/1 column per
/// indicator headed by its label.
pub fn write_bits_csv(data: &BinaryDataset, path: &Path) -> Result<()> {
    let mut out = csv_writer(path)?;
    let header = std::iter::once("class".to_string())
        .chain(data.grid.indicators.iter().map(|ind| ind.label()));
    out.write_record(header).map_err(|e| csv_error(path, e))?;
    for i in 0..data.n_rows() {
        let class = SeriesClass::from_index(data.labels[i])
            .map_or_else(|| data.labels[i].to_string(), |c| c.name().to_string());
        let bits = (0..data.n_features()).map(|j| if data.bits.get(i, j) { "1" } else { "0" });
        out.write_record(std::iter::once(class.as_str()).chain(bits))
            .map_err(|e| csv_error(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_dataset;
    use crate::indicators::{binarize, build_grid};
    use crate::stats::TestFamily;

    #[test]
    fn series_formats_reload_exactly() {
        let set = gen_dataset(&DatasetSpec::benchmark(4).with_counts(3, 2)).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        write_series_json(&set, &dir.join("s.json")).unwrap();
        assert_eq!(read_series_json(&dir.join("s.json")).unwrap(), set);
        write_series_csv(&set, dir, "s").unwrap();
        assert_eq!(read_series_csv(dir, "s").unwrap(), set);
    }

    #[test]
    fn bits_reload_exactly() {
        let set = gen_dataset(&DatasetSpec::benchmark(5).with_counts(40, 10)).unwrap();
        let grid = build_grid(
            &[TestFamily::MannWhitneyU, TestFamily::FVariance],
            &[20],
            &[0.01, 0.2],
            &[false, true],
        )
        .unwrap();
        let data = binarize(&set, &grid);
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let path = dir.join("d.bin");
        write_bits(&data, &path).unwrap();
        assert_eq!(read_bits(&path).unwrap(), data);

        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_bits(&path), Err(Error::Format { .. })));

        write_bits_csv(&data, &dir.join("d.csv")).unwrap();
        let csv = fs::read_to_string(dir.join("d.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), data.n_rows() + 1);
        assert_eq!(lines[0].split(',').count(), data.n_features() + 1);
        let row: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(
            row[0],
            SeriesClass::from_index(data.labels[0]).unwrap().name()
        );
        for j in 0..data.n_features() {
            assert_eq!(row[j + 1] == "1", data.bits.get(0, j));
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_bits(Path::new("/nonexistent/nbselect.bin")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/nbselect.bin"));
    }
}
