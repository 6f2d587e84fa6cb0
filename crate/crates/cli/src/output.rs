//! Artifact writers: grid binary, PGM rasters, CSV and the JSON sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use spatial_sim::mcmc::{write_trace_csv, TraceRow};
use spatial_sim::pointproc::PointPattern;
use spatial_sim::{Field, MaskedField};

use crate::{CliError, Format};

/// One output of a generator run.
pub enum Artifact {
    Field(Field),
    Masked(MaskedField),
    Points(PointPattern),
    /// MCMC trace, one row per step.
    Trace(Vec<TraceRow>),
    /// Numeric table with a CSV header.
    Table { header: String, rows: Vec<Vec<f64>> },
}

impl Artifact {
    pub fn supports(&self, f: Format) -> bool {
        matches!(
            (self, f),
            (Artifact::Field(_) | Artifact::Masked(_), Format::GridBinary | Format::Pgm)
                | (Artifact::Points(_) | Artifact::Trace(_) | Artifact::Table { .. }, Format::Csv)
        )
    }

    pub fn default_format(&self) -> Format {
        match self {
            Artifact::Field(_) | Artifact::Masked(_) => Format::GridBinary,
            _ => Format::Csv,
        }
    }

    fn write(&self, f: Format, path: &Path) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
        let r = match (self, f) {
            (Artifact::Field(x), Format::GridBinary) => x.write_binary(&mut w),
            (Artifact::Masked(x), Format::GridBinary) => x.write_binary(&mut w),
            (Artifact::Field(x), Format::Pgm) => {
                w.write_all(&pgm_bytes(x, None)).map_err(Into::into)
            }
            (Artifact::Masked(x), Format::Pgm) => {
                w.write_all(&pgm_bytes(&x.field, Some(x.mask.as_slice().expect("standard layout")))).map_err(Into::into)
            }
            (Artifact::Points(p), Format::Csv) => p.write_csv(&mut w),
            (Artifact::Trace(t), Format::Csv) => write_trace_csv(t, &mut w),
            (Artifact::Table { header, rows }, Format::Csv) => write_table(&mut w, header, rows).map_err(Into::into),
            _ => unreachable!("format support is checked before writing"),
        };
        r.map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
        w.flush().map_err(|e| io_err(path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Run(format!("{}: {e}", path.display()))
}

fn write_table<W: Write>(w: &mut W, header: &str, rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(w, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::GridBinary => "spgf",
        Format::Pgm => "pgm",
        Format::Csv => "csv",
        Format::JsonMeta => "meta.json",
    }
}

/// `prefix[_NNNN][.suffix].ext`
pub fn artifact_path(prefix: &Path, realization: Option<usize>, suffix: &str, f: Format) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(k) = realization {
        name.push_str(&format!("_{k:04}"));
    }
    if !suffix.is_empty() {
        name.push('.');
        name.push_str(suffix);
    }
    name.push('.');
    name.push_str(extension(f));
    prefix.with_file_name(name)
}

/// Writes every artifact in every requested format it supports; with no
/// formats requested each artifact uses its default.
pub fn write_artifacts(
    prefix: &Path,
    realization: Option<usize>,
    artifacts: &[(String, Artifact)],
    formats: &[Format],
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for (suffix, a) in artifacts {
        let wanted: Vec<Format> = if formats.is_empty() {
            vec![a.default_format()]
        } else {
            formats.iter().copied().filter(|&f| a.supports(f)).collect()
        };
        for f in wanted {
            let path = artifact_path(prefix, realization, suffix, f);
            a.write(f, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Binary PGM (`P5`, maxval 255) with per-file min/max scaling; constant
/// fields map to 128 and cells with mask byte 0 to 0. Rows are written in
/// array order.
pub fn pgm_bytes(field: &Field, mask: Option<&[u8]>) -> Vec<u8> {
    let (ny, nx) = field.values.dim();
    let vals: Vec<f64> = field.values.iter().copied().collect();
    let live = |k: usize| mask.is_none_or(|m| m[k] != 0);
    let (lo, hi) = (0..vals.len())
        .filter(|&k| live(k))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(vals[k]), hi.max(vals[k])));
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.extend((0..vals.len()).map(|k| {
        if !live(k) {
            0
        } else if hi > lo {
            (255.0 * (vals[k] - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
        } else {
            128
        }
    }));
    out
}

pub fn write_pgm(field: &Field, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, pgm_bytes(field, None))
}

pub fn write_pgm_masked(field: &MaskedField, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, pgm_bytes(&field.field, Some(field.mask.as_slice().expect("standard layout"))))
}

/// Metadata sidecar; enough to rerun the command with `replay`.
#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct Sidecar {
    pub subcommand: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seed: u64,
    pub version: String,
}

pub fn write_sidecar(prefix: &Path, meta: &Sidecar) -> Result<PathBuf, CliError> {
    let path = artifact_path(prefix, None, "", Format::JsonMeta);
    let text = serde_json::to_string_pretty(meta).expect("sidecar serializes");
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use spatial_sim::Grid2D;

    fn field(ny: usize, nx: usize, v: Vec<f64>) -> Field {
        Field::new(Grid2D::new(nx, ny, 1.0, 1.0, (0.0, 0.0)).unwrap(), Array2::from_shape_vec((ny, nx), v).unwrap()).unwrap()
    }

    fn split_header(b: &[u8]) -> (String, &[u8]) {
        // three newline-terminated header lines
        let mut seen = 0;
        let end = b.iter().position(|&c| {
            seen += (c == b'\n') as usize;
            seen == 3
        });
        let end = end.unwrap() + 1;
        (String::from_utf8(b[..end].to_vec()).unwrap(), &b[end..])
    }

    #[test]
    fn constant_field_is_mid_grey() {
        let b = pgm_bytes(&field(1, 1, vec![3.7]), None);
        assert_eq!(b, b"P5\n1 1\n255\n\x80");
    }

    #[test]
    fn two_levels_map_to_black_and_white() {
        let b = pgm_bytes(&field(1, 4, vec![0.0, 1.0, 1.0, 0.0]), None);
        let (_, px) = split_header(&b);
        assert_eq!(px, &[0, 255, 255, 0]);
    }

    #[test]
    fn dimensions_follow_the_grid() {
        let f = field(3, 5, (0..15).map(f64::from).collect());
        let b = pgm_bytes(&f, None);
        let (h, px) = split_header(&b);
        assert_eq!(h, "P5\n5 3\n255\n");
        assert_eq!(px.len(), 15);
        assert_eq!((px[0], px[14]), (0, 255));
    }

    #[test]
    fn masked_cells_are_black_and_excluded_from_scaling() {
        let f = field(1, 3, vec![100.0, 1.0, 2.0]);
        let b = pgm_bytes(&f, Some(&[0, 1, 1]));
        let (_, px) = split_header(&b);
        assert_eq!(px, &[0, 0, 255]);
    }

    #[test]
    fn artifact_names() {
        let p = Path::new("/tmp/run");
        assert_eq!(artifact_path(p, None, "", Format::GridBinary), Path::new("/tmp/run.spgf"));
        assert_eq!(artifact_path(p, Some(3), "trace", Format::Csv), Path::new("/tmp/run_0003.trace.csv"));
        assert_eq!(artifact_path(p, None, "", Format::JsonMeta), Path::new("/tmp/run.meta.json"));
    }
}
