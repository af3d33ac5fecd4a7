//! Plain-text snapshots of complex fields.
//!
//! ```text
//! # scatlab field v1
//! # dim=1 points=1024 half_width=1.25663706143591730e2 time=0.00000000000000000e0
//! x,re,im
//! -1.25663706143591730e2,1.2e-300,0.0
//! ...
//! ```
//!
//! Two-dimensional fields carry `x,y,re,im` columns in row-major order.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::make_grid;

const MAGIC: &str = "# scatlab field v1";
/// Refuse to allocate grids beyond this many samples when decoding.
const MAX_SAMPLES: usize = 1 << 24;

pub fn field_to_csv(f: &WaveField) -> String {
    let g = &f.grid;
    let mut out = String::with_capacity(64 * g.len());
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "# dim={} points={} half_width={:.17e} time={:.17e}", g.dim(), g.points_per_axis(), g.half_width(), f.time);
    out.push_str(if g.dim() == 1 { "x,re,im\n" } else { "x,y,re,im\n" });
    for (idx, v) in f.values.iter().enumerate() {
        for axis in 0..g.dim() {
            let _ = write!(out, "{:.17e},", g.x_at(idx, axis));
        }
        let _ = writeln!(out, "{:.17e},{:.17e}", v.re, v.im);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn header_value<'a>(fields: &'a [(&'a str, &'a str)], key: &str, line: usize) -> Result<&'a str> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| parse_err(line, format!("missing {key}")))
}

pub fn field_from_csv(text: &str) -> Result<WaveField> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(parse_err(1, "missing field header")),
    }
    let (hl, meta) = lines.next().ok_or_else(|| parse_err(2, "missing metadata line"))?;
    let meta = meta.strip_prefix('#').ok_or_else(|| parse_err(hl, "metadata line must start with '#'"))?;
    let pairs: Vec<(&str, &str)> = meta.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
    let dim: usize = header_value(&pairs, "dim", hl)?.parse().map_err(|_| parse_err(hl, "bad dim"))?;
    let points: usize = header_value(&pairs, "points", hl)?.parse().map_err(|_| parse_err(hl, "bad points"))?;
    let half_width: f64 = header_value(&pairs, "half_width", hl)?.parse().map_err(|_| parse_err(hl, "bad half_width"))?;
    let time: f64 = header_value(&pairs, "time", hl)?.parse().map_err(|_| parse_err(hl, "bad time"))?;
    if !time.is_finite() {
        return Err(parse_err(hl, "time must be finite"));
    }
    if !(dim == 1 || dim == 2) {
        return Err(parse_err(hl, format!("dimension {dim} not in {{1, 2}}")));
    }
    let total = points.checked_pow(dim as u32).filter(|t| *t <= MAX_SAMPLES).ok_or_else(|| parse_err(hl, "grid too large"))?;

    let (cl, columns) = lines.next().ok_or_else(|| parse_err(3, "missing column line"))?;
    let expected = if dim == 1 { "x,re,im" } else { "x,y,re,im" };
    if columns != expected {
        return Err(parse_err(cl, format!("expected columns '{expected}'")));
    }
    let rows: Vec<(usize, &str)> = lines.filter(|(_, l)| !l.is_empty()).collect();
    if rows.len() != total {
        return Err(parse_err(cl, format!("expected {total} rows, found {}", rows.len())));
    }
    let grid = make_grid(dim, points, half_width).map_err(|e| parse_err(hl, e.to_string()))?;
    let mut values = Vec::with_capacity(total);
    for (idx, (ln, row)) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != dim + 2 {
            return Err(parse_err(*ln, format!("expected {} columns", dim + 2)));
        }
        let nums: Vec<f64> = cells
            .iter()
            .map(|c| c.trim().parse::<f64>().map_err(|_| parse_err(*ln, format!("bad number '{c}'"))))
            .collect::<Result<_>>()?;
        for (axis, got) in nums[..dim].iter().enumerate() {
            let x = grid.x_at(idx, axis);
            if (got - x).abs() > 1e-9 * half_width.max(1.0) {
                return Err(parse_err(*ln, format!("coordinate {got} does not match the grid ({x})")));
            }
        }
        values.push(Complex64::new(nums[dim], nums[dim + 1]));
    }
    WaveField::from_values(&grid, values, time)
}

pub fn write_field(path: &Path, f: &WaveField) -> Result<()> {
    std::fs::write(path, field_to_csv(f))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<WaveField> {
    field_from_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaussianDatum;
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_exact() {
        for dim in [1, 2] {
            let g = make_grid(dim, 32, 7.5).unwrap();
            let f =
                GaussianDatum { amplitude: 1.1, width: 1.3, center: vec![0.2, -0.1], velocity: vec![0.7, 0.3] }.sample(&g).with_time(2.5);
            let back = field_from_csv(&field_to_csv(&f)).unwrap();
            assert_eq!(back.values, f.values);
            assert_eq!(back.time, 2.5);
            assert!(back.grid.same_as(&f.grid));
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(1, 16, 3.0).unwrap();
        let f = GaussianDatum::standard(0.5).sample(&g);
        let path = dir.path().join("f.csv");
        write_field(&path, &f).unwrap();
        assert_eq!(read_field(&path).unwrap().values, f.values);
    }

    #[test]
    fn rejects_malformed_input() {
        let g = make_grid(1, 16, 3.0).unwrap();
        let good = field_to_csv(&GaussianDatum::standard(1.0).sample(&g));
        assert!(field_from_csv("").is_err());
        assert!(field_from_csv(&good.replace("points=16", "points=17")).is_err());
        assert!(field_from_csv(&good.replace("points=16", "points=4096")).is_err());
        assert!(field_from_csv(&good.replace("dim=1", "dim=3")).is_err());
        assert!(field_from_csv(&good.replace("x,re,im", "x,im,re")).is_err());
        let truncated: String = good.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(field_from_csv(&truncated), Err(Error::Parse { .. })));
        let shifted = good.replacen("-3.00000000000000000e0", "-2.00000000000000000e0", 1);
        assert!(matches!(field_from_csv(&shifted), Err(Error::Parse { line: 4, .. })));
        let nan = good.replacen(",0.00000000000000000e0\n", ",NaN\n", 1);
        assert!(field_from_csv(&nan).is_err());
    }

    proptest! {
        #[test]
        fn decoder_never_panics(text in ".{0,400}") {
            let _ = field_from_csv(&text);
        }

        #[test]
        fn decoder_handles_mutated_headers(points in 0usize..70000, dim in 0usize..4) {
            let text = format!("{MAGIC}\n# dim={dim} points={points} half_width=1 time=0\nx,re,im\n");
            let _ = field_from_csv(&text);
        }
    }
}
