//! Plot-ready tables and a matplotlib script; nothing is rendered here.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::diagnostics::records_from_csv;
use crate::error::{Error, Result};
use crate::scattering::rate_fit;

use super::manifest::RunManifest;

const SCRIPT: &str = r#"#!/usr/bin/env python3
"""Render every plot_*.csv next to this script into a PNG."""
import csv
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "plot_*.csv"))):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    fig, ax = plt.subplots()
    if header[:3] == ["series", "time", "value"]:
        series = {}
        for name, t, v in data:
            series.setdefault(name, ([], []))
            series[name][0].append(float(t))
            series[name][1].append(float(v))
        for name, (ts, vs) in series.items():
            ax.plot(ts, vs, marker=".", label=name)
        ax.set_xlabel("time")
        ax.set_yscale("symlog", linthresh=1e-12)
    else:
        xs = [float(r[0]) for r in data]
        for j, name in enumerate(header[1:], start=1):
            ax.plot(xs, [float(r[j]) for r in data], marker=".", label=name)
        ax.set_xlabel(header[0])
    ax.legend()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)
"#;

fn read_table(text: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let cells: Vec<f64> = l
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: i + 1, msg: format!("non-numeric cell in '{l}'") })?;
            if cells.len() != columns {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {columns} columns") });
            }
            Ok(cells)
        })
        .collect()
}

/// Writes `plot_*.csv` tables and `plot.py` into the manifest's output
/// directory and returns their paths. An empty manifest produces nothing.
pub fn emit_plots(manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    if manifest.files.is_empty() {
        log::warn!("manifest for {} lists no files; no plots written", manifest.scenario);
        return Ok(Vec::new());
    }
    let dir = &manifest.output_dir;
    let mut inputs = Vec::new();
    for f in &manifest.files {
        let path = dir.join(&f.path);
        if !path.is_file() {
            return Err(Error::Config(format!("manifest references missing file {}", path.display())));
        }
        inputs.push((f.path.as_str(), path));
    }
    let read = |name: &str| -> Result<Option<String>> {
        match inputs.iter().find(|(n, _)| *n == name) {
            Some((_, p)) => Ok(Some(std::fs::read_to_string(p)?)),
            None => Ok(None),
        }
    };
    let mut tables: Vec<(&str, String)> = Vec::new();

    if let Some(text) = read("diagnostics.csv")? {
        let records = records_from_csv(&text)?;
        if !records.is_empty() {
            let names = crate::diagnostics::CSV_HEADER.split(',').skip(1);
            let mut out = String::from("series,time,value\n");
            for (j, name) in names.enumerate() {
                for r in &records {
                    let row = r.to_csv_row();
                    let cells: Vec<&str> = row.split(',').collect();
                    let _ = writeln!(out, "{name},{},{}", cells[0], cells[j + 1]);
                }
            }
            tables.push(("plot_diagnostics.csv", out));
        }
    }
    if let Some(text) = read("rates.csv")? {
        let rows = read_table(&text, 2)?;
        let series: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        let fit = rate_fit(&series)?;
        let mut out = String::from("log_time,log_deficit,fit_line\n");
        for (t, d) in &series {
            let lt = t.ln();
            let _ = writeln!(out, "{lt:.17e},{:.17e},{:.17e}", d.ln(), fit.intercept + fit.slope * lt);
        }
        tables.push(("plot_rates.csv", out));
    }
    if let Some(text) = read("moments.csv")? {
        let rows = read_table(&text, 3)?;
        let mut out = String::from("time,variance,limit_reference\n");
        for r in rows {
            let _ = writeln!(out, "{},{:.17e},{:.17e}", r[0], r[1], r[2]);
        }
        tables.push(("plot_moments.csv", out));
    }
    if tables.is_empty() {
        log::warn!("no plottable tables in the manifest for {}", manifest.scenario);
        return Ok(Vec::new());
    }
    tables.push(("plot.py", SCRIPT.to_string()));
    let mut written = Vec::with_capacity(tables.len());
    for (name, contents) in tables {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}
