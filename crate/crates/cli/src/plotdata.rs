//! Columnar plot data from the aggregate rows of a simulation CSV.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ebc_core::simulate::CSV_HEADER;

use crate::usage;

const KEYS: [&str; 6] = ["scheme", "q", "N", "K", "pe", "pe_up"];
const FIRST_METRIC: usize = 8;

struct Series {
    label: String,
    points: Vec<(f64, String, Vec<String>)>,
}

/// Writes `<metric>_vs_<x>.dat` into `out_dir` for every metric column. Each
/// file holds one block per setting of the other key columns, separated by
/// two blank lines, with `x mean std` rows sorted by x.
pub fn run(csv: &Path, x: &str, out_dir: &Path) -> Result<()> {
    let text = fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let written = write_plotdata(&text, x, out_dir)?;
    for p in written {
        println!("{p}");
    }
    Ok(())
}

pub fn write_plotdata(text: &str, x: &str, out_dir: &Path) -> Result<Vec<String>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| usage("empty CSV"))?;
    if header.trim() != CSV_HEADER {
        return Err(usage("CSV header does not match the simulation output format"));
    }
    let columns: Vec<&str> = CSV_HEADER.split(',').collect();
    let xi = KEYS
        .iter()
        .position(|k| *k == x)
        .ok_or_else(|| usage(format!("x must be one of {}", KEYS.join(", "))))?;

    let mut series: Vec<Series> = Vec::new();
    for (no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(usage(format!("line {}: expected {} cells", no + 2, columns.len())));
        }
        if cells[6] != "agg" {
            continue;
        }
        let xv: f64 = cells[xi]
            .parse()
            .map_err(|_| usage(format!("line {}: {x} = {:?} is not numeric", no + 2, cells[xi])))?;
        let label = KEYS
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != xi)
            .map(|(i, k)| format!("{k}={}", cells[i]))
            .collect::<Vec<_>>()
            .join(" ");
        let values = cells[FIRST_METRIC..].iter().map(|c| c.replace(';', " ")).collect();
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((xv, cells[xi].to_string(), values)),
            None => series.push(Series {
                label,
                points: vec![(xv, cells[xi].to_string(), values)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for (m, metric) in columns[FIRST_METRIC..].iter().enumerate() {
        let mut out = String::new();
        for (b, s) in series.iter().enumerate() {
            if b > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&format!("# {}\n# {x} mean std\n", s.label));
            for (_, xs, values) in &s.points {
                out.push_str(&format!("{xs} {}\n", values[m]));
            }
        }
        let path = out_dir.join(format!("{metric}_vs_{x}.dat"));
        fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
