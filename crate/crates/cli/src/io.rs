//! CSV formats for events, posterior summaries, chains and metrics.

use std::path::Path;

use cgpcox::cox::IntensitySummary;
use cgpcox::{KnotGrid, PointPattern, PosteriorChain};

use crate::error::{CliError, CliResult};

/// Scientific notation with 17 significant digits, enough to read every `f64` back exactly.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))
}

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| CliError::csv(path, e))
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn coordinate_header(dim: usize) -> impl Iterator<Item = String> {
    (1..=dim).map(|i| format!("x{i}"))
}

/// Checks that `headers[offset..offset + dim]` read `x1..xd` and returns `dim`.
fn coordinate_dim(path: &Path, headers: &csv::StringRecord, offset: usize, trailing: usize) -> CliResult<usize> {
    let n = headers.len();
    if n < offset + trailing + 1 {
        return Err(parse_err(path, 1, format!("expected coordinate columns, found {n} columns")));
    }
    let dim = n - offset - trailing;
    for (i, want) in coordinate_header(dim).enumerate() {
        if headers[offset + i] != want {
            return Err(parse_err(
                path,
                1,
                format!("column {} should be {want}, found {:?}", offset + i + 1, &headers[offset + i]),
            ));
        }
    }
    Ok(dim)
}

fn record_numbers(path: &Path, record: &csv::StringRecord, range: std::ops::Range<usize>) -> CliResult<Vec<f64>> {
    let line = record.position().map_or(0, |p| p.line());
    range
        .map(|i| {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, line, format!("not a finite number: {:?}", &record[i])))
        })
        .collect()
}

/// Writes `obs,x1[,x2…]` with 1-based observation indices.
pub fn write_events(path: &Path, pattern: &PointPattern, dim: usize) -> CliResult<()> {
    let mut w = writer(path)?;
    let header: Vec<String> = std::iter::once("obs".to_string()).chain(coordinate_header(dim)).collect();
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for (k, obs) in pattern.observations().iter().enumerate() {
        for x in obs {
            let row: Vec<String> = std::iter::once((k + 1).to_string()).chain(x.iter().map(|&v| fmt_num(v))).collect();
            w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads an events file. Without `n_obs` the observation count is the largest index seen
/// (at least 1), so trailing empty observations need `n_obs`.
pub fn read_events(path: &Path, n_obs: Option<usize>) -> CliResult<(PointPattern, usize)> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    if headers.get(0) != Some("obs") {
        return Err(parse_err(path, 1, "first column must be `obs`"));
    }
    let dim = coordinate_dim(path, &headers, 1, 0)?;
    let mut events: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != dim + 1 {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", dim + 1, rec.len())));
        }
        let obs: usize = rec[0].parse().ok().filter(|&o| o >= 1).ok_or_else(|| {
            parse_err(path, line, format!("observation index must be a positive integer, got {:?}", &rec[0]))
        })?;
        events.push((obs, record_numbers(path, &rec, 1..dim + 1)?));
    }
    let seen = events.iter().map(|e| e.0).max().unwrap_or(1);
    let n = match n_obs {
        Some(n) if n < seen => {
            return Err(CliError::Config(format!("n_obs = {n} but the events file uses observation {seen}")))
        }
        Some(n) => n,
        None => seen,
    };
    let mut observations = vec![Vec::new(); n];
    for (obs, x) in events {
        observations[obs - 1].push(x);
    }
    Ok((PointPattern::new(observations)?, dim))
}

/// Writes `x1..xd,mean,q05,q50,q95`.
pub fn write_summary(path: &Path, summary: &IntensitySummary) -> CliResult<()> {
    let mut w = writer(path)?;
    let dim = summary.points.first().map_or(1, Vec::len);
    let header: Vec<String> = coordinate_header(dim).chain(["mean", "q05", "q50", "q95"].map(String::from)).collect();
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for i in 0..summary.points.len() {
        let row: Vec<String> = summary.points[i]
            .iter()
            .chain(std::iter::once(&summary.mean[i]))
            .chain(&summary.quantiles[i])
            .map(|&v| fmt_num(v))
            .collect();
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads the coordinates and `mean` column of a summary file.
pub fn read_summary(path: &Path) -> CliResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let dim = coordinate_dim(path, &headers, 0, 4)?;
    if &headers[dim] != "mean" {
        return Err(parse_err(path, 1, format!("column {} should be mean", dim + 1)));
    }
    let mut points = Vec::new();
    let mut mean = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let v = record_numbers(path, &rec, 0..dim + 1)?;
        mean.push(v[dim]);
        points.push(v[..dim].to_vec());
    }
    Ok((points, mean))
}

/// One row per retained sample, columns `xi1..xip` in flattened knot order.
pub fn write_chain(path: &Path, chain: &PosteriorChain) -> CliResult<()> {
    let mut w = writer(path)?;
    let header: Vec<String> = (1..=chain.grid.size()).map(|j| format!("xi{j}")).collect();
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for s in &chain.samples {
        w.write_record(s.0.iter().map(|&v| fmt_num(v))).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// A header row followed by rows of already formatted fields.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads named numeric columns from the first data row of a CSV file.
pub fn read_first_row(path: &Path, columns: &[&str]) -> CliResult<Vec<f64>> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let idx = columns
        .iter()
        .map(|c| headers.iter().position(|h| h == *c).ok_or_else(|| parse_err(path, 1, format!("missing column {c}"))))
        .collect::<CliResult<Vec<_>>>()?;
    let rec =
        r.records().next().ok_or_else(|| parse_err(path, 2, "no data row"))?.map_err(|e| CliError::csv(path, e))?;
    let line = rec.position().map_or(0, |p| p.line());
    idx.iter()
        .map(|&i| {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| parse_err(path, line, format!("bad value in column {}", &headers[i])))
        })
        .collect()
}

/// Reads `x1..xd,value` rows covering a full equispaced tensor grid, in any row order.
pub fn read_table_intensity(path: &Path) -> CliResult<(KnotGrid, Vec<f64>)> {
    let mut r = reader(path)?;
    let headers = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let dim = coordinate_dim(path, &headers, 0, 1)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        rows.push(record_numbers(path, &rec, 0..dim + 1)?);
    }
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for (d, axis) in axes.iter_mut().enumerate() {
        axis.extend(rows.iter().map(|row| row[d]));
        axis.sort_by(f64::total_cmp);
        axis.dedup();
    }
    let domain: Vec<(f64, f64)> = axes.iter().map(|a| (a[0], a[a.len() - 1])).collect();
    let counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let grid = KnotGrid::new(&domain, &counts)?;
    if rows.len() != grid.size() {
        return Err(parse_err(
            path,
            1,
            format!("table has {} rows but its axes span {} knots", rows.len(), grid.size()),
        ));
    }
    let mut values = vec![f64::NAN; grid.size()];
    for row in &rows {
        let idx: Vec<usize> = (0..dim)
            .map(|d| axes[d].binary_search_by(|v| v.total_cmp(&row[d])).expect("value taken from axis"))
            .collect();
        for (d, &j) in idx.iter().enumerate() {
            let expect = grid.knot(d, j);
            if (expect - row[d]).abs() > 1e-9 * (domain[d].1 - domain[d].0) {
                return Err(parse_err(path, 1, format!("table coordinates along x{} are not equispaced", d + 1)));
            }
        }
        values[grid.flat_index(&idx)] = row[dim];
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(parse_err(path, 1, "table has duplicate grid points"));
    }
    Ok((grid, values))
}
