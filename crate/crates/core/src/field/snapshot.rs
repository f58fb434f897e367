//! Plain-text grid snapshots.
//!
//! ```text
//! # t=0.25 h=0.0078125 nx=321 ny=161 x1_min=-1.25 L=1
//! i,j,x1,x2,theta
//! ```
//! with one row per node in row-major order and 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{Grid, ScalarField};
use crate::error::{Result, SqgError};

pub fn snapshot_to_string(t: f64, f: &ScalarField) -> String {
    let g = f.grid;
    let mut s = String::with_capacity(64 * g.len() + 128);
    let _ = writeln!(
        s,
        "# t={t} h={} nx={} ny={} x1_min={} L={}",
        g.h,
        g.nx,
        g.ny,
        g.x1_min,
        f.support_radius()
    );
    for j in 0..g.ny {
        for i in 0..g.nx {
            let _ = writeln!(
                s,
                "{i},{j},{:.16e},{:.16e},{:.16e}",
                g.x1(i),
                g.x2(j),
                f.at(i, j)
            );
        }
    }
    s
}

/// Writes atomically: the text goes to a sibling temporary file which is
/// then renamed over `path`, so readers never see a partial row.
pub fn write_snapshot(path: &Path, t: f64, f: &ScalarField) -> Result<()> {
    let text = snapshot_to_string(t, f);
    let tmp = path.with_extension("csv.partial");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(text.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> SqgError {
    SqgError::SnapshotParse {
        line,
        message: message.into(),
    }
}

fn header_value<T: std::str::FromStr>(header: &str, key: &str) -> Result<T> {
    let prefix = format!("{key}=");
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(prefix.as_str()))
        .ok_or_else(|| parse_err(1, format!("header lacks `{key}`")))?
        .parse()
        .map_err(|_| parse_err(1, format!("header value `{key}` is malformed")))
}

/// Parses snapshot text into `(t, field)`, re-validating the field invariants.
pub fn parse_snapshot(text: &str) -> Result<(f64, ScalarField)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| parse_err(1, "missing `#` header"))?;
    let t: f64 = header_value(header, "t")?;
    let grid = Grid {
        nx: header_value(header, "nx")?,
        ny: header_value(header, "ny")?,
        h: header_value(header, "h")?,
        x1_min: header_value(header, "x1_min")?,
        x2_min: 0.0,
    };
    let support: f64 = header_value(header, "L")?;
    let mut values = vec![0.0; grid.len()];
    let mut seen = 0usize;
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(parse_err(line_no, "expected 5 columns"));
        }
        let i: usize = cols[0].parse().map_err(|_| parse_err(line_no, "bad i"))?;
        let j: usize = cols[1].parse().map_err(|_| parse_err(line_no, "bad j"))?;
        let v: f64 = cols[4].parse().map_err(|_| parse_err(line_no, "bad theta"))?;
        if i >= grid.nx || j >= grid.ny {
            return Err(parse_err(line_no, "node index outside the grid"));
        }
        values[grid.idx(i, j)] = v;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(parse_err(
            text.lines().count(),
            format!("{seen} rows for {} nodes", grid.len()),
        ));
    }
    Ok((t, ScalarField::new(grid, values, support)?))
}

pub fn read_snapshot(path: &Path) -> Result<(f64, ScalarField)> {
    parse_snapshot(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let f = ScalarField::from_fn(g, 0.5, |p| (p.x1 * 3.1).sin() * p.x2 / 3.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        write_snapshot(&path, 0.125, &f).unwrap();
        let (t, back) = read_snapshot(&path).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(back, f);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# t=0.125 h=0.0625 nx="));
        assert!(!dir.path().join("snap.csv.partial").exists());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let f = ScalarField::zeros(g, 0.5).unwrap();
        let text = snapshot_to_string(0.0, &f);
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_snapshot(&cut), Err(SqgError::SnapshotParse { .. })));
    }
}
