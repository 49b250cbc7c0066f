//! CSV and JSON artifacts.
//!
//! CSV files start with `# config: key=value` lines recording the run
//! configuration, followed by a header row. Floats are written with 17
//! significant digits so values round-trip exactly.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::potentials::PotentialSequence;
use crate::prufer::BoundaryCondition;
use crate::solver::{Sample, Trajectory};

pub const CONFIG_PREFIX: &str = "# config: ";

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path, config: &[(String, String)]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    for (k, v) in config {
        writeln!(f, "{CONFIG_PREFIX}{k}={v}")?;
    }
    Ok(csv::Writer::from_writer(f))
}

pub fn write_potential_csv(path: &Path, pot: &PotentialSequence, config: &[(String, String)]) -> Result<()> {
    let mut w = writer(path, config)?;
    w.write_record(["n", "V"])?;
    for (n, v) in pot.values.iter().enumerate() {
        w.write_record([n.to_string(), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub const TRAJECTORY_PREFIX: &str = "# trajectory: ";

/// Everything in a [`Trajectory`] except its samples.
#[derive(Serialize, Deserialize)]
struct TrajectoryMeta {
    energy: Energy,
    boundary: BoundaryCondition,
    n_range: (u64, u64),
    prufer_valid: bool,
}

/// Sampled fields plus `logL2` and the normalized pair, so the file can be
/// read back into an identical [`Trajectory`].
pub fn write_trajectory_csv(path: &Path, t: &Trajectory, config: &[(String, String)]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for (k, v) in config {
        writeln!(f, "{CONFIG_PREFIX}{k}={v}")?;
    }
    let meta = TrajectoryMeta {
        energy: t.energy,
        boundary: t.boundary,
        n_range: t.n_range,
        prufer_valid: t.prufer_valid,
    };
    writeln!(f, "{TRAJECTORY_PREFIX}{}", serde_json::to_string(&meta)?)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["n", "V", "logR2", "theta", "logRtilde2", "logL2", "u_prev", "u_cur"])?;
    for s in &t.samples {
        w.write_record([
            s.n.to_string(),
            fmt(s.v),
            fmt(s.log_r2),
            fmt(s.theta),
            fmt(s.log_rt2),
            fmt(s.log_l2),
            fmt(s.u_prev),
            fmt(s.u_cur),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<(Trajectory, Vec<(String, String)>)> {
    let meta_line = BufReader::new(File::open(path)?)
        .lines()
        .map_while(|l| l.ok())
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(TRAJECTORY_PREFIX).map(str::to_string))
        .ok_or_else(|| Error::domain(format!("{} has no trajectory metadata line", path.display())))?;
    let meta: TrajectoryMeta = serde_json::from_str(&meta_line)?;
    let t = read_csv(path)?;
    let n = t.column("n")?;
    let cols = ["V", "logR2", "theta", "logRtilde2", "logL2", "u_prev", "u_cur"]
        .iter()
        .map(|c| t.column(c))
        .collect::<Result<Vec<_>>>()?;
    let samples = (0..n.len())
        .map(|i| Sample {
            n: n[i] as u64,
            v: cols[0][i],
            log_r2: cols[1][i],
            theta: cols[2][i],
            log_rt2: cols[3][i],
            log_l2: cols[4][i],
            u_prev: cols[5][i],
            u_cur: cols[6][i],
        })
        .collect();
    Ok((
        Trajectory {
            energy: meta.energy,
            boundary: meta.boundary,
            n_range: meta.n_range,
            prufer_valid: meta.prufer_valid,
            samples,
        },
        t.config,
    ))
}

/// Rows of pre-formatted cells under `header`.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>], config: &[(String, String)]) -> Result<()> {
    let mut w = writer(path, config)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `n` followed by one value column per series; series must share sites.
pub fn write_series_csv(
    path: &Path,
    names: &[&str],
    series: &[&[(u64, f64)]],
    config: &[(String, String)],
) -> Result<()> {
    if names.len() != series.len() || series.is_empty() {
        return Err(Error::domain("one name per series required"));
    }
    let mut w = writer(path, config)?;
    let mut header = vec!["n"];
    header.extend_from_slice(names);
    w.write_record(&header)?;
    for (i, (n, _)) in series[0].iter().enumerate() {
        let mut row = vec![n.to_string()];
        for s in series {
            row.push(fmt(s[i].1));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file split into its config lines, header and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub config: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::domain(format!("no column {name}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|e| Error::domain(format!("column {name}: {e}")))
            })
            .collect()
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut config = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix(CONFIG_PREFIX) {
            if let Some((k, v)) = rest.split_once('=') {
                config.push((k.to_string(), v.to_string()));
            }
        } else if !line.starts_with('#') {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(CsvTable { config, header, rows })
}

pub fn read_potential_csv(path: &Path) -> Result<(PotentialSequence, Vec<(String, String)>)> {
    let t = read_csv(path)?;
    let n = t.column("n")?;
    if n.iter().enumerate().any(|(i, &x)| x != i as f64) {
        return Err(Error::domain("potential sites must be 0, 1, 2, ..."));
    }
    Ok((PotentialSequence::new(t.column("V")?), t.config))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}
