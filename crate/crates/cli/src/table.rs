//! `results.csv`: metadata comment lines, a header row, one row per sweep point.

use std::io::{BufRead, Write};
use std::path::Path;

use cpcorr_core::analysis::SweepRecord;

use crate::error::CliError;

pub const COLUMNS: [&str; 11] = [
    "h_over_a",
    "omega_a",
    "phase",
    "c_e",
    "c_e_planar",
    "ratio",
    "eta_local",
    "n_nodes",
    "half_width_l",
    "q_max",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub config_hash: String,
    pub code_version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub h_over_a: f64,
    pub omega_a: f64,
    pub phase: f64,
    pub c_e: f64,
    pub c_e_planar: f64,
    pub ratio: f64,
    pub eta_local: f64,
    pub n_nodes: usize,
    /// Infinite for the periodic solver.
    pub half_width_l: f64,
    pub q_max: f64,
    pub status: String,
}

impl ResultRow {
    pub fn from_record(r: &SweepRecord) -> Self {
        let half_width_l = match r.settings.method {
            cpcorr_core::energy::SolverMethod::Periodic => f64::INFINITY,
            cpcorr_core::energy::SolverMethod::Window => r.settings.half_width,
        };
        Self {
            h_over_a: r.h_over_a,
            omega_a: r.omega_a,
            phase: r.phase,
            c_e: r.c_e,
            c_e_planar: r.c_e_planar,
            ratio: r.ratio,
            eta_local: r.eta_local,
            n_nodes: r.n_nodes,
            half_width_l,
            q_max: r.settings.q_max,
            status: r.status.label().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub meta: Metadata,
    pub rows: Vec<ResultRow>,
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64, CliError> {
    s.parse::<f64>().map_err(|_| CliError::Table(format!("line {line}: bad number '{s}'")))
}

impl ResultTable {
    /// Data rows only, without the metadata lines.
    pub fn body(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let fields = [
                fmt_f64(r.h_over_a),
                fmt_f64(r.omega_a),
                fmt_f64(r.phase),
                fmt_f64(r.c_e),
                fmt_f64(r.c_e_planar),
                fmt_f64(r.ratio),
                fmt_f64(r.eta_local),
                r.n_nodes.to_string(),
                fmt_f64(r.half_width_l),
                fmt_f64(r.q_max),
                r.status.clone(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# config_hash = {}", self.meta.config_hash)?;
        writeln!(w, "# code_version = {}", self.meta.code_version)?;
        writeln!(w, "# timestamp = {}", self.meta.timestamp)?;
        w.write_all(self.body().as_bytes())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, CliError> {
        let mut meta = Metadata { config_hash: String::new(), code_version: String::new(), timestamp: String::new() };
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    let v = v.trim().to_string();
                    match k.trim() {
                        "config_hash" => meta.config_hash = v,
                        "code_version" => meta.code_version = v,
                        "timestamp" => meta.timestamp = v,
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if !header_seen {
                if f != COLUMNS {
                    return Err(CliError::Table(format!("line {n}: unexpected header '{line}'")));
                }
                header_seen = true;
                continue;
            }
            if f.len() != COLUMNS.len() {
                return Err(CliError::Table(format!("line {n}: expected {} fields, got {}", COLUMNS.len(), f.len())));
            }
            rows.push(ResultRow {
                h_over_a: parse_f64(f[0], n)?,
                omega_a: parse_f64(f[1], n)?,
                phase: parse_f64(f[2], n)?,
                c_e: parse_f64(f[3], n)?,
                c_e_planar: parse_f64(f[4], n)?,
                ratio: parse_f64(f[5], n)?,
                eta_local: parse_f64(f[6], n)?,
                n_nodes: f[7].parse().map_err(|_| CliError::Table(format!("line {n}: bad node count '{}'", f[7])))?,
                half_width_l: parse_f64(f[8], n)?,
                q_max: parse_f64(f[9], n)?,
                status: f[10].to_string(),
            });
        }
        if !header_seen {
            return Err(CliError::Table("missing header row".into()));
        }
        Ok(Self { meta, rows })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
