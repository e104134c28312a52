use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cpcorr_core::analysis::{
    eta_at, find_peak, rising_slope, steepest_descent, sweep, EtaEstimate, RecordStatus, SweepRecord,
};
use cpcorr_core::energy::{energy_ratio, EnergySettings, MomentumGrid, SolverMethod};
use cpcorr_core::profiles::{reduce, ProfileKind};
use cpcorr_core::solver::required_nodes;

use crate::config::{Origin, RunConfig};
use crate::error::CliError;
use crate::table::{fmt_f64, Metadata, ResultRow, ResultTable};

pub const RESULTS_FILE: &str = "results.csv";
pub const ETA_FILE: &str = "eta.csv";
pub const PLOT_FILE: &str = "ratio.gp";

/// One `(ωA, φ)` curve.
#[derive(Debug, Clone)]
pub struct Series {
    pub omega_a: f64,
    pub phase: f64,
    pub records: Vec<SweepRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: Vec<Series>,
    pub table: ResultTable,
    pub eta_rows: Vec<EtaRow>,
    pub files: Vec<PathBuf>,
    /// Messages for points that failed numerically.
    pub failures: Vec<String>,
}

/// Row of `eta.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaRow {
    pub omega_a: f64,
    pub phase: f64,
    /// `local`, `peak`, `rise`, `drop_off` or `tail`.
    pub estimate: &'static str,
    pub h_over_a: f64,
    pub eta: f64,
    pub eta_direct: f64,
    pub half_width: f64,
    pub residual: f64,
    pub uncertainty: f64,
    pub n_points: usize,
    /// Peak ratio for `peak`, linear coefficient for `rise`, NaN otherwise.
    pub value: f64,
}

impl EtaRow {
    fn from_estimate(omega_a: f64, phase: f64, estimate: &'static str, e: &EtaEstimate, value: f64) -> Self {
        Self {
            omega_a,
            phase,
            estimate,
            h_over_a: e.h_over_a,
            eta: e.eta,
            eta_direct: e.eta_direct,
            half_width: e.half_width,
            residual: e.residual,
            uncertainty: e.uncertainty,
            n_points: e.n_points,
            value,
        }
    }
}

fn check_window_resolution(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.settings.method != SolverMethod::Window {
        return Ok(());
    }
    for (omega_a, phase) in cfg.series() {
        let profile = cfg.series_profile(omega_a, phase)?;
        let unit = if cfg.kind == ProfileKind::Flat { 1.0 } else { profile.amplitude() };
        for &h in &cfg.h_over_a {
            let p = reduce(&profile, h * unit)?;
            let need = required_nodes(&p, cfg.settings.half_width);
            if cfg.settings.window_nodes < need {
                return Err(CliError::config(
                    &Origin::Default,
                    format!(
                        "numerics.nodes = {} is below the resolution floor of {need} nodes for ωA = {omega_a}, H/A = {h}",
                        cfg.settings.window_nodes
                    ),
                ));
            }
        }
    }
    Ok(())
}

/// Sweeps every `(ωA, φ)` series over the configured separations.
pub fn compute(cfg: &RunConfig) -> Result<Vec<Series>, CliError> {
    check_window_resolution(cfg)?;
    let mut out = Vec::new();
    for (omega_a, phase) in cfg.series() {
        let profile = cfg.series_profile(omega_a, phase)?;
        let records = sweep(&profile, &cfg.h_over_a, &cfg.settings)?;
        out.push(Series { omega_a, phase, records });
    }
    Ok(out)
}

/// Local, peak, rise, drop-off and tail estimates per series.
pub fn eta_rows(cfg: &RunConfig, series: &[Series]) -> Vec<EtaRow> {
    let a = &cfg.analysis;
    let mut rows = Vec::new();
    for s in series {
        for r in &s.records {
            if let Ok(e) = eta_at(&s.records, r.h_over_a, a.window) {
                rows.push(EtaRow::from_estimate(s.omega_a, s.phase, "local", &e, f64::NAN));
            }
        }
        if let Some(peak) = find_peak(&s.records, a.peak_lo, a.peak_hi) {
            rows.push(EtaRow {
                omega_a: s.omega_a,
                phase: s.phase,
                estimate: "peak",
                h_over_a: peak.h_over_a,
                eta: f64::NAN,
                eta_direct: f64::NAN,
                half_width: f64::NAN,
                residual: f64::NAN,
                uncertainty: f64::NAN,
                n_points: 0,
                value: peak.ratio,
            });
            if let Ok((e, c)) = rising_slope(&s.records, &peak, a.peak_lo, a.window) {
                rows.push(EtaRow::from_estimate(s.omega_a, s.phase, "rise", &e, c));
            }
            if let Ok(e) = steepest_descent(&s.records, &peak, a.window) {
                rows.push(EtaRow::from_estimate(s.omega_a, s.phase, "drop_off", &e, f64::NAN));
            }
        }
        if let Ok(e) = eta_at(&s.records, a.tail_probe, a.window) {
            rows.push(EtaRow::from_estimate(s.omega_a, s.phase, "tail", &e, f64::NAN));
        }
    }
    rows
}

pub fn eta_csv(rows: &[EtaRow]) -> String {
    let mut out = String::from(
        "omega_a,phase,estimate,h_over_a,eta,eta_direct,half_width,residual,uncertainty,n_points,value\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.omega_a),
            fmt_f64(r.phase),
            r.estimate,
            fmt_f64(r.h_over_a),
            fmt_f64(r.eta),
            fmt_f64(r.eta_direct),
            fmt_f64(r.half_width),
            fmt_f64(r.residual),
            fmt_f64(r.uncertainty),
            r.n_points,
            fmt_f64(r.value),
        );
    }
    out
}

/// Gnuplot script: ratio against `H/A` on a log abscissa, one line per series.
pub fn plot_script(series: &[Series]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile missing 'nan'");
    let _ = writeln!(s, "set logscale x");
    let _ = writeln!(s, "set xlabel 'H/A'");
    let _ = writeln!(s, "set ylabel 'E_{{sine}}/E_{{planar}}'");
    let _ = writeln!(s, "set key top right");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output 'ratio.png'");
    let _ = writeln!(s, "eq(a, b) = abs(a - b) < 1e-9 * (1 + abs(b))");
    let plots: Vec<String> = series
        .iter()
        .map(|sr| {
            format!(
                "'{RESULTS_FILE}' every ::1 using 1:((eq($2, {w:.17e}) && eq($3, {p:.17e})) ? $6 : 1/0) with linespoints title 'ωA = {w}, φ = {p:.4}'",
                w = sr.omega_a,
                p = sr.phase
            )
        })
        .collect();
    let _ = writeln!(s, "plot 1 with lines dashtype 2 lc rgb 'gray' notitle, \\");
    let _ = writeln!(s, "     {}", plots.join(", \\\n     "));
    s
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn table(cfg: &RunConfig, series: &[Series]) -> ResultTable {
    ResultTable {
        meta: Metadata {
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
        },
        rows: series.iter().flat_map(|s| s.records.iter().map(ResultRow::from_record)).collect(),
    }
}

/// Computes, writes all requested files and collects failures.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let series = compute(cfg)?;
    let table = table(cfg, &series);
    let eta_rows = eta_rows(cfg, &series);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    if cfg.write_csv {
        let p = cfg.output_dir.join(RESULTS_FILE);
        table.write(&p)?;
        files.push(p);
        let p = cfg.output_dir.join(ETA_FILE);
        std::fs::write(&p, eta_csv(&eta_rows))?;
        files.push(p);
    }
    if cfg.write_plot {
        let p = cfg.output_dir.join(PLOT_FILE);
        std::fs::write(&p, plot_script(&series))?;
        files.push(p);
    }
    let failures = series
        .iter()
        .flat_map(|s| s.records.iter())
        .filter_map(|r| match &r.status {
            RecordStatus::Failed(m) => Some(format!("ωA = {}, φ = {}: {m}", r.omega_a, r.phase)),
            _ => None,
        })
        .collect();
    Ok(RunOutput { series, table, eta_rows, files, failures })
}

/// One resolution knob and the largest relative change in `c_E` it caused.
#[derive(Debug, Clone, PartialEq)]
pub struct KnobReport {
    pub knob: &'static str,
    pub max_rel_change: f64,
    /// `(ωA, φ, H/A)` of the largest change.
    pub worst: (f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub tolerance: f64,
    pub knobs: Vec<KnobReport>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.knobs.iter().all(|k| k.max_rel_change <= self.tolerance)
    }

    pub fn render(&self) -> String {
        let mut s = format!("{:<16} {:>14}  worst (ωA, φ, H/A)\n", "knob", "max rel change");
        for k in &self.knobs {
            let flag = if k.max_rel_change <= self.tolerance { "ok" } else { "EXCEEDS" };
            let _ = writeln!(
                s,
                "{:<16} {:>14.3e}  ({}, {:.4}, {})  {flag}",
                k.knob, k.max_rel_change, k.worst.0, k.worst.1, k.worst.2
            );
        }
        let _ = writeln!(s, "tolerance {:.1e}: {}", self.tolerance, if self.passed() { "passed" } else { "FAILED" });
        s
    }
}

/// Doubled-resolution variants of `s`, one knob at a time.
pub fn knobs(s: &EnergySettings) -> Vec<(&'static str, EnergySettings)> {
    let mut out = Vec::new();
    match s.method {
        SolverMethod::Periodic => {
            out.push(("nodes", EnergySettings { panels: s.panels.refined(2.0), ..s.clone() }));
            let mut b = s.clone();
            b.bloch.beta_panels *= 2;
            out.push(("quasi_momentum", b));
        }
        SolverMethod::Window => {
            out.push(("nodes", EnergySettings { window_nodes: 2 * s.window_nodes, ..s.clone() }));
            out.push((
                "half_width",
                EnergySettings { half_width: 2.0 * s.half_width, window_nodes: 2 * s.window_nodes, ..s.clone() },
            ));
        }
    }
    out.push(("q_nodes", EnergySettings { q_nodes: 2 * s.q_nodes, ..s.clone() }));
    // same nodes below the old cut-off plus the added tail intervals
    let (old, new) = (MomentumGrid::intervals(s.q_max), MomentumGrid::intervals(2.0 * s.q_max));
    let q_nodes = (s.q_nodes * new).div_ceil(old);
    out.push(("q_max", EnergySettings { q_max: 2.0 * s.q_max, q_nodes, ..s.clone() }));
    out
}

/// The `H/A` subset used by `converge`.
pub fn converge_points(cfg: &RunConfig) -> Vec<f64> {
    if !cfg.converge.h_over_a.is_empty() {
        return cfg.converge.h_over_a.clone();
    }
    let h = &cfg.h_over_a;
    let mut pts = vec![h[0], h[h.len() / 2], h[h.len() - 1]];
    pts.dedup();
    pts
}

/// Reruns the representative subset with each knob doubled.
pub fn converge(cfg: &RunConfig) -> Result<ConvergenceReport, CliError> {
    let points = converge_points(cfg);
    let base_cfg = RunConfig { h_over_a: points.clone(), ..cfg.clone() };
    check_window_resolution(&base_cfg)?;
    let mut knob_reports: Vec<KnobReport> = Vec::new();
    let variants = knobs(&cfg.settings);
    for (omega_a, phase) in cfg.series() {
        let profile = cfg.series_profile(omega_a, phase)?;
        let unit = if cfg.kind == ProfileKind::Flat { 1.0 } else { profile.amplitude() };
        for &h in &points {
            let p = reduce(&profile, h * unit)?;
            let at = |s: &EnergySettings| -> Result<f64, CliError> {
                energy_ratio(&p, s)
                    .map(|r| r.c_e)
                    .map_err(|e| CliError::Numerical(format!("ωA = {omega_a}, H/A = {h}: {e}")))
            };
            let base = at(&cfg.settings)?;
            for (name, s) in &variants {
                let v = at(s)?;
                let rel = ((v - base) / base).abs();
                match knob_reports.iter_mut().find(|k| k.knob == *name) {
                    Some(k) if rel > k.max_rel_change => {
                        k.max_rel_change = rel;
                        k.worst = (omega_a, phase, h);
                    }
                    Some(_) => {}
                    None => knob_reports.push(KnobReport { knob: name, max_rel_change: rel, worst: (omega_a, phase, h) }),
                }
            }
        }
    }
    Ok(ConvergenceReport { tolerance: cfg.converge.tolerance, knobs: knob_reports })
}

/// Writes the convergence report next to the results.
pub fn write_report(dir: &Path, report: &ConvergenceReport) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join("convergence.txt");
    std::fs::write(&p, report.render())?;
    Ok(p)
}
