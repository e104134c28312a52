//! Flat `key = value` run configuration with dotted section names.
//!
//! ```text
//! # comment
//! profile.kind = sine
//! profile.phase = -pi/2
//! geometry.h_over_a = logspace(0.3, 20, 60)
//! sweep.omega_a = 1, 2, 3
//! ```

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use cpcorr_core::energy::{EnergySettings, SolverMethod};
use cpcorr_core::profiles::{DistanceReference, HeightProfile, ProfileKind};
use cpcorr_core::solver::PANEL_ORDER;

use crate::error::CliError;

/// Lowest accepted per-wavelength node floor.
const MIN_NODES_PER_WAVELENGTH: usize = 4;
const MIN_Q_NODES: usize = 8;

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Line(PathBuf, usize),
    Override(usize),
    Default,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Line(p, n) => write!(f, "{}:{n}", p.display()),
            Origin::Override(i) => write!(f, "--override #{}", i + 1),
            Origin::Default => write!(f, "<default>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub tolerance: f64,
    /// Explicit `H/A` subset; empty means first, middle and last point.
    pub h_over_a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub window: f64,
    pub peak_lo: f64,
    pub peak_hi: f64,
    pub tail_probe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ProfileKind,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub samples_path: Option<PathBuf>,
    pub samples: Vec<(f64, f64)>,
    pub h_over_a: Vec<f64>,
    pub settings: EnergySettings,
    pub omega_a: Vec<f64>,
    pub phases: Vec<f64>,
    pub output_dir: PathBuf,
    pub write_csv: bool,
    pub write_plot: bool,
    pub analysis: AnalysisConfig,
    pub converge: ConvergeConfig,
}

const KEYS: &[&str] = &[
    "profile.kind",
    "profile.amplitude",
    "profile.omega",
    "profile.phase",
    "profile.samples_path",
    "geometry.h",
    "geometry.h_over_a",
    "geometry.reference",
    "numerics.method",
    "numerics.half_width",
    "numerics.nodes",
    "numerics.q_max",
    "numerics.q_nodes",
    "numerics.nodes_per_wavelength",
    "numerics.sphere_fraction",
    "numerics.curvature_factor",
    "numerics.max_panel",
    "numerics.beta_panels",
    "numerics.beta_order",
    "sweep.omega_a",
    "sweep.phases",
    "output.directory",
    "output.formats",
    "analysis.window",
    "analysis.peak_range",
    "analysis.tail_probe",
    "converge.tolerance",
    "converge.h_over_a",
];

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    origin: Origin,
}

/// Parses `key = value` lines. Later entries for the same key win.
fn parse_lines(text: &str, path: &Path) -> Result<Vec<Entry>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(path.to_path_buf(), i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(&origin, format!("expected 'key = value', got '{line}'")))?;
        out.push(Entry { key: k.trim().to_string(), value: v.trim().to_string(), origin });
    }
    Ok(out)
}

fn parse_override(i: usize, s: &str) -> Result<Entry, CliError> {
    let origin = Origin::Override(i);
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::config(&origin, format!("expected key=value, got '{s}'")))?;
    Ok(Entry { key: k.trim().to_string(), value: v.trim().to_string(), origin })
}

/// A real number, optionally written with `pi`: `1.5`, `-pi/2`, `0.25*pi`, `3pi/4`.
pub fn parse_real(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().ok().filter(|d| *d != 0.0 && d.is_finite())?),
        None => (t.as_str(), 1.0),
    };
    let (sign, body) = match num.strip_prefix('-') {
        Some(b) => (-1.0, b),
        None => (1.0, num.strip_prefix('+').unwrap_or(num)),
    };
    let coef = body.strip_suffix("pi")?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    let v = sign * c * std::f64::consts::PI / den;
    v.is_finite().then_some(v)
}

/// Comma-separated reals, or `logspace(lo, hi, n)` / `linspace(lo, hi, n)`.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    let t = s.trim();
    for (name, log) in [("logspace", true), ("linspace", false)] {
        if let Some(rest) = t.strip_prefix(name) {
            let inner = rest.trim().strip_prefix('(')?.strip_suffix(')')?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return None;
            }
            let (lo, hi) = (parse_real(parts[0])?, parse_real(parts[1])?);
            let n: usize = parts[2].parse().ok().filter(|n| *n >= 1)?;
            if log {
                if !(lo > 0.0 && hi > 0.0) {
                    return None;
                }
                return Some(cpcorr_core::analysis::log_spaced(lo, hi, n));
            }
            if n == 1 {
                return Some(vec![lo]);
            }
            return Some((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect());
        }
    }
    t.split(',').map(|p| parse_real(p.trim())).collect::<Option<Vec<f64>>>().filter(|v| !v.is_empty())
}

impl RunConfig {
    /// Reads `path` and applies `overrides` (`key=value`) on top.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(&Origin::Default, format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text, path, overrides)
    }

    pub fn from_text(text: &str, path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let mut entries = parse_lines(text, path)?;
        for (i, o) in overrides.iter().enumerate() {
            entries.push(parse_override(i, o)?);
        }
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_entries(&entries, base)
    }

    fn from_entries(entries: &[Entry], base: &Path) -> Result<Self, CliError> {
        for e in entries {
            if !KEYS.contains(&e.key.as_str()) {
                return Err(CliError::config(&e.origin, format!("unknown key '{}'", e.key)));
            }
        }
        let get = |k: &str| entries.iter().rev().find(|e| e.key == k);
        let real = |k: &str, default: f64| -> Result<(f64, Origin), CliError> {
            match get(k) {
                Some(e) => parse_real(&e.value)
                    .map(|v| (v, e.origin.clone()))
                    .ok_or_else(|| CliError::config(&e.origin, format!("{k}: expected a number, got '{}'", e.value))),
                None => Ok((default, Origin::Default)),
            }
        };
        let count = |k: &str, default: usize| -> Result<(usize, Origin), CliError> {
            match get(k) {
                Some(e) => e
                    .value
                    .parse::<usize>()
                    .map(|v| (v, e.origin.clone()))
                    .map_err(|_| CliError::config(&e.origin, format!("{k}: expected a non-negative integer, got '{}'", e.value))),
                None => Ok((default, Origin::Default)),
            }
        };
        let list = |k: &str| -> Result<Option<(Vec<f64>, Origin)>, CliError> {
            match get(k) {
                Some(e) => parse_list(&e.value)
                    .map(|v| Some((v, e.origin.clone())))
                    .ok_or_else(|| CliError::config(&e.origin, format!("{k}: expected a list of numbers, got '{}'", e.value))),
                None => Ok(None),
            }
        };
        let bad = |o: &Origin, msg: String| CliError::config(o, msg);

        let kind = match get("profile.kind") {
            Some(e) => e.value.parse::<ProfileKind>().map_err(|err| bad(&e.origin, err.to_string()))?,
            None => ProfileKind::Sine,
        };
        let (amplitude, o_amp) = real("profile.amplitude", 1.0)?;
        let (omega, o_om) = real("profile.omega", 1.0)?;
        let (phase, _) = real("profile.phase", -std::f64::consts::FRAC_PI_2)?;
        match kind {
            ProfileKind::Sine | ProfileKind::Sawtooth => {
                if !(amplitude > 0.0) {
                    return Err(bad(&o_amp, format!("profile.amplitude must be > 0, got {amplitude}")));
                }
                if !(omega > 0.0) {
                    return Err(bad(&o_om, format!("profile.omega must be > 0, got {omega}")));
                }
            }
            _ => {}
        }
        let (samples_path, samples) = match (kind, get("profile.samples_path")) {
            (ProfileKind::Tabulated, Some(e)) => {
                let p = base.join(&e.value);
                let s = read_samples(&p).map_err(|m| bad(&e.origin, m))?;
                HeightProfile::tabulated(s.clone()).map_err(|err| bad(&e.origin, err.to_string()))?;
                (Some(p), s)
            }
            (ProfileKind::Tabulated, None) => {
                return Err(bad(&Origin::Default, "profile.kind = tabulated needs profile.samples_path".into()))
            }
            (_, Some(e)) => return Err(bad(&e.origin, "profile.samples_path is only used with profile.kind = tabulated".into())),
            (_, None) => (None, Vec::new()),
        };
        // the unit of H/A: amplitude, or 1 for the flat surface
        let unit = match kind {
            ProfileKind::Flat => 1.0,
            ProfileKind::Tabulated => samples.iter().fold(0.0f64, |m, &(_, h)| m.max(h.abs())),
            _ => amplitude,
        };
        if !(unit > 0.0) {
            return Err(bad(&Origin::Default, "tabulated samples must not be identically zero".into()));
        }

        let (h_over_a, o_h) = match (list("geometry.h")?, list("geometry.h_over_a")?) {
            (Some(_), Some((_, o))) => {
                return Err(bad(&o, "give either geometry.h or geometry.h_over_a, not both".into()))
            }
            (Some((h, o)), None) => (h.iter().map(|v| v / unit).collect::<Vec<f64>>(), o),
            (None, Some((v, o))) => (v, o),
            (None, None) => return Err(bad(&Origin::Default, "missing geometry.h or geometry.h_over_a".into())),
        };
        if let Some(v) = h_over_a.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(bad(&o_h, format!("separations must be positive, got {v}")));
        }
        if h_over_a.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad(&o_h, "separations must be strictly increasing".into()));
        }

        let mut settings = EnergySettings::default();
        if let Some(e) = get("geometry.reference") {
            settings.reference = e.value.parse::<DistanceReference>().map_err(|err| bad(&e.origin, err.to_string()))?;
        }
        if let Some(e) = get("numerics.method") {
            settings.method = e.value.parse::<SolverMethod>().map_err(|err| bad(&e.origin, err.to_string()))?;
        }
        if kind == ProfileKind::Tabulated && settings.method != SolverMethod::Window {
            return Err(bad(&Origin::Default, "tabulated profiles need numerics.method = window".into()));
        }
        let (l, o) = real("numerics.half_width", settings.half_width)?;
        if !(l > 0.0) {
            return Err(bad(&o, format!("numerics.half_width must be > 0, got {l}")));
        }
        settings.half_width = l;
        let (n, o) = count("numerics.nodes", settings.window_nodes)?;
        if n < 2 * PANEL_ORDER {
            return Err(bad(&o, format!("numerics.nodes = {n} is below the resolution floor of {} nodes", 2 * PANEL_ORDER)));
        }
        settings.window_nodes = n;
        let (qm, o) = real("numerics.q_max", settings.q_max)?;
        if !(qm > 0.0) {
            return Err(bad(&o, format!("numerics.q_max must be > 0, got {qm}")));
        }
        settings.q_max = qm;
        let (qn, o) = count("numerics.q_nodes", settings.q_nodes)?;
        if qn < MIN_Q_NODES {
            return Err(bad(&o, format!("numerics.q_nodes = {qn} is below the floor of {MIN_Q_NODES}")));
        }
        settings.q_nodes = qn;
        let (npw, o) = count("numerics.nodes_per_wavelength", settings.panels.nodes_per_wavelength)?;
        if npw < MIN_NODES_PER_WAVELENGTH {
            return Err(bad(&o, format!("numerics.nodes_per_wavelength = {npw} is below the floor of {MIN_NODES_PER_WAVELENGTH}")));
        }
        settings.panels.nodes_per_wavelength = npw;
        for (key, slot) in [
            ("numerics.sphere_fraction", &mut settings.panels.sphere_fraction),
            ("numerics.curvature_factor", &mut settings.panels.curvature_factor),
            ("numerics.max_panel", &mut settings.panels.max_panel),
        ] {
            let (v, o) = real(key, *slot)?;
            if !(v > 0.0) {
                return Err(bad(&o, format!("{key} must be > 0, got {v}")));
            }
            *slot = v;
        }
        for (key, slot) in [
            ("numerics.beta_panels", &mut settings.bloch.beta_panels),
            ("numerics.beta_order", &mut settings.bloch.beta_order),
        ] {
            let (v, o) = count(key, *slot)?;
            if v == 0 {
                return Err(bad(&o, format!("{key} must be >= 1")));
            }
            *slot = v;
        }

        let omega_a = match list("sweep.omega_a")? {
            Some((v, o)) => {
                if !matches!(kind, ProfileKind::Sine | ProfileKind::Sawtooth) {
                    return Err(bad(&o, "sweep.omega_a needs a sine or sawtooth profile".into()));
                }
                if let Some(x) = v.iter().find(|x| !(**x > 0.0)) {
                    return Err(bad(&o, format!("sweep.omega_a entries must be > 0, got {x}")));
                }
                v
            }
            None => vec![if matches!(kind, ProfileKind::Sine | ProfileKind::Sawtooth) { omega * amplitude } else { 0.0 }],
        };
        let phases = match list("sweep.phases")? {
            Some((v, _)) => v,
            None => vec![phase],
        };

        let output_dir = get("output.directory").map_or_else(|| PathBuf::from("results"), |e| PathBuf::from(&e.value));
        let (mut write_csv, mut write_plot) = (true, true);
        if let Some(e) = get("output.formats") {
            write_csv = false;
            write_plot = false;
            for f in e.value.split(',').map(str::trim) {
                match f {
                    "csv" => write_csv = true,
                    "gnuplot" => write_plot = true,
                    other => return Err(bad(&e.origin, format!("unknown output format '{other}' (csv, gnuplot)"))),
                }
            }
        }

        let (window, o) = real("analysis.window", cpcorr_core::analysis::DEFAULT_WINDOW)?;
        if !(window > 0.0) {
            return Err(bad(&o, format!("analysis.window must be > 0, got {window}")));
        }
        let (peak_lo, peak_hi) = match list("analysis.peak_range")? {
            Some((v, o)) => {
                if v.len() != 2 || !(v[0] > 0.0 && v[1] > v[0]) {
                    return Err(bad(&o, "analysis.peak_range must be two increasing positive numbers".into()));
                }
                (v[0], v[1])
            }
            None => (0.3, 20.0),
        };
        let (tail_probe, o) = real("analysis.tail_probe", 10.0)?;
        if !(tail_probe > 0.0) {
            return Err(bad(&o, format!("analysis.tail_probe must be > 0, got {tail_probe}")));
        }
        let (tolerance, o) = real("converge.tolerance", 1e-6)?;
        if !(tolerance > 0.0) {
            return Err(bad(&o, format!("converge.tolerance must be > 0, got {tolerance}")));
        }
        let conv_h = match list("converge.h_over_a")? {
            Some((v, o)) => {
                if v.iter().any(|x| !(*x > 0.0)) {
                    return Err(bad(&o, "converge.h_over_a entries must be > 0".into()));
                }
                v
            }
            None => Vec::new(),
        };

        Ok(Self {
            kind,
            amplitude,
            omega,
            phase,
            samples_path,
            samples,
            h_over_a,
            settings,
            omega_a,
            phases,
            output_dir,
            write_csv,
            write_plot,
            analysis: AnalysisConfig { window, peak_lo, peak_hi, tail_probe },
            converge: ConvergeConfig { tolerance, h_over_a: conv_h },
        })
    }

    /// Physical profile for one `(ωA, φ)` series, with `A` as the unit.
    pub fn series_profile(&self, omega_a: f64, phase: f64) -> Result<HeightProfile, CliError> {
        let p = match self.kind {
            ProfileKind::Flat => Ok(HeightProfile::flat()),
            ProfileKind::Sine => HeightProfile::sine(self.amplitude, omega_a / self.amplitude, phase),
            ProfileKind::Sawtooth => HeightProfile::sawtooth(self.amplitude, omega_a / self.amplitude, phase),
            ProfileKind::Tabulated => HeightProfile::tabulated(self.samples.clone()),
        };
        p.map_err(|e| CliError::config(&Origin::Default, e.to_string()))
    }

    /// `(ωA, φ)` pairs in output order.
    pub fn series(&self) -> Vec<(f64, f64)> {
        self.omega_a.iter().flat_map(|&w| self.phases.iter().map(move |&p| (w, p))).collect()
    }

    /// SHA-256 over every field that affects the numbers.
    pub fn hash(&self) -> String {
        let canonical = format!(
            "kind={:?};amplitude={:?};omega={:?};phase={:?};samples={:?};h_over_a={:?};settings={:?};omega_a={:?};phases={:?};analysis={:?};converge={:?}",
            self.kind,
            self.amplitude,
            self.omega,
            self.phase,
            self.samples,
            self.h_over_a,
            self.settings,
            self.omega_a,
            self.phases,
            self.analysis,
            self.converge,
        );
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Two-column `x,h` CSV with a header row.
fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read samples {}: {e}", path.display()))?;
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ix, ih) = match (col("x"), col("h")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(format!("{}: expected columns x,h", path.display())),
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let parse = |j: usize| rec.get(j).and_then(|v| v.parse::<f64>().ok());
        match (parse(ix), parse(ih)) {
            (Some(x), Some(h)) => out.push((x, h)),
            _ => return Err(format!("{}: bad numeric value in data row {}", path.display(), i + 1)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_text(text, Path::new("test.conf"), &[])
    }

    #[test]
    fn reals_with_pi() {
        let pi = std::f64::consts::PI;
        assert_eq!(parse_real("1.5"), Some(1.5));
        assert_eq!(parse_real("-pi/2"), Some(-pi / 2.0));
        assert_eq!(parse_real("0.25*pi"), Some(0.25 * pi));
        assert_eq!(parse_real("3pi/4"), Some(3.0 * pi / 4.0));
        assert_eq!(parse_real("pi"), Some(pi));
        assert_eq!(parse_real("abc"), None);
        assert_eq!(parse_real("pi/0"), None);
        assert_eq!(parse_real("inf"), None);
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1, 2,3"), Some(vec![1.0, 2.0, 3.0]));
        let l = parse_list("logspace(1, 100, 3)").unwrap();
        assert!((l[1] - 10.0).abs() < 1e-12);
        assert_eq!(parse_list("linspace(0, 1, 3)"), Some(vec![0.0, 0.5, 1.0]));
        assert_eq!(parse_list("logspace(0, 1, 3)"), None);
        assert_eq!(parse_list(""), None);
    }

    #[test]
    fn minimal_config_and_defaults() {
        let c = load("profile.kind = sine\nprofile.omega = 2  # ωA = 2\ngeometry.h_over_a = 1, 2\n").unwrap();
        assert_eq!(c.omega_a, vec![2.0]);
        assert_eq!(c.phases, vec![-std::f64::consts::FRAC_PI_2]);
        assert_eq!(c.settings, EnergySettings::default());
        assert_eq!(c.series().len(), 1);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = load("profile.kind = sine\n\nprofile.colour = red\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("test.conf:3") && msg.contains("profile.colour"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn resolution_floor() {
        let err = load("geometry.h = 1\nnumerics.nodes = 4\n").unwrap_err();
        assert!(err.to_string().contains("resolution floor"), "{err}");
    }

    #[test]
    fn overrides_win_and_are_validated() {
        let p = Path::new("x.conf");
        let c = RunConfig::from_text("geometry.h = 1\n", p, &["numerics.q_nodes=48".into()]).unwrap();
        assert_eq!(c.settings.q_nodes, 48);
        let err = RunConfig::from_text("geometry.h = 1\n", p, &["bogus=1".into()]).unwrap_err();
        assert!(err.to_string().contains("--override #1"));
    }

    #[test]
    fn physical_separations_are_scaled() {
        let c = load("profile.amplitude = 2\ngeometry.h = 1, 4\n").unwrap();
        assert_eq!(c.h_over_a, vec![0.5, 2.0]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(load("geometry.h = 2, 1\n").is_err());
        assert!(load("geometry.h = 1\ngeometry.h_over_a = 1\n").is_err());
        assert!(load("geometry.h = 1\nprofile.amplitude = -1\n").is_err());
        assert!(load("geometry.h = 1\nnumerics.method = magic\n").is_err());
        assert!(load("no equals sign\n").is_err());
        assert!(load("profile.kind = tabulated\ngeometry.h = 1\n").is_err());
    }

    #[test]
    fn hash_tracks_semantics_only() {
        let a = load("geometry.h = 1, 2\nprofile.omega = 2\n").unwrap();
        let b = load("# reordered\nprofile.omega = 2.0\n\ngeometry.h = 1,2\noutput.directory = elsewhere\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = load("geometry.h = 1, 2\nprofile.omega = 2\nnumerics.q_nodes = 97\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
