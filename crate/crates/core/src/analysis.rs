//! Separation sweeps and local power-law exponents of the ratio curve.
//!
//! The anomalous dimension is defined through `E ∼ 1/H^{2+η}`. With
//! `E = −(ħ c r / H²) c_E` this gives `η = −d ln c_E / d ln H`, and because
//! the planar coefficient does not depend on `H`, also `η = −d ln ratio / d ln H`.

use crate::energy::{energy_ratio_with, planar_reference, EnergySettings};
use crate::error::{Error, Result};
use crate::profiles::{reduce, HeightProfile, ProfileKind};

/// Default half-width of the fit window in `ln(H/A)`.
pub const DEFAULT_WINDOW: f64 = 0.15;

/// Largest `A/H` inside the validated resolution range.
pub const MAX_VALIDATED_AMPLITUDE_RATIO: f64 = 20.0;

/// Slack on window edges so that log-spaced grids hit them exactly.
const EDGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum RecordStatus {
    Ok,
    /// Solved, but `A/H` exceeds [`MAX_VALIDATED_AMPLITUDE_RATIO`].
    Unvalidated,
    Failed(String),
}

impl RecordStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::Unvalidated => "unvalidated",
            RecordStatus::Failed(_) => "failed",
        }
    }

    pub fn is_usable(&self) -> bool {
        matches!(self, RecordStatus::Ok | RecordStatus::Unvalidated)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub h_over_a: f64,
    pub omega_a: f64,
    pub phase: f64,
    pub c_e: f64,
    pub c_e_planar: f64,
    pub ratio: f64,
    /// Local `η` with the default window; NaN where no fit was possible.
    pub eta_local: f64,
    pub n_nodes: usize,
    pub max_residual: f64,
    pub settings: EnergySettings,
    pub status: RecordStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaEstimate {
    pub h_over_a: f64,
    pub eta: f64,
    /// Same slope from `ln c_E` directly.
    pub eta_direct: f64,
    pub half_width: f64,
    /// RMS deviation of `ln ratio` from the fitted line.
    pub residual: f64,
    /// Standard error of the slope; zero for two-point or exact fits.
    pub uncertainty: f64,
    pub n_points: usize,
}

/// Ratio curve over `H/A` for a physical profile. `A` is the profile
/// amplitude (taken as the length unit for the flat profile).
pub fn sweep(profile: &HeightProfile, h_over_a: &[f64], settings: &EnergySettings) -> Result<Vec<SweepRecord>> {
    if h_over_a.is_empty() {
        return Err(Error::Settings("empty H/A list".into()));
    }
    if let Some(&bad) = h_over_a.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::Domain { what: "sweep H/A", value: bad });
    }
    if h_over_a.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Settings("H/A values must be strictly increasing".into()));
    }
    let unit = match profile.kind() {
        ProfileKind::Flat => 1.0,
        _ if profile.amplitude() > 0.0 => profile.amplitude(),
        _ => return Err(Error::Profile("sweeps in H/A need a non-zero amplitude".into())),
    };
    let omega_a = match profile.kind() {
        ProfileKind::Sine | ProfileKind::Sawtooth => profile.omega() * unit,
        _ => 0.0,
    };
    let planar = planar_reference(settings)?;
    let mut records = Vec::with_capacity(h_over_a.len());
    for &h in h_over_a {
        let mut rec = SweepRecord {
            h_over_a: h,
            omega_a,
            phase: profile.phase(),
            c_e: f64::NAN,
            c_e_planar: planar.c_e,
            ratio: f64::NAN,
            eta_local: f64::NAN,
            n_nodes: 0,
            max_residual: f64::NAN,
            settings: settings.clone(),
            status: RecordStatus::Ok,
        };
        match reduce(profile, h * unit).and_then(|p| energy_ratio_with(&p, settings, &planar)) {
            Ok(r) => {
                rec.c_e = r.c_e;
                rec.ratio = r.ratio;
                rec.n_nodes = r.n_nodes;
                rec.max_residual = r.max_residual;
                if profile.kind() != ProfileKind::Flat && 1.0 / h > MAX_VALIDATED_AMPLITUDE_RATIO {
                    rec.status = RecordStatus::Unvalidated;
                }
            }
            Err(e) => rec.status = RecordStatus::Failed(format!("H/A = {h}: {e}")),
        }
        records.push(rec);
    }
    fill_local_eta(&mut records, DEFAULT_WINDOW);
    Ok(records)
}

/// Sine sweep with unit amplitude.
pub fn sweep_sine(omega_a: f64, phase: f64, h_over_a: &[f64], settings: &EnergySettings) -> Result<Vec<SweepRecord>> {
    sweep(&HeightProfile::sine(1.0, omega_a, phase)?, h_over_a, settings)
}

fn fill_local_eta(records: &mut [SweepRecord], window: f64) {
    if records.len() < 3 {
        return;
    }
    let etas: Vec<f64> =
        records.iter().map(|r| eta_at(records, r.h_over_a, window).map_or(f64::NAN, |e| e.eta)).collect();
    for (r, e) in records.iter_mut().zip(etas) {
        r.eta_local = e;
    }
}

/// Least-squares line through `(x, y)`: slope, RMS residual, slope standard error.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let stderr = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, (ssr / n).sqrt(), stderr)
}

/// Local `η` from the usable records with `|ln H − ln H_c| ≤ half_width`.
///
/// Fails unless the data reach both window edges and at least three
/// records fall inside.
pub fn eta_at(records: &[SweepRecord], h_center: f64, half_width: f64) -> Result<EtaEstimate> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::Domain { what: "fit window half-width", value: half_width });
    }
    if !(h_center > 0.0 && h_center.is_finite()) {
        return Err(Error::Domain { what: "fit centre H/A", value: h_center });
    }
    let usable: Vec<&SweepRecord> =
        records.iter().filter(|r| r.status.is_usable() && r.ratio > 0.0 && r.c_e > 0.0).collect();
    let (lo, hi) = match (usable.first(), usable.last()) {
        (Some(a), Some(b)) => (a.h_over_a, b.h_over_a),
        _ => return Err(Error::Fit("no usable records".into())),
    };
    let c = h_center.ln();
    let tol = EDGE_SLACK * (1.0 + c.abs());
    if lo.ln() > c - half_width + tol || hi.ln() < c + half_width - tol {
        return Err(Error::OutOfRange { what: "fit window in H/A", value: h_center, lo, hi });
    }
    let inside: Vec<&&SweepRecord> = usable.iter().filter(|r| (r.h_over_a.ln() - c).abs() <= half_width + tol).collect();
    if inside.len() < 3 {
        return Err(Error::Fit(format!(
            "{} records within ±{half_width} of ln(H/A) = {c:.4}; at least 3 needed",
            inside.len()
        )));
    }
    let x: Vec<f64> = inside.iter().map(|r| r.h_over_a.ln()).collect();
    let y: Vec<f64> = inside.iter().map(|r| r.ratio.ln()).collect();
    let yd: Vec<f64> = inside.iter().map(|r| r.c_e.ln()).collect();
    let (slope, residual, stderr) = line_fit(&x, &y);
    let (slope_d, _, _) = line_fit(&x, &yd);
    let est = EtaEstimate {
        h_over_a: h_center,
        eta: -slope,
        eta_direct: -slope_d,
        half_width,
        residual,
        uncertainty: stderr,
        n_points: inside.len(),
    };
    if !est.eta.is_finite() {
        return Err(Error::Fit(format!("non-finite exponent at H/A = {h_center}")));
    }
    Ok(est)
}

/// Local `η` centred on every record whose window is covered by data.
pub fn anomalous_dimension(records: &[SweepRecord], half_width: f64) -> Result<Vec<EtaEstimate>> {
    let out: Vec<EtaEstimate> =
        records.iter().filter_map(|r| eta_at(records, r.h_over_a, half_width).ok()).collect();
    if out.is_empty() {
        return Err(Error::Fit(format!("no record has a covered window of half-width {half_width}")));
    }
    Ok(out)
}

/// Interior maximum of the ratio curve on `[lo, hi]`, refined by a parabola
/// in `ln(H/A)` through the three points around the largest sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub h_over_a: f64,
    pub ratio: f64,
    /// Index of the largest sample.
    pub index: usize,
}

pub fn find_peak(records: &[SweepRecord], lo: f64, hi: f64) -> Option<Peak> {
    let idx: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].status.is_usable() && records[i].h_over_a >= lo && records[i].h_over_a <= hi)
        .collect();
    let (pos, &best) = idx.iter().enumerate().max_by(|a, b| records[*a.1].ratio.total_cmp(&records[*b.1].ratio))?;
    if pos == 0 || pos + 1 == idx.len() {
        return None;
    }
    let (a, b, c) = (&records[idx[pos - 1]], &records[best], &records[idx[pos + 1]]);
    let (x0, x1, x2) = (a.h_over_a.ln(), b.h_over_a.ln(), c.h_over_a.ln());
    let (y0, y1, y2) = (a.ratio, b.ratio, c.ratio);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    let (x, y) = if curv < 0.0 {
        let xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
        let xv = xv.clamp(x0, x2);
        (xv, y1 + d01 * (xv - x1) + curv * (xv - x0) * (xv - x1))
    } else {
        (x1, y1)
    };
    Some(Peak { h_over_a: x.exp(), ratio: y.max(y1), index: best })
}

/// `η` at the steepest descent beyond the peak: the largest local exponent
/// among record-centred windows, then re-fitted at the parabolic vertex of
/// `η(ln H)` through its neighbours.
pub fn steepest_descent(records: &[SweepRecord], peak: &Peak, half_width: f64) -> Result<EtaEstimate> {
    let cands: Vec<EtaEstimate> = records[peak.index + 1..]
        .iter()
        .filter_map(|r| eta_at(records, r.h_over_a, half_width).ok())
        .collect();
    let (k, best) = cands
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.eta.total_cmp(&b.1.eta))
        .ok_or_else(|| Error::Fit("no covered fit window beyond the peak".into()))?;
    if k == 0 || k + 1 == cands.len() {
        return Ok(best.clone());
    }
    let (x0, x1, x2) = (cands[k - 1].h_over_a.ln(), best.h_over_a.ln(), cands[k + 1].h_over_a.ln());
    let (y0, y1, y2) = (cands[k - 1].eta, best.eta, cands[k + 1].eta);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv >= 0.0 {
        return Ok(best.clone());
    }
    let xv = (0.5 * (x0 + x1) - d01 / (2.0 * curv)).clamp(x0, x2);
    match eta_at(records, xv.exp(), half_width) {
        Ok(e) if e.eta >= best.eta => Ok(e),
        _ => Ok(best.clone()),
    }
}

/// Local `η` at the log-midpoint of the rising branch `[first usable ≥ lo, peak]`
/// plus the least-squares coefficient `c` of `ratio ≈ c · H/A` in that window.
pub fn rising_slope(records: &[SweepRecord], peak: &Peak, lo: f64, half_width: f64) -> Result<(EtaEstimate, f64)> {
    let start = records[..=peak.index]
        .iter()
        .find(|r| r.status.is_usable() && r.h_over_a >= lo)
        .ok_or_else(|| Error::Fit("no usable record on the rising branch".into()))?;
    let mid = (start.h_over_a * peak.h_over_a).sqrt();
    let est = eta_at(records, mid, half_width)?;
    let c = mid.ln();
    let inside = records
        .iter()
        .filter(|r| r.status.is_usable() && (r.h_over_a.ln() - c).abs() <= half_width + EDGE_SLACK * (1.0 + c.abs()));
    let (num, den) = inside.fold((0.0, 0.0), |(n, d), r| (n + r.ratio * r.h_over_a, d + r.h_over_a * r.h_over_a));
    Ok((est, num / den))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub estimates: Vec<(f64, EtaEstimate)>,
    /// Largest pairwise difference of the `η` values.
    pub spread: f64,
}

/// `η` at `probe` for each `(ωA, records)` curve.
pub fn universal_tail(curves: &[(f64, Vec<SweepRecord>)], probe: f64, half_width: f64) -> Result<TailReport> {
    if curves.is_empty() {
        return Err(Error::Fit("no curves".into()));
    }
    let mut estimates = Vec::with_capacity(curves.len());
    for (omega_a, recs) in curves {
        estimates.push((*omega_a, eta_at(recs, probe, half_width)?));
    }
    let (lo, hi) = estimates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (_, e)| (l.min(e.eta), h.max(e.eta)));
    Ok(TailReport { estimates, spread: hi - lo })
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
