//! Corrugation height profiles and their reduction to units of the
//! sphere-surface distance `H`.
//!
//! A [`HeightProfile`] is specified in physical units. [`reduce`] divides
//! all lengths by `H`, giving a [`DimensionlessProfile`] that depends on
//! `(A, ω, H)` only through `a = A/H` and `ν = ωH`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Flat,
    Sine,
    /// Symmetric triangle wave with the same peaks and zeros as the sine.
    Sawtooth,
    Tabulated,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Flat => "flat",
            ProfileKind::Sine => "sine",
            ProfileKind::Sawtooth => "sawtooth",
            ProfileKind::Tabulated => "tabulated",
        }
    }

    pub fn is_periodic(self) -> bool {
        matches!(self, ProfileKind::Sine | ProfileKind::Sawtooth)
    }
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(ProfileKind::Flat),
            "sine" => Ok(ProfileKind::Sine),
            "sawtooth" => Ok(ProfileKind::Sawtooth),
            "tabulated" => Ok(ProfileKind::Tabulated),
            other => Err(Error::Profile(format!("unknown profile kind '{other}'"))),
        }
    }
}

/// Corrugation `h(x)` in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightProfile {
    kind: ProfileKind,
    amplitude: f64,
    omega: f64,
    phase: f64,
    samples: Vec<(f64, f64)>,
}

impl HeightProfile {
    pub fn flat() -> Self {
        Self { kind: ProfileKind::Flat, amplitude: 0.0, omega: 1.0, phase: 0.0, samples: Vec::new() }
    }

    /// `h(x) = A sin(ωx + φ)`.
    pub fn sine(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        Self::periodic(ProfileKind::Sine, amplitude, omega, phase)
    }

    /// Triangle wave of amplitude `A` and angular frequency `ω`, phase-aligned
    /// with `A sin(ωx + φ)`.
    pub fn sawtooth(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        Self::periodic(ProfileKind::Sawtooth, amplitude, omega, phase)
    }

    fn periodic(kind: ProfileKind, amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Profile(format!("amplitude must be finite and >= 0, got {amplitude}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Profile(format!("omega must be finite and > 0, got {omega}")));
        }
        if !phase.is_finite() {
            return Err(Error::Profile(format!("phase must be finite, got {phase}")));
        }
        Ok(Self { kind, amplitude, omega, phase, samples: Vec::new() })
    }

    /// Tabulated `(x, h)` samples, strictly increasing in `x`.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Profile("tabulated profile needs at least two samples".into()));
        }
        if samples.iter().any(|(x, h)| !x.is_finite() || !h.is_finite()) {
            return Err(Error::Profile("tabulated samples must be finite".into()));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::Profile(format!(
                "tabulated samples must be strictly increasing in x (rows {} and {})",
                i + 1,
                i + 2
            )));
        }
        let amplitude = samples.iter().fold(0.0f64, |m, &(_, h)| m.max(h.abs()));
        Ok(Self { kind: ProfileKind::Tabulated, amplitude, omega: 1.0, phase: 0.0, samples })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

/// Go over to units of `H`: `x̃ = x/H`, `h̃(x̃) = h(x̃H)/H`.
pub fn reduce(profile: &HeightProfile, distance: f64) -> Result<DimensionlessProfile> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::Domain { what: "reduce: distance H", value: distance });
    }
    let p = profile;
    match p.kind {
        ProfileKind::Flat => Ok(DimensionlessProfile::flat()),
        ProfileKind::Sine | ProfileKind::Sawtooth => DimensionlessProfile::new(
            p.kind,
            p.amplitude / distance,
            p.omega * distance,
            p.phase,
        ),
        ProfileKind::Tabulated => {
            let scaled: Vec<(f64, f64)> =
                p.samples.iter().map(|&(x, h)| (x / distance, h / distance)).collect();
            DimensionlessProfile::tabulated(scaled)
        }
    }
}

/// Height profile in units of `H`. The sphere centre sits at `(0, 1)`.
///
/// `offset` shifts the whole surface vertically; it is zero after
/// [`reduce`] and is set by [`DimensionlessProfile::anchored_below_sphere`].
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessProfile {
    kind: ProfileKind,
    a: f64,
    nu: f64,
    phase: f64,
    offset: f64,
    table: Option<MonotoneCubic>,
}

impl DimensionlessProfile {
    pub fn flat() -> Self {
        Self { kind: ProfileKind::Flat, a: 0.0, nu: 1.0, phase: 0.0, offset: 0.0, table: None }
    }

    /// Periodic profile from its dimensionless parameters `a = A/H`, `ν = ωH`.
    pub fn new(kind: ProfileKind, a: f64, nu: f64, phase: f64) -> Result<Self> {
        match kind {
            ProfileKind::Flat => Ok(Self::flat()),
            ProfileKind::Tabulated => {
                Err(Error::Profile("use DimensionlessProfile::tabulated for sampled profiles".into()))
            }
            ProfileKind::Sine | ProfileKind::Sawtooth => {
                HeightProfile::periodic(kind, a, nu, phase)?;
                Ok(Self { kind, a, nu, phase, offset: 0.0, table: None })
            }
        }
    }

    pub fn sine(a: f64, nu: f64, phase: f64) -> Result<Self> {
        Self::new(ProfileKind::Sine, a, nu, phase)
    }

    pub fn sawtooth(a: f64, nu: f64, phase: f64) -> Result<Self> {
        Self::new(ProfileKind::Sawtooth, a, nu, phase)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        let base = HeightProfile::tabulated(samples)?;
        let table = MonotoneCubic::new(&base.samples);
        Ok(Self {
            kind: ProfileKind::Tabulated,
            a: base.amplitude,
            nu: 1.0,
            phase: 0.0,
            offset: 0.0,
            table: Some(table),
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// `A/H`.
    pub fn amplitude_ratio(&self) -> f64 {
        self.a
    }

    /// `ωH`.
    pub fn frequency(&self) -> f64 {
        self.nu
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Same surface shifted vertically by `dz`.
    pub fn with_offset(&self, dz: f64) -> Self {
        Self { offset: dz, ..self.clone() }
    }

    /// Shifts the surface so that the point directly below the sphere lies at
    /// height 0, i.e. `H` becomes the local sphere-surface distance.
    pub fn anchored_below_sphere(&self) -> Result<Self> {
        let base = self.with_offset(0.0).height(0.0)?;
        Ok(self.with_offset(-base))
    }

    /// Spatial period in units of `H`, when the profile has one.
    pub fn period(&self) -> Option<f64> {
        if self.kind.is_periodic() {
            Some(TAU / self.nu)
        } else {
            None
        }
    }

    /// Sampled `x̃` range of a tabulated profile.
    pub fn domain(&self) -> Option<(f64, f64)> {
        self.table.as_ref().map(|t| (t.x[0], t.x[t.x.len() - 1]))
    }

    pub fn height(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.h(x))
    }

    pub fn slope(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.dh(x))
    }

    /// `√g = √(1 + h̃′²) >= 1`.
    pub fn metric_factor(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.sqrt_g(x))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Domain { what: "profile coordinate", value: x });
        }
        if let Some((lo, hi)) = self.domain() {
            if x < lo || x > hi {
                return Err(Error::OutOfRange { what: "tabulated profile coordinate", value: x, lo, hi });
            }
        }
        Ok(())
    }

    /// Unchecked height; tabulated profiles are clamped to their end values.
    #[inline]
    pub(crate) fn h(&self, x: f64) -> f64 {
        self.offset
            + match self.kind {
                ProfileKind::Flat => 0.0,
                ProfileKind::Sine => self.a * (self.nu * x + self.phase).sin(),
                ProfileKind::Sawtooth => self.a * triangle(self.nu * x + self.phase),
                ProfileKind::Tabulated => self.table.as_ref().map_or(0.0, |t| t.value(x)),
            }
    }

    #[inline]
    pub(crate) fn dh(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sine => self.a * self.nu * (self.nu * x + self.phase).cos(),
            ProfileKind::Sawtooth => self.a * self.nu * triangle_slope(self.nu * x + self.phase),
            ProfileKind::Tabulated => self.table.as_ref().map_or(0.0, |t| t.derivative(x)),
        }
    }

    #[inline]
    pub(crate) fn sqrt_g(&self, x: f64) -> f64 {
        let s = self.dh(x);
        (1.0 + s * s).sqrt()
    }

    /// Largest `|h̃′|` anywhere on the profile.
    pub fn max_slope(&self) -> f64 {
        match self.kind {
            ProfileKind::Flat => 0.0,
            ProfileKind::Sine => self.a * self.nu,
            ProfileKind::Sawtooth => self.a * self.nu * 2.0 / PI,
            ProfileKind::Tabulated => self.table.as_ref().map_or(0.0, |t| t.max_abs_derivative()),
        }
    }

    /// Upper bound on `|h̃″|` away from kinks.
    pub fn max_curvature(&self) -> f64 {
        match self.kind {
            ProfileKind::Flat | ProfileKind::Sawtooth => 0.0,
            ProfileKind::Sine => self.a * self.nu * self.nu,
            ProfileKind::Tabulated => self.table.as_ref().map_or(0.0, |t| t.max_abs_second_derivative()),
        }
    }

    /// Points in `[lo, hi]` where the slope is discontinuous.
    pub fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.kind {
            ProfileKind::Sawtooth => {
                // kinks at ν x + φ = π/2 + kπ
                let k0 = ((self.nu * lo + self.phase - FRAC_PI_2) / PI).ceil() as i64;
                let k1 = ((self.nu * hi + self.phase - FRAC_PI_2) / PI).floor() as i64;
                (k0..=k1)
                    .map(|k| (FRAC_PI_2 + k as f64 * PI - self.phase) / self.nu)
                    .filter(|&x| x >= lo && x <= hi)
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// What the sphere-surface distance `H` is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DistanceReference {
    /// The mean plane `h = 0` of the corrugation.
    MeanPlane,
    /// The surface point directly below the sphere.
    #[default]
    LocalSurface,
}

impl DistanceReference {
    pub fn name(self) -> &'static str {
        match self {
            DistanceReference::MeanPlane => "mean",
            DistanceReference::LocalSurface => "surface",
        }
    }

    /// Positions `p` relative to the sphere centre at `(0, 1)`.
    pub fn apply(self, p: &DimensionlessProfile) -> Result<DimensionlessProfile> {
        match self {
            DistanceReference::MeanPlane => Ok(p.with_offset(0.0)),
            DistanceReference::LocalSurface => p.anchored_below_sphere(),
        }
    }
}

impl std::str::FromStr for DistanceReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(DistanceReference::MeanPlane),
            "surface" => Ok(DistanceReference::LocalSurface),
            other => Err(Error::Settings(format!("unknown distance reference '{other}' (mean|surface)"))),
        }
    }
}

/// Triangle wave with peaks ±1 at `θ = π/2 + kπ`; equals `(2/π) asin(sin θ)`.
fn triangle(theta: f64) -> f64 {
    let t = (theta + FRAC_PI_2).rem_euclid(TAU);
    if t <= PI {
        -1.0 + 2.0 * t / PI
    } else {
        3.0 - 2.0 * t / PI
    }
}

/// Left-sided derivative of [`triangle`].
fn triangle_slope(theta: f64) -> f64 {
    let t = (theta + FRAC_PI_2).rem_euclid(TAU);
    if t > 0.0 && t <= PI {
        2.0 / PI
    } else {
        -2.0 / PI
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant with the
/// Fritsch–Butland interior slopes and one-sided three-point end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(samples: &[(f64, f64)]) -> Self {
        let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Self { x, y, d };
        }
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Self { x, y, d }
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let s = ((t - self.x[k]) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h * h10 * self.d[k] + h01 * self.y[k + 1] + h * h11 * self.d[k + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        if t < self.x[0] || t > self.x[self.x.len() - 1] {
            return 0.0;
        }
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let dh00 = (6.0 * s2 - 6.0 * s) / h;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / h;
        let dh11 = 3.0 * s2 - 2.0 * s;
        dh00 * self.y[k] + dh10 * self.d[k] + dh01 * self.y[k + 1] + dh11 * self.d[k + 1]
    }

    fn max_abs_derivative(&self) -> f64 {
        // The derivative is quadratic per segment; sample it densely.
        let mut m = 0.0f64;
        for k in 0..self.x.len() - 1 {
            for j in 0..=16 {
                let t = self.x[k] + (self.x[k + 1] - self.x[k]) * j as f64 / 16.0;
                m = m.max(self.derivative(t).abs());
            }
        }
        m
    }
}

impl MonotoneCubic {
    fn max_abs_second_derivative(&self) -> f64 {
        // linear in each segment, so the extremes sit at segment ends
        let mut m = 0.0f64;
        for k in 0..self.x.len() - 1 {
            let h = self.x[k + 1] - self.x[k];
            let delta = (self.y[k + 1] - self.y[k]) / h;
            let at0 = (6.0 * delta - 4.0 * self.d[k] - 2.0 * self.d[k + 1]) / h;
            let at1 = (-6.0 * delta + 2.0 * self.d[k] + 4.0 * self.d[k + 1]) / h;
            m = m.max(at0.abs()).max(at1.abs());
        }
        m
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
