//! Momentum quadrature for the dimensionless energy coefficient
//!
//! `c_E = ∫₀^∞ dq̃ q̃ ∫ dx̃ √g ΔM̃12 M̃12`, with `E = −(ħ c r / H²) c_E`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profiles::{DimensionlessProfile, DistanceReference, ProfileKind};
use crate::quadrature::GaussLegendre;
use crate::solver::{
    assemble, build_grid, solve_delta_m12, BlochSettings, BlochSolver, CellGrid, LineGrid, PanelPolicy,
    DEFAULT_HALF_WIDTH, DEFAULT_NODES,
};

pub const DEFAULT_Q_MAX: f64 = 30.0;
pub const DEFAULT_Q_NODES: usize = 96;

/// Breakpoints of the composite rule on `[0, 30]`, graded toward `q̃ = 0`
/// where the integrand behaves like `q̃ ln q̃`. Beyond 30 the intervals
/// double in width.
const Q_BREAKS: [f64; 9] = [0.0, 1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 3.0, 8.0, 15.0, 30.0];

fn q_breaks(q_max: f64) -> Vec<f64> {
    let mut b: Vec<f64> = Q_BREAKS.iter().copied().filter(|&v| v < q_max).collect();
    let mut next = 2.0 * Q_BREAKS[Q_BREAKS.len() - 1];
    while q_max > *b.last().unwrap() && next < q_max {
        if next > *b.last().unwrap() {
            b.push(next);
        }
        next *= 2.0;
    }
    b.push(q_max);
    b
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub q_max: f64,
}

impl MomentumGrid {
    /// Composite Gauss–Legendre rule with `n` nodes spread evenly over the
    /// graded intervals below `q_max`.
    pub fn new(q_max: f64, n: usize) -> Result<Self> {
        if !(q_max > 0.0 && q_max.is_finite()) {
            return Err(Error::Domain { what: "q_max", value: q_max });
        }
        let breaks = q_breaks(q_max);
        let parts = breaks.len() - 1;
        if n < parts {
            return Err(Error::Resolution { what: "momentum nodes".into(), required: parts, requested: n });
        }
        let (mut nodes, mut weights) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (k, ab) in breaks.windows(2).enumerate() {
            let m = n / parts + usize::from(k < n % parts);
            GaussLegendre::new(m).map_into(ab[0], ab[1], &mut nodes, &mut weights);
        }
        Ok(Self { nodes, weights, q_max })
    }

    /// Number of composite intervals below `q_max`.
    pub fn intervals(q_max: f64) -> usize {
        q_breaks(q_max).len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

impl Default for MomentumGrid {
    fn default() -> Self {
        Self::new(DEFAULT_Q_MAX, DEFAULT_Q_NODES).expect("default momentum grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverMethod {
    /// Quasi-periodic cell solve on the infinite surface.
    Periodic,
    /// Truncated window `[−L, L]`.
    Window,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::Periodic => "periodic",
            SolverMethod::Window => "window",
        }
    }
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(SolverMethod::Periodic),
            "window" => Ok(SolverMethod::Window),
            other => Err(Error::Settings(format!("unknown solver method '{other}' (periodic|window)"))),
        }
    }
}

/// Everything that determines a numerical result.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySettings {
    pub method: SolverMethod,
    pub reference: DistanceReference,
    pub q_max: f64,
    pub q_nodes: usize,
    pub panels: PanelPolicy,
    pub bloch: BlochSettings,
    pub half_width: f64,
    pub window_nodes: usize,
}

impl Default for EnergySettings {
    fn default() -> Self {
        Self {
            method: SolverMethod::Periodic,
            reference: DistanceReference::default(),
            q_max: DEFAULT_Q_MAX,
            q_nodes: DEFAULT_Q_NODES,
            panels: PanelPolicy::default(),
            bloch: BlochSettings::default(),
            half_width: DEFAULT_HALF_WIDTH,
            window_nodes: DEFAULT_NODES,
        }
    }
}

impl EnergySettings {
    /// Doubles every resolution parameter.
    pub fn doubled(&self) -> Self {
        Self {
            q_nodes: 2 * self.q_nodes,
            panels: self.panels.refined(2.0),
            bloch: BlochSettings { beta_panels: 2 * self.bloch.beta_panels, ..self.bloch },
            window_nodes: 2 * self.window_nodes,
            ..self.clone()
        }
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::new(self.q_max, self.q_nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyResult {
    pub c_e: f64,
    pub c_e_planar: f64,
    pub ratio: f64,
    pub settings: EnergySettings,
    /// Surface nodes used for the profile solve.
    pub n_nodes: usize,
    /// `(q̃, q̃ · inner integral)` samples.
    pub integrand: Vec<(f64, f64)>,
    pub max_residual: f64,
}

/// `q̃ Σ_i w_i √g_i ΔM̃12(x̃_i) m12(x̃_i)` on a window grid.
pub fn q_integrand(q: f64, grid: &LineGrid, p: &DimensionlessProfile) -> Result<f64> {
    let sys = solve_delta_m12(assemble(q, grid, p)?)?;
    Ok(q * sys.inner_integral(grid).expect("solved system"))
}

/// `c_E` on a window grid.
pub fn energy_coefficient(p: &DimensionlessProfile, grid: &LineGrid, qgrid: &MomentumGrid) -> Result<f64> {
    let values: Result<Vec<f64>> = qgrid.nodes.par_iter().map(|&q| q_integrand(q, grid, p)).collect();
    Ok(qgrid.integrate(&values?))
}

/// Per-node integrand and worst residual on the infinite surface.
pub fn periodic_integrand(
    p: &DimensionlessProfile,
    cell: &CellGrid,
    qgrid: &MomentumGrid,
    bloch: BlochSettings,
) -> Result<(Vec<f64>, f64)> {
    let solver = BlochSolver::new(p, cell, bloch)?;
    let samples: Result<Vec<_>> = qgrid.nodes.par_iter().map(|&q| solver.inner_integral(q)).collect();
    let samples = samples?;
    let res = samples.iter().fold(0.0f64, |m, s| m.max(s.max_residual));
    Ok((samples.iter().map(|s| s.q * s.inner).collect(), res))
}

/// Flat-surface coefficient for one settings snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarReference {
    pub c_e: f64,
    pub integrand: Vec<f64>,
    pub max_residual: f64,
    pub settings: EnergySettings,
}

/// Computes the flat coefficient with `settings`. The periodic solver uses
/// the flat profile's own cell; the window solver uses the same `(L, N)`.
pub fn planar_reference(settings: &EnergySettings) -> Result<PlanarReference> {
    let qgrid = settings.momentum_grid()?;
    let flat = DimensionlessProfile::flat();
    let (integrand, max_residual) = match settings.method {
        SolverMethod::Periodic => {
            let cell = CellGrid::build(&flat, &settings.panels)?;
            periodic_integrand(&flat, &cell, &qgrid, settings.bloch)?
        }
        SolverMethod::Window => {
            let grid = build_grid(&flat, settings.half_width, settings.window_nodes)?;
            let v: Result<Vec<f64>> = qgrid.nodes.par_iter().map(|&q| q_integrand(q, &grid, &flat)).collect();
            (v?, 0.0)
        }
    };
    Ok(PlanarReference { c_e: qgrid.integrate(&integrand), integrand, max_residual, settings: settings.clone() })
}

/// Solves for `p` and for the flat surface with identical settings and
/// returns both coefficients and their ratio.
pub fn energy_ratio(p: &DimensionlessProfile, settings: &EnergySettings) -> Result<EnergyResult> {
    energy_ratio_with(p, settings, &planar_reference(settings)?)
}

/// As [`energy_ratio`] with a precomputed flat reference, which must have
/// been computed with the same settings.
pub fn energy_ratio_with(
    p: &DimensionlessProfile,
    settings: &EnergySettings,
    planar: &PlanarReference,
) -> Result<EnergyResult> {
    if planar.settings != *settings {
        return Err(Error::Settings("planar reference was computed with different settings".into()));
    }
    let qgrid = settings.momentum_grid()?;
    let placed = settings.reference.apply(p)?;
    let (vals, n_nodes, res) = if placed.kind() == ProfileKind::Flat {
        let n = match settings.method {
            SolverMethod::Periodic => CellGrid::build(&placed, &settings.panels)?.len(),
            SolverMethod::Window => build_grid(&placed, settings.half_width, settings.window_nodes)?.len(),
        };
        (planar.integrand.clone(), n, planar.max_residual)
    } else {
        match settings.method {
            SolverMethod::Periodic => {
                if placed.kind() == ProfileKind::Tabulated {
                    return Err(Error::Settings("tabulated profiles need method = window".into()));
                }
                let cell = CellGrid::build(&placed, &settings.panels)?;
                let (v, r) = periodic_integrand(&placed, &cell, &qgrid, settings.bloch)?;
                (v, cell.len(), r)
            }
            SolverMethod::Window => {
                let grid = build_grid(&placed, settings.half_width, settings.window_nodes)?;
                let v: Result<Vec<f64>> = qgrid.nodes.par_iter().map(|&q| q_integrand(q, &grid, &placed)).collect();
                (v?, grid.len(), 0.0)
            }
        }
    };
    let c_e = qgrid.integrate(&vals);
    if !(c_e > 0.0 && c_e.is_finite()) {
        return Err(Error::Solve {
            q: f64::NAN,
            nodes: n_nodes,
            half_width: settings.half_width,
            reason: format!("non-positive energy coefficient {c_e}"),
        });
    }
    Ok(EnergyResult {
        c_e,
        c_e_planar: planar.c_e,
        ratio: c_e / planar.c_e,
        settings: settings.clone(),
        n_nodes,
        integrand: qgrid.nodes.iter().copied().zip(vals).collect(),
        max_residual: res.max(planar.max_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn momentum_grid_is_exact_on_polynomials() {
        let g = MomentumGrid::default();
        assert_eq!(g.len(), 96);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(g.nodes[0] > 0.0 && *g.nodes.last().unwrap() < 30.0);
        for deg in 0..=23 {
            let v: Vec<f64> = g.nodes.iter().map(|q| q.powi(deg)).collect();
            let exact = 30f64.powi(deg + 1) / (deg + 1) as f64;
            assert!((g.integrate(&v) / exact - 1.0).abs() < 1e-13, "deg {deg}");
        }
        assert_eq!(MomentumGrid::new(10.0, 50).unwrap().len(), 50);
    }

    #[test]
    fn extending_q_max_keeps_lower_nodes() {
        assert_eq!(MomentumGrid::intervals(30.0), 8);
        assert_eq!(MomentumGrid::intervals(60.0), 9);
        assert_eq!(MomentumGrid::intervals(100.0), 10);
        assert_eq!(MomentumGrid::intervals(0.01), 1);
        let a = MomentumGrid::new(30.0, 96).unwrap();
        let b = MomentumGrid::new(60.0, 108).unwrap();
        assert_eq!(a.nodes[..], b.nodes[..96]);
        assert_eq!(a.weights[..], b.weights[..96]);
    }

    #[test]
    fn flat_closed_form_integrand_reaches_planar_value() {
        // ∫ q K0(2q)/(2π) dq = 1/(8π)
        let g = MomentumGrid::default();
        let v: Vec<f64> = g.nodes.iter().map(|&q| q * crate::specfun::k0(2.0 * q) / (2.0 * PI)).collect();
        assert!((g.integrate(&v) * 8.0 * PI - 1.0).abs() < 1e-7);
    }

    #[test]
    fn planar_tail_beyond_default_cutoff_is_negligible() {
        let s = EnergySettings::default();
        let a = planar_reference(&s).unwrap().c_e;
        let b = planar_reference(&EnergySettings { q_max: 60.0, q_nodes: 108, ..s }).unwrap().c_e;
        assert!(((a - b) / a).abs() <= 1e-10, "{a} {b}");
        assert!((a * 8.0 * PI - 1.0).abs() < 1e-5);
    }

    #[test]
    fn tiny_corrugation_is_nearly_flat() {
        let s = EnergySettings::default();
        let p = DimensionlessProfile::sine(1e-4, 1.0, -PI / 2.0).unwrap();
        let r = energy_ratio(&p, &s).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-3, "{}", r.ratio);
        assert!(r.c_e > 0.0);
    }

    #[test]
    fn mismatched_planar_reference_is_rejected() {
        let s = EnergySettings { q_nodes: 24, ..EnergySettings::default() };
        let planar = planar_reference(&s).unwrap();
        let other = EnergySettings { q_nodes: 32, ..s };
        let p = DimensionlessProfile::sine(0.5, 1.0, 0.0).unwrap();
        assert!(matches!(energy_ratio_with(&p, &other, &planar), Err(Error::Settings(_))));
    }
}
