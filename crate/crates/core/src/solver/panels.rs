//! Composite Gauss–Legendre panels along the surface coordinate and the
//! product-integration weights for the logarithmic kernel singularity.

use crate::error::{Error, Result};
use crate::profiles::DimensionlessProfile;
use crate::quadrature::{graded_rule, GaussLegendre, Lagrange};
use crate::specfun::{k0, BESSEL_UNDERFLOW_ARG};

/// Nodes per panel.
pub const PANEL_ORDER: usize = 16;

/// Source panels closer than this many panel lengths to a target are
/// integrated with the graded product rule.
const NEAR_FACTOR: f64 = 1.0;
const GRADING_RATIO: f64 = 0.25;
const GRADING_FLOOR: f64 = 1e-12;

/// Rules that bound the panel length.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelPolicy {
    /// Minimum nodes per corrugation wavelength.
    pub nodes_per_wavelength: usize,
    /// Panel length relative to the (slope-corrected) distance to the sphere centre.
    pub sphere_fraction: f64,
    /// Panel length times the maximal curvature.
    pub curvature_factor: f64,
    pub max_panel: f64,
}

impl Default for PanelPolicy {
    fn default() -> Self {
        Self { nodes_per_wavelength: 8, sphere_fraction: 1.0, curvature_factor: 16.0, max_panel: 8.0 }
    }
}

impl PanelPolicy {
    /// Same policy with every length bound divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            nodes_per_wavelength: (self.nodes_per_wavelength as f64 * factor).ceil() as usize,
            sphere_fraction: self.sphere_fraction / factor,
            curvature_factor: self.curvature_factor / factor,
            max_panel: self.max_panel / factor,
        }
    }

    fn accepts(&self, p: &DimensionlessProfile, a: f64, b: f64, period: Option<f64>) -> Result<bool> {
        let len = b - a;
        if len > self.max_panel {
            return Ok(false);
        }
        if let Some(lam) = period {
            if len > lam * PANEL_ORDER as f64 / self.nodes_per_wavelength as f64 {
                return Ok(false);
            }
        }
        let kappa = p.max_curvature();
        if kappa > 0.0 && len * kappa > self.curvature_factor {
            return Ok(false);
        }
        let mut d_min = f64::INFINITY;
        for i in 0..=4 {
            let x = a + len * i as f64 / 4.0;
            let d = x.hypot(p.h(x) - 1.0);
            if d < 1e-6 {
                return Err(Error::Geometry(format!("surface passes through the sphere centre near x = {x}")));
            }
            d_min = d_min.min(d / p.sqrt_g(x));
        }
        Ok(len <= self.sphere_fraction * d_min)
    }
}

/// Bisects `[fixed[k], fixed[k+1]]` until every panel satisfies `policy`.
pub(crate) fn refine_breaks(
    p: &DimensionlessProfile,
    fixed: &[f64],
    policy: &PanelPolicy,
    period: Option<f64>,
) -> Result<Vec<f64>> {
    let mut out = vec![fixed[0]];
    for seg in fixed.windows(2) {
        let mut stack = vec![(seg[0], seg[1])];
        while let Some((a, b)) = stack.pop() {
            if policy.accepts(p, a, b, period)? || b - a < 1e-9 {
                out.push(b);
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b));
                stack.push((a, m));
            }
        }
    }
    Ok(out)
}

/// Nodes, weights and cached profile samples on a set of panels.
#[derive(Debug, Clone)]
pub struct Panels {
    pub breaks: Vec<f64>,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub slope: Vec<f64>,
    pub sqrt_g: Vec<f64>,
    lagrange: Lagrange,
}

impl Panels {
    pub fn new(p: &DimensionlessProfile, breaks: Vec<f64>) -> Self {
        let rule = GaussLegendre::new(PANEL_ORDER);
        let mut x = Vec::with_capacity(PANEL_ORDER * (breaks.len() - 1));
        let mut w = Vec::with_capacity(x.capacity());
        for ab in breaks.windows(2) {
            rule.map_into(ab[0], ab[1], &mut x, &mut w);
        }
        let h = x.iter().map(|&t| p.h(t)).collect();
        let slope = x.iter().map(|&t| p.dh(t)).collect();
        let sqrt_g = x.iter().map(|&t| p.sqrt_g(t)).collect();
        let lagrange = Lagrange::new(&rule.nodes);
        Self { breaks, x, w, h, slope, sqrt_g, lagrange }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn panel(&self, k: usize) -> (f64, f64) {
        (self.breaks[k], self.breaks[k + 1])
    }

    /// Panel containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let n = self.breaks.len();
        if x < self.breaks[0] || x > self.breaks[n - 1] {
            return None;
        }
        Some(self.breaks.partition_point(|&b| b <= x).clamp(1, n - 1) - 1)
    }

    /// Values of the panel-`k` Lagrange basis at `x`.
    pub fn basis(&self, k: usize, x: f64, out: &mut [f64]) {
        let (a, b) = self.panel(k);
        self.lagrange.basis((2.0 * x - a - b) / (b - a), out);
    }

    pub(crate) fn is_near(&self, k: usize, xt: f64, shift: f64) -> bool {
        let (a, b) = self.panel(k);
        let (a, b) = (a + shift, b + shift);
        let d = if xt < a {
            a - xt
        } else if xt > b {
            xt - b
        } else {
            0.0
        };
        d < NEAR_FACTOR * (b - a)
    }
}

/// Graded product integration of `K0(q ρ)` against a panel's Lagrange basis.
#[derive(Debug, Clone)]
pub(crate) struct NearField {
    rule: GaussLegendre,
}

impl NearField {
    pub fn new() -> Self {
        Self { rule: GaussLegendre::new(PANEL_ORDER) }
    }

    /// `out[j] = ∫_panel K0(q ρ(x)) ℓ_j(x) dx` with
    /// `ρ(x) = |(x + shift − xt, h(x) − ht)|`.
    #[allow(clippy::too_many_arguments)]
    pub fn moments(
        &self,
        q: f64,
        p: &DimensionlessProfile,
        panels: &Panels,
        k: usize,
        xt: f64,
        ht: f64,
        shift: f64,
        out: &mut [f64],
    ) {
        let (a, b) = panels.panel(k);
        let (mut gx, mut gw) = (Vec::with_capacity(700), Vec::with_capacity(700));
        graded_rule(&self.rule, a, b, xt - shift, GRADING_RATIO, GRADING_FLOOR, &mut gx, &mut gw);
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut ell = [0.0; PANEL_ORDER];
        for (&x, &wt) in gx.iter().zip(&gw) {
            let dx = x + shift - xt;
            let rho = dx.hypot(p.h(x) - ht).max(dx.abs());
            let arg = q * rho;
            if arg >= BESSEL_UNDERFLOW_ARG || rho == 0.0 {
                continue;
            }
            let v = wt * k0(arg);
            panels.basis(k, x, &mut ell);
            for (o, l) in out.iter_mut().zip(&ell) {
                *o += v * l;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breaks_respect_kinks_and_bounds() {
        let p = DimensionlessProfile::sawtooth(0.5, 2.0, std::f64::consts::FRAC_PI_2).unwrap();
        let mut fixed = vec![-3.0];
        fixed.extend(p.kinks(-3.0, 3.0));
        fixed.push(3.0);
        let breaks = refine_breaks(&p, &fixed, &PanelPolicy::default(), Some(std::f64::consts::PI)).unwrap();
        for k in &fixed {
            assert!(breaks.iter().any(|b| (b - k).abs() < 1e-15));
        }
        assert!(breaks.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn product_weights_integrate_log_kernel() {
        let p = DimensionlessProfile::flat();
        let panels = Panels::new(&p, vec![-0.5, 0.0, 0.5]);
        let nf = NearField::new();
        let q = 0.7;
        let xt = panels.x[5];
        let mut m = [0.0; PANEL_ORDER];
        nf.moments(q, &p, &panels, 0, xt, 0.0, 0.0, &mut m);
        // independent reference: x = xt ± e^{-t} removes the log singularity
        let one_side = |g: &dyn Fn(f64) -> f64, len: f64, sign: f64| {
            crate::quadrature::adaptive(
                |t| {
                    let u = (-t).exp();
                    g(xt + sign * u) * k0(q * u) * u
                },
                -len.ln(),
                40.0,
                1e-15,
            )
            .unwrap()
        };
        let reference = |g: &dyn Fn(f64) -> f64| one_side(g, xt + 0.5, -1.0) + one_side(g, -xt, 1.0);
        let total: f64 = m.iter().sum();
        let exact = reference(&|_| 1.0);
        assert!((total - exact).abs() < 1e-12, "{total} {exact}");
        let second: f64 = m.iter().zip(&panels.x[..PANEL_ORDER]).map(|(a, x)| a * x * x).sum();
        let exact2 = reference(&|x| x * x);
        assert!((second - exact2).abs() < 1e-12, "{second} {exact2}");
    }

    #[test]
    fn locate_finds_panels() {
        let panels = Panels::new(&DimensionlessProfile::flat(), vec![0.0, 1.0, 3.0]);
        assert_eq!(panels.locate(0.0), Some(0));
        assert_eq!(panels.locate(1.5), Some(1));
        assert_eq!(panels.locate(3.0), Some(1));
        assert_eq!(panels.locate(3.1), None);
        assert_eq!(panels.len(), 2 * PANEL_ORDER);
    }
}
