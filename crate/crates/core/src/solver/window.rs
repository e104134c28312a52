//! Nyström discretisation on a truncated window `[−L, L]`.
//!
//! Works for any profile, including tabulated ones, but carries a
//! truncation error of order `e^{−q L}` from the cut-off surface.

use std::f64::consts::PI;

use faer::prelude::*;

use super::panels::{NearField, Panels, PANEL_ORDER};
use crate::error::{Error, Result};
use crate::kernels::{kernel, sphere_chord};
use crate::profiles::DimensionlessProfile;

pub const DEFAULT_HALF_WIDTH: f64 = 12.0;
pub const DEFAULT_NODES: usize = 1200;
pub const MIN_NODES_PER_WAVELENGTH: usize = 24;
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Discretised surface coordinate on `[−L, L]`.
#[derive(Debug, Clone)]
pub struct LineGrid {
    pub half_width: f64,
    pub panels: Panels,
}

impl LineGrid {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.panels.x
    }

    pub fn weights(&self) -> &[f64] {
        &self.panels.w
    }
}

/// Nodes a periodic profile needs on `[−L, L]` to meet the per-wavelength floor.
pub fn required_nodes(p: &DimensionlessProfile, half_width: f64) -> usize {
    match p.period() {
        Some(lam) => (MIN_NODES_PER_WAVELENGTH as f64 * 2.0 * half_width / lam).ceil() as usize,
        None => PANEL_ORDER,
    }
}

/// Composite Gauss panels covering `[−L, L]` with about `n` nodes, kinks on
/// panel boundaries. The node count is rounded up to whole panels.
pub fn build_grid(p: &DimensionlessProfile, half_width: f64, n: usize) -> Result<LineGrid> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::Domain { what: "grid half-width L", value: half_width });
    }
    if n < PANEL_ORDER {
        return Err(Error::Resolution { what: "grid nodes".into(), required: PANEL_ORDER, requested: n });
    }
    let required = required_nodes(p, half_width);
    if n < required {
        return Err(Error::Resolution {
            what: format!("nodes for {} per wavelength on [-{half_width}, {half_width}]", MIN_NODES_PER_WAVELENGTH),
            required,
            requested: n,
        });
    }
    if let Some((lo, hi)) = p.domain() {
        if -half_width < lo || half_width > hi {
            return Err(Error::OutOfRange { what: "grid half-width vs tabulated range", value: half_width, lo, hi });
        }
    }
    let mut fixed = vec![-half_width];
    fixed.extend(p.kinks(-half_width, half_width).into_iter().filter(|&k| k > -half_width && k < half_width));
    fixed.push(half_width);
    let total_panels = n.div_ceil(PANEL_ORDER).max(fixed.len() - 1);
    let span = 2.0 * half_width;
    let mut breaks = vec![fixed[0]];
    for seg in fixed.windows(2) {
        let m = ((seg[1] - seg[0]) / span * total_panels as f64).round().max(1.0) as usize;
        for i in 1..=m {
            breaks.push(seg[0] + (seg[1] - seg[0]) * i as f64 / m as f64);
        }
    }
    Ok(LineGrid { half_width, panels: Panels::new(p, breaks) })
}

/// Dense operator, right-hand side and (after solving) `ΔM̃12` at one `q̃`.
#[derive(Debug, Clone)]
pub struct KernelSystem {
    pub q: f64,
    pub half_width: f64,
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub solution: Option<Vec<f64>>,
    pub residual_norm: Option<f64>,
    pub condition_estimate: Option<f64>,
}

/// Nyström matrix acting on `Δ`: far entries `w_j √g_j m11`, near entries
/// from graded product integration of `K0` against the panel basis.
pub fn assemble(q: f64, grid: &LineGrid, p: &DimensionlessProfile) -> Result<KernelSystem> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Domain { what: "assembly momentum q", value: q });
    }
    let pan = &grid.panels;
    let n = pan.len();
    let near = NearField::new();
    let mut a = Mat::<f64>::zeros(n, n);
    let mut mom = [0.0; PANEL_ORDER];
    for i in 0..n {
        let (xi, hi) = (pan.x[i], pan.h[i]);
        for k in 0..pan.n_panels() {
            let cols = k * PANEL_ORDER..(k + 1) * PANEL_ORDER;
            if pan.is_near(k, xi, 0.0) {
                near.moments(q, p, pan, k, xi, hi, 0.0, &mut mom);
                for (j, m) in cols.zip(&mom) {
                    a[(i, j)] = m / (2.0 * PI) * pan.sqrt_g[j];
                }
            } else {
                for j in cols {
                    let rho = (pan.x[j] - xi).hypot(pan.h[j] - hi);
                    a[(i, j)] = pan.w[j] * pan.sqrt_g[j] * kernel(q * rho);
                }
            }
        }
    }
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let c = sphere_chord(pan.x[i], pan.h[i]);
        if c == 0.0 {
            return Err(Error::Geometry(format!("surface touches the sphere centre at x = {}", pan.x[i])));
        }
        rhs[i] = kernel(q * c);
    }
    if (0..n).any(|j| a.col(j).iter().any(|v| !v.is_finite())) {
        return Err(Error::Solve { q, nodes: n, half_width: grid.half_width, reason: "non-finite matrix entry".into() });
    }
    Ok(KernelSystem { q, half_width: grid.half_width, matrix: a, rhs, solution: None, residual_norm: None, condition_estimate: None })
}

/// Dense LU solve with a residual check.
pub fn solve_delta_m12(mut sys: KernelSystem) -> Result<KernelSystem> {
    let n = sys.rhs.len();
    let fail = |reason: String| Error::Solve { q: sys.q, nodes: n, half_width: sys.half_width, reason };
    let b = Mat::<f64>::from_fn(n, 1, |i, _| sys.rhs[i]);
    let lu = sys.matrix.partial_piv_lu();
    let x = lu.solve(&b);
    let (mut dmax, mut dmin) = (0.0f64, f64::INFINITY);
    for d in lu.U().diagonal().column_vector().iter() {
        dmax = dmax.max(d.abs());
        dmin = dmin.min(d.abs());
    }
    if dmin == 0.0 {
        return Err(fail("singular matrix".into()));
    }
    let r = &sys.matrix * &x - &b;
    let amax = |m: &Mat<f64>| m.col(0).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = amax(&b);
    let residual = if scale > 0.0 { amax(&r) / scale } else { amax(&r) };
    if !residual.is_finite() || residual > RESIDUAL_TOLERANCE {
        return Err(fail(format!("residual {residual:e} above {RESIDUAL_TOLERANCE:e}")));
    }
    sys.solution = Some(x.col(0).iter().copied().collect());
    sys.residual_norm = Some(residual);
    sys.condition_estimate = Some(dmax / dmin);
    Ok(sys)
}

impl KernelSystem {
    /// `Σ_i w_i √g_i Δ_i m12_i`, i.e. the inner integral without the `q̃` factor.
    pub fn inner_integral(&self, grid: &LineGrid) -> Option<f64> {
        let x = self.solution.as_ref()?;
        let pan = &grid.panels;
        Some((0..x.len()).map(|i| pan.w[i] * pan.sqrt_g[i] * x[i] * self.rhs[i]).sum())
    }

    /// `Δ` at an arbitrary point of the window, by panel interpolation of `√g Δ`.
    pub fn delta_at(&self, grid: &LineGrid, p: &DimensionlessProfile, x: f64) -> Option<f64> {
        let sol = self.solution.as_ref()?;
        let pan = &grid.panels;
        let k = pan.locate(x)?;
        let mut ell = [0.0; PANEL_ORDER];
        pan.basis(k, x, &mut ell);
        let mu: f64 = (0..PANEL_ORDER).map(|j| ell[j] * sol[k * PANEL_ORDER + j] * pan.sqrt_g[k * PANEL_ORDER + j]).sum();
        Some(mu / p.sqrt_g(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::oracle::flat_delta_closed_form;

    #[test]
    fn grid_weight_sum_and_floor() {
        let g = build_grid(&DimensionlessProfile::flat(), 12.0, 1200).unwrap();
        assert_eq!(g.len(), 1200);
        assert!((g.weights().iter().sum::<f64>() - 24.0).abs() < 1e-12);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));

        let s = DimensionlessProfile::sine(0.1, 6.0, 0.0).unwrap();
        let req = required_nodes(&s, 12.0);
        assert_eq!(req, (24.0 * 12.0 * 6.0 / PI).ceil() as usize);
        match build_grid(&s, 12.0, 400) {
            Err(Error::Resolution { required, .. }) => assert_eq!(required, req),
            other => panic!("{other:?}"),
        }
        assert!(build_grid(&s, 12.0, req).unwrap().len() >= req);
        assert!(build_grid(&DimensionlessProfile::flat(), 12.0, 8).is_err());
    }

    #[test]
    fn sawtooth_kink_is_a_panel_boundary() {
        let p = DimensionlessProfile::sawtooth(0.5, 1.0, std::f64::consts::FRAC_PI_2).unwrap();
        let g = build_grid(&p, 12.0, 400).unwrap();
        assert!(g.panels.breaks.iter().any(|b| b.abs() < 1e-14));
    }

    #[test]
    fn far_entries_underflow_and_diagonal_is_finite() {
        let p = DimensionlessProfile::sine(0.3, 1.0, 0.0).unwrap();
        let g = build_grid(&p, 12.0, 400).unwrap();
        let sys = assemble(30.0, &g, &p).unwrap();
        assert_eq!(sys.matrix[(0, g.len() - 1)], 0.0);
        for &q in &[1e-3, 1.0, 100.0] {
            let s = assemble(q, &g, &p).unwrap();
            assert!((0..g.len()).all(|i| s.matrix[(i, i)].is_finite()));
        }
    }

    #[test]
    fn flat_window_solution_near_the_sphere() {
        // away from the window edges the truncated solve approaches the exact one
        let p = DimensionlessProfile::flat();
        let g = build_grid(&p, 12.0, 1200).unwrap();
        let sys = solve_delta_m12(assemble(4.0, &g, &p).unwrap()).unwrap();
        assert!(sys.residual_norm.unwrap() <= RESIDUAL_TOLERANCE);
        for &x in &[0.0, 0.5, 1.5, 3.0] {
            let a = sys.delta_at(&g, &p, x).unwrap();
            let b = flat_delta_closed_form(4.0, x);
            assert!((a - b).abs() < 1e-8, "x={x}: {a} {b}");
            let m = sys.delta_at(&g, &p, -x).unwrap();
            assert!((a - m).abs() < 1e-9);
        }
    }
}
