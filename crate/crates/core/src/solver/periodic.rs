//! Exact infinite-surface solve for periodic profiles.
//!
//! The surface equation is Floquet–Bloch decomposed: for each quasi-momentum
//! `β ∈ [0, π/Λ]` a dense system on one period cell is assembled from
//! quasi-periodic lattice sums and solved. The inner integral
//! `∫ √g ΔM̃12 M̃12 dx` over the whole line follows from a `β` quadrature.

use std::f64::consts::PI;

use faer::prelude::*;
use num_complex::Complex64;

use super::panels::{refine_breaks, NearField, PanelPolicy, Panels, PANEL_ORDER};
use super::window::RESIDUAL_TOLERANCE;
use crate::error::{Error, Result};
use crate::lattice::LatticeSum;
use crate::profiles::{DimensionlessProfile, ProfileKind};
use crate::quadrature::GaussLegendre;

/// Cell length used for the flat profile when it is solved on its own.
pub const DEFAULT_FLAT_PERIOD: f64 = 2.0;

/// One period `[−Λ/2, Λ/2]` of a periodic surface, discretised in panels.
#[derive(Debug, Clone)]
pub struct CellGrid {
    pub period: f64,
    pub panels: Panels,
}

impl CellGrid {
    pub fn build(p: &DimensionlessProfile, policy: &PanelPolicy) -> Result<Self> {
        let period = match p.kind() {
            ProfileKind::Flat => DEFAULT_FLAT_PERIOD,
            ProfileKind::Sine | ProfileKind::Sawtooth => p.period().expect("periodic profile"),
            ProfileKind::Tabulated => {
                return Err(Error::Settings("tabulated profiles need the window solver".into()))
            }
        };
        Self::build_with_period(p, policy, period)
    }

    /// Cell of given length; for the flat profile any period is valid.
    pub fn build_with_period(p: &DimensionlessProfile, policy: &PanelPolicy, period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Domain { what: "cell period", value: period });
        }
        if let Some(own) = p.period() {
            if ((own - period) / own).abs() > 1e-12 {
                return Err(Error::Settings(format!("cell period {period} differs from profile period {own}")));
            }
        } else if p.kind() != ProfileKind::Flat {
            return Err(Error::Settings("cell grids need a periodic or flat profile".into()));
        }
        let half = 0.5 * period;
        let mut fixed = vec![-half];
        let tol = 1e-12 * period;
        fixed.extend(p.kinks(-half, half).into_iter().filter(|&k| k > -half + tol && k < half - tol));
        fixed.push(half);
        let breaks = refine_breaks(p, &fixed, policy, Some(period))?;
        Ok(Self { period, panels: Panels::new(p, breaks) })
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }
}

/// Quadrature over the quasi-momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlochSettings {
    /// Gauss panels in the `β = q sinh s` variable.
    pub beta_panels: usize,
    pub beta_order: usize,
}

impl Default for BlochSettings {
    fn default() -> Self {
        Self { beta_panels: 2, beta_order: 12 }
    }
}

/// Inner integral at one `q̃` with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochSample {
    pub q: f64,
    /// `∫ √g ΔM̃12 M̃12 dx` over the full line.
    pub inner: f64,
    pub max_residual: f64,
    pub max_condition: f64,
    pub beta_nodes: usize,
}

/// `β`-independent parts of the cell operator at fixed `q̃`.
struct Operator {
    lattice: LatticeSum,
    /// flattened `(p, value)` image terms per pair `(i, j)`, weights included
    terms: Vec<(i64, f64)>,
    start: Vec<usize>,
    rhs_terms: Vec<(i64, f64)>,
    rhs_start: Vec<usize>,
    p_min: i64,
    p_max: i64,
}

pub struct BlochSolver<'a> {
    profile: &'a DimensionlessProfile,
    cell: &'a CellGrid,
    settings: BlochSettings,
    beta_rule: GaussLegendre,
    near: NearField,
}

impl<'a> BlochSolver<'a> {
    pub fn new(profile: &'a DimensionlessProfile, cell: &'a CellGrid, settings: BlochSettings) -> Result<Self> {
        if settings.beta_panels == 0 || settings.beta_order == 0 {
            return Err(Error::Settings("quasi-momentum rule needs at least one node".into()));
        }
        Ok(Self { profile, cell, settings, beta_rule: GaussLegendre::new(settings.beta_order), near: NearField::new() })
    }

    fn operator(&self, q: f64) -> Operator {
        let pan = &self.cell.panels;
        let lam = self.cell.period;
        let n = pan.len();
        let lattice = LatticeSum::new(q, lam);
        let mut terms = Vec::with_capacity(n * n * 6);
        let mut start = Vec::with_capacity(n * n + 1);
        let mut mom = [[0.0; PANEL_ORDER]; 3];
        let mut near_ps: Vec<i64> = Vec::with_capacity(3);
        for i in 0..n {
            let (xi, hi) = (pan.x[i], pan.h[i]);
            for k in 0..pan.n_panels() {
                near_ps.clear();
                for p in -1..=1i64 {
                    if pan.is_near(k, xi, p as f64 * lam) {
                        self.near.moments(q, self.profile, pan, k, xi, hi, p as f64 * lam, &mut mom[(p + 1) as usize]);
                        near_ps.push(p);
                    }
                }
                for jl in 0..PANEL_ORDER {
                    let j = k * PANEL_ORDER + jl;
                    start.push(terms.len());
                    let first = terms.len();
                    lattice.spatial_terms(pan.x[j] - xi, pan.h[j] - hi, &near_ps, &mut terms);
                    for t in &mut terms[first..] {
                        t.1 *= pan.w[j];
                    }
                    for &p in &near_ps {
                        terms.push((p, mom[(p + 1) as usize][jl]));
                    }
                }
            }
        }
        start.push(terms.len());
        // pair order above is (i, panel, node) = (i, j) row-major
        let mut rhs_terms = Vec::with_capacity(n * 8);
        let mut rhs_start = Vec::with_capacity(n + 1);
        for i in 0..n {
            rhs_start.push(rhs_terms.len());
            lattice.spatial_terms(pan.x[i], pan.h[i] - 1.0, &[], &mut rhs_terms);
        }
        rhs_start.push(rhs_terms.len());
        let (p_min, p_max) = terms
            .iter()
            .chain(&rhs_terms)
            .fold((0i64, 0i64), |(lo, hi), &(p, _)| (lo.min(p), hi.max(p)));
        Operator { lattice, terms, start, rhs_terms, rhs_start, p_min, p_max }
    }

    /// Solves the cell system at one `β`; returns `(μ, f, residual, condition)`.
    fn solve_beta(&self, op: &Operator, beta: f64) -> Result<(Vec<Complex64>, Vec<Complex64>, f64, f64)> {
        let pan = &self.cell.panels;
        let n = pan.len();
        let lam = self.cell.period;
        let phases: Vec<Complex64> =
            (op.p_min..=op.p_max).map(|p| Complex64::from_polar(1.0, beta * p as f64 * lam)).collect();
        let ph = |p: i64| phases[(p - op.p_min) as usize];
        let ewald = op.lattice.uses_ewald();
        let inv2pi = 0.5 / PI;
        let mut a = Mat::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let mut s = Complex64::new(0.0, 0.0);
                for &(p, v) in &op.terms[op.start[idx]..op.start[idx + 1]] {
                    s += ph(p) * v;
                }
                a[(i, j)] = s;
            }
        }
        if ewald {
            let plan = op.lattice.spectral_plan(beta);
            for i in 0..n {
                for j in i..n {
                    let sp = plan.eval( pan.x[j] - pan.x[i], pan.h[j] - pan.h[i]);
                    a[(i, j)] += sp * pan.w[j];
                    if j != i {
                        a[(j, i)] += sp.conj() * pan.w[i];
                    }
                }
            }
        }
        for j in 0..n {
            for v in a.col_mut(j).iter_mut() {
                *v *= inv2pi;
            }
        }
        let rhs_plan = ewald.then(|| op.lattice.spectral_plan(-beta));
        let mut f = Mat::<Complex64>::zeros(n, 1);
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for &(p, v) in &op.rhs_terms[op.rhs_start[i]..op.rhs_start[i + 1]] {
                s += ph(p).conj() * v;
            }
            if let Some(plan) = &rhs_plan {
                s += plan.eval(pan.x[i], pan.h[i] - 1.0);
            }
            f[(i, 0)] = s * inv2pi;
        }
        let fail = |reason: String| Error::Solve { q: op.lattice.q(), nodes: n, half_width: f64::INFINITY, reason };
        if (0..n).any(|j| a.col(j).iter().any(|v| !v.re.is_finite() || !v.im.is_finite())) {
            return Err(fail(format!("non-finite matrix entry at beta = {beta}")));
        }
        let lu = a.partial_piv_lu();
        let mu = lu.solve(&f);
        let (mut dmax, mut dmin) = (0.0f64, f64::INFINITY);
        for d in lu.U().diagonal().column_vector().iter() {
            dmax = dmax.max(d.norm());
            dmin = dmin.min(d.norm());
        }
        if dmin == 0.0 {
            return Err(fail(format!("singular cell matrix at beta = {beta}")));
        }
        let r = &a * &mu - &f;
        let amax = |m: &Mat<Complex64>| m.col(0).iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        let fnorm = amax(&f);
        let residual = if fnorm > 0.0 { amax(&r) / fnorm } else { amax(&r) };
        if !residual.is_finite() || residual > RESIDUAL_TOLERANCE {
            return Err(fail(format!("residual {residual:e} above {RESIDUAL_TOLERANCE:e} at beta = {beta}")));
        }
        let mu = mu.col(0).iter().copied().collect();
        let f = f.col(0).iter().copied().collect();
        Ok((mu, f, residual, dmax / dmin))
    }

    /// `(β_k, dβ_k)` on `[0, π/Λ]` through `β = q sinh s`.
    fn beta_nodes(&self, q: f64) -> Vec<(f64, f64)> {
        let s_max = (PI / (self.cell.period * q)).asinh();
        let np = self.settings.beta_panels;
        let mut out = Vec::with_capacity(np * self.beta_rule.len());
        for k in 0..np {
            let (a, b) = (s_max * k as f64 / np as f64, s_max * (k + 1) as f64 / np as f64);
            let (mut s, mut w) = (Vec::new(), Vec::new());
            self.beta_rule.map_into(a, b, &mut s, &mut w);
            for (s, w) in s.into_iter().zip(w) {
                out.push((q * s.sinh(), w * q * s.cosh()));
            }
        }
        out
    }

    pub fn inner_integral(&self, q: f64) -> Result<BlochSample> {
        check_q(q)?;
        let op = self.operator(q);
        let pan = &self.cell.panels;
        let lam = self.cell.period;
        let (mut total, mut max_res, mut max_cond) = (0.0, 0.0f64, 0.0f64);
        let betas = self.beta_nodes(q);
        for &(beta, wb) in &betas {
            let (mu, f, res, cond) = self.solve_beta(&op, beta)?;
            let s: f64 = (0..pan.len()).map(|i| pan.w[i] * (mu[i] * f[i].conj()).re).sum();
            total += wb * s;
            max_res = max_res.max(res);
            max_cond = max_cond.max(cond);
        }
        Ok(BlochSample { q, inner: total * lam / PI, max_residual: max_res, max_condition: max_cond, beta_nodes: betas.len() })
    }

    /// `ΔM̃12` at arbitrary points on the infinite surface.
    pub fn delta(&self, q: f64, xs: &[f64]) -> Result<Vec<f64>> {
        check_q(q)?;
        let op = self.operator(q);
        let pan = &self.cell.panels;
        let lam = self.cell.period;
        // locate each point as x_c + mΛ inside the cell
        let mut located = Vec::with_capacity(xs.len());
        for &x in xs {
            let m = (x / lam).round();
            let xc = (x - m * lam).clamp(-0.5 * lam, 0.5 * lam);
            let k = pan.locate(xc).expect("cell covers one period");
            let mut ell = [0.0; PANEL_ORDER];
            pan.basis(k, xc, &mut ell);
            located.push((m, k, ell, self.profile.sqrt_g(xc)));
        }
        let mut mu_x = vec![0.0; xs.len()];
        for (beta, wb) in self.beta_nodes(q) {
            let (mu, _, _, _) = self.solve_beta(&op, beta)?;
            for (out, (m, k, ell, _)) in mu_x.iter_mut().zip(&located) {
                let v: Complex64 = (0..PANEL_ORDER).map(|j| mu[k * PANEL_ORDER + j] * ell[j]).sum();
                *out += wb * (v * Complex64::from_polar(1.0, beta * m * lam)).re;
            }
        }
        Ok(mu_x.iter().zip(&located).map(|(mu, l)| mu * lam / PI / l.3).collect())
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "solver momentum q", value: q })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::oracle::flat_delta_closed_form;
    use crate::specfun::k0;

    #[test]
    fn flat_inner_integral_is_exact() {
        let p = DimensionlessProfile::flat();
        let cell = CellGrid::build(&p, &PanelPolicy::default()).unwrap();
        let solver = BlochSolver::new(&p, &cell, BlochSettings::default()).unwrap();
        for &q in &[0.01, 0.1, 0.5, 1.0, 2.0, 5.0] {
            let s = solver.inner_integral(q).unwrap();
            let exact = k0(2.0 * q) / (2.0 * PI);
            assert!(((s.inner - exact) / exact).abs() < 1e-9, "q={q}: {} {exact}", s.inner);
        }
    }

    #[test]
    fn flat_delta_matches_closed_form() {
        let p = DimensionlessProfile::flat();
        let cell = CellGrid::build(&p, &PanelPolicy::default()).unwrap();
        let solver = BlochSolver::new(&p, &cell, BlochSettings::default()).unwrap();
        let xs = [0.0, 0.4, -0.4, 1.3, 2.7, -3.9];
        for &q in &[0.25, 1.0, 4.0] {
            let d = solver.delta(q, &xs).unwrap();
            for (&x, &v) in xs.iter().zip(&d) {
                let e = flat_delta_closed_form(q, x);
                assert!((v - e).abs() < 1e-9, "q={q} x={x}: {v} {e}");
            }
        }
    }
}
