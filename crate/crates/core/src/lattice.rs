//! Quasi-periodic lattice sums of the 2D screened Green's function,
//!
//! `S(q, β, Λ; X, Y) = Σ_p e^{iβpΛ} K0(q √((X + pΛ)² + Y²))`,
//!
//! by Ewald splitting for small `qΛ` and by direct summation otherwise.
//! Individual images can be excluded so that callers may integrate the
//! nearby singular terms themselves.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::specfun::{erfcx, expint_table, k0};

/// Above this `qΛ` the direct image sum is cheaper than the Ewald form.
const EWALD_MAX_Q_PERIOD: f64 = 2.0;
/// Ewald parameter `E = EWALD_SCALE √π / Λ`. Smaller values move work from
/// the `β`-dependent reciprocal sum into the `β`-independent image sum.
const EWALD_SCALE: f64 = 0.5;
/// Direct-sum cutoff on `qρ`.
const DIRECT_CUTOFF: f64 = 40.0;
/// Spatial Ewald images are kept for `ρE` below this.
const SPATIAL_CUTOFF: f64 = 6.1;
/// Spectral cutoff `κ ≤ SPECTRAL_GAUSS E` when `|Y|E` is small.
const SPECTRAL_GAUSS: f64 = 12.4;
const SPECTRAL_EXP: f64 = 37.0;
const SERIES_TERMS: usize = 26;
/// Below this `ρE` the low-`s` Ewald piece is summed as a power series.
const LOW_SERIES_MAX: f64 = 1.5;

#[derive(Debug, Clone)]
enum Mode {
    Direct,
    Ewald {
        e: f64,
        /// `(-c)^j / j!`, `c = q²/(4E²)`
        spatial_coef: Vec<f64>,
        /// `E_{k+1}(c) / k!`
        low_coef: Vec<f64>,
    },
}

/// Quasi-periodic sum at fixed `q` and period `Λ`.
#[derive(Debug, Clone)]
pub struct LatticeSum {
    q: f64,
    period: f64,
    mode: Mode,
}

impl LatticeSum {
    pub fn new(q: f64, period: f64) -> Self {
        assert!(q > 0.0 && period > 0.0, "lattice sum needs q > 0 and period > 0");
        let mode = if q * period > EWALD_MAX_Q_PERIOD {
            Mode::Direct
        } else {
            let e = EWALD_SCALE * PI.sqrt() / period;
            let c = q * q / (4.0 * e * e);
            let mut spatial_coef = Vec::with_capacity(SERIES_TERMS);
            let mut t = 1.0;
            for j in 0..SERIES_TERMS {
                spatial_coef.push(t);
                t *= -c / (j + 1) as f64;
            }
            let mut low_coef = vec![0.0; SERIES_TERMS];
            expint_table(c, &mut low_coef);
            let mut fact = 1.0;
            for (k, v) in low_coef.iter_mut().enumerate() {
                if k > 0 {
                    fact *= k as f64;
                }
                *v /= fact;
            }
            Mode::Ewald { e, spatial_coef, low_coef }
        };
        Self { q, period, mode }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn uses_ewald(&self) -> bool {
        matches!(self.mode, Mode::Ewald { .. })
    }

    /// `e^{iβpΛ}`.
    #[inline]
    pub fn phase(&self, beta: f64, p: i64) -> Complex64 {
        Complex64::from_polar(1.0, beta * p as f64 * self.period)
    }

    /// Appends the `β`-independent image terms `(p, t_p)`, so that
    /// `S = Σ_p e^{iβpΛ} t_p + spectral(β)`. Images listed in `exclude`
    /// are removed from the total.
    pub fn spatial_terms(&self, x: f64, y: f64, exclude: &[i64], out: &mut Vec<(i64, f64)>) {
        let lam = self.period;
        match &self.mode {
            Mode::Direct => {
                let r2 = (DIRECT_CUTOFF / self.q).powi(2) - y * y;
                if r2 > 0.0 {
                    let r = r2.sqrt();
                    let lo = ((-x - r) / lam).ceil() as i64;
                    let hi = ((-x + r) / lam).floor() as i64;
                    for p in lo..=hi {
                        if exclude.contains(&p) {
                            continue;
                        }
                        let rho = (x + p as f64 * lam).hypot(y);
                        out.push((p, k0(self.q * rho)));
                    }
                }
            }
            Mode::Ewald { e, spatial_coef, low_coef } => {
                let rmax = SPATIAL_CUTOFF / e;
                let r2 = rmax * rmax - y * y;
                if r2 > 0.0 {
                    let r = r2.sqrt();
                    let lo = ((-x - r) / lam).ceil() as i64;
                    let hi = ((-x + r) / lam).floor() as i64;
                    for p in lo..=hi {
                        if exclude.contains(&p) {
                            continue;
                        }
                        let rho = (x + p as f64 * lam).hypot(y);
                        out.push((p, ewald_spatial(rho * e, spatial_coef)));
                    }
                }
                for &p in exclude {
                    let rho = (x + p as f64 * lam).hypot(y);
                    let low = if rho * e < LOW_SERIES_MAX {
                        ewald_low_series(rho * e, low_coef)
                    } else {
                        k0(self.q * rho) - ewald_spatial(rho * e, spatial_coef)
                    };
                    out.push((p, -low));
                }
            }
        }
    }

    /// Reciprocal-lattice vectors needed at quasi-momentum `β`.
    pub fn spectral_plan(&self, beta: f64) -> SpectralPlan {
        let Mode::Ewald { e, .. } = &self.mode else {
            return SpectralPlan { e: 0.0, g: 0.0, terms: Vec::new() };
        };
        let e = *e;
        let g = TAU / self.period;
        let kappa_cut = SPECTRAL_GAUSS * e;
        let kmax = (kappa_cut * kappa_cut - self.q * self.q).max(0.0).sqrt();
        let mut n_lo = ((beta - kmax) / g).ceil() as i64;
        let mut n_hi = ((beta + kmax) / g).floor() as i64;
        if n_lo > n_hi {
            // keep at least the nearest reciprocal vector
            n_lo = (beta / g).round() as i64;
            n_hi = n_lo;
        }
        let terms = (n_lo..=n_hi)
            .map(|n| {
                let k = beta - g * n as f64;
                let kappa = (self.q * self.q + k * k).sqrt();
                let a = kappa / (2.0 * e);
                SpectralTerm { k, kappa, a, a2: a * a, amp: PI / (2.0 * self.period * kappa) }
            })
            .collect();
        SpectralPlan { e, g, terms }
    }

    /// Reciprocal-lattice part of the Ewald split; zero in direct mode.
    pub fn spectral(&self, beta: f64, x: f64, y: f64) -> Complex64 {
        self.spectral_plan(beta).eval(x, y)
    }

    /// Full sum with the listed images removed.
    pub fn eval(&self, beta: f64, x: f64, y: f64, exclude: &[i64]) -> Complex64 {
        let mut terms = Vec::new();
        self.spatial_terms(x, y, exclude, &mut terms);
        let mut s = self.spectral(beta, x, y);
        for (p, t) in terms {
            s += self.phase(beta, p) * t;
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
struct SpectralTerm {
    k: f64,
    kappa: f64,
    a: f64,
    a2: f64,
    amp: f64,
}

/// Reciprocal-lattice terms at one `β`, reusable across source/target pairs.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    e: f64,
    g: f64,
    terms: Vec<SpectralTerm>,
}

impl SpectralPlan {
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let Some(first) = self.terms.first() else {
            return Complex64::new(0.0, 0.0);
        };
        let e = self.e;
        let ay = y.abs();
        let ye = ay * e;
        let y2e2 = ye * ye;
        let kappa_cut = if ye <= 4.3 { f64::INFINITY } else { SPECTRAL_EXP / ay };
        // e^{-i k_n x} by recurrence in n
        let mut ph = Complex64::from_polar(1.0, -first.k * x);
        let step = Complex64::from_polar(1.0, self.g * x);
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            if t.kappa <= kappa_cut {
                let expo = t.a2 + y2e2;
                let gauss = if expo < 700.0 { (-expo).exp() } else { 0.0 };
                let z2 = t.a - ye;
                let mut v = if gauss > 0.0 { gauss * erfcx(t.a + ye) } else { 0.0 };
                v += if z2 >= 0.0 {
                    if gauss > 0.0 {
                        gauss * erfcx(z2)
                    } else {
                        0.0
                    }
                } else {
                    (-t.kappa * ay).exp() * (2.0 - libm::erfc(-z2))
                };
                sum += ph * (t.amp * v);
            }
            ph *= step;
        }
        sum
    }
}

/// `½ Σ_j (-c)^j/j! E_{j+1}(u²)`: the large-`s` part of `K0(qρ)`, `u = ρE`.
fn ewald_spatial(u: f64, coef: &[f64]) -> f64 {
    let z = u * u;
    if z > 700.0 {
        return 0.0;
    }
    let mut table = [0.0; SERIES_TERMS];
    expint_table(z, &mut table);
    0.5 * coef.iter().zip(&table).map(|(c, e)| c * e).sum::<f64>()
}

/// `½ Σ_k (-u²)^k/k! E_{k+1}(c)`: the small-`s` part of `K0(qρ)`.
fn ewald_low_series(u: f64, coef: &[f64]) -> f64 {
    let z = -u * u;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for c in coef {
        sum += pow * c;
        pow *= z;
    }
    0.5 * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::expint_e1;

    /// `½ E1(q²/(4E²))`: the small-`s` part at zero separation.
    fn ewald_low_at_origin(q: f64, period: f64) -> f64 {
        let e = EWALD_SCALE * PI.sqrt() / period;
        0.5 * expint_e1(q * q / (4.0 * e * e))
    }

    /// Brute-force image sum, truncated once `K0` is negligible.
    fn direct(q: f64, lam: f64, beta: f64, x: f64, y: f64, exclude: &[i64]) -> Complex64 {
        let pmax = (60.0 / (q * lam)).ceil() as i64 + 2;
        let mut s = Complex64::new(0.0, 0.0);
        for p in -pmax..=pmax {
            if exclude.contains(&p) {
                continue;
            }
            let rho = (x + p as f64 * lam).hypot(y);
            s += Complex64::from_polar(crate::specfun::bessel_k0(q * rho).unwrap(), beta * p as f64 * lam);
        }
        s
    }

    #[test]
    fn ewald_matches_direct_sum() {
        let cases = [
            (0.3, 2.0),
            (1.0, 2.0),
            (0.95, 2.0),
            (0.05, 6.0),
            (0.5, 1.0),
            (0.15, 12.0),
            (19.0, 0.1),
        ];
        for &(q, lam) in &cases {
            let ls = LatticeSum::new(q, lam);
            assert!(ls.uses_ewald());
            for &beta in &[0.0, 0.3 * PI / lam, 0.97 * PI / lam] {
                for &(x, y) in &[(0.37, 0.0), (-0.8 * lam, 0.2), (0.1, -1.3), (0.5 * lam, 2.5), (0.01, 0.003)] {
                    let a = ls.eval(beta, x, y, &[]);
                    let b = direct(q, lam, beta, x, y, &[]);
                    let scale = b.norm().max(1.0);
                    assert!((a - b).norm() < 1e-12 * scale, "q={q} lam={lam} beta={beta} x={x} y={y}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn direct_mode_matches_brute_force() {
        let ls = LatticeSum::new(4.0, 1.5);
        assert!(!ls.uses_ewald());
        for &(x, y) in &[(0.2, 0.0), (-1.2, 0.4)] {
            let a = ls.eval(0.7, x, y, &[0]);
            let b = direct(4.0, 1.5, 0.7, x, y, &[0]);
            assert!((a - b).norm() < 1e-15, "{a} {b}");
        }
    }

    #[test]
    fn exclusion_removes_exactly_the_image() {
        for &(q, lam) in &[(0.4, 2.0), (1.0, 2.0), (0.02, 3.0)] {
            let ls = LatticeSum::new(q, lam);
            for &(x, y) in &[(0.05, 0.02), (0.9, -0.3), (1.6, 0.1), (-1.9, 0.0)] {
                let excl = [-1, 0, 1];
                let a = ls.eval(0.4, x, y, &excl);
                let b = direct(q, lam, 0.4, x, y, &excl);
                assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "q={q} x={x}: {a} {b}");
            }
        }
    }

    #[test]
    fn excluded_origin_is_finite_and_matches_limit() {
        // S without p = 0 at zero separation equals lim (S - K0(qρ)) as ρ -> 0
        let (q, lam) = (0.6, 2.0);
        let ls = LatticeSum::new(q, lam);
        let at0 = ls.eval(0.9, 0.0, 0.0, &[0]);
        let b = direct(q, lam, 0.9, 0.0, 0.0, &[0]);
        assert!((at0 - b).norm() < 1e-12, "{at0} {b}");
        let low = ewald_low_at_origin(q, lam);
        let mut t = Vec::new();
        ls.spatial_terms(0.0, 0.0, &[0], &mut t);
        let zero_term = t.iter().find(|(p, _)| *p == 0).unwrap().1;
        assert!((zero_term + low).abs() < 1e-14);
    }

    #[test]
    fn hermitian_symmetry() {
        let ls = LatticeSum::new(0.8, 2.0);
        let a = ls.eval(0.5, 0.3, 0.2, &[]);
        let b = ls.eval(0.5, -0.3, -0.2, &[]);
        assert!((a - b.conj()).norm() < 1e-13);
    }
}
