//! Dimensionless propagators between surface points and the sphere centre.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::profiles::DimensionlessProfile;
use crate::specfun::{k0, BESSEL_UNDERFLOW_ARG};

const INV_2PI: f64 = 0.5 / PI;

/// Arguments of one kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub q: f64,
    pub x: f64,
    pub x_prime: f64,
    pub chord: f64,
}

impl KernelPoint {
    /// Two surface points `(x, h̃(x))` and `(x′, h̃(x′))`.
    pub fn surface(q: f64, x: f64, x_prime: f64, p: &DimensionlessProfile) -> Result<Self> {
        check_q(q)?;
        let chord = surface_chord(x, p.height(x)?, x_prime, p.height(x_prime)?);
        Ok(Self { q, x, x_prime, chord })
    }

    /// Surface point `(x′, h̃(x′))` and the sphere centre `(0, 1)`.
    pub fn sphere(q: f64, x_prime: f64, p: &DimensionlessProfile) -> Result<Self> {
        check_q(q)?;
        let chord = sphere_chord(x_prime, p.height(x_prime)?);
        Ok(Self { q, x: 0.0, x_prime, chord })
    }

    pub fn value(&self) -> f64 {
        kernel(self.q * self.chord)
    }
}

#[inline]
pub(crate) fn surface_chord(x: f64, hx: f64, xp: f64, hxp: f64) -> f64 {
    (x - xp).hypot(hx - hxp)
}

#[inline]
pub(crate) fn sphere_chord(xp: f64, hxp: f64) -> f64 {
    xp.hypot(hxp - 1.0)
}

/// `K0(t)/2π`, exactly zero past the Bessel underflow threshold.
#[inline]
pub(crate) fn kernel(t: f64) -> f64 {
    if t >= BESSEL_UNDERFLOW_ARG {
        return 0.0;
    }
    INV_2PI * k0(t)
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "kernel momentum q", value: q })
    }
}

/// Surface-surface propagator `(1/2π) K0(q̃ · chord)`.
pub fn m11(q: f64, x: f64, x_prime: f64, p: &DimensionlessProfile) -> Result<f64> {
    let pt = KernelPoint::surface(q, x, x_prime, p)?;
    if pt.chord == 0.0 {
        return Err(Error::Geometry(format!("m11 evaluated at coincident points x = {x}")));
    }
    Ok(pt.value())
}

/// Surface-sphere propagator; the sphere centre is at `(0, 1)`.
pub fn m12(q: f64, x_prime: f64, p: &DimensionlessProfile) -> Result<f64> {
    let pt = KernelPoint::sphere(q, x_prime, p)?;
    if pt.chord == 0.0 {
        return Err(Error::Geometry(format!("surface touches the sphere centre at x = {x_prime}")));
    }
    Ok(pt.value())
}

/// Monopole (`l = 0`) inverse Dirichlet sphere propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereInverse {
    pub zeta: f64,
    pub radius: f64,
    pub value: f64,
}

/// `|ζ| e^{r|ζ|} / (4π r² sinh(r|ζ|))`, with the limit `1/(4π r³)` at `ζ = 0`.
pub fn m22_inv_monopole(zeta: f64, radius: f64) -> Result<SphereInverse> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain { what: "sphere radius", value: radius });
    }
    if !zeta.is_finite() {
        return Err(Error::Domain { what: "imaginary frequency", value: zeta });
    }
    let z = zeta.abs();
    let u = radius * z;
    let value = if u == 0.0 {
        1.0 / (4.0 * PI * radius.powi(3))
    } else {
        // e^u / sinh u = 2 / (1 - e^{-2u})
        z / (2.0 * PI * radius * radius * -(-2.0 * u).exp_m1())
    };
    Ok(SphereInverse { zeta, radius, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    const K0_1: f64 = 0.421_024_438_240_708_3;
    const K0_2: f64 = 0.113_893_872_749_533_4;

    #[test]
    fn m11_flat_unit_distance() {
        let flat = DimensionlessProfile::flat();
        let v = m11(1.0, 0.3, 1.3, &flat).unwrap();
        assert!((v - K0_1 / (2.0 * PI)).abs() < 1e-15);
        assert!((v - 0.0670086).abs() < 1e-6);
    }

    #[test]
    fn m11_underflow_is_exact_zero() {
        let s = DimensionlessProfile::sine(1.0, 1.0, 0.0).unwrap();
        assert_eq!(m11(700.0, -0.5, 0.5, &s).unwrap(), 0.0);
        assert_eq!(m11(600.0, 0.0, 1.0, &DimensionlessProfile::flat()).unwrap(), 0.0);
    }

    #[test]
    fn m11_rejects_coincident_points() {
        let s = DimensionlessProfile::sine(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(m11(1.0, 0.4, 0.4, &s), Err(Error::Geometry(_))));
        assert!(m11(0.0, 0.0, 1.0, &s).is_err());
    }

    #[test]
    fn m12_examples() {
        let flat = DimensionlessProfile::flat();
        let a = m12(1.0, 0.0, &flat).unwrap();
        assert!((a - K0_1 / (2.0 * PI)).abs() < 1e-15);
        let b = m12(0.5, 3f64.sqrt(), &flat).unwrap();
        assert!((a - b).abs() < 1e-15);

        let s = DimensionlessProfile::sine(1.0, 1.0, -FRAC_PI_2).unwrap();
        let c = m12(1.0, 0.0, &s).unwrap();
        assert!((c - K0_2 / (2.0 * PI)).abs() < 1e-15);
        assert!((c - 0.0181274).abs() < 1e-6);
    }

    #[test]
    fn m12_rejects_surface_through_sphere_centre() {
        let s = DimensionlessProfile::sine(1.0, 1.0, FRAC_PI_2).unwrap();
        assert!(matches!(m12(1.0, 0.0, &s), Err(Error::Geometry(_))));
    }

    #[test]
    fn monopole_limits_and_parity() {
        let small = m22_inv_monopole(1e-8, 1.0).unwrap().value;
        assert!((small * 4.0 * PI - 1.0).abs() < 1e-7);
        let large = m22_inv_monopole(50.0, 1.0).unwrap().value;
        assert!((large / (50.0 / (2.0 * PI)) - 1.0).abs() < 1e-10);
        let zero = m22_inv_monopole(0.0, 2.0).unwrap().value;
        assert!((zero - 1.0 / (32.0 * PI)).abs() < 1e-16);
        assert_eq!(
            m22_inv_monopole(3.7, 0.2).unwrap().value,
            m22_inv_monopole(-3.7, 0.2).unwrap().value
        );
        assert!(m22_inv_monopole(1.0, 0.0).is_err());
        assert!(m22_inv_monopole(1.0, -1.0).is_err());
    }

    #[test]
    fn monopole_matches_direct_formula() {
        for &(z, r) in &[(0.3, 0.5), (2.0, 1.5), (7.0, 0.1)] {
            let u: f64 = r * z;
            let direct = z * u.exp() / (4.0 * PI * r * r * u.sinh());
            let v = m22_inv_monopole(z, r).unwrap().value;
            assert!((v / direct - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_properties_on_a_grid() {
        let profiles = [
            DimensionlessProfile::sine(1.0, 1.0, 0.0).unwrap(),
            DimensionlessProfile::sine(0.3, 5.0, 1.1).unwrap(),
            DimensionlessProfile::sawtooth(0.8, 2.0, -0.4).unwrap(),
        ];
        for p in &profiles {
            for &q in &[0.01, 0.5, 3.0, 40.0] {
                for i in 0..15 {
                    let x = -3.0 + 0.41 * i as f64;
                    for j in 0..15 {
                        let xp = -2.9 + 0.43 * j as f64;
                        let a = m11(q, x, xp, p).unwrap();
                        let b = m11(q, xp, x, p).unwrap();
                        assert_eq!(a, b);
                        assert!(a >= 0.0);
                        if q * (x - xp).abs() < 500.0 {
                            assert!(a > 0.0);
                        }
                    }
                }
            }
        }
        // flat surface depends on q |x - x'| only
        let flat = DimensionlessProfile::flat();
        assert_eq!(m11(2.0, 0.0, 0.5, &flat).unwrap(), m11(0.5, 3.0, 1.0, &flat).unwrap());
    }

    #[test]
    fn m12_decreases_with_chord() {
        let s = DimensionlessProfile::sine(0.5, 2.0, 0.3).unwrap();
        let mut pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let x = -5.0 + 0.05 * i as f64;
                let pt = KernelPoint::sphere(0.7, x, &s).unwrap();
                (pt.chord, m12(0.7, x, &s).unwrap())
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pts.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(pts.iter().all(|p| p.1 > 0.0));
    }
}
