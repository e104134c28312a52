//! Special functions used by the kernels and the lattice sums.
//!
//! The modified Bessel functions K0 and K1 use a two-branch evaluator:
//! the ascending series below `z = 2` and Steed's continued fraction (the
//! Temme CF2 form) above it. The exponential integrals and the scaled
//! complementary error function feed the Ewald lattice sums.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Above this argument the unscaled K0 and K1 are reported as exactly 0.
pub const BESSEL_UNDERFLOW_ARG: f64 = 600.0;

const SERIES_BRANCH: f64 = 2.0;

/// Value of a modified Bessel function together with its `e^z`-scaled form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub z: f64,
    pub value: f64,
    pub scaled_value: f64,
}

impl BesselEval {
    pub fn k0(z: f64) -> Result<Self> {
        check_arg("bessel_k0", z)?;
        let (s0, _) = k01_scaled(z);
        Ok(Self { z, value: unscale(s0, z), scaled_value: s0 })
    }

    pub fn k1(z: f64) -> Result<Self> {
        check_arg("bessel_k1", z)?;
        let (_, s1) = k01_scaled(z);
        Ok(Self { z, value: unscale(s1, z), scaled_value: s1 })
    }
}

fn check_arg(name: &'static str, z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: name, value: z })
    }
}

#[inline]
fn unscale(scaled: f64, z: f64) -> f64 {
    if z > BESSEL_UNDERFLOW_ARG {
        0.0
    } else {
        scaled * (-z).exp()
    }
}

/// K0(z) for `z > 0`.
pub fn bessel_k0(z: f64) -> Result<f64> {
    check_arg("bessel_k0", z)?;
    Ok(k0(z))
}

/// K1(z) for `z > 0`.
pub fn bessel_k1(z: f64) -> Result<f64> {
    check_arg("bessel_k1", z)?;
    Ok(k1(z))
}

/// `e^z K0(z)`.
pub fn bessel_k0_scaled(z: f64) -> Result<f64> {
    check_arg("bessel_k0", z)?;
    Ok(k01_scaled(z).0)
}

/// `e^z K1(z)`.
pub fn bessel_k1_scaled(z: f64) -> Result<f64> {
    check_arg("bessel_k1", z)?;
    Ok(k01_scaled(z).1)
}

/// Unchecked K0 for the hot loops; the caller guarantees `z > 0`.
#[inline]
pub(crate) fn k0(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z < SERIES_BRANCH {
        k01_series(z).0
    } else if z > BESSEL_UNDERFLOW_ARG {
        0.0
    } else {
        k01_cf2(z).0 * (-z).exp()
    }
}

#[inline]
pub(crate) fn k1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z < SERIES_BRANCH {
        k01_series(z).1
    } else if z > BESSEL_UNDERFLOW_ARG {
        0.0
    } else {
        k01_cf2(z).1 * (-z).exp()
    }
}

fn k01_scaled(z: f64) -> (f64, f64) {
    if z < SERIES_BRANCH {
        let (a, b) = k01_series(z);
        let e = z.exp();
        (a * e, b * e)
    } else {
        k01_cf2(z)
    }
}

/// Ascending series for K0 and K1, accurate for `0 < z < 2`.
fn k01_series(z: f64) -> (f64, f64) {
    let t = 0.25 * z * z;
    let log_term = (0.5 * z).ln() + EULER_GAMMA;

    // k-th term of I0 is t^k/(k!)^2; the K0 tail carries the harmonic number H_k.
    // K1 = 1/z + ln(z/2) I1(z) - (z/4) sum (psi(k+1)+psi(k+2)) t^k/(k!(k+1)!)
    let mut term0 = 1.0;
    let mut i0 = 1.0;
    let mut tail0 = 0.0;
    let mut harmonic = 0.0;

    let mut term1 = 1.0; // t^k/(k!(k+1)!)
    let mut i1_sum = 1.0;
    let mut psi_sum = 1.0 - 2.0 * EULER_GAMMA; // psi(1)+psi(2)
    let mut tail1 = psi_sum;

    for k in 1..40 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term0;
        tail0 += harmonic * term0;

        term1 *= t / (kf * (kf + 1.0));
        i1_sum += term1;
        psi_sum += 1.0 / kf + 1.0 / (kf + 1.0);
        tail1 += psi_sum * term1;

        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1_sum {
            break;
        }
    }
    let k0 = -log_term * i0 + tail0;
    let i1 = 0.5 * z * i1_sum;
    let k1 = 1.0 / z + (0.5 * z).ln() * i1 - 0.25 * z * tail1;
    (k0, k1)
}

/// Steed's continued fraction for `e^z K0(z)` and `e^z K1(z)`, `z >= 2`.
fn k01_cf2(x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-17;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0s = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1s = k0s * (x + 0.5 - h) / x;
    (k0s, k1s)
}

/// Exponential integral `E1(z)` for `z > 0`.
pub fn expint_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= -z / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - z.ln() - sum
    } else {
        expint_cf(1, z)
    }
}

/// Generalised exponential integral `E_n(z)` by the modified Lentz continued
/// fraction; valid for `z > 1`.
fn expint_cf(n: u32, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let nm1 = f64::from(n) - 1.0;
    let mut b = z + f64::from(n);
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let an = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// Fills `out[k] = E_{k+1}(z)` for `k = 0..out.len()` by upward recurrence.
///
/// The callers weight `E_{k+1}` by `c^k/k!` with `c < 1`, which damps the
/// growth of the recurrence error for large `z`.
pub fn expint_table(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let ez = (-z).exp();
    out[0] = expint_e1(z);
    for k in 1..out.len() {
        out[k] = (ez - z * out[k - 1]) / k as f64;
    }
}

/// Scaled complementary error function `e^{z^2} erfc(z)` for `z >= 0`.
pub fn erfcx(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 6.0 {
        // relative error of the product grows like z² ε
        (z * z).exp() * libm::erfc(z)
    } else {
        // Laplace continued fraction, evaluated bottom-up.
        let depth = if z < 10.0 { 40 } else { 20 };
        let mut t = z;
        for k in (1..=depth).rev() {
            t = z + 0.5 * k as f64 / t;
        }
        1.0 / (std::f64::consts::PI.sqrt() * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from an independent high-precision library.
    const K_REF: &[(f64, f64, f64)] = &[
        (1e-8, 18.53661225961078, 99999999.99999991),
        (1e-6, 13.93144207362641, 999999.9999927843),
        (0.1, 2.4270690247020164, 9.853844780870606),
        (0.5, 0.9244190712276656, 1.6564411200033007),
        (1.0, 0.42102443824070823, 0.6019072301972346),
        (1.5, 0.21380556264752565, 0.2773878004568438),
        (1.999, 0.11403383058923296, 0.1400498420771096),
        (2.0, 0.1138938727495334, 0.13986588181652246),
        (2.001, 0.11375409873668464, 0.13968218830176754),
        (3.0, 0.03473950438627925, 0.04015643112819419),
        (5.0, 0.0036910983340425942, 0.004044613445452163),
        (10.0, 1.778006231616765e-05, 1.8648773453825585e-05),
        (30.0, 2.1324774964630563e-14, 2.1677320018915495e-14),
        (100.0, 4.6566282291759025e-45, 4.67985373563691e-45),
        (600.0, 1.3558285309948523e-262, 1.356957918112806e-262),
    ];

    #[test]
    fn k0_k1_match_reference_table() {
        for &(z, r0, r1) in K_REF {
            assert!(rel(bessel_k0(z).unwrap(), r0) < 1e-12, "K0({z})");
            assert!(rel(bessel_k1(z).unwrap(), r1) < 1e-10, "K1({z})");
        }
    }

    #[test]
    fn scaled_forms_agree_with_unscaled() {
        for &z in &[0.3, 1.0, 1.9, 2.5, 7.0, 40.0, 300.0] {
            let e0 = BesselEval::k0(z).unwrap();
            let e1 = BesselEval::k1(z).unwrap();
            assert!(rel((-z).exp() * e0.scaled_value, e0.value) < 1e-13);
            assert!(rel((-z).exp() * e1.scaled_value, e1.value) < 1e-13);
        }
    }

    #[test]
    fn underflow_convention_and_domain_errors() {
        assert_eq!(bessel_k0(600.5).unwrap(), 0.0);
        assert!(bessel_k0(600.0).unwrap() > 0.0);
        assert!(bessel_k0_scaled(1e4).unwrap() > 0.0);
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
        assert!(bessel_k1(f64::NAN).is_err());
        assert!(bessel_k1(f64::INFINITY).is_err());
    }

    #[test]
    fn k0_small_argument_asymptote() {
        let z = 1e-6;
        let s = bessel_k0(z).unwrap() + (z / 2.0).ln() + EULER_GAMMA;
        // The residual is the next series term, (z^2/4)(1 - gamma - ln(z/2)) ~ 3.7e-12.
        let next = 0.25 * z * z * (1.0 - EULER_GAMMA - (z / 2.0).ln());
        assert!(s.abs() < 1e-11, "{s}");
        assert!((s - next).abs() < 1e-15, "{s} vs {next}");
    }

    #[test]
    fn k1_pole_asymptote() {
        let z = 1e-7;
        assert!((z * bessel_k1(z).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k0_large_argument_asymptote() {
        let z: f64 = 10.0;
        let asym = (std::f64::consts::PI / (2.0 * z)).sqrt()
            * (-z).exp()
            * (1.0 - 1.0 / (8.0 * z) + 9.0 / (128.0 * z * z));
        assert!(rel(bessel_k0(z).unwrap(), asym) < 1e-4);
    }

    #[test]
    fn k1_is_minus_derivative_of_k0() {
        let z = 2.0;
        let h = 1e-5;
        let fd = -(bessel_k0(z + h).unwrap() - bessel_k0(z - h).unwrap()) / (2.0 * h);
        assert!((fd - bessel_k1(z).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn exponential_integrals() {
        let cases = [
            (1e-3, 6.331539364136149),
            (0.5, 0.5597735947761608),
            (1.0, 0.2193839343955205),
            (2.0, 0.048900510708061125),
            (10.0, 4.156968929685325e-06),
        ];
        for (z, r) in cases {
            assert!(rel(expint_e1(z), r) < 1e-13, "E1({z})");
        }
        let mut t = [0.0; 5];
        expint_table(0.3, &mut t);
        assert!(rel(t[4], 0.16893441335261664) < 1e-12);
        expint_table(3.0, &mut t);
        assert!(rel(t[4], 0.006697984917017044) < 1e-10);
    }

    #[test]
    fn scaled_erfc() {
        let cases = [
            (0.0, 1.0),
            (1.0, 0.427583576155807),
            (2.0, 0.2553956763105058),
            (2.5, 0.2108063640611436),
            (5.0, 0.11070463773306861),
            (30.0, 0.018795888861416754),
        ];
        for (z, r) in cases {
            assert!(rel(erfcx(z), r) < 1e-13, "erfcx({z}) = {}", erfcx(z));
        }
    }
}
