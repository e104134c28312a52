use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::adaptive;

/// Flat-surface solution `(1/2π) ∫ e^{ikx} e^{−√(q²+k²)} dk`, by adaptive
/// quadrature in `k = q sinh u`.
pub fn flat_oracle_delta(q: f64, x: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Domain { what: "flat oracle momentum q", value: q });
    }
    if !x.is_finite() {
        return Err(Error::Domain { what: "flat oracle coordinate", value: x });
    }
    // integrand below e^{-45} beyond k = 45
    let u_max = (45.0 / q).asinh();
    let f = |u: f64| {
        let (s, c) = (u.sinh(), u.cosh());
        (q * s * x).cos() * (-q * c).exp() * q * c
    };
    // split so that each piece carries a bounded number of oscillations
    let pieces = (1.0 + 45.0 * x.abs() / PI).ceil().min(400.0) as usize;
    let mut total = 0.0;
    for i in 0..pieces {
        // uniform in k, mapped back to u
        let k0 = 45.0 * i as f64 / pieces as f64;
        let k1 = 45.0 * (i + 1) as f64 / pieces as f64;
        let (a, b) = ((k0 / q).asinh(), (k1 / q).asinh().min(u_max));
        total += adaptive(f, a, b, 1e-13 / pieces as f64)?;
    }
    Ok(total / PI)
}

/// Closed form of [`flat_oracle_delta`]: `(q/π) K1(q r)/r`, `r = √(x² + 1)`.
pub fn flat_delta_closed_form(q: f64, x: f64) -> f64 {
    let r = x.hypot(1.0);
    q / PI * crate::specfun::k1(q * r) / r
}
