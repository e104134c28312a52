//! Gauss–Legendre rules, panel interpolation and adaptive integration.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(c + s * t))
            .sum::<f64>()
            * s
    }

    /// Nodes and weights mapped onto `[a, b]`, appended to the output vectors.
    pub fn map_into(&self, a: f64, b: f64, x: &mut Vec<f64>, w: &mut Vec<f64>) {
        let c = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        for (&t, &wt) in self.nodes.iter().zip(&self.weights) {
            x.push(c + s * t);
            w.push(s * wt);
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Barycentric Lagrange interpolation on a fixed set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrange {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl Lagrange {
    pub fn new(nodes: &[f64]) -> Self {
        let n = nodes.len();
        let mut bary = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    bary[j] /= nodes[j] - nodes[k];
                }
            }
        }
        Self { nodes: nodes.to_vec(), bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Writes the values of every basis polynomial at `x` into `out`.
    pub fn basis(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nodes.len());
        if let Some(k) = self.nodes.iter().position(|&t| t == x) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[k] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for ((o, &t), &b) in out.iter_mut().zip(&self.nodes).zip(&self.bary) {
            let v = b / (x - t);
            *o = v;
            denom += v;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }
}

/// Geometrically graded composite rule on `[a, b]` for integrands with an
/// integrable singularity (or near-singularity) at `s`.
///
/// `s` may lie inside, on, or outside the interval. Subintervals shrink by
/// `ratio` toward `s` down to `min_size`; each carries `rule`.
pub fn graded_rule(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    s: f64,
    ratio: f64,
    min_size: f64,
    x: &mut Vec<f64>,
    w: &mut Vec<f64>,
) {
    debug_assert!(b > a);
    if s > a && s < b {
        graded_toward_end(rule, s, a, ratio, min_size, x, w);
        graded_toward_end(rule, s, b, ratio, min_size, x, w);
    } else if s <= a {
        let floor = (a - s).max(min_size);
        graded_toward_end(rule, a, b, ratio, floor, x, w);
    } else {
        let floor = (s - b).max(min_size);
        graded_toward_end(rule, b, a, ratio, floor, x, w);
    }
}

/// Graded rule on the interval between `from` (the singular end) and `to`.
fn graded_toward_end(
    rule: &GaussLegendre,
    from: f64,
    to: f64,
    ratio: f64,
    min_size: f64,
    x: &mut Vec<f64>,
    w: &mut Vec<f64>,
) {
    let len = (to - from).abs();
    let dir = (to - from).signum();
    let mut breaks = vec![len];
    let mut d = len;
    while d > min_size {
        d *= ratio;
        breaks.push(d);
    }
    breaks.push(0.0);
    for pair in breaks.windows(2) {
        let (hi, lo) = (pair[0], pair[1]);
        let (p, q) = (from + dir * lo, from + dir * hi);
        let (lo_x, hi_x) = if p < q { (p, q) } else { (q, p) };
        rule.map_into(lo_x, hi_x, x, w);
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let mut stack = vec![(a, b, abs_tol)];
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, tol)) = stack.pop() {
        let (k, g) = kronrod15(&mut f, lo, hi);
        evaluations += 15;
        if (k - g).abs() <= tol || (hi - lo) < 1e-14 * (1.0 + lo.abs()) {
            total += k;
        } else if evaluations > 2_000_000 {
            return Err(Error::Quadrature(format!(
                "adaptive rule on [{a}, {b}] exceeded its evaluation budget"
            )));
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * tol));
            stack.push((mid, hi, 0.5 * tol));
        }
    }
    Ok(total)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, g * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 12, 16, 24, 48] {
            let r = GaussLegendre::new(n);
            let total: f64 = r.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = r.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn lagrange_basis_reproduces_polynomials() {
        let r = GaussLegendre::new(8);
        let lag = Lagrange::new(&r.nodes);
        let mut b = vec![0.0; 8];
        for &x in &[-0.93, -0.1, 0.0, 0.37, 0.999] {
            lag.basis(x, &mut b);
            let interp: f64 = b.iter().zip(&r.nodes).map(|(bi, t)| bi * t.powi(7)).sum();
            assert!((interp - x.powi(7)).abs() < 1e-13);
        }
        lag.basis(r.nodes[3], &mut b);
        assert_eq!(b[3], 1.0);
    }

    #[test]
    fn graded_rule_integrates_log_singularity() {
        let rule = GaussLegendre::new(16);
        let (mut x, mut w) = (Vec::new(), Vec::new());
        graded_rule(&rule, -1.0, 1.0, 0.3, 0.25, 1e-12, &mut x, &mut w);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * (x - 0.3f64).abs().ln()).sum();
        let exact = 1.3 * 1.3f64.ln() + 0.7 * 0.7f64.ln() - 2.0;
        assert!((got - exact).abs() < 1e-12, "{got} {exact}");

        // singular point just outside the interval
        let (mut x, mut w) = (Vec::new(), Vec::new());
        graded_rule(&rule, 0.0, 1.0, -1e-4, 0.25, 1e-12, &mut x, &mut w);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * (x + 1e-4f64).ln()).sum();
        let u = 1.0 + 1e-4f64;
        let exact = (u * u.ln() - u) - (1e-4f64 * 1e-4f64.ln() - 1e-4);
        assert!((got - exact).abs() < 1e-13, "{got} {exact}");
    }

    #[test]
    fn adaptive_integrates_peaked_function() {
        let got = adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((got - exact).abs() < 1e-8 * exact);
    }
}
