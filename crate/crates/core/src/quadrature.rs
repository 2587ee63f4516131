//! Quadrature rules shared by the frequency integrals.
//!
//! Contains fixed Gauss–Legendre panels, an adaptive Gauss–Kronrod (7, 15)
//! integrator, and the cosine integral needed for analytic 1/ω tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Maps the rule onto [a, b], yielding `(node, weight)` pairs.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
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

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Integral {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Integral {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

struct Segment {
    a: f64,
    b: f64,
    part: Integral,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.part.error == other.part.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.part.error.total_cmp(&other.part.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[points[0], points[last]]`,
/// starting from the given breakpoints and bisecting the worst segment until
/// the total error falls below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total = Integral { value: 0.0, error: 0.0 };
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let part = kronrod15(&mut f, w[0], w[1]);
        total.value += part.value;
        total.error += part.error;
        heap.push(Segment { a: w[0], b: w[1], part });
    }
    while total.error > abs_tol.max(rel_tol * total.value.abs()) && heap.len() < max_segments {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = kronrod15(&mut f, worst.a, mid);
        let right = kronrod15(&mut f, mid, worst.b);
        total.value += left.value + right.value - worst.part.value;
        total.error += left.error + right.error - worst.part.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            part: left,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            part: right,
        });
    }
    // Re-sum to shed the drift of the running totals.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.part.value, e + s.part.error));
    Integral { value, error }
}

/// Sine and cosine integrals (Si(x), Ci(x)) for x > 0.
pub fn sin_cos_integral(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "Si/Ci are evaluated for positive arguments");
    if x <= 4.0 {
        let x2 = x * x;
        let mut si = x;
        let mut ci = 0.0;
        // term_k = (−1)^k x^k / k! for the running power
        let mut term = x;
        for k in 2..80 {
            term *= x / k as f64;
            let contrib = term / k as f64;
            match k % 4 {
                0 => ci += contrib,
                1 => si += contrib,
                2 => ci -= contrib,
                _ => si -= contrib,
            }
            if term.abs() < 1e-18 * (1.0 + x2) {
                break;
            }
        }
        (si, EULER_GAMMA + x.ln() + ci)
    } else {
        let e1 = exp_integral_e1_imag(x);
        (e1.im + 0.5 * PI, -e1.re)
    }
}

/// Cosine integral Ci(x) = γ + ln x + ∫₀ˣ (cos t − 1)/t dt for x > 0.
pub fn cos_integral(x: f64) -> f64 {
    sin_cos_integral(x).1
}

/// E₁(ix) by modified Lentz evaluation of its continued fraction (x > 2).
fn exp_integral_e1_imag(x: f64) -> Complex64 {
    exp_integral_en(1, Complex64::new(0.0, x))
}

/// Eₙ(z) = ∫₁^∞ e^{−zu}u^{−n} du by its continued fraction, for |z| ≳ 2 off
/// the negative real axis.
fn exp_integral_en(n: u32, z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let n1 = n as f64 - 1.0;
    let mut b = z + n as f64;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -(i as f64) * (n1 + i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// ∫_w^∞ cos(kω)/ω^m dω for w > 0 and m ≥ 1 (k ≠ 0 when m = 1).
pub fn cos_power_tail(w: f64, k: f64, m: u32) -> f64 {
    assert!(m >= 1);
    let k = k.abs();
    if k == 0.0 {
        assert!(m > 1, "∫ dω/ω diverges");
        return w.powi(1 - m as i32) / (m - 1) as f64;
    }
    let z = k * w;
    if z > 4.0 {
        // upward recurrence loses (kw)² per step here; use E_m(−ikw)
        return w.powi(1 - m as i32) * exp_integral_en(m, Complex64::new(0.0, -z)).re;
    }
    let (si, ci) = sin_cos_integral(z);
    let (s, c) = z.sin_cos();
    let mut cos_int = -ci;
    let mut sin_int = 0.5 * PI - si;
    for n in 2..=m {
        let scale = 1.0 / ((n - 1) as f64 * w.powi(n as i32 - 1));
        let next_cos = c * scale - k * sin_int / (n - 1) as f64;
        let next_sin = s * scale + k * cos_int / (n - 1) as f64;
        cos_int = next_cos;
        sin_int = next_sin;
    }
    cos_int
}

/// ∫_w^∞ cos(kω)/ω³ dω for w > 0, k ≥ 0.
pub fn cos_over_cube_tail(w: f64, k: f64) -> f64 {
    cos_power_tail(w, k, 3)
}

/// ∫_w^∞ cos(kω) ω/(a² + ω²) dω for kw ≫ 1 or w ≫ a, summed as the series
/// Σ (−a²)ⁿ ∫ cos(kω)/ω^{2n+1} dω. Requires w > 4a.
pub fn drude_cos_tail(w: f64, a: f64, k: f64) -> f64 {
    assert!(w > 4.0 * a);
    let ratio = -a * a;
    let mut factor = 1.0;
    let mut sum = 0.0;
    for n in 0..8u32 {
        if n == 0 && k == 0.0 {
            unreachable!("∫ dω/ω diverges");
        }
        let term = factor * cos_power_tail(w, k, 2 * n + 1);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        factor *= ratio;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        let sum: f64 = rule.weights.iter().sum();
        assert_relative_eq!(sum, 2.0, epsilon = 1e-14);
        // degree 15 polynomial
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15) + 3.0 * x.powi(4));
        assert_relative_eq!(v, 2f64.powi(16) / 16.0 + 3.0 * 32.0 / 5.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_sharp_peaks() {
        let eps = 1e-3;
        let f = |x: f64| eps / (x * x + eps * eps);
        let r = integrate_adaptive(f, &[-1.0, 1.0], 1e-12, 1e-12, 2000);
        assert_relative_eq!(r.value, 2.0 * (1.0 / eps).atan(), max_relative = 1e-10);
    }

    #[test]
    fn cos_integral_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert_relative_eq!(cos_integral(1.0), 0.337_403_922_900_968_1, epsilon = 1e-14);
        assert_relative_eq!(cos_integral(4.0), -0.140_981_697_886_930_4, epsilon = 1e-13);
        assert_relative_eq!(cos_integral(5.0), -0.190_029_749_656_643_9, epsilon = 1e-13);
        assert_relative_eq!(cos_integral(20.0), 0.044_419_820_845_353_3, epsilon = 1e-13);
    }

    #[test]
    fn cos_integral_is_continuous_across_branches() {
        let below = cos_integral(4.0 - 1e-9);
        let above = cos_integral(4.0 + 1e-9);
        assert!((below - above).abs() < 1e-8);
    }

    #[test]
    fn sine_integral_reference_values() {
        assert_relative_eq!(sin_cos_integral(1.0).0, 0.946_083_070_367_183_0, epsilon = 1e-14);
        assert_relative_eq!(sin_cos_integral(5.0).0, 1.549_931_244_944_674_1, epsilon = 1e-13);
        assert_relative_eq!(sin_cos_integral(20.0).0, 1.548_241_701_043_439_8, epsilon = 1e-13);
    }

    #[test]
    fn drude_tail_matches_direct_quadrature() {
        let (w, a, k) = (50.0, 10.0, 0.9);
        let mut points = vec![w];
        while *points.last().unwrap() < 2e5 {
            let last = *points.last().unwrap();
            points.push(last + 2.0 * PI / k);
        }
        let direct = integrate_adaptive(
            |x: f64| (k * x).cos() * x / (a * a + x * x),
            &points,
            1e-15,
            1e-13,
            200_000,
        );
        let end = *points.last().unwrap();
        let rest = drude_cos_tail(end, a, k);
        assert_relative_eq!(direct.value + rest, drude_cos_tail(w, a, k), epsilon = 1e-11);
    }

    #[test]
    fn cube_tail_matches_direct_quadrature() {
        for &(w, k) in &[(2.0, 0.0), (2.0, 0.3), (5.0, 1.7), (40.0, 0.1), (400.0, 3.0)] {
            let direct = integrate_adaptive(
                |x: f64| (k * x).cos() / (x * x * x),
                &[w, 10.0 * w, 100.0 * w, 1e4 * w],
                1e-16,
                1e-12,
                20_000,
            );
            // remaining tail beyond 1e4 w is below 1/(2·1e8·w²)
            let expected = cos_over_cube_tail(w, k);
            assert!(
                (direct.value - expected).abs() < 1e-8 / (w * w),
                "w={w} k={k}: {} vs {}",
                direct.value,
                expected
            );
        }
    }
}
