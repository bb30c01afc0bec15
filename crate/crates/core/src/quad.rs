//! Quadrature routines shared by the kernel, special-function and solver modules.
//!
//! Three building blocks:
//! * tanh-sinh (double exponential) rule for finite intervals with integrable
//!   endpoint singularities,
//! * a fixed 16-point Gauss-Legendre panel for smooth integrands,
//! * tail drivers for monotone decaying and oscillatory integrands on
//!   semi-infinite intervals.

/// Abscissae of the 16-point Gauss-Legendre rule on [-1, 1].
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_440_2,
    0.281_603_550_779_258_913_2,
    0.458_016_777_657_227_386_3,
    0.617_876_244_402_643_748_4,
    0.755_404_408_355_003_033_9,
    0.865_631_202_387_831_743_9,
    0.944_575_023_073_232_576_1,
    0.989_400_934_991_649_932_6,
];

/// Weights of the 16-point Gauss-Legendre rule on [-1, 1].
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_496_3,
    0.182_603_415_044_923_588_9,
    0.169_156_519_395_002_538_2,
    0.149_595_988_816_576_732_1,
    0.124_628_971_255_533_872_1,
    0.095_158_511_682_492_784_8,
    0.062_253_523_938_647_892_9,
    0.027_152_459_411_754_094_9,
];

/// 16-point Gauss-Legendre panel over [a, b].
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..8 {
        let dx = h * GL16_X[i];
        sum += GL16_W[i] * (f(c + dx) + f(c - dx));
    }
    sum * h
}

/// Nodes and weights of the 16-point Gauss-Legendre rule mapped onto [a, b],
/// for callers that accumulate several functionals of one expensive integrand.
pub fn gauss16_nodes(a: f64, b: f64) -> [(f64, f64); 16] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 16];
    for i in 0..8 {
        let dx = h * GL16_X[i];
        out[2 * i] = (c + dx, h * GL16_W[i]);
        out[2 * i + 1] = (c - dx, h * GL16_W[i]);
    }
    out
}

/// Tanh-sinh quadrature over the open interval (a, b).
///
/// Tolerates integrable algebraic singularities at either endpoint. The level
/// is doubled until two successive refinements agree to `tol` (relative,
/// with an absolute floor of 1e-300).
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    // g(t) = f(c + half*tanh(pi/2 sinh t)) * half * (pi/2) cosh t / cosh^2(pi/2 sinh t)
    let eval = |t: f64| -> f64 {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch);
        // Place the node by its distance to the nearest endpoint; the naive
        // c + half*tanh(s) cancels catastrophically near the ends.
        let x = if s <= 0.0 {
            let dist = half * 2.0 / (1.0 + (-2.0 * s).exp());
            a + dist
        } else {
            let dist = half * 2.0 / (1.0 + (2.0 * s).exp());
            b - dist
        };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };

    let t_max = 4.3; // tanh(pi/2 sinh 4.3) is 1 - ~1e-50
    let mut h = 1.0;
    let mut sum = eval(0.0);
    for k in 1..=4 {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
    }
    let mut prev = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        // Add the new midpoints only.
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let cur = sum * h * half;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) && _level >= 2 {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Integral of a monotone-decaying positive integrand over [a, infinity).
///
/// Sums geometric panels [a 2^m, a 2^(m+1)] until a panel contributes less
/// than `tol` times the accumulated value. Returns `None` if the panel
/// contributions fail to decay (divergent tail).
pub fn integrate_decaying_tail<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> Option<f64> {
    assert!(a > 0.0);
    let mut lo = a;
    let mut total = 0.0;
    let mut prev_panel = f64::INFINITY;
    let mut non_decreasing = 0usize;
    for _ in 0..4000 {
        let hi = lo * 2.0;
        // Split each octave so the panel resolves curvature of the integrand.
        let mid = 0.5 * (lo + hi);
        let panel = gauss16(f, lo, mid) + gauss16(f, mid, hi);
        total += panel;
        if panel.abs() <= tol * total.abs().max(1e-300) {
            return Some(total);
        }
        if panel.abs() >= prev_panel.abs() {
            non_decreasing += 1;
            if non_decreasing > 40 {
                return None;
            }
        } else {
            non_decreasing = 0;
        }
        prev_panel = panel;
        lo = hi;
    }
    None
}

/// Integral of cos(omega*y) * k(y) over [a, infinity) for decaying k.
///
/// Half-period partial sums form an (eventually) alternating sequence whose
/// limit is extracted by repeated averaging (Euler transformation).
pub fn integrate_oscillatory_tail<F: Fn(f64) -> f64>(
    k: &F,
    a: f64,
    omega: f64,
    tol: f64,
) -> Option<f64> {
    assert!(omega > 0.0);
    let half_period = std::f64::consts::PI / omega;
    let f = |y: f64| (omega * y).cos() * k(y);
    // Integrate up to the first half-period boundary past `a`.
    let first_boundary = ((a / half_period).floor() + 1.0) * half_period;
    let mut terms: Vec<f64> = Vec::with_capacity(256);
    let mut head = 0.0;
    {
        // For small omega the first boundary sits far beyond the decay scale
        // of k; panels double geometrically from `a` (resolving variation on
        // the scale of the lower limit) and never exceed a quarter
        // half-period.
        let mut lo = a;
        while lo < first_boundary {
            let w = lo.min(0.25 * half_period).min(first_boundary - lo);
            head += gauss16(&f, lo, lo + w);
            lo += w;
        }
    }
    let mut lo = first_boundary;
    let max_terms = 4000usize;
    let mut tail_estimate = 0.0;
    let mut converged = false;
    for m in 0..max_terms {
        let hi = lo + half_period;
        let mid = 0.5 * (lo + hi);
        let term = gauss16(&f, lo, mid) + gauss16(&f, mid, hi);
        terms.push(term);
        lo = hi;
        if m >= 7 && m % 4 == 3 {
            if let Some(v) = euler_sum(&terms, tol) {
                tail_estimate = v;
                converged = true;
                break;
            }
        }
        if term.abs() < 1e-300 {
            tail_estimate = terms.iter().sum();
            converged = true;
            break;
        }
    }
    if !converged {
        // Last resort: accept the accelerated value if the raw tail is tiny.
        match euler_sum(&terms, tol * 100.0) {
            Some(v) => tail_estimate = v,
            None => return None,
        }
    }
    Some(head + tail_estimate)
}

/// Sum an (eventually alternating) series by repeated averaging of partial
/// sums. Returns `None` when the averaged diagonal has not settled to `tol`.
pub(crate) fn euler_sum(terms: &[f64], tol: f64) -> Option<f64> {
    let n = terms.len();
    if n < 4 {
        return None;
    }
    let mut row: Vec<f64> = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &t in terms {
        acc += t;
        row.push(acc);
    }
    let mut prev_diag = row[n - 1];
    for _ in 0..(n - 1) {
        for i in 0..(row.len() - 1) {
            row[i] = 0.5 * (row[i] + row[i + 1]);
        }
        row.pop();
        let diag = row[row.len() - 1];
        if (diag - prev_diag).abs() <= tol * diag.abs().max(1e-300) {
            return Some(diag);
        }
        prev_diag = diag;
        if row.len() < 2 {
            break;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss16_polynomial_exact() {
        let f = |x: f64| 3.0 * x * x;
        assert!((gauss16(&f, 0.0, 2.0) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let f = |x: f64| x.powf(-0.5);
        let v = tanh_sinh(&f, 0.0, 1.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn tanh_sinh_smooth() {
        let f = |x: f64| x.sin();
        let v = tanh_sinh(&f, 0.0, std::f64::consts::PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn decaying_tail_exponential() {
        // int_1^inf e^{-y} dy = e^{-1}
        let v = integrate_decaying_tail(&|y: f64| (-y).exp(), 1.0, 1e-13).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn decaying_tail_power_law() {
        // int_1^inf y^{-1.5} dy = 2
        let v = integrate_decaying_tail(&|y: f64| y.powf(-1.5), 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn decaying_tail_divergence_detected() {
        assert!(integrate_decaying_tail(&|y: f64| 1.0 / y, 1.0, 1e-12).is_none());
    }

    #[test]
    fn oscillatory_tail_exponential() {
        // int_0^inf cos(w y) e^{-y} dy = 1/(1+w^2); subtract the [0,a] head.
        let w = 2.0;
        let a = 0.3;
        let exact_full = 1.0 / (1.0 + w * w);
        let head = gauss16(&|y: f64| (w * y).cos() * (-y).exp(), 0.0, a);
        let v = integrate_oscillatory_tail(&|y: f64| (-y).exp(), a, w, 1e-12).unwrap();
        assert!((head + v - exact_full).abs() < 1e-10, "got {}", head + v);
    }

    #[test]
    fn oscillatory_tail_power_law() {
        // int_0^inf cos(y) y^{-1/2} dy = sqrt(pi/2); head on [0,1] via tanh-sinh.
        let head = tanh_sinh(&|y: f64| y.cos() * y.powf(-0.5), 0.0, 1.0, 1e-13);
        let v = integrate_oscillatory_tail(&|y: f64| y.powf(-0.5), 1.0, 1.0, 1e-12).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!((head + v - exact).abs() < 1e-9, "got {}", head + v);
    }
}
