//! Exponential integrals.
//!
//! `expint(n, x)` evaluates the generalized exponential integral
//! `E_n(x) = ∫_1^∞ e^{-xt} t^{-n} dt` for `x > 0` (and `x = 0` when `n > 1`).
//! A power series is used for `x ≤ 1` and a Lentz continued fraction above,
//! which keeps the relative error near machine precision on the whole axis.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 500;
const TINY: f64 = 1e-300;

/// Generalized exponential integral `E_n(x)`.
///
/// Returns `+∞` for `x = 0, n ≤ 1` and `NaN` for negative `x`.
pub fn expint(n: u32, x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if n == 0 {
        return if x == 0.0 { f64::INFINITY } else { (-x).exp() / x };
    }
    let nm1 = (n - 1) as f64;
    if x == 0.0 {
        return if n == 1 { f64::INFINITY } else { 1.0 / nm1 };
    }
    if x > 1.0 {
        if x > 745.0 {
            return 0.0;
        }
        let mut b = x + n as f64;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let a = -(i as f64) * (nm1 + i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        return h * (-x).exp();
    }
    let mut ans = if n == 1 { -x.ln() - EULER_GAMMA } else { 1.0 / nm1 };
    let mut fact = 1.0;
    for i in 1..=MAX_ITER {
        fact *= -x / i as f64;
        let del = if i as f64 != nm1 {
            -fact / (i as f64 - nm1)
        } else {
            let psi = -EULER_GAMMA + (1..=(n - 1)).map(|k| 1.0 / k as f64).sum::<f64>();
            fact * (-x.ln() + psi)
        };
        ans += del;
        if del.abs() < ans.abs() * 1e-17 {
            break;
        }
    }
    ans
}

/// Exponential integral `E_1(x)`.
pub fn e1(x: f64) -> f64 {
    expint(1, x)
}

/// `Γ(k)` for small positive integers, as a float.
pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(|j| j as f64).product()
}
