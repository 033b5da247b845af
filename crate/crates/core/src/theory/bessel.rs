//! Bessel functions of the first kind and integer order.
//!
//! Values come from Miller's backward recurrence normalised with
//! `J_0 + 2 sum_k J_2k = 1`, which is stable for every order and argument. Very
//! large arguments at low order switch to the Hankel asymptotic expansion.

use std::f64::consts::FRAC_PI_4;

const RESCALE_ABOVE: f64 = 1e200;
const RESCALE_BY: f64 = 1e-200;

/// Above this argument low orders use the asymptotic expansion.
const ASYMPTOTIC_X: f64 = 2000.0;
const ASYMPTOTIC_MAX_ORDER: usize = 20;

/// `J_n(x)` for integer `n`.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
    let flips = (n < 0) as u32 + (x < 0.0) as u32;
    let sign = if order % 2 == 1 && flips % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    sign * bessel_j_nonneg(order, x.abs())
}

fn bessel_j_nonneg(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x > ASYMPTOTIC_X && n <= ASYMPTOTIC_MAX_ORDER {
        return hankel_asymptotic(n, x);
    }
    miller(n, x)[n]
}

/// `J_0(x) ..= J_max(x)` in one backward sweep.
pub fn bessel_j_orders(max_order: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; max_order + 1];
        v[0] = 1.0;
        return v;
    }
    let ax = x.abs();
    let mut v = if ax > ASYMPTOTIC_X && max_order <= ASYMPTOTIC_MAX_ORDER {
        (0..=max_order).map(|n| hankel_asymptotic(n, ax)).collect()
    } else {
        let mut v = miller(max_order, ax);
        v.truncate(max_order + 1);
        v
    };
    if x < 0.0 {
        for (n, j) in v.iter_mut().enumerate() {
            if n % 2 == 1 {
                *j = -*j;
            }
        }
    }
    v
}

/// Even starting order for the backward recurrence, far enough past both the
/// requested order and the turning point `n ~ x` that the neglected tail is
/// below double precision.
fn start_order(n: usize, x: f64) -> usize {
    let base = (n as f64).max(x.ceil());
    let start = base + 30.0 + 15.0 * x.cbrt();
    let start = start as usize;
    start + start % 2
}

/// Backward recurrence for `x > 0`; returns `J_0 ..= J_start`.
fn miller(n: usize, x: f64) -> Vec<f64> {
    let top = start_order(n, x);
    let mut f = vec![0.0; top + 2];
    f[top] = 1.0;
    let two_over_x = 2.0 / x;
    for k in (1..=top).rev() {
        f[k - 1] = k as f64 * two_over_x * f[k] - f[k + 1];
        if f[k - 1].abs() > RESCALE_ABOVE {
            for v in &mut f[k - 1..] {
                *v *= RESCALE_BY;
            }
        }
    }
    // Normalise with J_0 + 2 (J_2 + J_4 + ...) = 1, summing small terms first.
    let mut sum = 0.0;
    let mut k = top;
    while k >= 2 {
        sum += f[k];
        k -= 2;
    }
    let norm = f[0] + 2.0 * sum;
    f.truncate(top + 1);
    for v in &mut f {
        *v /= norm;
    }
    f
}

/// Hankel expansion `J_n(x) ~ sqrt(2 / (pi x)) (P cos w - Q sin w)`, `w = x - n pi/2 - pi/4`.
fn hankel_asymptotic(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n as f64).powi(2);
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1usize;
    loop {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        if k % 2 == 1 {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            q += sign * term;
        } else {
            let sign = if (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
            p += sign * term;
        }
        if term.abs() < 1e-17 || k > 60 {
            break;
        }
        k += 1;
    }
    let w = x - (n as f64) * std::f64::consts::FRAC_PI_2 - FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}
