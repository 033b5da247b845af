//! Gauss-Legendre integration with rule doubling.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

const BASE_DEGREE: usize = 64;
const MAX_DOUBLINGS: usize = 6;

fn rule(level: usize) -> &'static GaussLegendre {
    static RULES: [OnceLock<GaussLegendre>; MAX_DOUBLINGS + 1] =
        [const { OnceLock::new() }; MAX_DOUBLINGS + 1];
    RULES[level].get_or_init(|| {
        let degree = NonZeroUsize::new(BASE_DEGREE << level).expect("nonzero degree");
        GaussLegendre::new(degree)
    })
}

/// Integrate `f` over `[a, b]`, starting from a 64-point rule and doubling the
/// degree until successive estimates differ by less than `tol` (absolute).
/// Returns the last estimate if the doubling budget runs out.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    let mut prev = rule(0).integrate(a, b, &mut f);
    for level in 1..=MAX_DOUBLINGS {
        let next = rule(level).integrate(a, b, &mut f);
        if (next - prev).abs() < tol {
            return next;
        }
        prev = next;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_trig_integrals() {
        assert!((integrate(0.0, 1.0, 1e-14, |x| x * x) - 1.0 / 3.0).abs() < 1e-15);
        let s = integrate(0.0, std::f64::consts::PI, 1e-14, f64::sin);
        assert!((s - 2.0).abs() < 1e-14);
        // Strongly oscillatory integrand forces doubling.
        let s = integrate(0.0, 200.0, 1e-12, |x| (3.0 * x).cos());
        assert!((s - (600.0f64).sin() / 3.0).abs() < 1e-11);
    }
}
