//! Closed-form Gaussian smoothings used by synthetic problems and the
//! duality diagnostics.

use statrs::function::erf::erf;

/// `E |a + mu U|` for `U ~ N(0, 1)`.
pub fn smoothed_abs(a: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        return a.abs();
    }
    let z = a / mu;
    mu * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * z * z).exp() + a * erf(z / std::f64::consts::SQRT_2)
}

/// `E ||x + mu U||^2 = ||x||^2 + mu^2 n`.
pub fn smoothed_sq_norm(x: &[f64], mu: f64) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() + mu * mu * x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use crate::smoothing::mc_smoothed_value;

    #[test]
    fn smoothed_abs_matches_monte_carlo() {
        let mut s = Stream::new(12);
        for (a, mu) in [(0.0, 0.1), (0.05, 0.1), (-0.3, 0.2), (1.0, 0.5)] {
            let e = mc_smoothed_value(|x| x[0].abs(), &[a], mu, 200_000, &mut s);
            assert!((e.value - smoothed_abs(a, mu)).abs() < 4.0 * e.se, "{a} {mu}");
        }
        assert!((smoothed_abs(0.0, 0.3) - 0.3 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(smoothed_abs(-2.0, 0.0), 2.0);
    }

    #[test]
    fn smoothed_abs_approaches_abs_far_from_kink() {
        assert!((smoothed_abs(5.0, 0.1) - 5.0).abs() < 1e-12);
        assert!((smoothed_abs(-5.0, 0.1) - 5.0).abs() < 1e-12);
    }
}
