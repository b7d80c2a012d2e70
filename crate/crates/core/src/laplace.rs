//! Laplace noise by inverse-CDF sampling.

use rand::Rng;

/// Maps `u` in (−½, ½) to a Laplace(0, `scale`) variate:
/// `−scale · sign(u) · ln(1 − 2|u|)`.
pub fn laplace_from_uniform(scale: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// One draw from Laplace(0, `scale`).
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    debug_assert!(scale > 0.0);
    loop {
        // random::<f64>() is in [0, 1); u = −½ would map to an infinite draw.
        let u = rng.random::<f64>() - 0.5;
        if u > -0.5 {
            return laplace_from_uniform(scale, u);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn median_maps_to_zero() {
        assert_eq!(laplace_from_uniform(3.0, 0.0), 0.0);
    }

    #[test]
    fn inverse_cdf_matches_quantiles() {
        // Laplace CDF at x > 0 is 1 − ½e^{−x/b}; the quantile at p = ½ + u is −b ln(1 − 2u).
        let b = 2.5;
        for &u in &[0.1, 0.25, 0.4, 0.499] {
            let x = laplace_from_uniform(b, u);
            let cdf = 1.0 - 0.5 * (-x / b).exp();
            assert!((cdf - (0.5 + u)).abs() < 1e-12);
            assert_eq!(laplace_from_uniform(b, -u), -x);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let a: Vec<u64> = {
            let mut r = rng::stream(11, 0);
            (0..100).map(|_| sample_laplace(1.0, &mut r).to_bits()).collect()
        };
        let b: Vec<u64> = {
            let mut r = rng::stream(11, 0);
            (0..100).map(|_| sample_laplace(1.0, &mut r).to_bits()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_moments() {
        // E[w] = 0 with sd √2·b/√N; E|w| = b with sd b/√N.
        let n = 1_000_000;
        for &b in &[0.5, 1.0, 5.0] {
            let mut r = rng::stream(2024, 1);
            let (mut s, mut sa) = (0.0, 0.0);
            for _ in 0..n {
                let w = sample_laplace(b, &mut r);
                s += w;
                sa += w.abs();
            }
            let mean = s / n as f64;
            let mean_abs = sa / n as f64;
            assert!(mean.abs() <= 3.0 * 2f64.sqrt() * b / 1000.0, "b={b} mean={mean}");
            assert!((mean_abs - b).abs() <= 0.01 * b, "b={b} mean_abs={mean_abs}");
        }
    }
}
