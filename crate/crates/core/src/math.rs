//! Float helpers that work without `std`, plus the normal-distribution
//! pieces used by the measurement and action models.

use core::f64::consts::{PI, SQRT_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if !theta.is_finite() {
        return theta;
    }
    let mut a = libm::fmod(theta, TAU);
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Log-density of `N(0, sigma^2)` evaluated at `residual`.
pub fn normal_logpdf(residual: f64, sigma: f64) -> f64 {
    let z = residual / sigma;
    -0.5 * z * z - ln(sigma) - 0.5 * ln(TAU)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    exp(-0.5 * z * z) / sqrt(TAU)
}

/// Standard normal CDF, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation (Acklam) followed by one Halley step against
/// `erfc`, which brings the result to near machine precision.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = sqrt(-2.0 * ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * ln(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = std_normal_cdf(x) - p;
    let u = e * sqrt(TAU) * exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Draws from `N(mean, sigma^2)`.
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return mean;
    }
    let z: f64 = rng.sample(StandardNormal);
    mean + sigma * z
}

/// Normal distribution truncated to `[lo, hi]` (either bound may be infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, sigma: f64, lo: f64, hi: f64) -> Self {
        Self { mean, sigma, lo, hi }
    }

    fn standardized(&self) -> (f64, f64) {
        ((self.lo - self.mean) / self.sigma, (self.hi - self.mean) / self.sigma)
    }

    /// Inverse-CDF sampling. Works on the tail that keeps the CDF values
    /// away from 1 so the interval stays resolvable far from the mean.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi <= self.lo || self.sigma <= 0.0 {
            return self.point_value();
        }
        let (alpha, beta) = self.standardized();
        let u: f64 = rng.gen();
        let z = if alpha > 0.0 {
            // Mirror so both CDF values are small.
            let pa = std_normal_cdf(-beta);
            let pb = std_normal_cdf(-alpha);
            -std_normal_quantile(pa + u * (pb - pa))
        } else {
            let pa = std_normal_cdf(alpha);
            let pb = std_normal_cdf(beta);
            std_normal_quantile(pa + u * (pb - pa))
        };
        (self.mean + self.sigma * z).clamp(self.lo, self.hi)
    }

    /// Mean of the truncated distribution.
    pub fn truncated_mean(&self) -> f64 {
        if self.hi <= self.lo || self.sigma <= 0.0 {
            return self.point_value();
        }
        let (alpha, beta) = self.standardized();
        let (mass, dens) = if alpha > 0.0 {
            (
                std_normal_cdf(-alpha) - std_normal_cdf(-beta),
                std_normal_pdf(alpha) - std_normal_pdf(beta),
            )
        } else {
            (
                std_normal_cdf(beta) - std_normal_cdf(alpha),
                std_normal_pdf(alpha) - std_normal_pdf(beta),
            )
        };
        if mass <= 1e-300 {
            // Interval sits far in a tail; the mass concentrates at the near edge.
            return if alpha > 0.0 { self.lo } else { self.hi };
        }
        (self.mean + self.sigma * dens / mass).clamp(self.lo, self.hi)
    }

    fn point_value(&self) -> f64 {
        if self.hi <= self.lo {
            self.hi
        } else {
            self.mean.clamp(self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(TAU) - 0.0).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let z = std_normal_quantile(p);
            let back = std_normal_cdf(z);
            assert!((back - p).abs() / p.min(1.0 - p) < 1e-9, "p={p} z={z} back={back}");
        }
    }

    #[test]
    fn truncated_mean_matches_quadrature() {
        let tn = TruncatedNormal::new(-0.5, 1.5, -6.0, 1.0);
        // Midpoint-rule integration of the truncated density.
        let n = 200_000;
        let h = (tn.hi - tn.lo) / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = tn.lo + (i as f64 + 0.5) * h;
            let w = std_normal_pdf((x - tn.mean) / tn.sigma);
            num += x * w;
            den += w;
        }
        assert!((tn.truncated_mean() - num / den).abs() < 1e-8);
    }

    #[test]
    fn truncated_samples_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tn = TruncatedNormal::new(10.0, 1.0, -1.0, 0.5);
        for _ in 0..1000 {
            let x = tn.sample(&mut rng);
            assert!((-1.0..=0.5).contains(&x));
        }
        let far = TruncatedNormal::new(-10.0, 1.0, 2.0, 3.0);
        for _ in 0..100 {
            let x = far.sample(&mut rng);
            assert!((2.0..=3.0).contains(&x));
        }
    }
}
