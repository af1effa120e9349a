//! Special functions used by the quantile fits and the likelihood-ratio tests.
//!
//! The complementary error function comes from `libm` (a port of the musl
//! implementation), which keeps results identical across platforms.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Standard normal CDF, evaluated through `erfc` so both tails keep full
/// relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Acklam's rational approximation, relative error about 1.15e-9 before refinement.
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
const P_LOW: f64 = 0.02425;

fn acklam_lower(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation followed by one Halley step against [`normal_cdf`].
/// Upper-half arguments are reflected (`1 - p` is exact for `p >= 0.5`), so
/// `inv_normal_cdf(p) == -inv_normal_cdf(1 - p)` holds exactly.
pub fn inv_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::POutOfRange(p));
    }
    if p > 0.5 {
        return Ok(-lower_inv_normal_cdf(1.0 - p));
    }
    Ok(lower_inv_normal_cdf(p))
}

fn lower_inv_normal_cdf(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x = acklam_lower(p);
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Survival function of the chi-squared distribution with one degree of
/// freedom: `P(chi2(1) > x) = erfc(sqrt(x / 2))`.
pub fn chi2_1_survival(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::NegativeStatistic(x));
    }
    Ok(libm::erfc((0.5 * x).sqrt()))
}

/// Quantile of the standardized Student-t distribution (location 0, scale 1).
pub fn inv_student_t_cdf(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::POutOfRange(p));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::InvalidDof(dof));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|_| Error::InvalidDof(dof))?;
    // Same reflection as the normal case so the quantile is exactly odd.
    if p > 0.5 {
        Ok(-dist.inverse_cdf(1.0 - p))
    } else {
        Ok(dist.inverse_cdf(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_zero() {
        assert_eq!(inv_normal_cdf(0.5).unwrap(), 0.0);
        assert_eq!(inv_student_t_cdf(0.5, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_out_of_range_probability() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(inv_normal_cdf(p), Err(Error::POutOfRange(_))));
        }
    }

    #[test]
    fn chi2_survival_edges() {
        assert_eq!(chi2_1_survival(0.0).unwrap(), 1.0);
        assert!(matches!(
            chi2_1_survival(-1e-3),
            Err(Error::NegativeStatistic(_))
        ));
        assert!(chi2_1_survival(f64::INFINITY).unwrap() == 0.0);
    }

    #[test]
    fn exact_symmetry() {
        for &p in &[0.5 + 1e-12, 0.6, 0.9, 0.975, 0.99, 1.0 - 1e-10] {
            let hi = inv_normal_cdf(p).unwrap();
            let lo = inv_normal_cdf(1.0 - p).unwrap();
            assert_eq!(hi.to_bits(), (-lo).to_bits(), "p={p}");
        }
    }

    #[test]
    fn student_t_quantile_matches_known_value() {
        // t_{0.975}(5) = 2.570581835636314 (standard table value)
        let q = inv_student_t_cdf(0.975, 5.0).unwrap();
        assert!((q - 2.570_581_835_636_314).abs() < 1e-9, "{q}");
    }
}
