//! Normal distribution helpers: c.d.f., inverse c.d.f. and log-density.

use std::f64::consts::{LN_2, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal c.d.f.
pub fn std_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal survival function `1 - Φ(x)`.
pub fn std_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Natural log of the standard normal density.
pub fn std_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Inverse standard normal c.d.f. (Wichura's AS241, PPND16).
pub fn std_inv_cdf(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
            + 67265.770_927_008_700)
            * r
            + 45921.953_931_549_871)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_3)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5226.495_278_852_545_5 * r + 28729.085_735_721_943) * r
            + 39307.895_800_092_710)
            * r
            + 21213.794_301_586_595)
            * r
            + 5394.196_021_424_751_1)
            * r
            + 687.187_007_492_057_91)
            * r
            + 42.313_330_701_600_911)
            * r
            + 1.0;
        return q * num / den;
    }
    let r0 = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r0.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_1e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_61)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_344_9e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_07)
            * r
            + 0.689_767_334_985_100_05)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_123)
            * r
            + 0.296_560_571_828_504_89)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_3;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_132_6e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_81)
            * r
            + 0.599_832_206_555_887_94)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// C.d.f. of N(0, variance).
pub fn cdf(x: f64, variance: f64) -> f64 {
    std_cdf(x / variance.sqrt())
}

/// Inverse c.d.f. of N(0, variance).
pub fn inv_cdf(p: f64, variance: f64) -> f64 {
    std_inv_cdf(p) * variance.sqrt()
}

/// Base-2 log of the probability mass `Φ(hi) - Φ(lo)` for a standard normal,
/// given the interval as `center ± half` with `log2_half = log2(half)`.
///
/// Endpoints are never subtracted; narrow intervals use the density at the
/// center, wide ones use tail-aware differences.
pub fn log2_mass(center: f64, log2_half: f64) -> f64 {
    if log2_half < -20.0 {
        // density is flat to relative 1e-12 across the window
        return (std_log_pdf(center) / LN_2) + 1.0 + log2_half;
    }
    let half = log2_half.exp2();
    let lo = center - half;
    let hi = center + half;
    let mass = if lo >= 0.0 {
        std_sf(lo) - std_sf(hi)
    } else if hi <= 0.0 {
        std_cdf(hi) - std_cdf(lo)
    } else {
        1.0 - std_cdf(lo) - std_sf(hi)
    };
    if mass > 0.0 {
        mass.log2()
    } else {
        // both endpoints deep in one tail: integrate the density at the center
        (std_log_pdf(center) / LN_2) + 1.0 + log2_half
    }
}
