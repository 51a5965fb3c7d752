//! Floating-point math shim and special functions.
//!
//! With the `std` feature the elementary functions dispatch to the
//! hardware-backed intrinsics; without it they fall back to `libm`.
//! `erf`/`erfc` always come from `libm` (std has none), and the normal
//! quantile is Wichura's AS 241 rational approximation, accurate to
//! full double precision.

/// Elementary functions used by the crate, routed per build mode.
pub mod fp {
    #[cfg(feature = "std")]
    macro_rules! shim {
        ($name:ident, 1) => {
            #[inline(always)]
            pub fn $name(x: f64) -> f64 {
                f64::$name(x)
            }
        };
        ($name:ident, 2) => {
            #[inline(always)]
            pub fn $name(x: f64, y: f64) -> f64 {
                f64::$name(x, y)
            }
        };
    }

    #[cfg(not(feature = "std"))]
    macro_rules! shim {
        ($name:ident, 1) => {
            #[inline(always)]
            pub fn $name(x: f64) -> f64 {
                libm::$name(x)
            }
        };
        ($name:ident, 2) => {
            #[inline(always)]
            pub fn $name(x: f64, y: f64) -> f64 {
                libm::$name(x, y)
            }
        };
    }

    shim!(sqrt, 1);
    shim!(cos, 1);
    shim!(sin, 1);
    shim!(tan, 1);
    shim!(atan, 1);
    shim!(exp, 1);
    shim!(ln, 1);
    shim!(floor, 1);
    shim!(ceil, 1);
    shim!(abs, 1);
    shim!(atan2, 2);
    shim!(powf, 2);
    shim!(hypot, 2);

    // libm names differ for a few of these.
    #[cfg(not(feature = "std"))]
    mod libm {
        pub use ::libm::{atan, atan2, ceil, cos, exp, floor, hypot, sin, sqrt, tan};
        #[inline(always)]
        pub fn ln(x: f64) -> f64 {
            ::libm::log(x)
        }
        #[inline(always)]
        pub fn abs(x: f64) -> f64 {
            ::libm::fabs(x)
        }
        #[inline(always)]
        pub fn powf(x: f64, y: f64) -> f64 {
            ::libm::pow(x, y)
        }
    }
}

/// Error function.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile (inverse CDF), AS 241 (PPND16).
///
/// Valid for `p` strictly inside (0, 1); relative error is below 1e-15
/// over the whole range, so inverse-CDF sampling is exact at double
/// precision.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0,1)");
    let q = p - 0.5;
    if fp::abs(q) <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = fp::sqrt(-fp::ln(r));
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[inline]
fn poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

const A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 7] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-6,
    1.421_511_758_316_445_888_7e-15,
];
