//! Adaptive 21-point Gauss–Kronrod quadrature with global error control.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{MacsError, QuadratureFailure, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_980_584,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances for [`integrate`]. Convergence is declared when the summed
/// error estimate drops below `max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 200,
        }
    }
}

impl QuadratureOptions {
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        scaled = res_asc * (200.0 * scaled / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk21<F>(f: &mut F, lower: f64, upper: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let abs_half = half.abs();

    let f_center = f(center)?;
    let mut res_kronrod = f_center * WGK[10];
    let mut res_gauss = 0.0;
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x)?;
        let f2 = f(center + x)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_kronrod * half;
    let error = rescale_error(
        (res_kronrod - res_gauss) * half,
        res_abs * abs_half,
        res_asc * abs_half,
    );
    if !value.is_finite() {
        return Err(MacsError::Quadrature(QuadratureFailure {
            lower,
            upper,
            estimate: value,
            error_estimate: f64::INFINITY,
            intervals: 1,
        }));
    }
    Ok(Segment {
        lower,
        upper,
        value,
        error,
    })
}

/// Integrates `f` over `[lower, upper]`, bisecting the interval with the
/// largest error estimate until the tolerance is met.
pub fn integrate<F>(mut f: F, lower: f64, upper: f64, opts: &QuadratureOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if lower == upper {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let first = gk21(&mut f, lower, upper)?;
    let tolerance = |value: f64| opts.abs_tol.max(opts.rel_tol * value.abs());
    if first.error <= tolerance(first.value) {
        return Ok(Estimate {
            value: first.value,
            error: first.error,
            intervals: 1,
        });
    }

    let mut heap = BinaryHeap::with_capacity(16);
    let mut total = first.value;
    let mut total_error = first.error;
    heap.push(first);

    while total_error > tolerance(total) {
        if heap.len() >= opts.max_intervals {
            return Err(MacsError::Quadrature(QuadratureFailure {
                lower,
                upper,
                estimate: total,
                error_estimate: total_error,
                intervals: heap.len(),
            }));
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lower + worst.upper);
        if mid <= worst.lower.min(worst.upper) || mid >= worst.lower.max(worst.upper) {
            // Interval can no longer be split in floating point; accept what we have.
            heap.push(worst);
            break;
        }
        let left = gk21(&mut f, worst.lower, mid)?;
        let right = gk21(&mut f, mid, worst.upper)?;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed accumulated rounding from the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Estimate {
        value,
        error,
        intervals: heap.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ok(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(ok(|x| x.powi(7) - 3.0 * x), -1.0, 2.0, &Default::default()).unwrap();
        assert_relative_eq!(est.value, 255.0 / 8.0 - 4.5, max_relative = 1e-14);
        assert_eq!(est.intervals, 1);
    }

    #[test]
    fn gaussian_integral() {
        let est = integrate(ok(|x: f64| (-0.5 * x * x).exp()), -12.0, 12.0, &Default::default()).unwrap();
        assert_relative_eq!(est.value, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let est = integrate(ok(f64::sqrt), 0.0, 1.0, &QuadratureOptions::absolute(1e-12)).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-11);
        assert!(est.intervals > 1);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate(ok(f64::cos), 0.0, 1.0, &Default::default()).unwrap();
        let rev = integrate(ok(f64::cos), 1.0, 0.0, &Default::default()).unwrap();
        assert_relative_eq!(fwd.value, -rev.value, max_relative = 1e-15);
    }

    #[test]
    fn exhausted_budget_reports_failure() {
        let opts = QuadratureOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let err = integrate(ok(|x: f64| (1.0 / x).sin()), 1e-4, 1.0, &opts).unwrap_err();
        assert!(matches!(err, MacsError::Quadrature(_)));
    }

    #[test]
    fn integrand_errors_propagate() {
        let err = integrate(|_| Err(MacsError::Domain("boom".into())), 0.0, 1.0, &Default::default());
        assert!(matches!(err, Err(MacsError::Domain(_))));
    }
}
