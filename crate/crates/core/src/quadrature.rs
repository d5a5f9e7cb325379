//! Globally adaptive Gauss-Kronrod (G10/K21) quadrature.
//!
//! Used as the independent numerical route for innovation tail moments.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_034_015_784,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]` until the summed error
/// estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    const MAX_SEGMENTS: usize = 2000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("finite integration limits required".into()));
    }
    let mut segments = vec![kronrod21(&f, a, b)];
    loop {
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= abs_tol {
            let value = segments.iter().map(|s| s.value).sum();
            return Ok(Quadrature { value, abs_error: total_err, subintervals: segments.len() });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::Convergence { what: "adaptive quadrature", achieved: total_err });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(Error::Convergence { what: "adaptive quadrature", achieved: total_err });
        }
        segments.push(kronrod21(&f, seg.a, mid));
        segments.push(kronrod21(&f, mid, seg.b));
    }
}

/// Integrates over `(-inf, b]` by splitting at `b - 40`: the finite piece is
/// integrated directly and the remaining tail through `x = c - (1 - u) / u`.
pub fn integrate_lower_tail<F: Fn(f64) -> f64>(f: F, b: f64, abs_tol: f64) -> Result<Quadrature> {
    let c = b - 40.0;
    let body = integrate(&f, c, b, 0.5 * abs_tol)?;
    let tail = integrate(
        |u: f64| {
            let x = c - (1.0 - u) / u;
            f(x) / (u * u)
        },
        0.0,
        1.0,
        0.5 * abs_tol,
    )?;
    Ok(Quadrature {
        value: body.value + tail.value,
        abs_error: body.abs_error + tail.abs_error,
        subintervals: body.subintervals + tail.subintervals,
    })
}

/// Integrates over the whole real line.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, abs_tol: f64) -> Result<Quadrature> {
    let lower = integrate_lower_tail(&f, 0.0, 0.5 * abs_tol)?;
    let upper = integrate_lower_tail(|x| f(-x), 0.0, 0.5 * abs_tol)?;
    Ok(Quadrature {
        value: lower.value + upper.value,
        abs_error: lower.abs_error + upper.abs_error,
        subintervals: lower.subintervals + upper.subintervals,
    })
}
