use ndarray::Array2;

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
// 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

/// `e^x` for `x <= 0`, written branch-free so loops over slices vectorize.
/// Arguments below -708 are clamped there (result ~3e-308).
#[inline(always)]
fn exp_nonpositive(x: f64) -> f64 {
    let x = x.max(-708.0);
    let k = x * LOG2E + ROUND_MAGIC;
    let n = k - ROUND_MAGIC;
    let r = x - n * LN2_HI - n * LN2_LO;
    // Taylor series to r^13; |r| <= ln2 / 2 keeps the remainder below 1e-17
    let mut p = 1.0 / 6_227_020_800.0;
    for c in [
        1.0 / 479_001_600.0,
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ] {
        p = p * r + c;
    }
    // low bits of k hold n; n + 1023 is the biased exponent of 2^n
    let scale = f64::from_bits(k.to_bits().wrapping_add(1023) << 52);
    p * scale
}

/// Logistic sigmoid, evaluated so that nothing overflows.
#[inline(always)]
pub fn sigmoid(z: f64) -> f64 {
    let e = exp_nonpositive(-z.abs());
    let r = 1.0 / (1.0 + e);
    if z >= 0.0 {
        r
    } else {
        e * r
    }
}

/// Hyperbolic tangent `(e^z - e^-z) / (e^z + e^-z)`.
#[inline(always)]
pub fn tanh_act(z: f64) -> f64 {
    let a = z.abs();
    let e = exp_nonpositive(-2.0 * a);
    let far = (1.0 - e) / (1.0 + e);
    // odd series near 0, where 1 - e cancels
    let a2 = a * a;
    let near = a
        * (1.0
            + a2 * (-1.0 / 3.0
                + a2 * (2.0 / 15.0 + a2 * (-17.0 / 315.0 + a2 * (62.0 / 2835.0 + a2 * (-1382.0 / 155_925.0))))));
    let t = if a < 0.04 { near } else { far };
    t.copysign(z)
}

fn map_inplace(a: &mut Array2<f64>, f: impl Fn(f64) -> f64) {
    match a.as_slice_mut() {
        Some(s) => s.iter_mut().for_each(|v| *v = f(*v)),
        None => a.mapv_inplace(f),
    }
}

pub fn sigmoid_inplace(a: &mut Array2<f64>) {
    map_inplace(a, sigmoid);
}

pub fn tanh_inplace(a: &mut Array2<f64>) {
    map_inplace(a, tanh_act);
}
