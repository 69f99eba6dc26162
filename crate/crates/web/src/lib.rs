//! Browser bindings for the qalign demo page.
//!
//! Each operation has a plain Rust form returning a JSON string, so it can be
//! tested natively, and a `#[wasm_bindgen]` wrapper for the page.

use qalign_core::analysis::{dof_theory, exact_power_strided};
use qalign_core::det::{det_decode, det_encode, det_output, DetSpec};
use qalign_core::gauss::{
    alphabet_bound, channel_output, decode_receiver, encode_for, noise_free_output, sample_awgn, working_precision,
    ChannelSpec, Message,
};
use qalign_core::QFixed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Digits shown below the lowest noise-free position.
const NOISE_DIGITS: i64 = 3;

#[derive(Serialize)]
struct DetTrace {
    shifts: Vec<Vec<u32>>,
    aligned: bool,
    /// Bit strings, most significant level first.
    inputs: Vec<String>,
    outputs: Vec<String>,
    sent: Vec<Vec<u8>>,
    decoded: Vec<Vec<u8>>,
    bit_errors: usize,
}

/// One channel use of the deterministic model with `users` users and
/// `half` information bits each. With `aligned` false, one desired shift is
/// made odd so the interference lands on the information levels.
pub fn det_trace_json(users: usize, half: usize, seed: u64, aligned: bool) -> Result<String, String> {
    if half == 0 {
        return Err("need at least one information bit".into());
    }
    let width = 2 * half;
    let mut shifts = DetSpec::unit_offset(users, width).map_err(|e| e.to_string())?.shifts().to_vec();
    if !aligned {
        shifts[0][0] = 1;
    }
    let spec = DetSpec::new(width, shifts).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sent: Vec<Vec<u8>> = (0..users).map(|_| (0..half).map(|_| rng.random_range(0..2u8)).collect()).collect();
    let xs = sent.iter().map(|b| det_encode(b)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let ys = det_output(&spec, &xs).map_err(|e| e.to_string())?;
    let decoded: Vec<Vec<u8>> = ys.iter().map(det_decode).collect();
    let bit_errors = decoded.iter().zip(&sent).flat_map(|(d, s)| d.iter().zip(s)).filter(|(a, b)| a != b).count();
    let trace = DetTrace {
        shifts: spec.shifts().to_vec(),
        aligned: spec.is_aligned(),
        inputs: xs.iter().map(|x| x.to_msb_string()).collect(),
        outputs: ys.iter().map(|y| y.to_msb_string()).collect(),
        sent,
        decoded,
        bit_errors,
    };
    serde_json::to_string(&trace).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DigitRow {
    position: i64,
    /// "desired", "interference" or "below".
    role: &'static str,
    x: u32,
    ybar: u32,
    y: u32,
}

#[derive(Serialize)]
struct GaussView {
    base: u32,
    alphabet: u64,
    /// Highest position first.
    digits: Vec<DigitRow>,
    sent: Vec<u64>,
    decoded: Vec<u64>,
    interference_sums: Vec<u64>,
    y_negative: bool,
}

fn digits_of(v: &QFixed, lo: i64, hi: i64) -> Result<Vec<u32>, String> {
    v.clamp_nonnegative().digits(lo, hi).map_err(|e| e.to_string())
}

/// Digit-level view of receiver 1 for one use of the basic Gaussian scheme.
pub fn gauss_view_json(users: usize, base: u32, blocks: usize, seed: u64, noisy: bool) -> Result<String, String> {
    if blocks == 0 {
        return Err("need at least one qit per user".into());
    }
    let spec = ChannelSpec::basic(users, base).map_err(|e| e.to_string())?;
    let m = alphabet_bound(&spec).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let msgs = (0..users)
        .map(|_| Message::new((0..blocks).map(|_| rng.random_range(0..m)).collect(), m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let xs: Vec<QFixed> = msgs.iter().map(|x| encode_for(&spec, x)).collect();
    let f = working_precision(base);
    let noise = (0..users)
        .map(|_| if noisy { sample_awgn(&mut rng, base, f) } else { QFixed::zero(base) })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let ybar = noise_free_output(&spec, &xs, 0).map_err(|e| e.to_string())?;
    let y = channel_output(&spec, &xs, &noise).map_err(|e| e.to_string())?.swap_remove(0);
    let decoded = decode_receiver(&y, &spec, 0, blocks).map_err(|e| e.to_string())?;

    let (lo, hi) = spec.output_span(0, blocks);
    let lo = lo - NOISE_DIGITS;
    let (dx, dbar, dy) = (digits_of(&xs[0], lo, hi)?, digits_of(&ybar, lo, hi)?, digits_of(&y, lo, hi)?);
    let digits = (lo..=hi)
        .rev()
        .map(|p| {
            let at = (p - lo) as usize;
            let role = if p >= 0 && p % 2 == 0 {
                "desired"
            } else if p >= -1 {
                "interference"
            } else {
                "below"
            };
            DigitRow { position: p, role, x: dx[at], ybar: dbar[at], y: dy[at] }
        })
        .collect();
    let view = GaussView {
        base,
        alphabet: m,
        digits,
        sent: msgs[0].qits().to_vec(),
        decoded: decoded.qits().to_vec(),
        interference_sums: (0..blocks).map(|i| msgs[1..].iter().map(|x| x.qits()[i]).sum()).collect(),
        y_negative: y.is_negative(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CurvePoint {
    n: usize,
    logq_power: f64,
    /// Sum rate over all users if every qit is received, in base-`Q` digits.
    sum_rate: f64,
    /// Sum rate over half the log-power, the DoF this power buys.
    dof: f64,
}

#[derive(Serialize)]
struct Curves {
    alphabet: u64,
    dof_theory: f64,
    points: Vec<CurvePoint>,
}

/// Exact transmit power and the noise-free DoF it supports for `n = 1..=max_blocks`.
pub fn power_curve_json(users: usize, base: u32, max_blocks: usize) -> Result<String, String> {
    let spec = ChannelSpec::basic(users, base).map_err(|e| e.to_string())?;
    let m = alphabet_bound(&spec).map_err(|e| e.to_string())?;
    let per_qit = (m as f64).ln() / f64::from(base).ln();
    let points = (1..=max_blocks)
        .map(|n| {
            let p = exact_power_strided(n, base, m, 2).map_err(|e| e.to_string())?;
            let sum_rate = (users * n) as f64 * per_qit;
            Ok(CurvePoint { n, logq_power: p.logq_power, sum_rate, dof: sum_rate / (0.5 * p.logq_power) })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&Curves { alphabet: m, dof_theory: dof_theory(users, base), points }).map_err(|e| e.to_string())
}

// Seeds are `u32` on the JS side so they stay plain numbers.
#[wasm_bindgen]
pub fn det_trace(users: usize, half: usize, seed: u32, aligned: bool) -> Result<String, JsValue> {
    det_trace_json(users, half, seed.into(), aligned).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gauss_view(users: usize, base: u32, blocks: usize, seed: u32, noisy: bool) -> Result<String, JsValue> {
    gauss_view_json(users, base, blocks, seed.into(), noisy).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn power_curve(users: usize, base: u32, max_blocks: usize) -> Result<String, JsValue> {
    power_curve_json(users, base, max_blocks).map_err(|e| JsValue::from_str(&e))
}
