//! Real Gaussian K-user interference channel with base-`Q` alignment.
//!
//! The link gain from transmitter `j` to receiver `k` is
//! `alpha[k][j] * Q^exponent[k][j]`. In [`Mode::Basic`] every desired gain is
//! 1 and every interfering gain is `Q^-1`, so interference arrives shifted by
//! one qit. Transmitters put information only on even digit positions and
//! restrict qits to an alphabet small enough that the interfering qits sum
//! without a carry ([`alphabet_bound`]). Each receiver then reads its desired
//! qits from even positions, while interference fills the odd ones.

mod trials;

pub use trials::{run_trials, run_trials_with, NoiseMode, TrialStats};

use num_bigint::BigInt;
use rand::RngCore;

use crate::qfixed::big_pow;
use crate::{Error, QFixed, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Unit desired gains, `Q^-1` interfering gains.
    Basic,
    /// `alpha * Q^n`: even `n` on desired links, odd `n` on interfering links.
    Generalized,
    /// One user, no interference, information on every digit position. Used
    /// as the interference-free reference.
    SingleUser,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSpec {
    users: usize,
    base: u32,
    mode: Mode,
    alpha: Vec<Vec<u64>>,
    exponent: Vec<Vec<i32>>,
}

fn check_base(base: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!("base must be at least 2, got {base}")));
    }
    Ok(())
}

impl ChannelSpec {
    pub fn basic(users: usize, base: u32) -> Result<Self> {
        check_base(base)?;
        if users < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 users, got {users}")));
        }
        let alpha = vec![vec![1; users]; users];
        let exponent = (0..users)
            .map(|k| (0..users).map(|j| if j == k { 0 } else { -1 }).collect())
            .collect();
        Ok(Self { users, base, mode: Mode::Basic, alpha, exponent })
    }

    pub fn generalized(base: u32, alpha: Vec<Vec<u64>>, exponent: Vec<Vec<i32>>) -> Result<Self> {
        check_base(base)?;
        let users = alpha.len();
        if users < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 users, got {users}")));
        }
        if exponent.len() != users
            || alpha.iter().any(|r| r.len() != users)
            || exponent.iter().any(|r| r.len() != users)
        {
            return Err(Error::InvalidParameter(format!(
                "alpha and exponent must both be {users}x{users} matrices"
            )));
        }
        for k in 0..users {
            for j in 0..users {
                if alpha[k][j] == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha[{k}][{j}] is 0; every link must be connected"
                    )));
                }
                let n = exponent[k][j];
                if j == k && n.rem_euclid(2) != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "desired-link exponent[{k}][{k}] = {n} must be even"
                    )));
                }
                if j != k && n.rem_euclid(2) != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "interfering-link exponent[{k}][{j}] = {n} must be odd"
                    )));
                }
            }
        }
        Ok(Self { users, base, mode: Mode::Generalized, alpha, exponent })
    }

    pub fn single_user(base: u32) -> Result<Self> {
        check_base(base)?;
        Ok(Self { users: 1, base, mode: Mode::SingleUser, alpha: vec![vec![1]], exponent: vec![vec![0]] })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn alpha(&self) -> &[Vec<u64>] {
        &self.alpha
    }

    pub fn exponent(&self) -> &[Vec<i32>] {
        &self.exponent
    }

    /// Spacing between information qits in the transmitted signal.
    pub fn stride(&self) -> u32 {
        match self.mode {
            Mode::SingleUser => 1,
            Mode::Basic | Mode::Generalized => 2,
        }
    }

    /// Digit position at receiver `k` holding its `i`-th information qit.
    pub fn info_position(&self, k: usize, i: usize) -> i64 {
        i64::from(self.exponent[k][k]) + i64::from(self.stride()) * i as i64
    }

    /// Lowest and highest digit positions the noise-free output of receiver
    /// `k` can occupy for `n` qits per user, plus one position above for
    /// noise-induced carries.
    pub fn output_span(&self, k: usize, n: usize) -> (i64, i64) {
        let top = i64::from(self.stride()) * (n.max(1) as i64 - 1);
        let lo = self.exponent[k].iter().copied().min().map_or(0, i64::from);
        let hi = self.exponent[k].iter().copied().max().map_or(0, i64::from) + top + 1;
        (lo, hi)
    }

    /// Gain of the link `j -> k` applied to `x`.
    pub fn apply_gain(&self, k: usize, j: usize, x: &QFixed) -> QFixed {
        let scaled = x.scale_by_power(i64::from(self.exponent[k][j]));
        match self.alpha[k][j] {
            1 => scaled,
            a => scaled.scale_by_int(a),
        }
    }
}

/// Largest qit alphabet size `M` for which interference adds without carries.
pub fn alphabet_bound(spec: &ChannelSpec) -> Result<u64> {
    let q = u64::from(spec.base);
    let m = match spec.mode {
        Mode::Basic => {
            let k = spec.users as u64;
            if q % k != 0 {
                return Err(Error::InvalidParameter(format!(
                    "basic mode requires the number of users ({k}) to divide the base ({q})"
                )));
            }
            q / k
        }
        Mode::Generalized => {
            let worst = (0..spec.users)
                .map(|k| {
                    let cross: u64 = (0..spec.users).filter(|&j| j != k).map(|j| spec.alpha[k][j]).sum();
                    cross.max(spec.alpha[k][k])
                })
                .max()
                .unwrap_or(1);
            (q - 1) / worst + 1
        }
        Mode::SingleUser => q,
    };
    if m < 2 {
        return Err(Error::BaseTooSmall { base: spec.base, alphabet: m });
    }
    Ok(m)
}

/// Bits-of-precision target for injected noise: the smallest `F` with
/// `Q^F >= 2^40`, plus two guard digits.
pub fn working_precision(base: u32) -> u32 {
    let target = BigInt::from(1u64 << 40);
    let mut f = 0;
    while big_pow(base, f) < target {
        f += 1;
    }
    f + 2
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    qits: Vec<u64>,
    alphabet: u64,
}

impl Message {
    pub fn new(qits: Vec<u64>, alphabet: u64) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::InvalidParameter(format!("alphabet must have at least 2 symbols, got {alphabet}")));
        }
        if let Some((i, q)) = qits.iter().enumerate().find(|(_, &q)| q >= alphabet) {
            return Err(Error::InvalidInput(format!("qit {i} is {q}, outside 0..{alphabet}")));
        }
        Ok(Self { qits, alphabet })
    }

    pub fn zeros(n: usize, alphabet: u64) -> Result<Self> {
        Self::new(vec![0; n], alphabet)
    }

    pub fn qits(&self) -> &[u64] {
        &self.qits
    }

    pub fn alphabet(&self) -> u64 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.qits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qits.is_empty()
    }
}

fn encode_strided(msg: &Message, base: u32, stride: u32) -> QFixed {
    let step = big_pow(base, stride);
    let mantissa = msg.qits.iter().rev().fold(BigInt::from(0), |acc, &q| acc * &step + q);
    QFixed::from_int(base, mantissa).expect("channel spec base is at least 2")
}

/// `X = sum_i qits[i] * Q^(2i)`.
pub fn encode_signal(msg: &Message, base: u32) -> Result<QFixed> {
    check_base(base)?;
    Ok(encode_strided(msg, base, 2))
}

/// Encoder matching the layout of `spec` (every position for
/// [`Mode::SingleUser`], even positions otherwise).
pub fn encode_for(spec: &ChannelSpec, msg: &Message) -> QFixed {
    encode_strided(msg, spec.base, spec.stride())
}

fn check_inputs(spec: &ChannelSpec, xs: &[QFixed], what: &str) -> Result<()> {
    if xs.len() != spec.users {
        return Err(Error::InvalidInput(format!("expected {} {what}, got {}", spec.users, xs.len())));
    }
    if let Some(x) = xs.iter().find(|x| x.base() != spec.base) {
        return Err(Error::IncompatibleOperands(spec.base, x.base()));
    }
    Ok(())
}

/// `Ybar[k] = sum_j alpha[k][j] * Q^exponent[k][j] * X[j]`, exactly.
pub fn noise_free_output(spec: &ChannelSpec, xs: &[QFixed], k: usize) -> Result<QFixed> {
    check_inputs(spec, xs, "transmit signals")?;
    if k >= spec.users {
        return Err(Error::InvalidInput(format!("receiver {k} out of range for {} users", spec.users)));
    }
    xs.iter()
        .enumerate()
        .try_fold(QFixed::zero(spec.base)?, |acc, (j, x)| acc.add(&spec.apply_gain(k, j, x)))
}

/// `Y[k] = Ybar[k] + Z[k]` for every receiver.
pub fn channel_output(spec: &ChannelSpec, xs: &[QFixed], noise: &[QFixed]) -> Result<Vec<QFixed>> {
    check_inputs(spec, noise, "noise samples")?;
    (0..spec.users)
        .map(|k| noise_free_output(spec, xs, k)?.add(&noise[k]))
        .collect()
}

/// Uniform on `(0, 1]` from the top 53 bits of one `u64`.
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variate by the Box-Muller cosine branch:
/// `sqrt(-2 ln u1) * cos(2 pi u2)` with `u1, u2` from [`open_unit`].
/// Uses `libm` so the sequence does not depend on the platform math library.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
}

/// Unit-variance Gaussian noise quantized to `frac_digits` base-`Q` digits.
pub fn sample_awgn(rng: &mut impl RngCore, base: u32, frac_digits: u32) -> Result<QFixed> {
    QFixed::quantize_real(standard_normal(rng), base, frac_digits)
}

/// Reads receiver `k`'s `n` information qits from `y`.
///
/// Negative outputs are clamped to zero first. Basic and single-user modes
/// read the digit at each information position directly. Generalized mode
/// reads the digit at `exponent[k][k] + 2i`, divides by `alpha[k][k]` with
/// rounding and clamps into the alphabet.
pub fn decode_receiver(y: &QFixed, spec: &ChannelSpec, k: usize, n: usize) -> Result<Message> {
    if k >= spec.users {
        return Err(Error::InvalidInput(format!("receiver {k} out of range for {} users", spec.users)));
    }
    let alphabet = alphabet_bound(spec)?;
    let y = y.clamp_nonnegative();
    let first = spec.info_position(k, 0);
    let stride = i64::from(spec.stride());
    let digits = y.digits(first, first + stride * (n.max(1) as i64 - 1))?;
    let gain = spec.alpha[k][k];
    let qits = digits
        .iter()
        .step_by(spec.stride() as usize)
        .take(n)
        .map(|&raw| {
            let raw = u64::from(raw);
            let q = if gain == 1 { raw } else { (2 * raw + gain) / (2 * gain) };
            q.min(alphabet - 1)
        })
        .collect();
    Message::new(qits, alphabet)
}
