//! Power, rate and degrees-of-freedom accounting for the base-`Q` scheme.
//!
//! All logarithms are base `Q`: rates are in qits per channel use and the
//! degrees-of-freedom estimate divides the sum rate by `log_Q(P) / 2`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::gauss::{alphabet_bound, run_trials, ChannelSpec, Mode, TrialStats};
use crate::qfixed::big_pow;
use crate::{Error, Result};

/// Default reliability threshold for [`genie_rate`].
pub const DEFAULT_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub n: usize,
    pub q: u32,
    pub m: u64,
    /// `E[X^2]` for i.i.d. uniform qits.
    pub exact_power: BigRational,
    pub logq_power: f64,
}

/// `log2(x)` for a positive big integer: bit length plus the `log2` of the
/// leading 64 bits, so values far beyond `f64` range stay finite.
fn log2_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64().expect("at most 64 bits remain");
    (top as f64).log2() + shift as f64
}

/// `log_Q` of a positive rational.
pub fn log_base(r: &BigRational, q: u32) -> f64 {
    (log2_big(r.numer()) - log2_big(r.denom())) / f64::from(q).log2()
}

/// Average power of `sum_i X_i Q^(stride * i)` with `X_i` i.i.d. uniform on
/// `0..m`, from the first two moments `e1 = (m-1)/2` and
/// `e2 = (m-1)(2m-1)/6`:
///
/// ```text
/// P = e2 * sum_i Q^(2 s i) + e1^2 * sum_{i != j} Q^(s i + s j)
/// ```
pub fn exact_power_strided(n: usize, q: u32, m: u64, stride: u32) -> Result<PowerReport> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one qit".into()));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("alphabet must have at least 2 symbols, got {m}")));
    }
    if q < 2 {
        return Err(Error::InvalidParameter(format!("base must be at least 2, got {q}")));
    }
    let mm = BigInt::from(m);
    let e1 = BigRational::new(&mm - 1, BigInt::from(2));
    let e2 = BigRational::new((&mm - 1) * (&mm * 2 - 1), BigInt::from(6));
    let step = big_pow(q, stride);
    let mut term = BigInt::one();
    let (mut s1, mut s2) = (BigInt::zero(), BigInt::zero());
    for _ in 0..n {
        s1 += &term;
        s2 += &term * &term;
        term *= &step;
    }
    let cross = &s1 * &s1 - &s2;
    let power = e2 * BigRational::from_integer(s2) + &e1 * &e1 * BigRational::from_integer(cross);
    let logq_power = log_base(&power, q);
    Ok(PowerReport { n, q, m, exact_power: power, logq_power })
}

/// Power of the even-position encoder.
pub fn exact_power(n: usize, q: u32, m: u64) -> Result<PowerReport> {
    exact_power_strided(n, q, m, 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub logq_power: f64,
    /// `logq_power - 4n`.
    pub delta: f64,
    /// Increase of `logq_power` per unit of `n` since the previous row.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerScaling {
    pub rows: Vec<ScalingRow>,
}

impl PowerScaling {
    pub fn max_abs_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta.abs()).fold(0.0, f64::max)
    }

    /// `max delta - min delta` over rows with `n >= from`.
    pub fn delta_spread(&self, from: usize) -> f64 {
        let ds = self.rows.iter().filter(|r| r.n >= from).map(|r| r.delta);
        let (lo, hi) = ds.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if lo > hi {
            0.0
        } else {
            hi - lo
        }
    }

    pub fn final_slope(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.slope)
    }
}

/// Tabulates how far `log_Q P(N)` sits from `4N` over `ns` (sorted
/// ascending).
pub fn power_scaling_check(q: u32, m: u64, ns: &[usize]) -> Result<PowerScaling> {
    if ns.is_empty() {
        return Err(Error::InvalidParameter("need at least one block length".into()));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("block lengths must be strictly increasing".into()));
    }
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let p = exact_power(n, q, m)?;
        let slope = rows.last().map(|prev| (p.logq_power - prev.logq_power) / (n - prev.n) as f64);
        rows.push(ScalingRow { n, logq_power: p.logq_power, delta: p.logq_power - 4.0 * n as f64, slope });
    }
    Ok(PowerScaling { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `R[k]` in qits per channel use.
    pub per_user: Vec<f64>,
    pub threshold: f64,
    /// Digit positions counted as reliable at each receiver.
    pub reliable: Vec<Vec<i64>>,
    /// Rate credited to each reliable position.
    pub qit_rate: f64,
}

impl RateReport {
    pub fn sum_rate(&self) -> f64 {
        self.per_user.iter().sum()
    }
}

/// Rate if every information position with empirical error rate at most
/// `threshold` carried `1 - log_Q(K)` qits and every other position carried
/// nothing.
pub fn genie_rate(stats: &TrialStats, q: u32, k: usize, threshold: f64) -> Result<RateReport> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("threshold must lie in [0, 1), got {threshold}")));
    }
    if q < 2 || k < 1 {
        return Err(Error::InvalidParameter(format!("invalid base {q} or user count {k}")));
    }
    let qit_rate = 1.0 - (k as f64).ln() / f64::from(q).ln();
    let reliable: Vec<Vec<i64>> = (0..stats.users())
        .map(|r| {
            (0..stats.qits())
                .filter(|&i| stats.qit_error_rate(r, i) <= threshold)
                .map(|i| stats.info_position(r, i))
                .collect()
        })
        .collect();
    let per_user = reliable.iter().map(|p| p.len() as f64 * qit_rate).collect();
    Ok(RateReport { per_user, threshold, reliable, qit_rate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofEstimate {
    pub dof_hat: f64,
    pub dof_theory: f64,
    pub epsilon_achieved: f64,
}

/// `(K/2)(1 - log_Q K)`.
pub fn dof_theory(k: usize, q: u32) -> f64 {
    k as f64 / 2.0 * (1.0 - (k as f64).ln() / f64::from(q).ln())
}

pub fn dof_estimate(rates: &RateReport, power: &PowerReport, k: usize) -> Result<DofEstimate> {
    if power.logq_power.is_nan() || power.logq_power <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "log_Q P must be positive, got {}",
            power.logq_power
        )));
    }
    let dof_hat = rates.sum_rate() / (0.5 * power.logq_power);
    let half_k = k as f64 / 2.0;
    Ok(DofEstimate { dof_hat, dof_theory: dof_theory(k, power.q), epsilon_achieved: 1.0 - dof_hat / half_k })
}

/// Exact test of `(K/2)(1 - log_Q K) > (K/2)(1 - eps)` for `eps = num/den`,
/// i.e. `K^den < Q^num`.
pub fn beats_epsilon(k: u64, q: &BigUint, eps_num: u32, eps_den: u32) -> bool {
    num_traits::pow(BigUint::from(k), eps_den as usize) < num_traits::pow(q.clone(), eps_num as usize)
}

/// Smallest base `Q` with `(K/2)(1 - log_Q K) > (K/2)(1 - eps)`, for
/// `eps = num/den`: one more than the integer `num`-th root of `K^den`.
pub fn min_base_for_epsilon(k: u64, eps_num: u32, eps_den: u32) -> Result<BigUint> {
    if eps_num == 0 || eps_den == 0 || k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need K >= 2 and a positive epsilon, got K={k}, eps={eps_num}/{eps_den}"
        )));
    }
    let power = num_traits::pow(BigUint::from(k), eps_den as usize);
    Ok(power.nth_root(eps_num) + 1u32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub q: u32,
    pub k: usize,
    pub logq_power: f64,
    pub sum_rate: f64,
    pub dof_hat: f64,
    pub dof_theory: f64,
    pub threshold: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Monte Carlo rates and exact power for each block length in `ns`.
///
/// For [`Mode::SingleUser`] the reference DoF is 1 (one real interference-free
/// link); otherwise it is `(K/2)(1 - log_Q K)`.
pub fn sweep(spec: &ChannelSpec, ns: &[usize], trials: u64, seed: u64, threshold: f64) -> Result<Vec<SweepRow>> {
    let m = alphabet_bound(spec)?;
    let (q, k) = (spec.base(), spec.users());
    ns.iter()
        .map(|&n| {
            let stats = run_trials(spec, n, trials, seed)?;
            let rates = genie_rate(&stats, q, k, threshold)?;
            let power = exact_power_strided(n, q, m, spec.stride())?;
            let est = dof_estimate(&rates, &power, k)?;
            let dof_theory = match spec.mode() {
                Mode::SingleUser => 1.0,
                Mode::Basic | Mode::Generalized => est.dof_theory,
            };
            Ok(SweepRow {
                n,
                q,
                k,
                logq_power: power.logq_power,
                sum_rate: rates.sum_rate(),
                dof_hat: est.dof_hat,
                dof_theory,
                threshold,
                trials,
                seed,
            })
        })
        .collect()
}

/// Wilson score interval for `errors` out of `trials` at normal quantile `z`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
