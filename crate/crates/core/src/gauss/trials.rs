//! Monte Carlo decoding trials.
//!
//! Trial `t` draws everything from `ChaCha8Rng::seed_from_u64(seed)` switched
//! to stream `t`: first the `n` qits of every user in user order, then one
//! noise sample per receiver in receiver order. Counters are plain integer
//! sums, so the merged statistics do not depend on how trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{alphabet_bound, decode_receiver, encode_for, noise_free_output, sample_awgn, working_precision};
use super::{ChannelSpec, Message};
use crate::{Error, QFixed, Result};

const BATCH: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseMode {
    /// Unit-variance Gaussian noise at every receiver.
    #[default]
    Awgn,
    /// Noise forced to zero.
    Silent,
}

/// Per-receiver error counters.
///
/// `qit_errors[k][i]` counts trials in which receiver `k` decoded its `i`-th
/// information qit wrongly. `digit_errors[k][p - digit_lo]` counts trials in
/// which digit `p` of the (clamped) received signal differed from the same
/// digit of the noise-free signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialStats {
    trials: u64,
    info_positions: Vec<Vec<i64>>,
    digit_lo: i64,
    digit_hi: i64,
    qit_errors: Vec<Vec<u64>>,
    digit_errors: Vec<Vec<u64>>,
}

impl TrialStats {
    fn empty(spec: &ChannelSpec, n: usize) -> Self {
        let users = spec.users();
        let info_positions = (0..users).map(|k| (0..n).map(|i| spec.info_position(k, i)).collect()).collect();
        let (digit_lo, digit_hi) = (0..users)
            .map(|k| spec.output_span(k, n))
            .fold((i64::MAX, i64::MIN), |(lo, hi), (l, h)| (lo.min(l), hi.max(h)));
        let width = (digit_hi - digit_lo + 1) as usize;
        Self {
            trials: 0,
            info_positions,
            digit_lo,
            digit_hi,
            qit_errors: vec![vec![0; n]; users],
            digit_errors: vec![vec![0; width]; users],
        }
    }

    /// Statistics assembled from raw qit error counts, with no digit-level
    /// tracking. `info_positions[k][i]` is the digit position of qit `i` at
    /// receiver `k`.
    pub fn from_qit_counts(trials: u64, info_positions: Vec<Vec<i64>>, qit_errors: Vec<Vec<u64>>) -> Result<Self> {
        if info_positions.len() != qit_errors.len()
            || info_positions.iter().zip(&qit_errors).any(|(p, e)| p.len() != e.len())
        {
            return Err(Error::InvalidInput("position and error tables differ in shape".into()));
        }
        if qit_errors.iter().flatten().any(|&e| e > trials) {
            return Err(Error::InvalidInput("error count exceeds trial count".into()));
        }
        let users = qit_errors.len();
        Ok(Self {
            trials,
            info_positions,
            digit_lo: 0,
            digit_hi: -1,
            qit_errors,
            digit_errors: vec![Vec::new(); users],
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn users(&self) -> usize {
        self.qit_errors.len()
    }

    pub fn qits(&self) -> usize {
        self.qit_errors.first().map_or(0, Vec::len)
    }

    pub fn info_position(&self, k: usize, i: usize) -> i64 {
        self.info_positions[k][i]
    }

    pub fn qit_errors(&self, k: usize, i: usize) -> u64 {
        self.qit_errors[k][i]
    }

    pub fn qit_error_rate(&self, k: usize, i: usize) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.qit_errors[k][i] as f64 / self.trials as f64
    }

    /// `(observations, errors)` for qit `i` pooled over all receivers.
    pub fn pooled_qit(&self, i: usize) -> (u64, u64) {
        let errors = self.qit_errors.iter().map(|row| row[i]).sum();
        (self.trials * self.users() as u64, errors)
    }

    /// Tracked digit positions, inclusive.
    pub fn digit_range(&self) -> (i64, i64) {
        (self.digit_lo, self.digit_hi)
    }

    pub fn digit_errors(&self, k: usize, position: i64) -> u64 {
        if position < self.digit_lo || position > self.digit_hi {
            return 0;
        }
        self.digit_errors[k][(position - self.digit_lo) as usize]
    }

    /// Adds another set of counters over the same layout.
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.info_positions, other.info_positions);
        self.trials += other.trials;
        for (a, b) in self.qit_errors.iter_mut().zip(&other.qit_errors) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.digit_errors.iter_mut().zip(&other.digit_errors) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

struct Setup<'a> {
    spec: &'a ChannelSpec,
    n: usize,
    alphabet: u64,
    precision: u32,
    seed: u64,
    noise: NoiseMode,
}

impl Setup<'_> {
    fn run_one(&self, trial: u64, stats: &mut TrialStats) -> Result<()> {
        let spec = self.spec;
        let base = spec.base();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let msgs = (0..spec.users())
            .map(|_| Message::new((0..self.n).map(|_| rng.random_range(0..self.alphabet)).collect(), self.alphabet))
            .collect::<Result<Vec<_>>>()?;
        let xs: Vec<QFixed> = msgs.iter().map(|m| encode_for(spec, m)).collect();
        let (lo, hi) = stats.digit_range();
        for (k, msg) in msgs.iter().enumerate() {
            let clean = noise_free_output(spec, &xs, k)?;
            let y = match self.noise {
                NoiseMode::Awgn => clean.add(&sample_awgn(&mut rng, base, self.precision)?)?,
                NoiseMode::Silent => clean.clone(),
            };
            let decoded = decode_receiver(&y, spec, k, self.n)?;
            for (i, (a, b)) in decoded.qits().iter().zip(msg.qits()).enumerate() {
                if a != b {
                    stats.qit_errors[k][i] += 1;
                }
            }
            let want = clean.digits(lo, hi)?;
            let got = y.clamp_nonnegative().digits(lo, hi)?;
            for (slot, (a, b)) in got.iter().zip(&want).enumerate() {
                if a != b {
                    stats.digit_errors[k][slot] += 1;
                }
            }
        }
        stats.trials += 1;
        Ok(())
    }

    fn run_batch(&self, batch: u64, trials: u64) -> Result<TrialStats> {
        let mut stats = TrialStats::empty(self.spec, self.n);
        let end = ((batch + 1) * BATCH).min(trials);
        for t in batch * BATCH..end {
            self.run_one(t, &mut stats)?;
        }
        Ok(stats)
    }
}

/// [`run_trials_with`] under unit AWGN.
pub fn run_trials(spec: &ChannelSpec, n: usize, trials: u64, seed: u64) -> Result<TrialStats> {
    run_trials_with(spec, n, trials, seed, NoiseMode::Awgn)
}

/// Runs `trials` independent channel uses with `n` uniform qits per user
/// and counts decoding errors per receiver and qit.
pub fn run_trials_with(spec: &ChannelSpec, n: usize, trials: u64, seed: u64, noise: NoiseMode) -> Result<TrialStats> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one qit per user".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let setup = Setup {
        spec,
        n,
        alphabet: alphabet_bound(spec)?,
        precision: working_precision(spec.base()),
        seed,
        noise,
    };
    let batches = trials.div_ceil(BATCH);
    let merge = |a: Result<TrialStats>, b: Result<TrialStats>| {
        let mut a = a?;
        a.merge(&b?);
        Ok(a)
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..batches)
            .into_par_iter()
            .map(|b| setup.run_batch(b, trials))
            .reduce(|| Ok(TrialStats::empty(spec, n)), merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..batches)
            .map(|b| setup.run_batch(b, trials))
            .fold(Ok(TrialStats::empty(spec, n)), merge)
    }
}
