//! Deterministic shift-XOR interference channel.
//!
//! Each transmitter sends a vector of `width` bits (index 0 is the least
//! significant). The link from transmitter `j` to receiver `k` shifts that
//! vector down by `shifts[k][j]` positions. Receiver `k` observes `width`
//! levels registered to its own desired link, so what it sees is the XOR of
//! all inputs shifted relative to the desired one:
//!
//! ```text
//! Y[k]_i = XOR_j X[j]_{i + s[k][j] - s[k][k]}      (out-of-range bits read as 0)
//! ```
//!
//! With `s[k][k] = 0` this is the plain shift model. Bits pushed above the top
//! level or below level 0 are lost.
//!
//! The alignment scheme zeroes every odd bit position. When every desired
//! shift is even and every interfering shift is odd, interference only
//! reaches odd positions and the even positions stay clean.
//!
//! [`delay_sim`] is the time-domain counterpart: delays play the role of
//! shifts and transmitters stay silent on odd slots.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetSpec {
    users: usize,
    width: usize,
    shifts: Vec<Vec<u32>>,
}

impl DetSpec {
    pub fn new(width: usize, shifts: Vec<Vec<u32>>) -> Result<Self> {
        let users = shifts.len();
        if users < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 users, got {users}")));
        }
        if width < 2 {
            return Err(Error::InvalidParameter(format!("symbol width must be at least 2, got {width}")));
        }
        if let Some(row) = shifts.iter().position(|r| r.len() != users) {
            return Err(Error::InvalidParameter(format!(
                "shift matrix must be {users}x{users}; row {row} has {} entries",
                shifts[row].len()
            )));
        }
        Ok(Self { users, width, shifts })
    }

    /// Zero shift on desired links, one-bit shift on every interfering link.
    pub fn unit_offset(users: usize, width: usize) -> Result<Self> {
        let shifts = (0..users)
            .map(|k| (0..users).map(|j| u32::from(j != k)).collect())
            .collect();
        Self::new(width, shifts)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shifts(&self) -> &[Vec<u32>] {
        &self.shifts
    }

    /// Even shifts on the diagonal and odd shifts everywhere else.
    pub fn is_aligned(&self) -> bool {
        self.shifts.iter().enumerate().all(|(k, row)| {
            row.iter().enumerate().all(|(j, &s)| if j == k { s % 2 == 0 } else { s % 2 == 1 })
        })
    }

    /// Information bits per symbol under the odd-zeroing scheme.
    pub fn info_bits(&self) -> usize {
        self.width / 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetSymbol {
    bits: Vec<u8>,
}

impl DetSymbol {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!("bit values must be 0 or 1, got {b}")));
        }
        Ok(Self { bits })
    }

    pub fn zeros(width: usize) -> Self {
        Self { bits: vec![0; width] }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Bit `i`, or 0 outside the symbol.
    pub fn bit(&self, i: usize) -> u8 {
        self.bits.get(i).copied().unwrap_or(0)
    }

    /// Most significant bit first, as drawn in bit-level diagrams.
    pub fn to_msb_string(&self) -> String {
        self.bits.iter().rev().map(|b| if *b == 1 { '1' } else { '0' }).collect()
    }
}

/// Places `info` on the even positions `0, 2, ..., 2(len-1)` of a symbol of
/// width `2 * info.len()`; odd positions are zero.
pub fn det_encode(info: &[u8]) -> Result<DetSymbol> {
    if info.is_empty() {
        return Err(Error::InvalidInput("need at least one information bit".into()));
    }
    let mut bits = vec![0u8; 2 * info.len()];
    for (i, &b) in info.iter().enumerate() {
        if b > 1 {
            return Err(Error::InvalidInput(format!("information bit {i} is {b}, expected 0 or 1")));
        }
        bits[2 * i] = b;
    }
    Ok(DetSymbol { bits })
}

/// Like [`det_encode`], checking the info length against a spec.
pub fn det_encode_for(spec: &DetSpec, info: &[u8]) -> Result<DetSymbol> {
    if !spec.width.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "odd-zeroing needs an even symbol width, got {}",
            spec.width
        )));
    }
    if info.len() != spec.info_bits() {
        return Err(Error::InvalidInput(format!(
            "expected {} information bits, got {}",
            spec.info_bits(),
            info.len()
        )));
    }
    det_encode(info)
}

pub fn det_output(spec: &DetSpec, inputs: &[DetSymbol]) -> Result<Vec<DetSymbol>> {
    if inputs.len() != spec.users {
        return Err(Error::InvalidInput(format!(
            "expected {} input symbols, got {}",
            spec.users,
            inputs.len()
        )));
    }
    if let Some(x) = inputs.iter().find(|x| x.width() != spec.width) {
        return Err(Error::InvalidInput(format!(
            "symbol width {} does not match channel width {}",
            x.width(),
            spec.width
        )));
    }
    let width = spec.width as i64;
    Ok(spec
        .shifts
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let own = i64::from(row[k]);
            let bits = (0..width)
                .map(|i| {
                    row.iter().zip(inputs).fold(0u8, |acc, (&s, x)| {
                        let src = i + i64::from(s) - own;
                        if (0..width).contains(&src) {
                            acc ^ x.bits[src as usize]
                        } else {
                            acc
                        }
                    })
                })
                .collect();
            DetSymbol { bits }
        })
        .collect())
}

/// Reads back the even positions.
pub fn det_decode(y: &DetSymbol) -> Vec<u8> {
    y.bits.iter().step_by(2).take(y.width() / 2).copied().collect()
}

/// One payload arriving at a receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrival<P> {
    pub from: usize,
    pub emitted_at: u64,
    pub payload: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayReport<P> {
    /// First observed slot; slots `start..start + horizon` are reported.
    pub start: u64,
    /// `arrivals[k][t]` lists what receiver `k` hears in slot `start + t`.
    pub arrivals: Vec<Vec<Vec<Arrival<P>>>>,
    /// Per receiver: fraction of observed slots in which the desired payload
    /// is the only arrival.
    pub alone_fraction: Vec<f64>,
}

impl<P> DelayReport<P> {
    pub fn alone_slots(&self, k: usize) -> Vec<u64> {
        self.arrivals[k]
            .iter()
            .enumerate()
            .filter(|(_, a)| a.len() == 1 && a[0].from == k)
            .map(|(t, _)| self.start + t as u64)
            .collect()
    }
}

/// Slotted propagation-delay channel.
///
/// Transmitter `j` emits `payloads[j][n]` in slot `2n` and falls silent once
/// its stream is exhausted. Receiver `k` hears that emission in slot
/// `2n + delays[k][j]`. Observation starts at the largest even slot not
/// exceeding the longest delay, so every link is already delivering and the
/// report reflects steady-state behaviour.
pub fn delay_sim<P: Clone>(
    delays: &[Vec<u64>],
    horizon: u64,
    payloads: &[Vec<P>],
) -> Result<DelayReport<P>> {
    let users = delays.len();
    if users == 0 {
        return Err(Error::InvalidParameter("need at least one user".into()));
    }
    if let Some(row) = delays.iter().position(|r| r.len() != users) {
        return Err(Error::InvalidParameter(format!(
            "delay matrix must be {users}x{users}; row {row} has {} entries",
            delays[row].len()
        )));
    }
    if payloads.len() != users {
        return Err(Error::InvalidInput(format!(
            "expected {users} payload streams, got {}",
            payloads.len()
        )));
    }
    let max_delay = delays.iter().flatten().copied().max().unwrap_or(0);
    let start = max_delay - max_delay % 2;
    let mut arrivals = Vec::with_capacity(users);
    let mut alone_fraction = Vec::with_capacity(users);
    for (k, row) in delays.iter().enumerate() {
        let mut per_slot = Vec::with_capacity(horizon as usize);
        let mut alone = 0u64;
        for t in start..start + horizon {
            let heard: Vec<Arrival<P>> = row
                .iter()
                .enumerate()
                .filter_map(|(j, &d)| {
                    let emitted = t.checked_sub(d)?;
                    if emitted % 2 != 0 {
                        return None;
                    }
                    let payload = payloads[j].get((emitted / 2) as usize)?.clone();
                    Some(Arrival { from: j, emitted_at: emitted, payload })
                })
                .collect();
            if heard.len() == 1 && heard[0].from == k {
                alone += 1;
            }
            per_slot.push(heard);
        }
        arrivals.push(per_slot);
        alone_fraction.push(if horizon == 0 { 0.0 } else { alone as f64 / horizon as f64 });
    }
    Ok(DelayReport { start, arrivals, alone_fraction })
}
