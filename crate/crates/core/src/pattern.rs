//! Control patterns over the alphabet `{0, 1, e}`.
//!
//! A pattern of length `k` selects the computational-basis prefixes of `k`
//! qubits on which a controlled rotation fires. Position 0 is the leftmost
//! trit and refers to the first (most significant) qubit. `e` marks a qubit
//! that carries no control.
//!
//! Patterns are stored as a `(mask, value)` pair of machine words so that
//! matching, flipping and stripping are single bit operations. The bit for
//! position `t` is `1 << (len - 1 - t)`, which makes a concrete pattern's
//! `value` equal to the integer of its bit string.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::PatternError;

/// Longest supported pattern.
pub const MAX_PATTERN_LEN: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trit {
    Zero,
    One,
    Empty,
}

impl Trit {
    pub fn as_char(self) -> char {
        match self {
            Trit::Zero => '0',
            Trit::One => '1',
            Trit::Empty => 'e',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControlPattern {
    len: u8,
    mask: u64,
    value: u64,
}

impl ControlPattern {
    /// Fully controlled pattern for the `len`-bit prefix `bits`.
    pub fn concrete(bits: u64, len: usize) -> Self {
        assert!(len <= MAX_PATTERN_LEN, "pattern length {len} exceeds {MAX_PATTERN_LEN}");
        let mask = low_mask(len);
        debug_assert!(bits <= mask, "{bits} does not fit in {len} bits");
        ControlPattern {
            len: len as u8,
            mask,
            value: bits & mask,
        }
    }

    /// Pattern with no controls at all (`ee...e`).
    pub fn uncontrolled(len: usize) -> Self {
        assert!(len <= MAX_PATTERN_LEN, "pattern length {len} exceeds {MAX_PATTERN_LEN}");
        ControlPattern {
            len: len as u8,
            mask: 0,
            value: 0,
        }
    }

    /// Builds a pattern from raw words; value bits outside `mask` are cleared.
    pub fn from_parts(len: usize, mask: u64, value: u64) -> Result<Self, PatternError> {
        if len > MAX_PATTERN_LEN {
            return Err(PatternError::TooLong {
                len,
                max: MAX_PATTERN_LEN,
            });
        }
        let mask = mask & low_mask(len);
        Ok(ControlPattern {
            len: len as u8,
            mask,
            value: value & mask,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Number of controls, `N_ctrl`.
    pub fn control_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Number of `e` trits.
    pub fn empty_count(&self) -> usize {
        self.len() - self.control_count()
    }

    /// True when every position carries a control.
    pub fn is_concrete(&self) -> bool {
        self.mask == low_mask(self.len())
    }

    #[inline]
    fn bit(&self, position: usize) -> u64 {
        1u64 << (self.len() - 1 - position)
    }

    pub fn trit(&self, position: usize) -> Trit {
        assert!(position < self.len(), "position {position} out of range");
        let bit = self.bit(position);
        if self.mask & bit == 0 {
            Trit::Empty
        } else if self.value & bit == 0 {
            Trit::Zero
        } else {
            Trit::One
        }
    }

    pub fn trits(&self) -> impl Iterator<Item = Trit> + '_ {
        (0..self.len()).map(move |t| self.trit(t))
    }

    /// Controlled positions, left to right.
    pub fn controlled_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&t| self.mask & self.bit(t) != 0)
    }

    /// Membership test `bits ∈ B(self)` for a `len`-bit prefix given as an integer.
    #[inline]
    pub fn covers(&self, bits: u64) -> bool {
        bits & self.mask == self.value
    }

    /// Checked variant of [`covers`](Self::covers) for a bit string of explicit length.
    pub fn matches(&self, bits: u64, bits_len: usize) -> Result<bool, PatternError> {
        if bits_len != self.len() {
            return Err(PatternError::LengthMismatch {
                pattern: self.len(),
                bits: bits_len,
            });
        }
        Ok(self.covers(bits))
    }

    /// `|B(self)| = 2^m` where `m` is the number of `e` trits.
    pub fn region_size(&self) -> u128 {
        1u128 << self.empty_count()
    }

    /// Whether `B(self) ∩ B(other) ≠ ∅`.
    #[inline]
    pub fn overlaps(&self, other: &ControlPattern) -> bool {
        self.len == other.len && (self.mask & other.mask & (self.value ^ other.value)) == 0
    }

    /// Whether `B(other) ⊆ B(self)`.
    pub fn contains(&self, other: &ControlPattern) -> bool {
        self.len == other.len && (self.mask & other.mask) == self.mask && (other.value & self.mask) == self.value
    }

    fn check_controlled(&self, position: usize) -> Result<u64, PatternError> {
        if position >= self.len() {
            return Err(PatternError::PositionOutOfRange {
                position,
                len: self.len(),
            });
        }
        let bit = self.bit(position);
        if self.mask & bit == 0 {
            return Err(PatternError::NotControlled { position });
        }
        Ok(bit)
    }

    /// Replaces the control at `position` with `e`.
    pub fn strip(&self, position: usize) -> Result<Self, PatternError> {
        let bit = self.check_controlled(position)?;
        Ok(ControlPattern {
            len: self.len,
            mask: self.mask & !bit,
            value: self.value & !bit,
        })
    }

    /// Inverts the control at `position`, giving the sibling pattern.
    pub fn flip(&self, position: usize) -> Result<Self, PatternError> {
        let bit = self.check_controlled(position)?;
        Ok(ControlPattern {
            len: self.len,
            mask: self.mask,
            value: self.value ^ bit,
        })
    }

    /// Enumerates `B(self)` in increasing order. Only sensible for small regions.
    pub fn region(&self) -> impl Iterator<Item = u64> + '_ {
        let free = !self.mask & low_mask(self.len());
        let count = 1u64 << free.count_ones();
        (0..count).map(move |i| self.value | deposit(i, free))
    }
}

/// Spreads the low bits of `x` over the set bits of `mask` (software `pdep`).
fn deposit(mut x: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if x & 1 == 1 {
            out |= low;
        }
        x >>= 1;
        mask &= mask - 1;
    }
    out
}

#[inline]
pub(crate) fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Lexicographic order on the trit strings with `0 < 1 < e`; shorter patterns first on ties.
impl Ord for ControlPattern {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.trits().zip(other.trits()) {
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for ControlPattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ControlPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for trit in self.trits() {
            write!(f, "{}", trit.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for ControlPattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let len = s.chars().count();
        if len > MAX_PATTERN_LEN {
            return Err(PatternError::TooLong {
                len,
                max: MAX_PATTERN_LEN,
            });
        }
        let (mut mask, mut value) = (0u64, 0u64);
        for c in s.chars() {
            mask <<= 1;
            value <<= 1;
            match c {
                '0' => mask |= 1,
                '1' => {
                    mask |= 1;
                    value |= 1;
                }
                'e' => {}
                other => return Err(PatternError::InvalidTrit(other)),
            }
        }
        Ok(ControlPattern {
            len: len as u8,
            mask,
            value,
        })
    }
}

impl Serialize for ControlPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControlPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Formats the `len`-bit integer `bits` as a bit string.
pub fn bit_string(bits: u64, len: usize) -> String {
    (0..len)
        .map(|t| if bits >> (len - 1 - t) & 1 == 1 { '1' } else { '0' })
        .collect()
}
