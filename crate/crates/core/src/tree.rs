//! A computable perfect tree of balanced strings.
//!
//! Level `n` of a path occupies `[l_n, l_{n+1})` with `l_0 = 0` and
//! `l_{n+1} = l_n + 2^{2^{n+4}}`, and is filled with copies of one string
//! `μ_j = 0^{2^j} 1^{2^j}`. The index `j` depends on the first `n + 1`
//! directions, so siblings use different strings. All arithmetic is exact,
//! so bits deep in the tree can be queried without materializing anything.

use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::seq::{self, bit_string, BigIndex, Bit, BitSequence, Descriptor, Evaluator};

pub const DEFAULT_DEPTH_CAP: usize = 8;

/// `μ_i = 0^{2^i} 1^{2^i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MuString {
    pub index: u64,
}

impl MuString {
    pub fn new(index: u64) -> Self {
        MuString { index }
    }

    pub fn half(&self) -> BigIndex {
        seq::pow2(self.index)
    }

    pub fn period(&self) -> BigIndex {
        seq::pow2(self.index + 1)
    }

    /// Bit at `offset` in the infinite power `μ_i μ_i μ_i ...`: bit `i` of `offset`.
    pub fn bit(&self, offset: &BigIndex) -> Bit {
        offset.bit(self.index)
    }

    pub fn bit_u64(&self, offset: u64) -> Bit {
        self.index < 64 && offset >> self.index & 1 == 1
    }

    /// Ones among the first `len` bits of the power.
    pub fn ones_below(&self, len: &BigIndex) -> BigIndex {
        let full = len >> (self.index + 1);
        let rem = len - (&full << (self.index + 1));
        let half = self.half();
        let partial = if rem > half {
            rem - &half
        } else {
            BigIndex::zero()
        };
        (full << self.index) + partial
    }

    /// Positions below `len` where the powers of `self` and `other` agree.
    pub fn agreements_below(&self, other: &MuString, len: &BigIndex) -> BigIndex {
        if self.index == other.index {
            return len.clone();
        }
        let (lo, hi) = if self.index < other.index {
            (*self, *other)
        } else {
            (*other, *self)
        };
        // Within one period of μ_hi each of the four bit pairs occurs equally often.
        let period = hi.period();
        let (periods, rem) = len.div_rem(&period);
        let mut agree = periods * hi.half();
        let half = hi.half();
        if rem <= half {
            // bit_hi = 0: agreement where bit_lo = 0
            agree += &rem - lo.ones_below(&rem);
        } else {
            // first half: bit_lo = 0 on half of it; second half: bit_hi = 1
            agree += &half >> 1u32;
            let tail = &rem - &half;
            agree += lo.ones_below(&tail);
        }
        agree
    }
}

/// `l_n` and the stride of good lengths on each level.
#[derive(Clone, Debug, Default)]
pub struct LengthSchedule;

impl LengthSchedule {
    /// `|[l_n, l_{n+1})| = 2^{2^{n+4}}`.
    pub fn width(&self, n: usize) -> BigIndex {
        seq::pow2(1u64 << (n + 4))
    }

    pub fn start(&self, n: usize) -> BigIndex {
        (0..n).map(|i| self.width(i)).sum()
    }

    /// `b'_n = 2^{2^{n+1}+1}`, the length of the longest μ-string on level `n`.
    pub fn stride(&self, n: usize) -> BigIndex {
        seq::pow2((1u64 << (n + 1)) + 1)
    }

    /// `2^{2^n+1}`, a shorter stride that is not a multiple of every μ-length
    /// on level `n ≥ 1`. Kept for comparison.
    pub fn short_stride(&self, n: usize) -> BigIndex {
        seq::pow2((1u64 << n) + 1)
    }
}

/// The μ-index on level `n` for a path whose first `n + 1` directions are
/// `prefix`: `2k + i − 1` with `k` the 1-based lexicographic rank of the first
/// `n` directions among strings of that length and `i` the next direction.
pub fn level_index(prefix: &[Bit]) -> u64 {
    let (&last, head) = prefix.split_last().expect("level index needs a direction");
    let value = head.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
    2 * (value + 1) + u64::from(last) - 1
}

/// The string `T(σ)`, represented by its per-level μ-indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeCode {
    pub directions: Vec<Bit>,
    pub indices: Vec<u64>,
}

impl TreeCode {
    pub fn new(directions: &[Bit]) -> Result<Self> {
        Self::with_cap(directions, DEFAULT_DEPTH_CAP)
    }

    pub fn with_cap(directions: &[Bit], cap: usize) -> Result<Self> {
        if directions.len() > cap {
            return Err(Error::DepthCap {
                depth: directions.len(),
                cap,
            });
        }
        let indices = (1..=directions.len())
            .map(|n| level_index(&directions[..n]))
            .collect();
        Ok(TreeCode {
            directions: directions.to_vec(),
            indices,
        })
    }

    pub fn depth(&self) -> usize {
        self.indices.len()
    }

    /// `|T(σ)| = l_{|σ|}`.
    pub fn len(&self) -> BigIndex {
        LengthSchedule.start(self.depth())
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn locate(&self, m: &BigIndex) -> Result<(usize, BigIndex)> {
        let mut start = BigIndex::zero();
        for n in 0..self.depth() {
            let end = &start + LengthSchedule.width(n);
            if *m < end {
                return Ok((n, m - start));
            }
            start = end;
        }
        Err(Error::IndexBeyond {
            index: m.to_string(),
            length: start.to_string(),
        })
    }

    pub fn bit(&self, m: &BigIndex) -> Result<Bit> {
        let (n, offset) = self.locate(m)?;
        Ok(MuString::new(self.indices[n]).bit(&offset))
    }

    /// `|T(σ) ↾ m|` for `m ≤ |T(σ)|`.
    pub fn prefix_popcount(&self, m: &BigIndex) -> Result<BigIndex> {
        let length = self.len();
        if *m > length {
            return Err(Error::IndexBeyond {
                index: m.to_string(),
                length: length.to_string(),
            });
        }
        Ok(popcount_levels(&self.indices, m))
    }

    /// Naive materialization by concatenating μ-powers. Testing aid.
    pub fn materialize(&self, cap: u64) -> Result<Vec<Bit>> {
        let length = self.len();
        let total = length
            .to_u64()
            .filter(|&t| t <= cap)
            .ok_or_else(|| Error::budget(&length, cap))?;
        let mut out = Vec::with_capacity(total as usize);
        for (n, &j) in self.indices.iter().enumerate() {
            let width = LengthSchedule.width(n).to_u64().expect("checked above");
            let half = 1u64 << j;
            let mu: Vec<Bit> = (0..2 * half).map(|o| o >= half).collect();
            for _ in 0..width / (2 * half) {
                out.extend_from_slice(&mu);
            }
        }
        Ok(out)
    }
}

/// Ones below `m` for a path using `indices[n]` on level `n`.
fn popcount_levels(indices: &[u64], m: &BigIndex) -> BigIndex {
    let mut total = BigIndex::zero();
    let mut start = BigIndex::zero();
    for (n, &j) in indices.iter().enumerate() {
        let width = LengthSchedule.width(n);
        let end = &start + &width;
        if *m >= end {
            total += width >> 1u32;
        } else {
            if *m > start {
                total += MuString::new(j).ones_below(&(m - &start));
            }
            return total;
        }
        start = end;
    }
    total
}

pub fn tree_code(directions: &[Bit]) -> Result<TreeCode> {
    TreeCode::new(directions)
}

pub fn tree_bit(code: &TreeCode, m: &BigIndex) -> Result<Bit> {
    code.bit(m)
}

pub fn tree_prefix_popcount(code: &TreeCode, m: &BigIndex) -> Result<BigIndex> {
    code.prefix_popcount(m)
}

/// Agreement between two tree strings below `m`, split into the levels where
/// both use the same μ-string and the levels where they differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementCount {
    pub agreements: BigIndex,
    /// Positions below `m` on levels shared by both codes.
    pub common_prefix: BigIndex,
}

pub fn pairwise_agreement_count(
    a: &TreeCode,
    b: &TreeCode,
    m: &BigIndex,
) -> Result<AgreementCount> {
    let (la, lb) = (a.len(), b.len());
    if *m > la || *m > lb {
        return Err(Error::LengthMismatch(format!(
            "cut {m} exceeds code lengths {la} and {lb}"
        )));
    }
    let mut agreements = BigIndex::zero();
    let mut common_prefix = BigIndex::zero();
    let mut start = BigIndex::zero();
    for n in 0..a.depth().min(b.depth()) {
        if *m <= start {
            break;
        }
        let width = LengthSchedule.width(n);
        let span = (m - &start).min(width.clone());
        let (mu_a, mu_b) = (MuString::new(a.indices[n]), MuString::new(b.indices[n]));
        agreements += mu_a.agreements_below(&mu_b, &span);
        if mu_a == mu_b {
            common_prefix += &span;
        }
        start += width;
    }
    Ok(AgreementCount {
        agreements,
        common_prefix,
    })
}

/// Level boundaries `l_0 < l_1 < ... < l_cap`, with machine-sized copies.
struct Levels {
    starts: Vec<BigIndex>,
    small: Vec<Option<u64>>,
}

impl Levels {
    fn new(cap: usize) -> Self {
        let starts: Vec<BigIndex> = (0..=cap).map(|n| LengthSchedule.start(n)).collect();
        let small = starts.iter().map(|s| s.to_u64()).collect();
        Levels { starts, small }
    }

    fn level_of_u64(&self, m: u64) -> Option<usize> {
        (0..self.starts.len() - 1).find(|&n| match self.small[n + 1] {
            Some(end) => m < end,
            None => true,
        })
    }

    fn level_of(&self, m: &BigIndex) -> Option<usize> {
        (0..self.starts.len() - 1).find(|&n| *m < self.starts[n + 1])
    }
}

struct PathEval {
    directions: BitSequence,
    cap: usize,
    levels: Arc<Levels>,
}

impl PathEval {
    fn index(&self, n: usize) -> Result<u64> {
        let prefix = self.directions.range(0, n as u64 + 1)?;
        Ok(level_index(&prefix))
    }

    fn beyond(&self, m: String) -> Error {
        Error::IndexBeyond {
            index: m,
            length: self.levels.starts[self.cap].to_string(),
        }
    }
}

impl Evaluator for PathEval {
    fn bit(&self, m: &BigIndex) -> Result<Bit> {
        let n = self
            .levels
            .level_of(m)
            .ok_or_else(|| self.beyond(m.to_string()))?;
        let offset = m - &self.levels.starts[n];
        Ok(MuString::new(self.index(n)?).bit(&offset))
    }

    fn bit_u64(&self, m: u64) -> Result<Bit> {
        let n = self
            .levels
            .level_of_u64(m)
            .ok_or_else(|| self.beyond(m.to_string()))?;
        let start = self.levels.small[n].expect("level start below m");
        Ok(MuString::new(self.index(n)?).bit_u64(m - start))
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        let mut pos = start;
        let mut i = 0usize;
        while i < out.len() {
            let n = self
                .levels
                .level_of_u64(pos)
                .ok_or_else(|| self.beyond(pos.to_string()))?;
            let level_start = self.levels.small[n].expect("level start below pos");
            let level_end = self.levels.small[n + 1].unwrap_or(u64::MAX);
            let mu = MuString::new(self.index(n)?);
            while i < out.len() && pos < level_end {
                out[i] = mu.bit_u64(pos - level_start);
                i += 1;
                pos += 1;
            }
        }
        Ok(())
    }

    fn count_below(&self, m: &BigIndex) -> Option<Result<BigIndex>> {
        if *m > self.levels.starts[self.cap] {
            return Some(Err(self.beyond(m.to_string())));
        }
        let depth = match self.levels.level_of(m) {
            Some(n) => n + 1,
            None => self.cap,
        };
        let indices: Result<Vec<u64>> = (0..depth).map(|n| self.index(n)).collect();
        Some(indices.map(|idx| popcount_levels(&idx, m)))
    }
}

/// The infinite path through the tree selected by `directions`, queryable
/// below `l_cap`.
pub fn tree_path(directions: &BitSequence) -> BitSequence {
    tree_path_capped(directions, DEFAULT_DEPTH_CAP)
}

pub fn tree_path_capped(directions: &BitSequence, cap: usize) -> BitSequence {
    let desc = Descriptor::node("tree", vec![directions.descriptor().clone()]);
    BitSequence::new(
        desc,
        PathEval {
            directions: directions.clone(),
            cap,
            levels: Arc::new(Levels::new(cap)),
        },
    )
}

/// `treepath:<bits>`: the listed directions followed by zeros.
pub fn tree_path_from_bits(bits: &[Bit]) -> BitSequence {
    let ones = bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| BigIndex::from(i));
    let directions = seq::finite(ones);
    let desc = Descriptor::atom(format!("treepath:{}", bit_string(bits)));
    let inner = tree_path(&directions);
    BitSequence::new(desc, Relabeled(inner))
}

struct Relabeled(BitSequence);

impl Evaluator for Relabeled {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        self.0.evaluate(n)
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        self.0.at(n)
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        self.0.fill(start, out)
    }

    fn count_below(&self, n: &BigIndex) -> Option<Result<BigIndex>> {
        self.0.count_shortcut(n)
    }
}

/// Prefix lengths `l_n + t·b'_n` on level `n`, at which every tree string is balanced.
pub fn good_lengths(n: usize, count: u64) -> Vec<BigUint> {
    let start = LengthSchedule.start(n);
    let stride = LengthSchedule.stride(n);
    (1..=count).map(|t| &start + &stride * t).collect()
}
