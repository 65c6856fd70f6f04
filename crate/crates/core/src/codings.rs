//! The interval families `I`, `J`, `R`, the set codings built on them, their
//! decoders, and the distance-1 constructions.
//!
//! * `I_n = [n!, (n+1)!)`. `I_0 = [1, 1)` is empty and `0` lies in no `I_n`.
//! * `J_k = [2^k − 1, 2^{k+1} − 1)`. These partition all of ω, `0 ∈ J_0`.
//! * `R_k = {m > 0 : 2^k | m, 2^{k+1} ∤ m}` with `n`-th element `2^k(2n+1)`.
//!   `0` lies in no `R_k`, so every R-based coding has bit 0 at index 0.

use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::density::{count_range, CheckpointGrid};
use crate::error::{Error, Result};
use crate::numeric::ratio;
use crate::seq::{self, BigIndex, Bit, BitSequence, Descriptor, DEFAULT_PREFIX_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntervalKind {
    I,
    J,
    R,
}

/// Where an index falls in an interval family: block `k`, and for `R` the
/// position `n` with `m = 2^k(2n+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPosition {
    pub k: BigIndex,
    pub position: Option<BigIndex>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntervalFamily {
    pub kind: IntervalKind,
}

impl IntervalFamily {
    pub fn new(kind: IntervalKind) -> Self {
        IntervalFamily { kind }
    }

    pub fn block_of(&self, m: &BigIndex) -> Option<BlockPosition> {
        match self.kind {
            IntervalKind::I => i_block(m).map(|k| BlockPosition { k, position: None }),
            IntervalKind::J => Some(BlockPosition {
                k: j_block(m),
                position: None,
            }),
            IntervalKind::R => r_block(m).map(|(k, n)| BlockPosition {
                k,
                position: Some(n),
            }),
        }
    }

    pub fn contains(&self, k: &BigIndex, m: &BigIndex) -> bool {
        self.block_of(m).is_some_and(|b| &b.k == k)
    }

    /// `[lo, hi)` of block `k` for the interval families `I` and `J`.
    pub fn bounds(&self, k: u64) -> Option<(BigIndex, BigIndex)> {
        match self.kind {
            IntervalKind::I => Some((
                crate::numeric::factorial(k),
                crate::numeric::factorial(k + 1),
            )),
            IntervalKind::J => Some((seq::pow2(k) - 1u32, seq::pow2(k + 1) - 1u32)),
            IntervalKind::R => None,
        }
    }
}

fn i_block(m: &BigIndex) -> Option<BigIndex> {
    if m.is_zero() {
        return None;
    }
    // smallest n ≥ 1 with m < (n+1)!
    let mut n = 1u64;
    let mut next = BigUint::from(2u32);
    while &next <= m {
        n += 1;
        next *= n + 1;
    }
    Some(BigIndex::from(n))
}

fn i_block_u64(m: u64) -> Option<u64> {
    if m == 0 {
        return None;
    }
    let mut n = 1u64;
    let mut next = 2u128;
    while next <= m as u128 {
        n += 1;
        next *= (n + 1) as u128;
    }
    Some(n)
}

fn j_block(m: &BigIndex) -> BigIndex {
    BigIndex::from((m + 1u32).bits() - 1)
}

fn j_block_u64(m: u64) -> u64 {
    127 - (m as u128 + 1).leading_zeros() as u64
}

fn r_block(m: &BigIndex) -> Option<(BigIndex, BigIndex)> {
    let k = m.trailing_zeros()?;
    Some((BigIndex::from(k), m >> (k + 1)))
}

fn r_block_u64(m: u64) -> Option<(u64, u64)> {
    if m == 0 {
        return None;
    }
    let k = m.trailing_zeros() as u64;
    Some((k, m >> (k + 1)))
}

/// `i^k_n = 2^k (2n + 1)`.
pub fn r_element(k: u64, n: &BigIndex) -> BigIndex {
    (n * 2u32 + 1u32) << k
}

/// Cantor pairing `⟨i, m⟩ = (i+m)(i+m+1)/2 + i`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CantorPairing;

impl CantorPairing {
    pub fn encode(&self, i: &BigIndex, m: &BigIndex) -> BigIndex {
        let w = i + m;
        &w * (&w + 1u32) / 2u32 + i
    }

    pub fn decode(&self, n: &BigIndex) -> (BigIndex, BigIndex) {
        let mut w: BigIndex = ((n * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
        let tri = |w: &BigIndex| w * (w + 1u32) / 2u32;
        while tri(&w) > *n {
            w -= 1u32;
        }
        while tri(&(&w + 1u32)) <= *n {
            w += 1u32;
        }
        let i = n - tri(&w);
        let m = &w - &i;
        (i, m)
    }
}

/// `𝓘(A)`, `𝓙(A)` or `𝓡(A)`: the union of the blocks indexed by elements of `A`.
pub fn code(kind: IntervalKind, a: &BitSequence) -> BitSequence {
    let head = match kind {
        IntervalKind::I => "icode",
        IntervalKind::J => "jcode",
        IntervalKind::R => "rcode",
    };
    let desc = Descriptor::node(head, vec![a.descriptor().clone()]);
    let small_a = a.clone();
    let big_a = a.clone();
    match kind {
        IntervalKind::I => BitSequence::pointwise(
            desc,
            move |m| i_block_u64(m).map_or(Ok(false), |n| small_a.at(n)),
            move |m| i_block(m).map_or(Ok(false), |n| big_a.evaluate(&n)),
        ),
        IntervalKind::J => BitSequence::pointwise(
            desc,
            move |m| small_a.at(j_block_u64(m)),
            move |m| big_a.evaluate(&j_block(m)),
        ),
        IntervalKind::R => BitSequence::pointwise(
            desc,
            move |m| r_block_u64(m).map_or(Ok(false), |(k, _)| small_a.at(k)),
            move |m| r_block(m).map_or(Ok(false), |(k, _)| big_a.evaluate(&k)),
        ),
    }
}

type MemberFn = dyn Fn(&BigIndex) -> Result<BitSequence> + Send + Sync;

/// An indexed family `X_0, X_1, ...` for [`r_join`].
#[derive(Clone)]
pub struct RFamily {
    members: Arc<MemberFn>,
    desc: Descriptor,
}

impl RFamily {
    /// Finitely many members; every later `X_k` is empty.
    pub fn list(members: Vec<BitSequence>) -> Self {
        let desc = Descriptor::node(
            "rjoin",
            members.iter().map(|m| m.descriptor().clone()).collect(),
        );
        let members = Arc::new(members);
        let empty = seq::empty();
        RFamily {
            members: Arc::new(move |k| {
                Ok(k.to_usize()
                    .and_then(|k| members.get(k).cloned())
                    .unwrap_or_else(|| empty.clone()))
            }),
            desc,
        }
    }

    /// `X_k = x` for every `k`.
    pub fn uniform(x: BitSequence) -> Self {
        let desc = Descriptor::node("rjoin_uniform", vec![x.descriptor().clone()]);
        RFamily {
            members: Arc::new(move |_| Ok(x.clone())),
            desc,
        }
    }

    pub fn generator<F>(desc: Descriptor, f: F) -> Self
    where
        F: Fn(&BigIndex) -> Result<BitSequence> + Send + Sync + 'static,
    {
        RFamily {
            members: Arc::new(f),
            desc,
        }
    }

    pub fn member(&self, k: &BigIndex) -> Result<BitSequence> {
        (self.members)(k)
    }
}

/// `⊕^R_k X_k = {i^k_n : n ∈ X_k}`.
pub fn r_join(family: &RFamily) -> BitSequence {
    let small = family.clone();
    let big = family.clone();
    BitSequence::pointwise(
        family.desc.clone(),
        move |m| match r_block_u64(m) {
            None => Ok(false),
            Some((k, n)) => small.member(&BigIndex::from(k))?.at(n),
        },
        move |m| match r_block(m) {
            None => Ok(false),
            Some((k, n)) => big.member(&k)?.evaluate(&n),
        },
    )
}

/// `𝓡^A(C)`: the R-join with `X_k = A` when `k ∈ C` and `X_k = ¬A` otherwise.
pub fn r_relative(a: &BitSequence, c: &BitSequence) -> BitSequence {
    let desc = Descriptor::node("rrel", vec![a.descriptor().clone(), c.descriptor().clone()]);
    let (sa, sc, ba, bc) = (a.clone(), c.clone(), a.clone(), c.clone());
    BitSequence::pointwise(
        desc,
        move |m| match r_block_u64(m) {
            None => Ok(false),
            Some((k, n)) => Ok(sa.at(n)? == sc.at(k)?),
        },
        move |m| match r_block(m) {
            None => Ok(false),
            Some((k, n)) => Ok(ba.evaluate(&n)? == bc.evaluate(&k)?),
        },
    )
}

/// `𝓡(A ∩ [0, k])`, the `k`-th computable approximant of `𝓡(A)`.
pub fn approximate_r(a: &BitSequence, k: u64) -> BitSequence {
    let truncated = seq::intersect(a, &seq::below(BigIndex::from(k) + 1u32));
    code(IntervalKind::R, &truncated)
}

/// How [`decode_j`] reads a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodePolicy {
    /// Blocks of at most this many bits are read in full.
    pub full_block_cap: u64,
    /// Larger blocks are read at this many stride-spaced positions; `None`
    /// makes oversize blocks an error.
    pub sample_size: Option<u64>,
}

impl Default for DecodePolicy {
    fn default() -> Self {
        DecodePolicy {
            full_block_cap: DEFAULT_PREFIX_CAP,
            sample_size: Some(1 << 16),
        }
    }
}

/// Majority bit of `C` on `J_k`; ties decode to 0.
pub fn decode_j(c: &BitSequence, k: u64, policy: DecodePolicy) -> Result<Bit> {
    let len = seq::pow2(k);
    let start = seq::pow2(k) - 1u32;
    if len <= BigUint::from(policy.full_block_cap) {
        let lo = seq::small_index(&start, policy.full_block_cap)?;
        let hi = lo + (1u64 << k);
        let ones = count_range(c, lo, hi, u64::MAX)?;
        return Ok(2 * ones > (1u64 << k));
    }
    let Some(samples) = policy.sample_size.filter(|&s| s > 0) else {
        return Err(Error::budget(len, policy.full_block_cap));
    };
    let samples = BigUint::from(samples).min(len.clone());
    let stride = &len / &samples;
    let offset = BigUint::from(sample_seed(k)) % &stride;
    let mut ones = BigUint::zero();
    let mut j = BigUint::zero();
    while j < samples {
        let m = &start + &offset + &j * &stride;
        if c.evaluate(&m)? {
            ones += 1u32;
        }
        j += 1u32;
    }
    Ok(ones * 2u32 > samples)
}

/// Flips exactly `⌊rate·2^k⌋` positions of every block `J_k` of `c`.
///
/// The flipped offsets in `J_k` are those `o` with `(a·o + b) mod 2^k < ⌊rate·2^k⌋`
/// for an odd multiplier `a` and shift `b` drawn from `(seed, k)`.
pub fn corrupt_blocks(c: &BitSequence, rate: &BigRational, seed: u64) -> Result<BitSequence> {
    crate::numeric::check_unit(rate)?;
    let desc = Descriptor::node(
        "noise",
        vec![
            c.descriptor().clone(),
            Descriptor::atom(crate::numeric::format_rational(rate)),
            Descriptor::atom(seed.to_string()),
        ],
    );
    let keys = move |k: u64| {
        let h = seq::splitmix_finalize(seed ^ seq::splitmix_finalize(k));
        (
            seq::splitmix_finalize(h) | 1,
            seq::splitmix_finalize(h ^ 0x5851_F42D_4C95_7F2D),
        )
    };
    let flipped = {
        let rate = rate.clone();
        move |m: &BigIndex| -> bool {
            let m1 = m + 1u32;
            let k = m1.bits() - 1;
            let size = seq::pow2(k);
            let offset = m1 - &size;
            let (a, b) = keys(k);
            let image = (offset * a + b) % &size;
            image < crate::numeric::floor_mul(&rate, &size)
        }
    };
    let flipped_small = {
        let rate = rate.clone();
        let small = match (rate.numer().to_u64(), rate.denom().to_u64()) {
            (Some(p), Some(q)) => Some((p, q)),
            _ => None,
        };
        let big = flipped.clone();
        move |m: u64| -> bool {
            let k = 63 - u64::from((m + 1).leading_zeros());
            if k >= 63 {
                return big(&BigIndex::from(m));
            }
            match small {
                Some((p, q)) => {
                    let size = 1u64 << k;
                    let offset = m + 1 - size;
                    let (a, b) = keys(k);
                    let image = offset.wrapping_mul(a).wrapping_add(b) & (size - 1);
                    let quota = (p as u128 * size as u128 / q as u128) as u64;
                    image < quota
                }
                None => big(&BigIndex::from(m)),
            }
        }
    };
    let (cs, cb) = (c.clone(), c.clone());
    Ok(BitSequence::pointwise(
        desc,
        move |m| Ok(cs.at(m)? ^ flipped_small(m)),
        move |m| Ok(cb.evaluate(m)? ^ flipped(m)),
    ))
}

fn sample_seed(k: u64) -> u64 {
    let mut z = k.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `ρ^k_n(C) = |(C ∩ R_k) ↾ n| / |R_k ↾ n|`, or `None` when `R_k ↾ n` is empty.
pub fn r_density(c: &BitSequence, k: u64, n: u64) -> Result<Option<BigRational>> {
    if k >= 63 {
        return Ok(None);
    }
    let (total, ones) = r_counts(c, k, n)?;
    Ok((total > 0).then(|| ratio(ones, total)))
}

fn r_counts(c: &BitSequence, k: u64, n: u64) -> Result<(u64, u64)> {
    let mut total = 0u64;
    let mut ones = 0u64;
    let step = 1u64 << (k + 1);
    let mut m = 1u64 << k;
    while m < n {
        total += 1;
        ones += u64::from(c.at(m)?);
        match m.checked_add(step) {
            Some(next) => m = next,
            None => break,
        }
    }
    Ok((total, ones))
}

/// Density vote within `R_k` at the grid's largest checkpoint: 1 iff
/// `ρ^k_n(C) > 1/2`. Ties, and an empty `R_k ↾ n`, decode to 0.
pub fn decode_r(c: &BitSequence, k: u64, grid: &CheckpointGrid) -> Result<Bit> {
    let n = grid
        .checkpoints()
        .last()
        .copied()
        .ok_or_else(|| Error::InvalidGrid("grid has no checkpoints".into()))?;
    if n > grid.budget {
        return Err(Error::budget(n, grid.budget));
    }
    if k >= 63 {
        return Ok(false);
    }
    let (total, ones) = r_counts(c, k, n)?;
    Ok(2 * ones > total)
}

/// A set at distance 1 from every member of `sets`: on `I_n` with
/// `n = ⟨i, m⟩` it copies `¬A_i` (or is empty when `i` is out of range).
/// Index 0, which lies in no `I_n`, is set to `¬A_0(0)`.
pub fn diagonal_distance_one(sets: &[BitSequence]) -> Result<BitSequence> {
    if sets.is_empty() {
        return Err(Error::Empty("diagonal input list"));
    }
    let desc = Descriptor::node(
        "diag",
        sets.iter().map(|s| s.descriptor().clone()).collect(),
    );
    let sets: Arc<[BitSequence]> = sets.to_vec().into();
    let small = sets.clone();
    let big = sets;
    let pairing = CantorPairing;
    Ok(BitSequence::pointwise(
        desc,
        move |m| {
            let Some(n) = i_block_u64(m) else {
                return Ok(!small[0].at(0)?);
            };
            let (i, _) = pairing.decode(&BigIndex::from(n));
            match i.to_usize().and_then(|i| small.get(i)) {
                Some(a) => Ok(!a.at(m)?),
                None => Ok(false),
            }
        },
        move |m| {
            let Some(n) = i_block(m) else {
                return Ok(!big[0].at(0)?);
            };
            let (i, _) = pairing.decode(&n);
            match i.to_usize().and_then(|i| big.get(i)) {
                Some(a) => Ok(!a.evaluate(m)?),
                None => Ok(false),
            }
        },
    ))
}

/// The node codes along a path through the full binary tree: the value of
/// `1σ` read in binary for every prefix `σ` of `path`.
pub fn node_code_set(path: &BitSequence) -> BitSequence {
    let desc = Descriptor::node("nodes", vec![path.descriptor().clone()]);
    let small = path.clone();
    let big = path.clone();
    BitSequence::pointwise(
        desc,
        move |x| {
            if x == 0 {
                return Ok(false);
            }
            let depth = 63 - x.leading_zeros() as u64;
            for t in 0..depth {
                let bit = (x >> (depth - 1 - t)) & 1 == 1;
                if bit != small.at(t)? {
                    return Ok(false);
                }
            }
            Ok(true)
        },
        move |x| {
            if x.is_zero() {
                return Ok(false);
            }
            let depth = x.bits() - 1;
            for t in 0..depth {
                if x.bit(depth - 1 - t) != big.at(t)? {
                    return Ok(false);
                }
            }
            Ok(true)
        },
    )
}

/// `𝓘` of the node-code set of `path`. Distinct paths give almost disjoint
/// node sets, hence codings at distance 1.
pub fn antichain_member(path: &BitSequence) -> BitSequence {
    code(IntervalKind::I, &node_code_set(path))
}

/// `(B ∩ C) ∪ {2^n : n ∈ A}` where `C` is the complement of the powers of 2:
/// coarsely equal to `B`, while `A` is recoverable from it.
pub fn recode(b: &BitSequence, a: &BitSequence) -> BitSequence {
    let desc = Descriptor::node(
        "recode",
        vec![b.descriptor().clone(), a.descriptor().clone()],
    );
    let (sb, sa, bb, ba) = (b.clone(), a.clone(), b.clone(), a.clone());
    BitSequence::pointwise(
        desc,
        move |m| {
            if m != 0 && m.is_power_of_two() {
                sa.at(m.trailing_zeros() as u64)
            } else {
                sb.at(m)
            }
        },
        move |m| {
            if !m.is_zero() && m.count_ones() == 1 {
                ba.evaluate(&BigIndex::from(m.bits() - 1))
            } else {
                bb.evaluate(m)
            }
        },
    )
}
