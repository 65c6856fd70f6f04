//! Infinite binary sequences as pure evaluators.
//!
//! A [`BitSequence`] is a total function from an arbitrary-precision index to
//! a bit, together with a [`Descriptor`] recording how it was built. Sequences
//! are immutable and cheap to clone; combinators share their children.
//!
//! Evaluation returns `Result` because a few constructions (rank-based
//! geodesics, spliced limits, tree paths) need to materialize a prefix or are
//! bounded by a depth cap. Atoms and the algebraic combinators never fail.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative index into ω.
pub type BigIndex = BigUint;

/// A single bit of a characteristic function.
pub type Bit = bool;

/// Default cap on the number of bits [`prefix`] will materialize.
pub const DEFAULT_PREFIX_CAP: u64 = 1 << 26;

/// Evaluation backend of a [`BitSequence`].
///
/// Implementations must be deterministic: the same index always yields the
/// same bit, and any internal caching must be invisible to callers.
pub trait Evaluator: Send + Sync {
    fn bit(&self, n: &BigIndex) -> Result<Bit>;

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        self.bit(&BigIndex::from(n))
    }

    /// Writes bits `start..start + out.len()` into `out`.
    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.bit_u64(start + i as u64)?;
        }
        Ok(())
    }

    /// Closed-form `|A ↾ n|` when the construction admits one.
    fn count_below(&self, _n: &BigIndex) -> Option<Result<BigIndex>> {
        None
    }
}

/// Construction tag of a sequence, kept for display and provenance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Descriptor {
    pub head: String,
    pub args: Vec<Descriptor>,
}

impl Descriptor {
    pub fn atom(head: impl Into<String>) -> Self {
        Descriptor {
            head: head.into(),
            args: Vec::new(),
        }
    }

    pub fn node(head: impl Into<String>, args: Vec<Descriptor>) -> Self {
        Descriptor {
            head: head.into(),
            args,
        }
    }

    /// True if `head` occurs anywhere in the tree.
    pub fn mentions(&self, head: &str) -> bool {
        self.head == head || self.args.iter().any(|a| a.mentions(head))
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A subset of ω, represented by its characteristic function.
#[derive(Clone)]
pub struct BitSequence {
    eval: Arc<dyn Evaluator>,
    desc: Arc<Descriptor>,
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSequence({})", self.desc)
    }
}

impl fmt::Display for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.desc.fmt(f)
    }
}

impl BitSequence {
    pub fn new(desc: Descriptor, eval: impl Evaluator + 'static) -> Self {
        BitSequence {
            eval: Arc::new(eval),
            desc: Arc::new(desc),
        }
    }

    /// Builds a sequence from a pair of pointwise rules, one for machine-sized
    /// indices and one for arbitrary indices. The two must agree.
    pub fn pointwise<S, B>(desc: Descriptor, small: S, big: B) -> Self
    where
        S: Fn(u64) -> Result<Bit> + Send + Sync + 'static,
        B: Fn(&BigIndex) -> Result<Bit> + Send + Sync + 'static,
    {
        BitSequence::new(
            desc,
            FnEval {
                small: Box::new(small),
                big: Box::new(big),
                count: None,
            },
        )
    }

    /// Like [`BitSequence::pointwise`], with a closed-form prefix count.
    pub fn pointwise_counted<S, B, C>(desc: Descriptor, small: S, big: B, count: C) -> Self
    where
        S: Fn(u64) -> Result<Bit> + Send + Sync + 'static,
        B: Fn(&BigIndex) -> Result<Bit> + Send + Sync + 'static,
        C: Fn(&BigIndex) -> Result<BigIndex> + Send + Sync + 'static,
    {
        BitSequence::new(
            desc,
            FnEval {
                small: Box::new(small),
                big: Box::new(big),
                count: Some(Box::new(count)),
            },
        )
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.desc
    }

    pub fn evaluate(&self, n: &BigIndex) -> Result<Bit> {
        match n.to_u64() {
            Some(small) => self.eval.bit_u64(small),
            None => self.eval.bit(n),
        }
    }

    pub fn at(&self, n: u64) -> Result<Bit> {
        self.eval.bit_u64(n)
    }

    pub fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        self.eval.fill(start, out)
    }

    pub fn count_shortcut(&self, n: &BigIndex) -> Option<Result<BigIndex>> {
        self.eval.count_below(n)
    }

    /// Bits `start..end` as a vector.
    pub fn range(&self, start: u64, end: u64) -> Result<Vec<Bit>> {
        let mut out = vec![false; end.saturating_sub(start) as usize];
        self.fill(start, &mut out)?;
        Ok(out)
    }

    pub fn complement(&self) -> BitSequence {
        complement(self)
    }
}

type SmallFn = Box<dyn Fn(u64) -> Result<Bit> + Send + Sync>;
type BigFn = Box<dyn Fn(&BigIndex) -> Result<Bit> + Send + Sync>;
type CountFn = Box<dyn Fn(&BigIndex) -> Result<BigIndex> + Send + Sync>;

struct FnEval {
    small: SmallFn,
    big: BigFn,
    count: Option<CountFn>,
}

impl Evaluator for FnEval {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        (self.big)(n)
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        (self.small)(n)
    }

    fn count_below(&self, n: &BigIndex) -> Option<Result<BigIndex>> {
        self.count.as_ref().map(|c| c(n))
    }
}

/// Materializes `A ↾ n`, refusing when `n` exceeds `cap`.
pub fn prefix(seq: &BitSequence, n: &BigIndex, cap: u64) -> Result<Vec<Bit>> {
    let len = match n.to_u64() {
        Some(len) if len <= cap => len,
        _ => return Err(Error::budget(n, cap)),
    };
    seq.range(0, len)
}

/// Renders bits as a `0`/`1` string.
pub fn bit_string(bits: &[Bit]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses a `0`/`1` string.
pub fn parse_bits(text: &str) -> Option<Vec<Bit>> {
    text.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// atoms

pub fn empty() -> BitSequence {
    BitSequence::pointwise_counted(
        Descriptor::atom("empty"),
        |_| Ok(false),
        |_| Ok(false),
        |_| Ok(BigIndex::zero()),
    )
}

pub fn full() -> BitSequence {
    BitSequence::pointwise_counted(
        Descriptor::atom("full"),
        |_| Ok(true),
        |_| Ok(true),
        |n| Ok(n.clone()),
    )
}

/// The even numbers, `0` included.
pub fn evens() -> BitSequence {
    BitSequence::pointwise_counted(
        Descriptor::atom("evens"),
        |n| Ok(n % 2 == 0),
        |n| Ok(!n.bit(0)),
        |n| Ok((n + 1u32) >> 1),
    )
}

pub fn odds() -> BitSequence {
    BitSequence::pointwise_counted(
        Descriptor::atom("odds"),
        |n| Ok(n % 2 == 1),
        |n| Ok(n.bit(0)),
        |n| Ok(n >> 1),
    )
}

/// `{m : m < n}`.
pub fn below(n: BigIndex) -> BitSequence {
    let small_bound = n.to_u64();
    let big_bound = n.clone();
    let count_bound = n.clone();
    BitSequence::pointwise_counted(
        Descriptor::atom(format!("below:{n}")),
        move |m| Ok(small_bound.is_none_or(|b| m < b)),
        move |m| Ok(m < &big_bound),
        move |m| Ok(m.min(&count_bound).clone()),
    )
}

/// The periodic repetition of `pattern`. An empty pattern yields the empty set.
pub fn periodic(pattern: Vec<Bit>) -> BitSequence {
    let desc = Descriptor::atom(format!("periodic:{}", bit_string(&pattern)));
    if pattern.is_empty() {
        return BitSequence::pointwise_counted(
            desc,
            |_| Ok(false),
            |_| Ok(false),
            |_| Ok(BigIndex::zero()),
        );
    }
    let period = pattern.len() as u64;
    let ones_in_period = pattern.iter().filter(|&&b| b).count() as u64;
    // prefix_ones[j] = ones among pattern[..j]
    let mut prefix_ones = Vec::with_capacity(pattern.len() + 1);
    prefix_ones.push(0u64);
    for &b in &pattern {
        let last = *prefix_ones.last().unwrap_or(&0);
        prefix_ones.push(last + u64::from(b));
    }
    let pattern: Arc<[Bit]> = pattern.into();
    let small = pattern.clone();
    let big = pattern.clone();
    BitSequence::pointwise_counted(
        desc,
        move |n| Ok(small[(n % period) as usize]),
        move |n| {
            let r = (n % period).to_usize().unwrap_or(0);
            Ok(big[r])
        },
        move |n| {
            let q = n / period;
            let r = (n % period).to_usize().unwrap_or(0);
            Ok(q * ones_in_period + prefix_ones[r])
        },
    )
}

/// A finite set.
pub fn finite(elements: impl IntoIterator<Item = BigIndex>) -> BitSequence {
    let set: BTreeSet<BigIndex> = elements.into_iter().collect();
    let listing: Vec<String> = set.iter().map(|e| e.to_string()).collect();
    let desc = Descriptor::atom(format!("finite:{{{}}}", listing.join(",")));
    let set = Arc::new(set);
    let small_set = set.clone();
    let big_set = set.clone();
    BitSequence::pointwise_counted(
        desc,
        move |n| Ok(small_set.contains(&BigIndex::from(n))),
        move |n| Ok(big_set.contains(n)),
        move |n| Ok(BigIndex::from(set.range(..n.clone()).count())),
    )
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub(crate) fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn bernoulli_key(seed: u64, high_limbs: &[u64]) -> u64 {
    let mut key = splitmix_finalize(seed);
    for &limb in high_limbs {
        key = splitmix_finalize(key ^ splitmix_finalize(limb));
    }
    key
}

fn bernoulli_word(key: u64, low: u64) -> u64 {
    splitmix_finalize(key.wrapping_add(low.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)))
}

/// Pseudo-random set with independent fair bits.
///
/// Generator: bit `n` is the top bit of output `n` of a SplitMix64 stream
/// whose starting state is `finalize(seed)`. Indices of 64 bits or more fold
/// their high limbs into the starting state, so every index is evaluated
/// directly from `(seed, n)` without history.
pub fn bernoulli_stream(seed: u64) -> BitSequence {
    let key = bernoulli_key(seed, &[]);
    BitSequence::pointwise(
        Descriptor::atom(format!("rand:{seed}")),
        move |n| Ok(bernoulli_word(key, n) >> 63 == 1),
        move |n| {
            let limbs = n.to_u64_digits();
            let low = limbs.first().copied().unwrap_or(0);
            let k = if limbs.len() > 1 {
                bernoulli_key(seed, &limbs[1..])
            } else {
                key
            };
            Ok(bernoulli_word(k, low) >> 63 == 1)
        },
    )
}

// ---------------------------------------------------------------------------
// combinators

struct Complement(BitSequence);

impl Evaluator for Complement {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        Ok(!self.0.evaluate(n)?)
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        Ok(!self.0.at(n)?)
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        self.0.fill(start, out)?;
        out.iter_mut().for_each(|b| *b = !*b);
        Ok(())
    }

    fn count_below(&self, n: &BigIndex) -> Option<Result<BigIndex>> {
        self.0.count_shortcut(n).map(|c| c.map(|inner| n - inner))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinOp {
    Xor,
    Xnor,
    And,
    Or,
}

impl BinOp {
    fn apply(self, a: Bit, b: Bit) -> Bit {
        match self {
            BinOp::Xor => a ^ b,
            BinOp::Xnor => a == b,
            BinOp::And => a & b,
            BinOp::Or => a | b,
        }
    }
}

struct Binary {
    op: BinOp,
    left: BitSequence,
    right: BitSequence,
}

impl Evaluator for Binary {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        Ok(self
            .op
            .apply(self.left.evaluate(n)?, self.right.evaluate(n)?))
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        Ok(self.op.apply(self.left.at(n)?, self.right.at(n)?))
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        self.left.fill(start, out)?;
        let mut other = vec![false; out.len()];
        self.right.fill(start, &mut other)?;
        for (a, b) in out.iter_mut().zip(other) {
            *a = self.op.apply(*a, b);
        }
        Ok(())
    }
}

fn binary(head: &str, op: BinOp, a: &BitSequence, b: &BitSequence) -> BitSequence {
    BitSequence::new(
        Descriptor::node(head, vec![a.descriptor().clone(), b.descriptor().clone()]),
        Binary {
            op,
            left: a.clone(),
            right: b.clone(),
        },
    )
}

/// `¬A`.
pub fn complement(a: &BitSequence) -> BitSequence {
    BitSequence::new(
        Descriptor::node("not", vec![a.descriptor().clone()]),
        Complement(a.clone()),
    )
}

/// `A △ B`.
pub fn symdiff(a: &BitSequence, b: &BitSequence) -> BitSequence {
    binary("symdiff", BinOp::Xor, a, b)
}

/// `A ▽ B = {n : A(n) = B(n)}`.
pub fn symagree(a: &BitSequence, b: &BitSequence) -> BitSequence {
    binary("agree", BinOp::Xnor, a, b)
}

pub fn intersect(a: &BitSequence, b: &BitSequence) -> BitSequence {
    binary("cap", BinOp::And, a, b)
}

pub fn union(a: &BitSequence, b: &BitSequence) -> BitSequence {
    binary("cup", BinOp::Or, a, b)
}

struct Join {
    even: BitSequence,
    odd: BitSequence,
}

impl Evaluator for Join {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        let half = n >> 1;
        if n.bit(0) {
            self.odd.evaluate(&half)
        } else {
            self.even.evaluate(&half)
        }
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        if n % 2 == 1 {
            self.odd.at(n / 2)
        } else {
            self.even.at(n / 2)
        }
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        if out.is_empty() {
            return Ok(());
        }
        let end = start + out.len() as u64;
        // even positions 2j in [start, end) ↔ j in [ceil(start/2), ceil(end/2))
        let even_lo = start.div_ceil(2);
        let even_hi = end.div_ceil(2);
        let odd_lo = start / 2;
        let odd_hi = end / 2;
        let evens = self.even.range(even_lo, even_hi)?;
        let odds = self.odd.range(odd_lo, odd_hi)?;
        for (i, slot) in out.iter_mut().enumerate() {
            let pos = start + i as u64;
            *slot = if pos.is_multiple_of(2) {
                evens[(pos / 2 - even_lo) as usize]
            } else {
                odds[(pos / 2 - odd_lo) as usize]
            };
        }
        Ok(())
    }

    fn count_below(&self, n: &BigIndex) -> Option<Result<BigIndex>> {
        let evens = self.even.count_shortcut(&((n + 1u32) >> 1))?;
        let odds = self.odd.count_shortcut(&(n >> 1))?;
        Some(evens.and_then(|e| odds.map(|o| e + o)))
    }
}

/// `A ⊕ B`: `A` on the even positions, `B` on the odd ones.
pub fn join(a: &BitSequence, b: &BitSequence) -> BitSequence {
    BitSequence::new(
        Descriptor::node("join", vec![a.descriptor().clone(), b.descriptor().clone()]),
        Join {
            even: a.clone(),
            odd: b.clone(),
        },
    )
}

/// Converts an index to `u64`, or reports it against `cap`.
pub(crate) fn small_index(n: &BigIndex, cap: u64) -> Result<u64> {
    n.to_u64().ok_or_else(|| Error::budget(n, cap))
}

pub(crate) fn pow2(k: u64) -> BigIndex {
    BigIndex::one() << k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pfx(s: &BitSequence, n: u64) -> String {
        bit_string(&prefix(s, &BigIndex::from(n), DEFAULT_PREFIX_CAP).unwrap())
    }

    #[test]
    fn atoms_and_prefixes() {
        assert!(full().evaluate(&BigIndex::from(10u32).pow(40)).unwrap());
        assert!(!evens().at(7).unwrap());
        assert_eq!(pfx(&evens(), 6), "101010");
        assert_eq!(pfx(&empty(), 4), "0000");
        assert_eq!(pfx(&periodic(vec![false, true, true]), 7), "0110110");
        assert_eq!(pfx(&join(&empty(), &full()), 6), "010101");
        assert_eq!(pfx(&finite([1u32, 3].map(BigIndex::from)), 5), "01010");
    }

    #[test]
    fn prefix_cap_is_enforced() {
        let err = prefix(&full(), &BigIndex::from(11u32), 10).unwrap_err();
        assert!(matches!(err, Error::Budget { cap: 10, .. }));
    }

    #[test]
    fn symdiff_with_self_is_empty() {
        let a = bernoulli_stream(9);
        let d = symdiff(&a, &a);
        assert!(d.range(0, 500).unwrap().iter().all(|&b| !b));
        assert!(!d.evaluate(&(pow2(90) + 17u32)).unwrap());
    }

    #[test]
    fn join_fill_matches_pointwise() {
        let j = join(&bernoulli_stream(1), &periodic(vec![true, false, false]));
        for start in [0u64, 1, 2, 7, 100] {
            let filled = j.range(start, start + 37).unwrap();
            for (i, &b) in filled.iter().enumerate() {
                assert_eq!(b, j.at(start + i as u64).unwrap());
                assert_eq!(b, j.evaluate(&BigIndex::from(start + i as u64)).unwrap());
            }
        }
    }

    #[test]
    fn bernoulli_small_and_big_paths_agree() {
        let r = bernoulli_stream(77);
        for n in [0u64, 1, 5, 1 << 40, u64::MAX] {
            assert_eq!(r.at(n).unwrap(), r.evaluate(&BigIndex::from(n)).unwrap());
        }
    }

    #[test]
    fn count_shortcuts_match_scans() {
        let seqs = [
            evens(),
            odds(),
            periodic(vec![true, true, false, true, false]),
            finite([0u32, 4, 9, 30].map(BigIndex::from)),
            below(BigIndex::from(13u32)),
            complement(&evens()),
            join(&evens(), &full()),
        ];
        for s in &seqs {
            let bits = s.range(0, 64).unwrap();
            for n in 0..=64u64 {
                let scan = bits[..n as usize].iter().filter(|&&b| b).count();
                let fast = s.count_shortcut(&BigIndex::from(n)).unwrap().unwrap();
                assert_eq!(fast, BigIndex::from(scan), "{s} at {n}");
            }
        }
    }

    #[test]
    fn descriptors_render() {
        let s = symdiff(&evens(), &complement(&full()));
        assert_eq!(s.to_string(), "symdiff(evens, not(full))");
        assert!(s.descriptor().mentions("not"));
        assert!(!s.descriptor().mentions("icode"));
    }
}
