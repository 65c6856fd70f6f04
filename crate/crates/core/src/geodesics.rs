//! Paths through the space: the `C_r` family, contractions `A_r = A ∩ C_r`,
//! geodesics inside a set, the rational-approximation variant `D_r`, the
//! midpoint family `F(X)`, and `X_r = C_r ⊕ ¬C_r`.
//!
//! `C_r` is built on the triangular partition `L_1, L_2, ...` of ω with
//! `|L_i| = i` and least element `m_i = i(i−1)/2`: `C_r ∩ L_i` is the first
//! `⌊r·i⌋` positions of `L_i`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::numeric::{check_unit, floor_mul, floor_sum, format_rational, triangular_block};
use crate::rank::RankIndex;
use crate::seq::{self, BigIndex, Bit, BitSequence, Descriptor, Evaluator, DEFAULT_PREFIX_CAP};

/// The partition of ω into consecutive blocks `L_i` with `|L_i| = i`, `i ≥ 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TriangularPartition;

impl TriangularPartition {
    /// `(i, offset)` with `n ∈ L_i` at position `offset`.
    pub fn block_of(&self, n: &BigIndex) -> (BigIndex, BigIndex) {
        triangular_block(n)
    }

    pub fn block_of_u64(&self, n: u64) -> (u64, u64) {
        let mut i = ((1.0 + (1.0 + 8.0 * n as f64).sqrt()) / 2.0) as u64;
        let start = |i: u64| (i as u128 * (i as u128).saturating_sub(1) / 2) as u64;
        while i > 1 && start(i) > n {
            i -= 1;
        }
        while start(i + 1) <= n {
            i += 1;
        }
        (i, n - start(i))
    }

    /// `m_i`, the least element of `L_i`.
    pub fn start(&self, i: u64) -> u64 {
        i * (i - 1) / 2
    }
}

/// A rational with a machine-sized fast path for `⌊r·i⌋`.
#[derive(Clone, Debug)]
struct UnitRational {
    value: BigRational,
    small: Option<(u64, u64)>,
}

impl UnitRational {
    fn new(r: &BigRational) -> Result<Self> {
        check_unit(r)?;
        let small = match (r.numer().to_u64(), r.denom().to_u64()) {
            (Some(p), Some(q)) if p <= u32::MAX as u64 && q <= u32::MAX as u64 => Some((p, q)),
            _ => None,
        };
        Ok(UnitRational {
            value: r.clone(),
            small,
        })
    }

    fn floor_mul_u64(&self, i: u64) -> u64 {
        match self.small {
            Some((p, q)) => ((p as u128 * i as u128) / q as u128) as u64,
            None => floor_mul(&self.value, &BigUint::from(i))
                .to_u64()
                .unwrap_or(u64::MAX),
        }
    }

    fn floor_mul(&self, i: &BigIndex) -> BigIndex {
        floor_mul(&self.value, i)
    }
}

struct CrEval {
    r: UnitRational,
}

impl Evaluator for CrEval {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        let (i, off) = TriangularPartition.block_of(n);
        Ok(off < self.r.floor_mul(&i))
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        let (i, off) = TriangularPartition.block_of_u64(n);
        Ok(off < self.r.floor_mul_u64(i))
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        if out.is_empty() {
            return Ok(());
        }
        let (mut i, mut off) = TriangularPartition.block_of_u64(start);
        let mut filled = self.r.floor_mul_u64(i);
        for slot in out.iter_mut() {
            *slot = off < filled;
            off += 1;
            if off == i {
                i += 1;
                off = 0;
                filled = self.r.floor_mul_u64(i);
            }
        }
        Ok(())
    }

    fn count_below(&self, n: &BigIndex) -> Option<Result<BigIndex>> {
        let (i, off) = TriangularPartition.block_of(n);
        let num = self.r.value.numer().magnitude();
        let den = self.r.value.denom().magnitude();
        // Σ_{j<i} ⌊r·j⌋ over whole blocks, then the partial block
        let whole = floor_sum(&i, den, num, &BigUint::from(0u32));
        let partial = off.min(self.r.floor_mul(&i));
        Some(Ok(whole + partial))
    }
}

/// `C_r`: density `r`, increasing in `r`, `C_0 = ∅`, `C_1 = ω`.
pub fn c_r(r: &BigRational) -> Result<BitSequence> {
    let r = UnitRational::new(r)?;
    Ok(BitSequence::new(
        Descriptor::atom(format!("cr:{}", format_rational(&r.value))),
        CrEval { r },
    ))
}

/// `A_r = A ∩ C_r`, the section at `A` of the contraction to `∅`.
pub fn a_r(a: &BitSequence, r: &BigRational) -> Result<BitSequence> {
    let cr = c_r(r)?;
    let desc = Descriptor::node(
        "ar",
        vec![a.descriptor().clone(), Descriptor::atom(format_rational(r))],
    );
    Ok(relabel(seq::intersect(a, &cr), desc))
}

fn relabel(inner: BitSequence, desc: Descriptor) -> BitSequence {
    BitSequence::new(desc, Relabel(inner))
}

struct Relabel(BitSequence);

impl Evaluator for Relabel {
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

struct GeodesicEval {
    s: UnitRational,
    rank: RankIndex,
}

impl GeodesicEval {
    fn decide(&self, rank: u64) -> Bit {
        let (n, off) = TriangularPartition.block_of_u64(rank);
        off < self.s.floor_mul_u64(n)
    }
}

impl Evaluator for GeodesicEval {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        let small = seq::small_index(n, self.rank.cap())?;
        self.bit_u64(small)
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        if !self.rank.bit(n)? {
            return Ok(false);
        }
        Ok(self.decide(self.rank.rank(n)?))
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        let mut rank = self.rank.bits_with_rank(start, out)?;
        for slot in out.iter_mut() {
            if *slot {
                *slot = self.decide(rank);
                rank += 1;
            }
        }
        Ok(())
    }
}

/// The geodesic from `∅` to `A` at parameter `s`: split `A` into successive
/// runs `L_n^A` of `n` elements and keep the first `⌊s·n⌋` of each run.
///
/// Evaluation materializes `A` up to the queried index, so indices past the
/// default prefix cap fail with a budget error.
pub fn geodesic_within(a: &BitSequence, s: &BigRational) -> Result<BitSequence> {
    geodesic_within_capped(a, s, DEFAULT_PREFIX_CAP)
}

pub fn geodesic_within_capped(a: &BitSequence, s: &BigRational, cap: u64) -> Result<BitSequence> {
    let s = UnitRational::new(s)?;
    let desc = Descriptor::node(
        "geo",
        vec![
            a.descriptor().clone(),
            Descriptor::atom(format_rational(&s.value)),
        ],
    );
    Ok(BitSequence::new(
        desc,
        GeodesicEval {
            s,
            rank: RankIndex::new(a.clone(), cap),
        },
    ))
}

/// `k_n^A = max(L_n^A) + 1` for `n = 1..=count`.
pub fn relative_block_ends(a: &BitSequence, count: u64, cap: u64) -> Result<Vec<u64>> {
    let index = RankIndex::new(a.clone(), cap);
    (1..=count)
        .map(|n| Ok(index.select(n * (n + 1) / 2 - 1)? + 1))
        .collect()
}

type QFn = dyn Fn(u64) -> BigRational + Send + Sync;

/// The per-block targets `q_1, q_2, ...` of [`rational_geodesic`].
#[derive(Clone)]
pub struct QSchedule {
    source: QSource,
    desc: String,
}

#[derive(Clone)]
enum QSource {
    List(Arc<[BigRational]>),
    Fn(Arc<QFn>),
}

impl QSchedule {
    pub fn constant(r: BigRational) -> Result<Self> {
        Self::list(vec![r])
    }

    /// `q_i` is `values[i − 1]`; past the end the last value repeats.
    pub fn list(values: Vec<BigRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("rational schedule"));
        }
        for v in &values {
            check_unit(v)?;
        }
        let desc = values
            .iter()
            .map(format_rational)
            .collect::<Vec<_>>()
            .join(" ");
        Ok(QSchedule {
            source: QSource::List(values.into()),
            desc: format!("[{desc}]"),
        })
    }

    /// `q_i = f(i)`, checked to lie in `[0, 1]` on each use.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(u64) -> BigRational + Send + Sync + 'static,
    {
        QSchedule {
            source: QSource::Fn(Arc::new(f)),
            desc: label.into(),
        }
    }

    pub fn get(&self, i: u64) -> Result<BigRational> {
        let q = match &self.source {
            QSource::List(v) => {
                let idx = (i.max(1) - 1) as usize;
                v[idx.min(v.len() - 1)].clone()
            }
            QSource::Fn(f) => f(i),
        };
        check_unit(&q)?;
        Ok(q)
    }
}

/// `D`: on each `L_i` the first `⌊q_i·i⌋` positions.
pub fn schedule_set(q: &QSchedule) -> BitSequence {
    let (small, big) = (q.clone(), q.clone());
    BitSequence::pointwise(
        Descriptor::atom(format!("dq:{}", q.desc)),
        move |n| {
            let (i, off) = TriangularPartition.block_of_u64(n);
            let qi = small.get(i)?;
            Ok(BigUint::from(off) < floor_mul(&qi, &BigUint::from(i)))
        },
        move |n| {
            let (i, off) = TriangularPartition.block_of(n);
            let qi = i
                .to_u64()
                .map_or_else(|| big.get(u64::MAX), |i| big.get(i))?;
            Ok(off < floor_mul(&qi, &i))
        },
    )
}

/// `A ∩ D` for the block schedule `q`; coarsely equal to `A_r` when `q_i → r`.
pub fn rational_geodesic(a: &BitSequence, q: &QSchedule) -> BitSequence {
    let d = schedule_set(q);
    let desc = Descriptor::node("rgeo", vec![a.descriptor().clone(), d.descriptor().clone()]);
    relabel(seq::intersect(a, &d), desc)
}

/// Sorted elements `p_0 < p_1 < ...` of `A △ B` found below a scan bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisagreementList {
    pub positions: Vec<u64>,
}

impl DisagreementList {
    /// The `k` with `p_k < n ≤ p_{k+1}`, if `n` lies past `p_0` and within the list.
    pub fn interval_of(&self, n: u64) -> Option<usize> {
        let below = self.positions.partition_point(|&p| p < n);
        if below == 0 || below == self.positions.len() {
            return None;
        }
        Some(below - 1)
    }
}

/// The first `count` disagreements of `a` and `b`, scanning at most `cap` bits.
pub fn disagreement_list(
    a: &BitSequence,
    b: &BitSequence,
    count: usize,
    cap: u64,
) -> Result<DisagreementList> {
    let diff = seq::symdiff(a, b);
    let mut positions = Vec::with_capacity(count);
    let chunk = 1u64 << 16;
    let mut pos = 0u64;
    while positions.len() < count {
        if pos >= cap {
            return Err(Error::Exhausted {
                found: positions.len() as u64,
                scanned: cap,
            });
        }
        let end = (pos + chunk).min(cap);
        let bits = diff.range(pos, end)?;
        for (i, &bit) in bits.iter().enumerate() {
            if bit && positions.len() < count {
                positions.push(pos + i as u64);
            }
        }
        pos = end;
    }
    Ok(DisagreementList { positions })
}

struct MidpointEval {
    a: BitSequence,
    b: BitSequence,
    x: BitSequence,
    disagreements: RankIndex,
}

impl Evaluator for MidpointEval {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        let small = seq::small_index(n, self.disagreements.cap())?;
        self.bit_u64(small)
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        let an = self.a.at(n)?;
        let bn = self.b.at(n)?;
        if an == bn {
            return Ok(an);
        }
        let i = self.disagreements.rank(n)?;
        Ok(if self.x.at(i)? { an } else { bn })
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        let mut diff = vec![false; out.len()];
        let mut rank = self.disagreements.bits_with_rank(start, &mut diff)?;
        self.a.fill(start, out)?;
        for (i, slot) in out.iter_mut().enumerate() {
            if diff[i] {
                // a and b differ here: keep a iff rank ∈ X
                if !self.x.at(rank)? {
                    *slot = !*slot;
                }
                rank += 1;
            }
        }
        Ok(())
    }
}

/// `F(X)`: copies the common value of `A` and `B`, and at the `i`-th
/// disagreement copies `A` if `i ∈ X`, else `B`.
pub fn midpoint_family(a: &BitSequence, b: &BitSequence, x: &BitSequence) -> BitSequence {
    midpoint_family_capped(a, b, x, DEFAULT_PREFIX_CAP)
}

pub fn midpoint_family_capped(
    a: &BitSequence,
    b: &BitSequence,
    x: &BitSequence,
    cap: u64,
) -> BitSequence {
    let desc = Descriptor::node(
        "mid",
        vec![
            a.descriptor().clone(),
            b.descriptor().clone(),
            x.descriptor().clone(),
        ],
    );
    BitSequence::new(
        desc,
        MidpointEval {
            a: a.clone(),
            b: b.clone(),
            x: x.clone(),
            disagreements: RankIndex::new(seq::symdiff(a, b), cap),
        },
    )
}

/// `X_r = C_r ⊕ ¬C_r`, density exactly 1/2 at every even prefix.
pub fn x_r(r: &BigRational) -> Result<BitSequence> {
    let cr = c_r(r)?;
    let desc = Descriptor::atom(format!("xr:{}", format_rational(r)));
    Ok(relabel(seq::join(&cr, &seq::complement(&cr)), desc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{count_prefix, rho_at};
    use crate::numeric::rational_from_u64;
    use crate::seq::{bernoulli_stream, bit_string, empty, evens, full, odds, prefix, symdiff};

    fn q(n: u64, d: u64) -> BigRational {
        rational_from_u64(n, d)
    }

    fn ones(s: &BitSequence, lo: u64, hi: u64) -> u64 {
        s.range(lo, hi).unwrap().iter().filter(|&&b| b).count() as u64
    }

    #[test]
    fn c_r_examples() {
        assert!(c_r(&q(0, 1))
            .unwrap()
            .range(0, 1000)
            .unwrap()
            .iter()
            .all(|&b| !b));
        assert!(c_r(&q(1, 1))
            .unwrap()
            .range(0, 1000)
            .unwrap()
            .iter()
            .all(|&b| b));
        let half = c_r(&q(1, 2)).unwrap();
        assert_eq!(
            bit_string(&prefix(&half, &BigIndex::from(10u32), 100).unwrap()),
            "0101001100"
        );
        assert_eq!(rho_at(&half, &BigIndex::from(10u32)).unwrap(), q(4, 10));
        let c37 = c_r(&q(3, 7)).unwrap();
        let m14 = TriangularPartition.start(14);
        assert_eq!(ones(&c37, m14, m14 + 14), 6);
        assert!(c_r(&q(7, 3)).is_err());
    }

    #[test]
    fn c_r_exact_block_counts() {
        for r in [q(1, 3), q(3, 7), q(9, 10), q(5, 64)] {
            let c = c_r(&r).unwrap();
            for i in (1..=3000u64).step_by(37) {
                let m = TriangularPartition.start(i);
                let expect = floor_mul(&r, &BigUint::from(i)).to_u64().unwrap();
                assert_eq!(ones(&c, m, m + i), expect);
            }
        }
    }

    #[test]
    fn c_r_fill_and_count_shortcut_agree_with_pointwise() {
        let c = c_r(&q(5, 13)).unwrap();
        let bits = c.range(0, 5000).unwrap();
        for (n, &b) in bits.iter().enumerate() {
            assert_eq!(b, c.at(n as u64).unwrap());
        }
        let mut running = 0u64;
        for n in 0..5000u64 {
            let fast = c.count_shortcut(&BigIndex::from(n)).unwrap().unwrap();
            assert_eq!(fast, BigIndex::from(running));
            running += u64::from(bits[n as usize]);
        }
        // symbolic count at an index far past any materialization
        let huge = BigIndex::from(1u32) << 200u32;
        let count = c.count_shortcut(&huge).unwrap().unwrap();
        let approx = count.to_f64().unwrap() / huge.to_f64().unwrap();
        assert!((approx - 5.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn c_r_monotone_in_r() {
        let rs = [
            q(0, 1),
            q(1, 64),
            q(21, 64),
            q(1, 3),
            q(1, 2),
            q(2, 3),
            q(63, 64),
            q(1, 1),
        ];
        let seqs: Vec<Vec<bool>> = rs
            .iter()
            .map(|r| c_r(r).unwrap().range(0, 100_000).unwrap())
            .collect();
        for w in seqs.windows(2) {
            assert!(w[0].iter().zip(&w[1]).all(|(&s, &r)| !s || r));
        }
    }

    #[test]
    fn a_r_examples() {
        let a = bernoulli_stream(4);
        assert_eq!(
            a_r(&a, &q(1, 1)).unwrap().range(0, 3000).unwrap(),
            a.range(0, 3000).unwrap()
        );
        assert!(a_r(&a, &q(0, 1))
            .unwrap()
            .range(0, 3000)
            .unwrap()
            .iter()
            .all(|&b| !b));
        assert_eq!(
            a_r(&full(), &q(2, 5)).unwrap().range(0, 3000).unwrap(),
            c_r(&q(2, 5)).unwrap().range(0, 3000).unwrap()
        );
        let (s, r) = (q(1, 4), q(2, 3));
        let lhs = symdiff(&a_r(&a, &s).unwrap(), &a_r(&a, &r).unwrap());
        let rhs = symdiff(&c_r(&s).unwrap(), &c_r(&r).unwrap());
        for n in (1..20_000u64).step_by(97) {
            assert!(count_prefix(&lhs, n, n).unwrap() <= count_prefix(&rhs, n, n).unwrap());
        }
    }

    #[test]
    fn geodesic_within_endpoints() {
        let a = bernoulli_stream(31);
        let g1 = geodesic_within(&a, &q(1, 1)).unwrap();
        assert_eq!(g1.range(0, 10_000).unwrap(), a.range(0, 10_000).unwrap());
        let g0 = geodesic_within(&a, &q(0, 1)).unwrap();
        assert!(g0.range(0, 10_000).unwrap().iter().all(|&b| !b));
        let g = geodesic_within(&evens(), &q(1, 2)).unwrap();
        let filled = g.range(17, 900).unwrap();
        for (i, &b) in filled.iter().enumerate() {
            assert_eq!(b, g.at(17 + i as u64).unwrap());
        }
    }

    #[test]
    fn geodesic_count_bounds() {
        let a = evens();
        let ends = relative_block_ends(&a, 200, 1 << 20).unwrap();
        let t = q(2, 3);
        let g = geodesic_within(&a, &t).unwrap();
        for (idx, &k) in ends.iter().enumerate() {
            let n = idx as u64 + 1;
            let count = count_prefix(&g, k, k).unwrap();
            // exactly Σ_{i≤n} ⌊2i/3⌋
            let expect: u64 = (1..=n).map(|i| 2 * i / 3).sum();
            assert_eq!(count, expect);
        }
    }

    #[test]
    fn geodesic_budget_errors() {
        let g = geodesic_within_capped(&evens(), &q(1, 2), 1000).unwrap();
        assert!(matches!(g.at(5000), Err(Error::Budget { .. })));
        assert!(matches!(
            relative_block_ends(&seq::finite([1u32, 2].map(BigIndex::from)), 3, 1000),
            Err(Error::TooSparse(_))
        ));
    }

    #[test]
    fn rational_geodesic_constant_schedule_is_a_r() {
        let a = bernoulli_stream(9);
        let r = q(3, 7);
        let b = rational_geodesic(&a, &QSchedule::constant(r.clone()).unwrap());
        assert_eq!(
            b.range(0, 50_000).unwrap(),
            a_r(&a, &r).unwrap().range(0, 50_000).unwrap()
        );
    }

    #[test]
    fn rational_geodesic_perturbed_blocks() {
        // q_i = r ± 1/i shifts each block by at most 2 positions
        let r = q(1, 2);
        let sched = QSchedule::from_fn("r±1/i", move |i| {
            let shift = rational_from_u64(1, i.max(1));
            let v = if i % 2 == 0 {
                q(1, 2) + shift
            } else {
                q(1, 2) - shift
            };
            v.max(q(0, 1)).min(q(1, 1))
        });
        let d = schedule_set(&sched);
        let cr = c_r(&r).unwrap();
        for i in 1..400u64 {
            let m = TriangularPartition.start(i);
            let diff = symdiff(&d, &cr);
            assert!(ones(&diff, m, m + i) <= 2, "block {i}");
        }
    }

    #[test]
    fn rational_geodesic_between_s_and_t() {
        let (s, t) = (q(1, 3), q(2, 3));
        let r = q(1, 2);
        let (ss, tt) = (s.clone(), t.clone());
        let sched = QSchedule::from_fn(
            "alt",
            move |i| if i % 2 == 0 { ss.clone() } else { tt.clone() },
        );
        let d = schedule_set(&sched);
        let lhs = symdiff(&d, &c_r(&r).unwrap());
        let rhs = symdiff(&c_r(&s).unwrap(), &c_r(&t).unwrap());
        for i in 1..500u64 {
            let m = TriangularPartition.start(i);
            assert!(ones(&lhs, m, m + i) <= ones(&rhs, m, m + i));
        }
        assert!(QSchedule::list(vec![q(3, 2)]).is_err());
        let bad = schedule_set(&QSchedule::from_fn("bad", |_| q(2, 1)));
        assert!(bad.at(3).is_err());
    }

    #[test]
    fn midpoint_examples() {
        let a = bernoulli_stream(1);
        let b = bernoulli_stream(2);
        assert_eq!(
            midpoint_family(&a, &b, &full()).range(0, 5000).unwrap(),
            a.range(0, 5000).unwrap()
        );
        assert_eq!(
            midpoint_family(&a, &b, &empty()).range(0, 5000).unwrap(),
            b.range(0, 5000).unwrap()
        );
        let x = bernoulli_stream(3);
        let f = midpoint_family(&empty(), &full(), &x);
        assert_eq!(
            f.range(0, 5000).unwrap(),
            x.complement().range(0, 5000).unwrap()
        );
        for n in [0u64, 17, 4095, 4096] {
            assert_eq!(f.at(n).unwrap(), !x.at(n).unwrap());
        }
    }

    #[test]
    fn disagreement_lists() {
        let list = disagreement_list(&evens(), &odds(), 5, 100).unwrap();
        assert_eq!(list.positions, vec![0, 1, 2, 3, 4]);
        assert_eq!(list.interval_of(3), Some(2));
        assert_eq!(list.interval_of(0), None);
        let err = disagreement_list(&evens(), &evens(), 1, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::Exhausted {
                found: 0,
                scanned: 1000
            }
        );
    }

    #[test]
    fn x_r_examples() {
        let x = x_r(&q(3, 7)).unwrap();
        let bits = x.range(0, 2000).unwrap();
        for n in 1..1000usize {
            let c = bits[..2 * n].iter().filter(|&&b| b).count();
            assert_eq!(2 * c, 2 * n);
        }
        assert_eq!(
            x_r(&q(0, 1)).unwrap().range(0, 100).unwrap(),
            odds().range(0, 100).unwrap()
        );
    }

    #[test]
    fn midpoint_counts_track_disagreement_rank() {
        let triples = [
            (empty(), full(), evens()),
            (
                bernoulli_stream(5),
                bernoulli_stream(6),
                bernoulli_stream(7),
            ),
            (evens(), c_r(&q(1, 3)).unwrap(), x_r(&q(2, 5)).unwrap()),
        ];
        for (a, b, x) in &triples {
            let n_max = 10_000u64;
            let f = midpoint_family(a, b, x);
            let diff_af = symdiff(a, &f).range(0, n_max).unwrap();
            let list = disagreement_list(a, b, n_max as usize, n_max);
            let positions = match list {
                Ok(l) => l.positions,
                Err(Error::Exhausted { .. }) => {
                    let d = symdiff(a, b).range(0, n_max).unwrap();
                    (0..n_max).filter(|&i| d[i as usize]).collect()
                }
                Err(e) => panic!("{e}"),
            };
            let list = DisagreementList { positions };
            let not_x = x.complement().range(0, n_max + 1).unwrap();
            let mut lhs = 0u64;
            for n in 1..=n_max {
                lhs += u64::from(diff_af[(n - 1) as usize]);
                if let Some(k) = list.interval_of(n) {
                    let through_k: u64 = not_x[..=k].iter().map(|&b| u64::from(b)).sum();
                    assert_eq!(lhs, through_k, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn x_r_difference_matches_half_length_difference() {
        let (r, s) = (q(3, 7), q(1, 5));
        let lhs = symdiff(&x_r(&r).unwrap(), &x_r(&s).unwrap())
            .range(0, 4000)
            .unwrap();
        let rhs = symdiff(&c_r(&r).unwrap(), &c_r(&s).unwrap())
            .range(0, 2000)
            .unwrap();
        let (mut a, mut b) = (0, 0);
        for n in 1..=2000usize {
            a += usize::from(lhs[2 * n - 2]) + usize::from(lhs[2 * n - 1]);
            b += usize::from(rhs[n - 1]);
            // ρ_{2n}(X_r △ X_s) = ρ_n(C_r △ C_s)
            assert_eq!(a, 2 * b);
        }
    }
}
