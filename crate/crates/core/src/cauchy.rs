//! Strong Cauchy detection over a finite horizon, subsequence extraction,
//! and the blockwise splicer that assembles a limit.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use parking_lot::RwLock;

use crate::density::CheckpointGrid;
use crate::error::{Error, Result};
use crate::numeric::{format_rational, ratio};
use crate::seq::{self, BigIndex, Bit, BitSequence, Descriptor, Evaluator, DEFAULT_PREFIX_CAP};

/// `2^{−m}` as an exact rational.
pub fn inverse_power_of_two(m: u64) -> BigRational {
    ratio(1u32, seq::pow2(m))
}

/// A prefix packed 64 bits per word.
struct Packed {
    words: Vec<u64>,
}

impl Packed {
    fn new(seq: &BitSequence, start: u64, len: u64) -> Result<Self> {
        let bits = seq.range(start, start + len)?;
        let words = bits
            .chunks(64)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u64, |w, (i, &b)| w | (u64::from(b) << i))
            })
            .collect();
        Ok(Packed { words })
    }

    /// `|(self △ other) ↾ n|` at each increasing checkpoint.
    fn xor_counts(&self, other: &Packed, checkpoints: &[u64]) -> Vec<u64> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut running = 0u64;
        let mut word = 0usize;
        for &n in checkpoints {
            let full = (n / 64) as usize;
            while word < full {
                running += u64::from((self.words[word] ^ other.words[word]).count_ones());
                word += 1;
            }
            let rem = n % 64;
            let partial = if rem == 0 {
                0
            } else {
                let mask = (1u64 << rem) - 1;
                u64::from(((self.words[full] ^ other.words[full]) & mask).count_ones())
            };
            out.push(running + partial);
        }
        out
    }

    fn xor_total(&self, other: &Packed) -> u64 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum()
    }
}

/// Exact `tail_max` of `ρ_n(a △ b)` over the grid, for each pair of members.
fn tail_max_table(
    seqs: &[BitSequence],
    grid: &CheckpointGrid,
) -> Result<(Vec<Vec<BigRational>>, u64)> {
    let checkpoints = grid.checkpoints();
    let horizon = *checkpoints
        .last()
        .ok_or_else(|| Error::InvalidGrid("grid has no checkpoints".into()))?;
    if horizon > grid.budget {
        return Err(Error::budget(horizon, grid.budget));
    }
    let tail_start = checkpoints
        .iter()
        .position(|&n| n >= grid.warmup)
        .unwrap_or(checkpoints.len() - 1);
    let packed: Vec<Packed> = seqs
        .iter()
        .map(|s| Packed::new(s, 0, horizon))
        .collect::<Result<_>>()?;
    let zero = BigRational::from_integer(0.into());
    let mut table = vec![vec![zero; seqs.len()]; seqs.len()];
    for m in 0..seqs.len() {
        for n in (m + 1)..seqs.len() {
            let counts = packed[m].xor_counts(&packed[n], &checkpoints);
            let best = checkpoints[tail_start..]
                .iter()
                .zip(&counts[tail_start..])
                .map(|(&cp, &c)| ratio(c, cp))
                .max()
                .expect("nonempty tail");
            table[m][n] = best.clone();
            table[n][m] = best;
        }
    }
    Ok((table, horizon))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CauchyEntry {
    pub m: usize,
    pub n: usize,
    pub tail_max: BigRational,
    pub bound: BigRational,
    pub pass: bool,
}

/// Pairwise finite evidence for `δ(C_m, C_n) ≤ 2^{−m}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CauchyReport {
    pub entries: Vec<CauchyEntry>,
    pub certified_upto: u64,
}

impl CauchyReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn first_failure(&self) -> Option<&CauchyEntry> {
        self.entries.iter().find(|e| !e.pass)
    }
}

#[allow(clippy::needless_range_loop)]
pub fn strong_cauchy_check(seqs: &[BitSequence], grid: &CheckpointGrid) -> Result<CauchyReport> {
    if seqs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sequences".into()));
    }
    let (table, horizon) = tail_max_table(seqs, grid)?;
    let mut entries = Vec::new();
    for m in 0..seqs.len() {
        let bound = inverse_power_of_two(m as u64);
        for n in (m + 1)..seqs.len() {
            let tail_max = table[m][n].clone();
            entries.push(CauchyEntry {
                m,
                n,
                pass: tail_max <= bound,
                tail_max,
                bound: bound.clone(),
            });
        }
    }
    Ok(CauchyReport {
        entries,
        certified_upto: horizon,
    })
}

/// Indices `i_0 < i_1 < ...` with observed `tail_max ρ(C_{i_a} △ C_{i_b}) < 2^{−a−1}`
/// for `a < b`. Greedy from every start; the longest run wins, earliest on ties.
#[allow(clippy::needless_range_loop)]
pub fn extract_strong_subsequence(
    seqs: &[BitSequence],
    grid: &CheckpointGrid,
) -> Result<Vec<usize>> {
    if seqs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sequences".into()));
    }
    let (table, horizon) = tail_max_table(seqs, grid)?;
    let bounds: Vec<BigRational> = (0..seqs.len() as u64)
        .map(|a| inverse_power_of_two(a + 1))
        .collect();
    let mut best: Vec<usize> = Vec::new();
    for start in 0..seqs.len() {
        let mut chosen = vec![start];
        for j in (start + 1)..seqs.len() {
            if chosen
                .iter()
                .enumerate()
                .all(|(a, &i)| table[i][j] < bounds[a])
            {
                chosen.push(j);
            }
        }
        if chosen.len() > best.len() {
            best = chosen;
        }
    }
    if best.len() < 2 {
        return Err(Error::NotCauchy(format!(
            "no two members are within 1/2 of each other up to {horizon}"
        )));
    }
    Ok(best)
}

struct SpliceState {
    seqs: Vec<BitSequence>,
    slack: BigRational,
    choices: RwLock<BTreeMap<u64, usize>>,
}

/// Block-to-source choices `k ↦ n(k)` of a splice, computed lazily and cached.
#[derive(Clone)]
pub struct SpliceMap {
    state: Arc<SpliceState>,
}

impl SpliceMap {
    pub fn slack(&self) -> &BigRational {
        &self.state.slack
    }

    /// `n(k)`: the largest `n ≤ min(k, N−1)` with `d_k(C_m △ C_n) ≤ 2^{−m}·slack`
    /// for every `m < n`.
    pub fn choice(&self, k: u64) -> Result<usize> {
        if let Some(&n) = self.state.choices.read().get(&k) {
            return Ok(n);
        }
        let n = self.compute(k)?;
        self.state.choices.write().insert(k, n);
        Ok(n)
    }

    fn compute(&self, k: u64) -> Result<usize> {
        let seqs = &self.state.seqs;
        let top = (k.min(seqs.len() as u64 - 1)) as usize;
        if top == 0 {
            return Ok(0);
        }
        let width = 1u64
            .checked_shl(k as u32)
            .filter(|&w| k < 63 && w <= DEFAULT_PREFIX_CAP)
            .ok_or_else(|| Error::budget(format!("2^{k}"), DEFAULT_PREFIX_CAP))?;
        let start = width - 1;
        let blocks: Vec<Packed> = seqs[..=top]
            .iter()
            .map(|s| Packed::new(s, start, width))
            .collect::<Result<_>>()?;
        // d_k(C_m △ C_n) ≤ 2^{−m}·slack  ⇔  count · 2^m ≤ slack · 2^k
        let slack = &self.state.slack;
        let budget_for =
            |m: usize| -> BigRational { slack * ratio(seq::pow2(k), seq::pow2(m as u64)) };
        for n in (1..=top).rev() {
            let trusted = (0..n).all(|m| {
                let count = blocks[m].xor_total(&blocks[n]);
                BigRational::from_integer(count.into()) <= budget_for(m)
            });
            if trusted {
                return Ok(n);
            }
        }
        Ok(0)
    }

    /// `(k, n(k))` for `k ≤ max_k`.
    pub fn table(&self, max_k: u64) -> Result<Vec<(u64, usize)>> {
        (0..=max_k).map(|k| Ok((k, self.choice(k)?))).collect()
    }
}

/// Block index `k` with `m ∈ J_k = [2^k − 1, 2^{k+1} − 1)`.
fn dyadic_block(m: u64) -> u64 {
    63 - u64::from((m + 1).leading_zeros())
}

struct SpliceEval {
    map: SpliceMap,
}

impl Evaluator for SpliceEval {
    fn bit(&self, n: &BigIndex) -> Result<Bit> {
        let k = (n + 1u32).bits() - 1;
        let source = self.map.choice(k)?;
        self.map.state.seqs[source].evaluate(n)
    }

    fn bit_u64(&self, n: u64) -> Result<Bit> {
        let source = self.map.choice(dyadic_block(n))?;
        self.map.state.seqs[source].at(n)
    }

    fn fill(&self, start: u64, out: &mut [Bit]) -> Result<()> {
        let mut pos = start;
        let end = start + out.len() as u64;
        while pos < end {
            let k = dyadic_block(pos);
            let block_end = ((1u64 << (k + 1)) - 1).min(end);
            let source = self.map.choice(k)?;
            let lo = (pos - start) as usize;
            let hi = (block_end - start) as usize;
            self.map.state.seqs[source].fill(pos, &mut out[lo..hi])?;
            pos = block_end;
        }
        Ok(())
    }
}

/// The limit `C` with `C ↾ J_k = C_{n(k)} ↾ J_k`.
pub fn splice_limit(seqs: &[BitSequence], slack: &BigRational) -> Result<(BitSequence, SpliceMap)> {
    if seqs.is_empty() {
        return Err(Error::Empty("sequence list"));
    }
    if slack <= &BigRational::from_integer(0.into()) {
        return Err(Error::InvalidArgument(format!(
            "trust slack {} must be positive",
            format_rational(slack)
        )));
    }
    let map = SpliceMap {
        state: Arc::new(SpliceState {
            seqs: seqs.to_vec(),
            slack: slack.clone(),
            choices: RwLock::new(BTreeMap::new()),
        }),
    };
    let mut args: Vec<Descriptor> = seqs.iter().map(|s| s.descriptor().clone()).collect();
    args.push(Descriptor::atom(format_rational(slack)));
    let limit = BitSequence::new(
        Descriptor::node("splice", args),
        SpliceEval { map: map.clone() },
    );
    Ok((limit, map))
}

pub fn default_slack() -> BigRational {
    BigRational::from_integer(2.into())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub tail_max: BigRational,
    /// `2^{−m+1}·slack`.
    pub bound: BigRational,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub certified_upto: u64,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| !r.flagged)
    }
}

/// `tail_max ρ(C_m △ limit)` per member against `2^{−m+1}·slack`.
pub fn convergence_report(
    seqs: &[BitSequence],
    limit: &BitSequence,
    grid: &CheckpointGrid,
    slack: &BigRational,
) -> Result<ConvergenceReport> {
    let mut all = seqs.to_vec();
    all.push(limit.clone());
    let (table, horizon) = tail_max_table(&all, grid)?;
    let last = seqs.len();
    let two = BigRational::from_integer(2.into());
    let rows = (0..seqs.len())
        .map(|m| {
            let tail_max = table[m][last].clone();
            let bound = &two * inverse_power_of_two(m as u64) * slack;
            ConvergenceRow {
                m,
                flagged: tail_max > bound,
                tail_max,
                bound,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        rows,
        certified_upto: horizon,
    })
}

/// Renders `2^{−m}` bounds compactly for reports.
pub fn bound_label(bound: &BigRational) -> String {
    if bound.numer().is_one() {
        if let Some(d) = bound.denom().to_u64() {
            if d == 1 {
                return "1".into();
            }
            if d.is_power_of_two() {
                return format!("2^-{}", d.trailing_zeros());
            }
        }
    }
    format_rational(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codings::{approximate_r, code, IntervalKind};
    use crate::density::factor2_check;
    use crate::geodesics::c_r;
    use crate::numeric::rational_from_u64;
    use crate::seq::{bernoulli_stream, empty, finite, full, symdiff};

    fn target() -> BitSequence {
        finite([0u32, 2, 4, 6].map(BigIndex::from))
    }

    fn approximants(count: u64) -> Vec<BitSequence> {
        let a = target();
        (0..count).map(|k| approximate_r(&a, k)).collect()
    }

    fn dyadic(limit: u64) -> CheckpointGrid {
        CheckpointGrid::dyadic(1, limit).unwrap()
    }

    #[test]
    fn constant_list_is_cauchy() {
        let s = bernoulli_stream(3);
        let report = strong_cauchy_check(&[s.clone(), s.clone(), s], &dyadic(1 << 14)).unwrap();
        assert!(report.passed());
        assert!(report
            .entries
            .iter()
            .all(|e| e.tail_max == ratio(0u32, 1u32)));
        assert_eq!(report.certified_upto, (1 << 14) - 1);
    }

    #[test]
    fn distance_one_sits_on_the_first_bound() {
        // δ(∅, ω) = 1 = 2^0, so the pair (0, 1) meets its bound with equality
        let report = strong_cauchy_check(&[empty(), full(), empty()], &dyadic(1 << 10)).unwrap();
        assert_eq!(report.entries[0].tail_max, ratio(1u32, 1u32));
        assert!(report.entries[0].pass);
        let fail = report.first_failure().unwrap();
        assert_eq!((fail.m, fail.n), (1, 2));
        assert_eq!(fail.tail_max, ratio(1u32, 1u32));
    }

    #[test]
    fn odd_step_approximants_are_cauchy() {
        let a = target();
        let seqs: Vec<_> = [1u64, 3, 5, 7, 9]
            .iter()
            .map(|&k| approximate_r(&a, k))
            .collect();
        let report = strong_cauchy_check(&seqs, &dyadic(1 << 16)).unwrap();
        assert!(report.passed(), "{:?}", report.first_failure());
    }

    #[test]
    fn extraction() {
        let s = bernoulli_stream(8);
        let same = vec![s.clone(), s.clone(), s.clone()];
        assert_eq!(
            extract_strong_subsequence(&same, &dyadic(1 << 12)).unwrap(),
            vec![0, 1, 2]
        );
        let picked = extract_strong_subsequence(&approximants(9), &dyadic(1 << 16)).unwrap();
        // consecutive approximants of this target already differ by less than 2^{-m-1}
        assert_eq!(picked, (0..9).collect::<Vec<_>>());
        let bad = vec![empty(), full()];
        assert!(matches!(
            extract_strong_subsequence(&bad, &dyadic(1 << 10)),
            Err(Error::NotCauchy(_))
        ));
    }

    #[test]
    fn splice_of_constant_sequence() {
        let s = bernoulli_stream(21);
        let (limit, map) =
            splice_limit(&[s.clone(), s.clone(), s.clone()], &default_slack()).unwrap();
        assert_eq!(
            limit.range(0, 1 << 14).unwrap(),
            s.range(0, 1 << 14).unwrap()
        );
        for (k, n) in map.table(12).unwrap() {
            assert!(n as u64 <= k);
        }
    }

    #[test]
    fn splice_recovers_r_code() {
        let seqs = approximants(9);
        let (limit, map) = splice_limit(&seqs, &default_slack()).unwrap();
        let exact = code(IntervalKind::R, &target());
        for k in 0..=16u64 {
            let lo = (1u64 << k) - 1;
            let hi = (1u64 << (k + 1)) - 1;
            assert_eq!(
                limit.range(lo, hi).unwrap(),
                exact.range(lo, hi).unwrap(),
                "J_{k}"
            );
            let n = map.choice(k).unwrap();
            assert!(n as u64 <= k);
            assert_eq!(limit.range(lo, hi).unwrap(), seqs[n].range(lo, hi).unwrap());
        }
        let big = BigIndex::from(70_000u32);
        assert_eq!(limit.evaluate(&big).unwrap(), exact.evaluate(&big).unwrap());
    }

    #[test]
    fn splice_ignores_early_garbage() {
        let good = approximants(9);
        let exact = code(IntervalKind::R, &target());
        let mut seqs = vec![
            full(),
            empty(),
            symdiff(&exact, &c_r(&rational_from_u64(1, 4)).unwrap()),
        ];
        seqs.extend(good.into_iter().skip(3));
        let (limit, _) = splice_limit(&seqs, &default_slack()).unwrap();
        for k in 4..=14u64 {
            let lo = (1u64 << k) - 1;
            let hi = (1u64 << (k + 1)) - 1;
            assert_eq!(
                limit.range(lo, hi).unwrap(),
                exact.range(lo, hi).unwrap(),
                "J_{k}"
            );
        }
    }

    #[test]
    fn convergence_of_r_approximants() {
        let seqs = approximants(9);
        let (limit, _) = splice_limit(&seqs, &default_slack()).unwrap();
        let grid = dyadic(1 << 16);
        let report = convergence_report(&seqs, &limit, &grid, &default_slack()).unwrap();
        assert!(report.passed());
        for s in &seqs {
            let diff = symdiff(s, &limit);
            assert!(factor2_check(&diff, 14).unwrap().passed());
        }
        let inverted =
            convergence_report(&seqs, &limit.complement(), &grid, &default_slack()).unwrap();
        for row in &inverted.rows {
            assert!(row.tail_max > rational_from_u64(3, 4));
            assert_eq!(row.flagged, row.bound < rational_from_u64(3, 4));
        }
        assert!(!inverted.passed());
    }

    #[test]
    fn bound_labels() {
        assert_eq!(bound_label(&inverse_power_of_two(5)), "2^-5");
        assert_eq!(bound_label(&rational_from_u64(3, 4)), "3/4");
    }
}
