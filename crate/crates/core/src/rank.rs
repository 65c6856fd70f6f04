//! Append-only materialized prefix of a sequence with rank/select queries.

use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::seq::{Bit, BitSequence};

const MIN_GROWTH: u64 = 1 << 12;

#[derive(Default)]
struct RankState {
    len: u64,
    words: Vec<u64>,
    /// `cum[w]` = ones in words `0..w`.
    cum: Vec<u64>,
}

impl RankState {
    fn total(&self) -> u64 {
        match (self.cum.last(), self.words.last()) {
            (Some(c), Some(w)) => c + u64::from(w.count_ones()),
            _ => 0,
        }
    }
}

/// Grows on demand up to `cap` bits. Extension is idempotent, so concurrent
/// readers only ever observe a longer copy of the same prefix.
pub struct RankIndex {
    seq: BitSequence,
    cap: u64,
    state: RwLock<RankState>,
}

impl RankIndex {
    pub fn new(seq: BitSequence, cap: u64) -> Self {
        RankIndex {
            seq,
            cap,
            state: RwLock::new(RankState::default()),
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    fn ensure(&self, n: u64) -> Result<()> {
        if self.state.read().len >= n {
            return Ok(());
        }
        if n > self.cap {
            return Err(Error::budget(n, self.cap));
        }
        let mut state = self.state.write();
        if state.len >= n {
            return Ok(());
        }
        let target = n
            .max(state.len.saturating_mul(2))
            .max(MIN_GROWTH)
            .next_multiple_of(64)
            .min(self.cap);
        let start = state.len;
        debug_assert_eq!(start % 64, 0);
        let bits = self.seq.range(start, target)?;
        for chunk in bits.chunks(64) {
            let mut word = 0u64;
            for (i, &b) in chunk.iter().enumerate() {
                word |= u64::from(b) << i;
            }
            let before = state.total();
            state.cum.push(before);
            state.words.push(word);
        }
        state.len = target;
        Ok(())
    }

    pub fn bit(&self, n: u64) -> Result<Bit> {
        self.ensure(n + 1)?;
        let state = self.state.read();
        Ok(state.words[(n / 64) as usize] >> (n % 64) & 1 == 1)
    }

    /// Ones in `[0, n)`.
    pub fn rank(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Ok(0);
        }
        self.ensure(n)?;
        let state = self.state.read();
        let w = (n / 64) as usize;
        let r = n % 64;
        if w == state.words.len() {
            return Ok(state.total());
        }
        let partial = if r == 0 {
            0
        } else {
            (state.words[w] & ((1u64 << r) - 1)).count_ones() as u64
        };
        Ok(state.cum[w] + partial)
    }

    /// Position of the `i`-th one (0-based), materializing as far as needed.
    pub fn select(&self, i: u64) -> Result<u64> {
        loop {
            {
                let state = self.state.read();
                if state.total() > i {
                    let w = state.cum.partition_point(|&c| c <= i) - 1;
                    let mut remaining = i - state.cum[w];
                    let mut word = state.words[w];
                    loop {
                        let tz = word.trailing_zeros() as u64;
                        if remaining == 0 {
                            return Ok(w as u64 * 64 + tz);
                        }
                        word &= word - 1;
                        remaining -= 1;
                    }
                }
                if state.len >= self.cap {
                    return Err(Error::TooSparse(format!(
                        "{} has only {} elements below {}",
                        self.seq,
                        state.total(),
                        state.len
                    )));
                }
            }
            let len = self.state.read().len;
            self.ensure((len + 1).min(self.cap))?;
        }
    }

    /// Fills `out` from the cache together with the rank at `start`.
    pub fn bits_with_rank(&self, start: u64, out: &mut [Bit]) -> Result<u64> {
        let end = start + out.len() as u64;
        self.ensure(end)?;
        let base = self.rank(start)?;
        let state = self.state.read();
        for (i, slot) in out.iter_mut().enumerate() {
            let p = start + i as u64;
            *slot = state.words[(p / 64) as usize] >> (p % 64) & 1 == 1;
        }
        Ok(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::BigIndex;
    use crate::seq::{bernoulli_stream, evens, finite};

    #[test]
    fn rank_and_select_match_scans() {
        let s = bernoulli_stream(12);
        let idx = RankIndex::new(s.clone(), 1 << 16);
        let bits = s.range(0, 20_000).unwrap();
        let mut ones = Vec::new();
        let mut running = 0;
        for n in 0..20_000u64 {
            assert_eq!(idx.rank(n).unwrap(), running, "rank at {n}");
            if bits[n as usize] {
                ones.push(n);
                running += 1;
            }
        }
        for (i, &p) in ones.iter().enumerate().step_by(7) {
            assert_eq!(idx.select(i as u64).unwrap(), p);
        }
    }

    #[test]
    fn select_reports_sparse_sets() {
        let idx = RankIndex::new(finite([3u32, 900].map(BigIndex::from)), 5000);
        assert_eq!(idx.select(1).unwrap(), 900);
        assert!(matches!(idx.select(2), Err(Error::TooSparse(_))));
        assert!(matches!(idx.rank(5001), Err(Error::Budget { .. })));
    }

    #[test]
    fn bits_with_rank() {
        let idx = RankIndex::new(evens(), 1 << 14);
        let mut out = vec![false; 10];
        assert_eq!(idx.bits_with_rank(101, &mut out).unwrap(), 51);
        assert!(!out[0] && out[1]);
    }
}
