//! Exact prefix and block densities, and the finite surrogates of upper and
//! lower density used throughout the crate.
//!
//! `ρ̄` and `ρ̲` are not computable. Everything here reports `tail_max` and
//! `tail_min` over a declared [`CheckpointGrid`]: the extreme values of `ρ_n`
//! at checkpoints `n ≥ warmup`. Those are finite evidence, not limits.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::{factorial, ratio};
use crate::seq::{self, BigIndex, BitSequence, DEFAULT_PREFIX_CAP};

const SCAN_CHUNK: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridKind {
    Linear {
        step: u64,
    },
    /// Successive checkpoints grow by at least this factor (and at least 1).
    Geometric {
        ratio: BigRational,
    },
    /// `k!` for `k ≥ 1`: the boundaries of the `I_n` blocks.
    Factorial,
    /// `2^{k+1} − 1`: the right ends of the `J_k` blocks.
    Dyadic,
    /// `i(i−1)/2` for `i ≥ 2`: the left ends `m_i` of the triangular blocks `L_i`.
    Triangular,
    Explicit(Vec<u64>),
}

/// A finite set of checkpoints `n` at which `ρ_n` is sampled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointGrid {
    pub kind: GridKind,
    pub warmup: u64,
    pub limit: u64,
    pub budget: u64,
}

impl CheckpointGrid {
    pub fn new(kind: GridKind, warmup: u64, limit: u64) -> Result<Self> {
        let grid = CheckpointGrid {
            kind,
            warmup,
            limit,
            budget: DEFAULT_PREFIX_CAP,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn linear(step: u64, warmup: u64, limit: u64) -> Result<Self> {
        Self::new(GridKind::Linear { step }, warmup, limit)
    }

    pub fn geometric(ratio: BigRational, warmup: u64, limit: u64) -> Result<Self> {
        Self::new(GridKind::Geometric { ratio }, warmup, limit)
    }

    pub fn factorial(warmup: u64, limit: u64) -> Result<Self> {
        Self::new(GridKind::Factorial, warmup, limit)
    }

    pub fn dyadic(warmup: u64, limit: u64) -> Result<Self> {
        Self::new(GridKind::Dyadic, warmup, limit)
    }

    pub fn triangular(warmup: u64, limit: u64) -> Result<Self> {
        Self::new(GridKind::Triangular, warmup, limit)
    }

    pub fn explicit(points: Vec<u64>, warmup: u64) -> Result<Self> {
        let limit = points.last().copied().unwrap_or(0);
        Self::new(GridKind::Explicit(points), warmup, limit)
    }

    /// Grid chosen from the construction: factorial for I-codings, dyadic
    /// for J-codings, otherwise geometric with ratio 5/4 on `[2^10, 2^20]`.
    pub fn default_for(seq: &BitSequence) -> Self {
        let desc = seq.descriptor();
        let kind = if desc.mentions("icode") || desc.mentions("diag") {
            GridKind::Factorial
        } else if desc.mentions("jcode") {
            GridKind::Dyadic
        } else {
            GridKind::Geometric {
                ratio: crate::numeric::rational_from_u64(5, 4),
            }
        };
        CheckpointGrid {
            kind,
            warmup: 1 << 10,
            limit: 1 << 20,
            budget: DEFAULT_PREFIX_CAP,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Result<Self> {
        self.budget = budget;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.limit == 0 {
            return Err(Error::InvalidGrid("limit must be positive".into()));
        }
        if self.warmup > self.limit {
            return Err(Error::InvalidGrid(format!(
                "warmup {} exceeds limit {}",
                self.warmup, self.limit
            )));
        }
        if self.limit > self.budget {
            return Err(Error::budget(self.limit, self.budget));
        }
        match &self.kind {
            GridKind::Linear { step } if *step == 0 => {
                Err(Error::InvalidGrid("linear step must be positive".into()))
            }
            GridKind::Geometric { ratio } if *ratio <= BigRational::from_integer(1.into()) => {
                Err(Error::InvalidGrid("geometric ratio must exceed 1".into()))
            }
            GridKind::Explicit(points) => {
                if points.is_empty() || points[0] == 0 || points.windows(2).any(|w| w[0] >= w[1]) {
                    Err(Error::InvalidGrid(
                        "explicit checkpoints must be positive and strictly increasing".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// The checkpoints, strictly increasing, all in `[1, limit]`.
    pub fn checkpoints(&self) -> Vec<u64> {
        let limit = self.limit;
        let mut out = Vec::new();
        match &self.kind {
            GridKind::Linear { step } => {
                let mut n = *step;
                while n <= limit {
                    out.push(n);
                    n += step;
                }
            }
            GridKind::Geometric { ratio } => {
                let num = ratio.numer().magnitude().clone();
                let den = ratio.denom().magnitude().clone();
                let mut n = 1u64;
                while n <= limit {
                    out.push(n);
                    let scaled = (BigUint::from(n) * &num + &den - 1u32) / &den;
                    let next = scaled.to_u64().unwrap_or(u64::MAX);
                    n = next.max(n + 1);
                }
            }
            GridKind::Factorial => {
                for k in 1u64.. {
                    let f = factorial(k);
                    match f.to_u64() {
                        Some(v) if v <= limit => {
                            if out.last() != Some(&v) {
                                out.push(v);
                            }
                        }
                        _ => break,
                    }
                }
            }
            GridKind::Dyadic => {
                for k in 0u32..63 {
                    let v = (1u64 << (k + 1)) - 1;
                    if v > limit {
                        break;
                    }
                    out.push(v);
                }
            }
            GridKind::Triangular => {
                let mut i = 2u64;
                loop {
                    let v = i * (i - 1) / 2;
                    if v > limit {
                        break;
                    }
                    out.push(v);
                    i += 1;
                }
            }
            GridKind::Explicit(points) => {
                out.extend(points.iter().copied().filter(|&p| p <= limit));
            }
        }
        out
    }
}

/// `(n, |A ↾ n|, ρ_n(A))` at one checkpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityPoint {
    pub n: u64,
    pub count: u64,
    pub rho: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityProfile {
    pub points: Vec<DensityPoint>,
    pub warmup: u64,
    /// Max of `ρ_n` over checkpoints `n ≥ warmup`.
    pub tail_max: BigRational,
    /// Min of `ρ_n` over the same checkpoints.
    pub tail_min: BigRational,
}

impl DensityProfile {
    /// Largest checkpoint examined.
    pub fn horizon(&self) -> u64 {
        self.points.last().map_or(0, |p| p.n)
    }

    fn from_counts(checkpoints: &[u64], counts: &[u64], warmup: u64) -> Result<Self> {
        let points: Vec<DensityPoint> = checkpoints
            .iter()
            .zip(counts)
            .map(|(&n, &count)| DensityPoint {
                n,
                count,
                rho: ratio(count, n),
            })
            .collect();
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid has no checkpoints".into()));
        }
        // With no checkpoint at or past warmup the tail is the final point.
        let tail: Vec<&DensityPoint> = {
            let t: Vec<&DensityPoint> = points.iter().filter(|p| p.n >= warmup).collect();
            if t.is_empty() {
                vec![points.last().expect("nonempty")]
            } else {
                t
            }
        };
        let tail_max = tail.iter().map(|p| &p.rho).max().expect("nonempty").clone();
        let tail_min = tail.iter().map(|p| &p.rho).min().expect("nonempty").clone();
        Ok(DensityProfile {
            points,
            warmup,
            tail_max,
            tail_min,
        })
    }
}

/// `|C ∩ J_k| / 2^k` on `J_k = [2^k − 1, 2^{k+1} − 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDensity {
    pub k: u64,
    pub count: BigUint,
    pub d: BigRational,
}

/// `|A ↾ n|` by scanning, refusing when `n > cap`.
pub fn count_prefix(seq: &BitSequence, n: u64, cap: u64) -> Result<u64> {
    Ok(prefix_counts(seq, &[n], cap)?[0])
}

/// Ones in `[start, end)` by scanning.
pub fn count_range(seq: &BitSequence, start: u64, end: u64, cap: u64) -> Result<u64> {
    if end > cap {
        return Err(Error::budget(end, cap));
    }
    let mut total = 0u64;
    let mut pos = start;
    let mut buf = vec![false; SCAN_CHUNK as usize];
    while pos < end {
        let len = (end - pos).min(SCAN_CHUNK) as usize;
        seq.fill(pos, &mut buf[..len])?;
        total += buf[..len].iter().filter(|&&b| b).count() as u64;
        pos += len as u64;
    }
    Ok(total)
}

/// `|A ↾ n|` for each (increasing) checkpoint, in one sequential pass.
pub fn prefix_counts(seq: &BitSequence, checkpoints: &[u64], cap: u64) -> Result<Vec<u64>> {
    let Some(&last) = checkpoints.last() else {
        return Ok(Vec::new());
    };
    if last > cap {
        return Err(Error::budget(last, cap));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let mut running = 0u64;
    let mut pos = 0u64;
    let mut buf = vec![false; SCAN_CHUNK as usize];
    while next < checkpoints.len() && checkpoints[next] == 0 {
        out.push(0);
        next += 1;
    }
    while next < checkpoints.len() {
        let len = (last - pos).min(SCAN_CHUNK) as usize;
        seq.fill(pos, &mut buf[..len])?;
        for (i, &b) in buf[..len].iter().enumerate() {
            running += u64::from(b);
            let covered = pos + i as u64 + 1;
            while next < checkpoints.len() && checkpoints[next] == covered {
                out.push(running);
                next += 1;
            }
        }
        pos += len as u64;
    }
    Ok(out)
}

/// `ρ_n(A) = |A ↾ n| / n` exactly. Uses the sequence's closed-form count when
/// it has one, otherwise scans a prefix of at most [`DEFAULT_PREFIX_CAP`] bits.
pub fn rho_at(seq: &BitSequence, n: &BigIndex) -> Result<BigRational> {
    rho_at_capped(seq, n, DEFAULT_PREFIX_CAP)
}

pub fn rho_at_capped(seq: &BitSequence, n: &BigIndex, cap: u64) -> Result<BigRational> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("ρ_n needs n ≥ 1".into()));
    }
    if let Some(count) = seq.count_shortcut(n) {
        return Ok(ratio(count?, n.clone()));
    }
    let small = seq::small_index(n, cap)?;
    Ok(ratio(count_prefix(seq, small, cap)?, small))
}

/// `ρ_n(A) + ρ_n(¬A) = 1`, evaluated exactly.
pub fn complement_identity_check(seq: &BitSequence, n: &BigIndex) -> Result<bool> {
    let a = rho_at(seq, n)?;
    let b = rho_at(&seq.complement(), n)?;
    Ok(a + b == BigRational::from_integer(1.into()))
}

/// `d_k(C)`. Closed-form counts are used when available, so `k` may be large
/// for atoms; otherwise the block is scanned and must fit the budget.
pub fn block_density(seq: &BitSequence, k: u64) -> Result<BlockDensity> {
    let lo = seq::pow2(k) - 1u32;
    let hi = seq::pow2(k + 1) - 1u32;
    let count = match (seq.count_shortcut(&lo), seq.count_shortcut(&hi)) {
        (Some(a), Some(b)) => b? - a?,
        _ => {
            let start = seq::small_index(&lo, DEFAULT_PREFIX_CAP)?;
            let end = seq::small_index(&hi, DEFAULT_PREFIX_CAP)?;
            BigUint::from(count_range(seq, start, end, DEFAULT_PREFIX_CAP)?)
        }
    };
    let d = ratio(count.clone(), seq::pow2(k));
    Ok(BlockDensity { k, count, d })
}

/// Exact `ρ_n` at every checkpoint of the grid.
pub fn density_profile(seq: &BitSequence, grid: &CheckpointGrid) -> Result<DensityProfile> {
    let checkpoints = grid.checkpoints();
    let counts = prefix_counts(seq, &checkpoints, grid.budget)?;
    DensityProfile::from_counts(&checkpoints, &counts, grid.warmup)
}

/// The δ surrogate: `tail_max` of `ρ_n(a △ b)` over the grid, with the profile.
pub fn delta_estimate(
    a: &BitSequence,
    b: &BitSequence,
    grid: &CheckpointGrid,
) -> Result<(BigRational, DensityProfile)> {
    let profile = density_profile(&seq::symdiff(a, b), grid)?;
    Ok((profile.tail_max.clone(), profile))
}

/// Per-describer `tail_min` of `ρ_n(target ▽ D)`.
pub fn gamma_breakdown(
    target: &BitSequence,
    describers: &[BitSequence],
    grid: &CheckpointGrid,
) -> Result<Vec<BigRational>> {
    if describers.is_empty() {
        return Err(Error::Empty("describer list"));
    }
    describers
        .iter()
        .map(|d| Ok(density_profile(&seq::symagree(target, d), grid)?.tail_min))
        .collect()
}

/// Lower-evidence surrogate of the coarse computability bound restricted to
/// the given describers: the best `tail_min` agreement density.
pub fn gamma_lower_estimate(
    target: &BitSequence,
    describers: &[BitSequence],
    grid: &CheckpointGrid,
) -> Result<BigRational> {
    let values = gamma_breakdown(target, describers, grid)?;
    Ok(values.into_iter().max().expect("nonempty"))
}

/// One block's worth of the factor-2 comparison between `ρ` and `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor2Row {
    pub k: u64,
    pub d_k: BigRational,
    /// `ρ_{2^{k+1}}(C)`.
    pub rho_double: BigRational,
    /// `d_k(C) ≤ 2 ρ_{2^{k+1}}(C)`.
    pub block_ok: bool,
    /// Largest `ρ_m(C)` over `m ∈ [2^k, 2^{k+1})`.
    pub max_rho: BigRational,
    /// `ρ_m(C) < 2 max_{i≤k} d_i(C)` for all those `m` (or `ρ_m = 0` when every
    /// `d_i` so far vanishes).
    pub prefix_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor2Report {
    pub rows: Vec<Factor2Row>,
}

impl Factor2Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.block_ok && r.prefix_ok)
    }
}

/// Checks the finite inequalities behind `d̄/2 ≤ ρ̄ ≤ 2 d̄` for `k ≤ max_k`.
pub fn factor2_check(seq: &BitSequence, max_k: u64) -> Result<Factor2Report> {
    if max_k >= 40 {
        return Err(Error::InvalidArgument(format!("max_k {max_k} too large")));
    }
    let total = 1u64 << (max_k + 1);
    if total > DEFAULT_PREFIX_CAP {
        return Err(Error::budget(total, DEFAULT_PREFIX_CAP));
    }
    let bits = seq.range(0, total)?;
    // cum[m] = |C ↾ m|
    let mut cum = Vec::with_capacity(bits.len() + 1);
    cum.push(0u64);
    for &b in &bits {
        let last = *cum.last().expect("nonempty");
        cum.push(last + u64::from(b));
    }

    let mut rows = Vec::new();
    // best block so far as (count, k): d = count / 2^k
    let mut best: (u64, u64) = (0, 0);
    for k in 0..=max_k {
        let lo = (1u64 << k) - 1;
        let hi = (1u64 << (k + 1)) - 1;
        let block = cum[hi as usize] - cum[lo as usize];
        let double = cum[(hi + 1) as usize];
        let block_ok = block <= double;

        if (block as u128) << best.1 > (best.0 as u128) << k {
            best = (block, k);
        }
        let (best_count, best_k) = best;
        let mut prefix_ok = true;
        let mut max_rho = (0u64, 1u64);
        for m in (1u64 << k)..(1u64 << (k + 1)) {
            let c = cum[m as usize];
            if (c as u128) * (max_rho.1 as u128) > (max_rho.0 as u128) * (m as u128) {
                max_rho = (c, m);
            }
            let ok = if best_count == 0 {
                c == 0
            } else {
                // c / m < 2 · best_count / 2^best_k
                ((c as u128) << best_k) < 2 * (best_count as u128) * (m as u128)
            };
            prefix_ok &= ok;
        }
        rows.push(Factor2Row {
            k,
            d_k: ratio(block, 1u64 << k),
            rho_double: ratio(double, hi + 1),
            block_ok,
            max_rho: ratio(max_rho.0, max_rho.1),
            prefix_ok,
        });
    }
    Ok(Factor2Report { rows })
}
