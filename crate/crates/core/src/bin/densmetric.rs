use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use densmetric::cauchy::{self, bound_label};
use densmetric::codings::{self, DecodePolicy};
use densmetric::density::{self, CheckpointGrid, GridKind};
use densmetric::numeric::{factorial, format_float, format_rational, parse_rational, ratio};
use densmetric::seq::{self, parse_bits, BitSequence};
use densmetric::setspec::parse_spec;
use densmetric::tree::{self, TreeCode};

#[derive(Parser)]
#[command(
    name = "densmetric",
    version,
    about = "Exact density experiments on infinite binary sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file, or `-` for standard output.
    #[arg(long, global = true, default_value = "-")]
    out: String,
}

#[derive(Subcommand)]
enum Command {
    /// ρ_n of one set at every checkpoint.
    Density {
        #[arg(long)]
        set: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// ρ_n of A △ B with the running tail maximum.
    Delta {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Block densities d_k on J_k = [2^k − 1, 2^{k+1} − 1).
    Blocks {
        #[arg(long)]
        set: String,
        /// Largest position covered; accepts `k!`, `a^b` and `+` sums.
        #[arg(long, default_value = "2^16")]
        limit: String,
    },
    /// Recover the coded set bit by bit.
    Decode {
        #[arg(long)]
        set: String,
        #[arg(long, value_enum, default_value_t = Coding::J)]
        coding: Coding,
        /// Number of bits to decode.
        #[arg(long, default_value_t = 16)]
        bits: u64,
        /// Expected source set, reported alongside each decoded bit.
        #[arg(long)]
        x: Option<String>,
        /// Fraction of each block to flip before decoding.
        #[arg(long, default_value = "0")]
        corrupt: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Splice a limit from a sequence of sets and report convergence.
    Limit {
        /// Members, in order. With `--approximants`, a single target.
        #[arg(long, required = true)]
        set: Vec<String>,
        /// Use the first N R-coding approximants of the single `--set`.
        #[arg(long)]
        approximants: Option<u64>,
        #[arg(long, default_value = "2")]
        slack: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Best lower agreement density between a target and describers.
    Gamma {
        #[arg(long)]
        set: String,
        /// Describers.
        #[arg(long, required = true)]
        x: Vec<String>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Query strings of the balanced tree.
    Tree {
        /// Direction bits.
        #[arg(long)]
        path: String,
        #[arg(long)]
        index: String,
        #[arg(long, conflicts_with_all = ["popcount", "agree"])]
        bit: bool,
        #[arg(long, conflicts_with = "agree")]
        popcount: bool,
        /// Count agreements with the string of this other direction path.
        #[arg(long)]
        agree: Option<String>,
    },
    /// Run finite identity checks on a set.
    Check {
        #[arg(long)]
        set: String,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        /// Largest block index for the factor-2 check.
        #[arg(long, default_value_t = 14)]
        blocks: u64,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Coding {
    J,
    R,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridChoice {
    Linear,
    Geometric,
    Factorial,
    Dyadic,
    Triangular,
}

#[derive(Args)]
struct GridArgs {
    /// Checkpoint family; chosen from the set when omitted.
    #[arg(long, value_enum)]
    grid: Option<GridChoice>,
    /// Checkpoints below this are excluded from tail statistics.
    #[arg(long)]
    warmup: Option<String>,
    /// Largest checkpoint; accepts `k!`, `a^b` and `+` sums.
    #[arg(long)]
    limit: Option<String>,
    /// Step of the linear grid.
    #[arg(long, default_value_t = 1)]
    step: u64,
}

impl GridArgs {
    fn build(&self, seq: &BitSequence, fallback: Option<GridKind>) -> Result<CheckpointGrid> {
        let default = CheckpointGrid::default_for(seq);
        let kind = match self.grid {
            Some(GridChoice::Linear) => GridKind::Linear { step: self.step },
            Some(GridChoice::Geometric) => GridKind::Geometric {
                ratio: BigRational::new(5.into(), 4.into()),
            },
            Some(GridChoice::Factorial) => GridKind::Factorial,
            Some(GridChoice::Dyadic) => GridKind::Dyadic,
            Some(GridChoice::Triangular) => GridKind::Triangular,
            None => fallback.unwrap_or(default.kind),
        };
        let warmup = match &self.warmup {
            Some(w) => literal_u64(w).context("--warmup")?,
            None => default.warmup,
        };
        let limit = match &self.limit {
            Some(l) => literal_u64(l).context("--limit")?,
            None => default.limit,
        };
        Ok(CheckpointGrid::new(kind, warmup.min(limit), limit)?)
    }
}

/// `k!`, `a^b`, decimal, or a `+`-separated sum of those.
fn parse_literal(text: &str) -> Result<BigUint> {
    let mut total = BigUint::zero();
    for term in text.split('+') {
        let term = term.trim();
        let value = if let Some(k) = term.strip_suffix('!') {
            factorial(
                k.trim()
                    .parse()
                    .with_context(|| format!("bad factorial {term:?}"))?,
            )
        } else if let Some((base, exp)) = term.split_once('^') {
            let base: BigUint = base
                .trim()
                .parse()
                .with_context(|| format!("bad base in {term:?}"))?;
            let exp: u32 = exp
                .trim()
                .parse()
                .with_context(|| format!("bad exponent in {term:?}"))?;
            base.pow(exp)
        } else {
            term.parse()
                .with_context(|| format!("bad number {term:?}"))?
        };
        total += value;
    }
    Ok(total)
}

fn literal_u64(text: &str) -> Result<u64> {
    parse_literal(text)?
        .to_u64()
        .ok_or_else(|| anyhow!("{text} does not fit in 64 bits"))
}

fn build_set(text: &str, flag: &str) -> Result<BitSequence> {
    let spec = parse_spec(text).map_err(|e| {
        let caret = " ".repeat(e.offset());
        anyhow!("{flag}: {e}\n  {text}\n  {caret}^")
    })?;
    Ok(spec.build()?)
}

fn rational_flag(text: &str, flag: &str) -> Result<BigRational> {
    parse_rational(text).ok_or_else(|| anyhow!("{flag}: expected p/q, got {text:?}"))
}

/// CSV with a header, data rows and trailing `#` metadata.
struct Csv {
    body: String,
    meta: Vec<(String, String)>,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv {
            body: format!("{}\n", header.join(",")),
            meta: Vec::new(),
        }
    }

    fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.body, "{}", fields.join(","));
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    fn finish(mut self, horizon: impl ToString) -> String {
        let _ = writeln!(self.body, "# horizon={}", horizon.to_string());
        for (k, v) in self.meta {
            let _ = writeln!(self.body, "# {k}={v}");
        }
        self.body
    }
}

fn exact(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn pass(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.to_string()
}

fn density_cmd(set: &str, grid: &GridArgs) -> Result<String> {
    let s = build_set(set, "--set")?;
    let grid = grid.build(&s, None)?;
    let profile = density::density_profile(&s, &grid)?;
    let mut csv = Csv::new(&["n", "count", "rho_exact", "rho_float"]);
    for p in &profile.points {
        csv.row(&[
            p.n.to_string(),
            p.count.to_string(),
            exact(&p.rho),
            format_float(&p.rho),
        ]);
    }
    csv.meta("set", s.descriptor());
    csv.meta("warmup", grid.warmup);
    csv.meta("tail_max", exact(&profile.tail_max));
    csv.meta("tail_min", exact(&profile.tail_min));
    Ok(csv.finish(profile.horizon()))
}

fn delta_cmd(a: &str, b: &str, grid: &GridArgs) -> Result<String> {
    let (sa, sb) = (build_set(a, "--a")?, build_set(b, "--b")?);
    let diff = seq::symdiff(&sa, &sb);
    let grid = grid.build(&diff, None)?;
    let (tail_max, profile) = density::delta_estimate(&sa, &sb, &grid)?;
    let mut csv = Csv::new(&[
        "n",
        "count",
        "rho_exact",
        "rho_float",
        "tail_max_exact",
        "tail_max_float",
    ]);
    let mut running: Option<BigRational> = None;
    for p in &profile.points {
        if p.n >= grid.warmup {
            running = Some(match running {
                Some(r) if r >= p.rho => r,
                _ => p.rho.clone(),
            });
        }
        let (te, tf) = match &running {
            Some(r) => (exact(r), format_float(r)),
            None => (String::new(), String::new()),
        };
        csv.row(&[
            p.n.to_string(),
            p.count.to_string(),
            exact(&p.rho),
            format_float(&p.rho),
            te,
            tf,
        ]);
    }
    csv.meta("a", sa.descriptor());
    csv.meta("b", sb.descriptor());
    csv.meta("warmup", grid.warmup);
    csv.meta("tail_max", exact(&tail_max));
    csv.meta("tail_min", exact(&profile.tail_min));
    Ok(csv.finish(profile.horizon()))
}

fn blocks_cmd(set: &str, limit: &str) -> Result<String> {
    let s = build_set(set, "--set")?;
    let limit = parse_literal(limit).context("--limit")?;
    let mut csv = Csv::new(&["k", "start", "end", "count", "d_exact", "d_float"]);
    let mut horizon = BigUint::zero();
    let mut k = 0u64;
    loop {
        let end = seq_pow2(k + 1) - 1u32;
        if end > limit {
            break;
        }
        let block = density::block_density(&s, k)?;
        let start = seq_pow2(k) - 1u32;
        csv.row(&[
            k.to_string(),
            start.to_string(),
            end.to_string(),
            block.count.to_string(),
            exact(&block.d),
            format_float(&block.d),
        ]);
        horizon = end;
        k += 1;
    }
    csv.meta("set", s.descriptor());
    Ok(csv.finish(horizon))
}

fn seq_pow2(k: u64) -> BigUint {
    BigUint::one() << k
}

#[allow(clippy::too_many_arguments)]
fn decode_cmd(
    set: &str,
    coding: Coding,
    bits: u64,
    x: Option<&str>,
    corrupt: &str,
    seed: u64,
    grid: &GridArgs,
) -> Result<String> {
    let c = build_set(set, "--set")?;
    let rate = rational_flag(corrupt, "--corrupt")?;
    let noisy = if rate.is_zero() {
        c.clone()
    } else {
        codings::corrupt_blocks(&c, &rate, seed)?
    };
    let expected = x.map(|t| build_set(t, "--x")).transpose()?;
    let mut header = vec!["k", "bit"];
    if expected.is_some() {
        header.extend(["expected", "match"]);
    }
    let mut csv = Csv::new(&header);
    let mut all_match = true;
    let r_grid = match coding {
        Coding::R => Some(grid.build(&noisy, Some(GridKind::Linear { step: 1 }))?),
        Coding::J => None,
    };
    let mut horizon = BigUint::zero();
    for k in 0..bits {
        let bit = match coding {
            Coding::J => {
                horizon = seq_pow2(k + 1) - 1u32;
                codings::decode_j(&noisy, k, DecodePolicy::default())?
            }
            Coding::R => {
                let g = r_grid.as_ref().expect("built for R");
                horizon = BigUint::from(g.limit);
                codings::decode_r(&noisy, k, g)?
            }
        };
        let mut row = vec![k.to_string(), u8::from(bit).to_string()];
        if let Some(e) = &expected {
            let want = e.at(k)?;
            all_match &= want == bit;
            row.push(u8::from(want).to_string());
            row.push(pass(want == bit));
        }
        csv.row(&row);
    }
    csv.meta("set", noisy.descriptor());
    if expected.is_some() {
        csv.meta("recovered", pass(all_match));
    }
    Ok(csv.finish(horizon))
}

fn limit_cmd(
    sets: &[String],
    approximants: Option<u64>,
    slack: &str,
    grid: &GridArgs,
) -> Result<String> {
    let members: Vec<BitSequence> = match approximants {
        Some(n) => {
            let [target] = sets else {
                bail!("--approximants takes exactly one --set");
            };
            let a = build_set(target, "--set")?;
            (0..n).map(|k| codings::approximate_r(&a, k)).collect()
        }
        None => sets
            .iter()
            .map(|t| build_set(t, "--set"))
            .collect::<Result<_>>()?,
    };
    if members.len() < 2 {
        bail!("need at least two members");
    }
    let slack = rational_flag(slack, "--slack")?;
    let grid = grid.build(&members[0], Some(GridKind::Dyadic))?;
    let (limit, map) = cauchy::splice_limit(&members, &slack)?;
    let report = cauchy::convergence_report(&members, &limit, &grid, &slack)?;
    let cauchy_report = cauchy::strong_cauchy_check(&members, &grid)?;
    let mut csv = Csv::new(&[
        "m",
        "member",
        "tail_max_exact",
        "tail_max_float",
        "bound",
        "flagged",
    ]);
    for row in &report.rows {
        csv.row(&[
            row.m.to_string(),
            members[row.m].descriptor().to_string().replace(',', ";"),
            exact(&row.tail_max),
            format_float(&row.tail_max),
            bound_label(&row.bound),
            row.flagged.to_string(),
        ]);
    }
    let max_k = 63 - u64::from(grid.limit.saturating_add(1).leading_zeros());
    let blocks: Vec<String> = map
        .table(max_k.saturating_sub(1))?
        .iter()
        .map(|(k, n)| format!("{k}:{n}"))
        .collect();
    csv.meta("slack", format_rational(&slack));
    csv.meta("splice_map", blocks.join(" "));
    csv.meta("strongly_cauchy", pass(cauchy_report.passed()));
    csv.meta("converged", pass(report.passed()));
    Ok(csv.finish(report.certified_upto))
}

fn gamma_cmd(set: &str, describers: &[String], grid: &GridArgs) -> Result<String> {
    let target = build_set(set, "--set")?;
    let ds: Vec<BitSequence> = describers
        .iter()
        .map(|t| build_set(t, "--x"))
        .collect::<Result<_>>()?;
    let grid = grid.build(&target, None)?;
    let values = density::gamma_breakdown(&target, &ds, &grid)?;
    let mut csv = Csv::new(&["describer", "tail_min_exact", "tail_min_float"]);
    for (d, v) in ds.iter().zip(&values) {
        csv.row(&[
            d.descriptor().to_string().replace(',', ";"),
            exact(v),
            format_float(v),
        ]);
    }
    let best = values.iter().max().expect("nonempty");
    csv.meta("set", target.descriptor());
    csv.meta("gamma_lower", exact(best));
    Ok(csv.finish(grid.checkpoints().last().copied().unwrap_or(0)))
}

fn tree_cmd(path: &str, index: &str, popcount: bool, agree: Option<&str>) -> Result<String> {
    let dirs = parse_bits(path).ok_or_else(|| anyhow!("--path: expected binary digits"))?;
    let m = parse_literal(index).context("--index")?;
    if let Some(other) = agree {
        let other = parse_bits(other).ok_or_else(|| anyhow!("--agree: expected binary digits"))?;
        let (a, b) = (TreeCode::new(&dirs)?, TreeCode::new(&other)?);
        let count = tree::pairwise_agreement_count(&a, &b, &m)?;
        let mut csv = Csv::new(&["path", "other", "index", "agreements", "common_prefix"]);
        csv.row(&[
            seq::bit_string(&dirs),
            seq::bit_string(&other),
            m.to_string(),
            count.agreements.to_string(),
            count.common_prefix.to_string(),
        ]);
        return Ok(csv.finish(&m));
    }
    let path_seq = tree::tree_path_from_bits(&dirs);
    let value = if popcount {
        path_seq
            .count_shortcut(&m)
            .expect("tree paths count symbolically")?
            .to_string()
    } else {
        u8::from(path_seq.evaluate(&m)?).to_string()
    };
    let mut csv = Csv::new(&["path", "index", if popcount { "popcount" } else { "bit" }]);
    csv.row(&[seq::bit_string(&dirs), m.to_string(), value]);
    Ok(csv.finish(&m))
}

fn check_cmd(
    set: &str,
    a: Option<&str>,
    b: Option<&str>,
    blocks: u64,
    grid: &GridArgs,
) -> Result<String> {
    let s = build_set(set, "--set")?;
    let grid = grid.build(&s, None)?;
    let checkpoints = grid.checkpoints();
    let mut csv = Csv::new(&["check", "result", "detail"]);

    let comp = seq::complement(&s);
    let counts = density::prefix_counts(&s, &checkpoints, grid.budget)?;
    let comp_counts = density::prefix_counts(&comp, &checkpoints, grid.budget)?;
    let bad = checkpoints
        .iter()
        .zip(counts.iter().zip(&comp_counts))
        .find(|(&n, (&c, &d))| ratio(c, n) + ratio(d, n) != BigRational::one());
    csv.row(&[
        "complement".into(),
        pass(bad.is_none()),
        bad.map_or(format!("{} checkpoints", checkpoints.len()), |(n, _)| {
            format!("n={n}")
        }),
    ]);

    let f2 = density::factor2_check(&s, blocks)?;
    let first_bad = f2.rows.iter().find(|r| !(r.block_ok && r.prefix_ok));
    csv.row(&[
        "factor2".into(),
        pass(f2.passed()),
        first_bad.map_or(format!("k<={blocks}"), |r| format!("k={}", r.k)),
    ]);

    if let (Some(a), Some(b)) = (a, b) {
        let (sa, sb) = (build_set(a, "--a")?, build_set(b, "--b")?);
        let count = |x: &BitSequence, y: &BitSequence| {
            density::prefix_counts(&seq::symdiff(x, y), &checkpoints, grid.budget)
        };
        let (sc, ab, sa_) = (count(&s, &sb)?, count(&sa, &sb)?, count(&s, &sa)?);
        let tri = (0..checkpoints.len()).find(|&i| sc[i] > sa_[i] + ab[i]);
        csv.row(&[
            "triangle".into(),
            pass(tri.is_none()),
            tri.map_or("d(set;b) <= d(set;a) + d(a;b)".into(), |i| {
                format!("n={}", checkpoints[i])
            }),
        ]);
        let (ts, _) = density::delta_estimate(&s, &sa, &grid)?;
        let (tr, _) = density::delta_estimate(&sa, &s, &grid)?;
        csv.row(&["symmetry".into(), pass(ts == tr), exact(&ts)]);
    }
    csv.meta("set", s.descriptor());
    Ok(csv.finish(checkpoints.last().copied().unwrap_or(0)))
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Density { set, grid } => density_cmd(set, grid),
        Command::Delta { a, b, grid } => delta_cmd(a, b, grid),
        Command::Blocks { set, limit } => blocks_cmd(set, limit),
        Command::Decode {
            set,
            coding,
            bits,
            x,
            corrupt,
            seed,
            grid,
        } => decode_cmd(set, *coding, *bits, x.as_deref(), corrupt, *seed, grid),
        Command::Limit {
            set,
            approximants,
            slack,
            grid,
        } => limit_cmd(set, *approximants, slack, grid),
        Command::Gamma { set, x, grid } => gamma_cmd(set, x, grid),
        Command::Tree {
            path,
            index,
            bit: _,
            popcount,
            agree,
        } => tree_cmd(path, index, *popcount, agree.as_deref()),
        Command::Check {
            set,
            a,
            b,
            blocks,
            grid,
        } => check_cmd(set, a.as_deref(), b.as_deref(), *blocks, grid),
    }
}

fn emit(cli: &Cli) -> Result<()> {
    let output = run(cli)?;
    if cli.out == "-" {
        std::io::stdout().lock().write_all(output.as_bytes())?;
    } else {
        fs::write(&cli.out, output).with_context(|| format!("writing {}", cli.out))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match emit(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(parse_literal("8!").unwrap(), BigUint::from(40_320u32));
        assert_eq!(parse_literal("2^20").unwrap(), BigUint::from(1u32 << 20));
        assert_eq!(parse_literal("2^4 + 3! + 1").unwrap(), BigUint::from(23u32));
        assert!(parse_literal("x").is_err());
        assert!(literal_u64("2^64").is_err());
    }

    #[test]
    fn csv_layout() {
        assert_eq!(exact(&BigRational::one()), "1/1");
        let csv = Csv::new(&["a", "b"]).finish(7);
        assert_eq!(csv, "a,b\n# horizon=7\n");
    }
}
