//! A small expression language for naming sets, e.g.
//! `symdiff(cr:1/2, not(evens))` or `mid(empty, full, rand:7)`.
//!
//! ```text
//! expr  := atom | name '(' expr (',' expr)* ')' | scale '(' expr ',' rational ')'
//! atom  := empty | full | evens | periodic:<bits> | finite:{<ints>} | rand:<seed>
//!        | cr:<rational> | xr:<rational> | treepath:<bits>
//! scale := ar | geo
//! ```

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::codings::{self, IntervalKind, RFamily};
use crate::error::Result;
use crate::numeric::format_rational;
use crate::seq::{self, bit_string, BitSequence};
use crate::{geodesics, tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error at byte {offset}: {message}; expected {}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("arity error at byte {offset}: {name} takes {expected}, got {found}")]
    Arity {
        offset: usize,
        name: String,
        expected: String,
        found: usize,
    },
    #[error("range error at byte {offset}: {value} is outside [0, 1]")]
    Range { offset: usize, value: String },
}

impl SpecError {
    pub fn offset(&self) -> usize {
        match self {
            SpecError::Syntax { offset, .. }
            | SpecError::Arity { offset, .. }
            | SpecError::Range { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Combinator {
    Not,
    Symdiff,
    Agree,
    Join,
    Cap,
    Cup,
    ICode,
    JCode,
    RCode,
    RRel,
    RJoin,
    Mid,
    Diag,
}

impl Combinator {
    pub const ALL: [Combinator; 13] = [
        Combinator::Not,
        Combinator::Symdiff,
        Combinator::Agree,
        Combinator::Join,
        Combinator::Cap,
        Combinator::Cup,
        Combinator::ICode,
        Combinator::JCode,
        Combinator::RCode,
        Combinator::RRel,
        Combinator::RJoin,
        Combinator::Mid,
        Combinator::Diag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Combinator::Not => "not",
            Combinator::Symdiff => "symdiff",
            Combinator::Agree => "agree",
            Combinator::Join => "join",
            Combinator::Cap => "cap",
            Combinator::Cup => "cup",
            Combinator::ICode => "icode",
            Combinator::JCode => "jcode",
            Combinator::RCode => "rcode",
            Combinator::RRel => "rrel",
            Combinator::RJoin => "rjoin",
            Combinator::Mid => "mid",
            Combinator::Diag => "diag",
        }
    }

    /// `(min, max)` argument counts; `None` is unbounded.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            Combinator::Not | Combinator::ICode | Combinator::JCode | Combinator::RCode => {
                (1, Some(1))
            }
            Combinator::Symdiff
            | Combinator::Agree
            | Combinator::Join
            | Combinator::Cap
            | Combinator::Cup
            | Combinator::RRel => (2, Some(2)),
            Combinator::Mid => (3, Some(3)),
            Combinator::RJoin | Combinator::Diag => (1, None),
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scaling {
    Ar,
    Geo,
}

impl Scaling {
    pub fn name(self) -> &'static str {
        match self {
            Scaling::Ar => "ar",
            Scaling::Geo => "geo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetSpec {
    Empty,
    Full,
    Evens,
    Periodic(Vec<bool>),
    Finite(Vec<BigUint>),
    Rand(u64),
    Cr(BigRational),
    Xr(BigRational),
    TreePath(Vec<bool>),
    Apply {
        op: Combinator,
        args: Vec<SetSpec>,
    },
    Scaled {
        op: Scaling,
        arg: Box<SetSpec>,
        r: BigRational,
    },
}

impl SetSpec {
    pub fn depth(&self) -> usize {
        match self {
            SetSpec::Apply { args, .. } => 1 + args.iter().map(SetSpec::depth).max().unwrap_or(0),
            SetSpec::Scaled { arg, .. } => 1 + arg.depth(),
            _ => 1,
        }
    }

    pub fn build(&self) -> Result<BitSequence> {
        Ok(match self {
            SetSpec::Empty => seq::empty(),
            SetSpec::Full => seq::full(),
            SetSpec::Evens => seq::evens(),
            SetSpec::Periodic(bits) => seq::periodic(bits.clone()),
            SetSpec::Finite(items) => seq::finite(items.iter().cloned()),
            SetSpec::Rand(seed) => seq::bernoulli_stream(*seed),
            SetSpec::Cr(r) => geodesics::c_r(r)?,
            SetSpec::Xr(r) => geodesics::x_r(r)?,
            SetSpec::TreePath(bits) => tree::tree_path_from_bits(bits),
            SetSpec::Scaled { op, arg, r } => {
                let a = arg.build()?;
                match op {
                    Scaling::Ar => geodesics::a_r(&a, r)?,
                    Scaling::Geo => geodesics::geodesic_within(&a, r)?,
                }
            }
            SetSpec::Apply { op, args } => {
                let built: Vec<BitSequence> =
                    args.iter().map(SetSpec::build).collect::<Result<_>>()?;
                let arg = |i: usize| &built[i];
                match op {
                    Combinator::Not => seq::complement(arg(0)),
                    Combinator::Symdiff => seq::symdiff(arg(0), arg(1)),
                    Combinator::Agree => seq::symagree(arg(0), arg(1)),
                    Combinator::Join => seq::join(arg(0), arg(1)),
                    Combinator::Cap => seq::intersect(arg(0), arg(1)),
                    Combinator::Cup => seq::union(arg(0), arg(1)),
                    Combinator::ICode => codings::code(IntervalKind::I, arg(0)),
                    Combinator::JCode => codings::code(IntervalKind::J, arg(0)),
                    Combinator::RCode => codings::code(IntervalKind::R, arg(0)),
                    Combinator::RRel => codings::r_relative(arg(0), arg(1)),
                    Combinator::RJoin => codings::r_join(&RFamily::list(built.clone())),
                    Combinator::Mid => geodesics::midpoint_family(arg(0), arg(1), arg(2)),
                    Combinator::Diag => codings::diagonal_distance_one(&built)?,
                }
            }
        })
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Empty => write!(f, "empty"),
            SetSpec::Full => write!(f, "full"),
            SetSpec::Evens => write!(f, "evens"),
            SetSpec::Periodic(bits) => write!(f, "periodic:{}", bit_string(bits)),
            SetSpec::Finite(items) => {
                let items: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                write!(f, "finite:{{{}}}", items.join(","))
            }
            SetSpec::Rand(seed) => write!(f, "rand:{seed}"),
            SetSpec::Cr(r) => write!(f, "cr:{}", format_rational(r)),
            SetSpec::Xr(r) => write!(f, "xr:{}", format_rational(r)),
            SetSpec::TreePath(bits) => write!(f, "treepath:{}", bit_string(bits)),
            SetSpec::Apply { op, args } => {
                write!(f, "{}(", op.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            SetSpec::Scaled { op, arg, r } => {
                write!(f, "{}({arg}, {})", op.name(), format_rational(r))
            }
        }
    }
}

pub fn parse_spec(text: &str) -> std::result::Result<SetSpec, SpecError> {
    let mut p = Parser { text, pos: 0 };
    let spec = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.syntax("trailing input", &["end of input"]));
    }
    Ok(spec)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

const ATOM_NAMES: [&str; 9] = [
    "empty",
    "full",
    "evens",
    "periodic:",
    "finite:",
    "rand:",
    "cr:",
    "xr:",
    "treepath:",
];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn found(&self) -> String {
        match self.text[self.pos..].chars().next() {
            Some(c) => format!("found '{c}'"),
            None => "found end of input".into(),
        }
    }

    fn syntax(&self, message: &str, expected: &[&str]) -> SpecError {
        SpecError::Syntax {
            offset: self.pos,
            message: format!("{message} ({})", self.found()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, byte: u8) -> std::result::Result<(), SpecError> {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            let want = (byte as char).to_string();
            Err(self.syntax("unexpected token", &[&format!("'{want}'")]))
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn expr(&mut self) -> std::result::Result<SetSpec, SpecError> {
        self.skip_ws();
        let start = self.pos;
        let name = self.take_while(|b| b.is_ascii_lowercase());
        if name.is_empty() {
            let mut expected: Vec<&str> = ATOM_NAMES.to_vec();
            expected.push("combinator");
            return Err(self.syntax("expected a set", &expected));
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            return self.atom_payload(name, start);
        }
        match name {
            "empty" => return Ok(SetSpec::Empty),
            "full" => return Ok(SetSpec::Full),
            "evens" => return Ok(SetSpec::Evens),
            _ => {}
        }
        let scaled = match name {
            "ar" => Some(Scaling::Ar),
            "geo" => Some(Scaling::Geo),
            _ => None,
        };
        let op = Combinator::from_name(name);
        if scaled.is_none() && op.is_none() {
            self.pos = start;
            let mut expected: Vec<&str> = ATOM_NAMES.to_vec();
            expected.extend(Combinator::ALL.iter().map(|c| c.name()));
            expected.extend(["ar", "geo"]);
            return Err(self.syntax(&format!("unknown name '{name}'"), &expected));
        }
        self.expect(b'(')?;
        if let Some(op) = scaled {
            let arg = self.expr()?;
            self.skip_ws();
            if self.peek() == Some(b')') {
                return Err(SpecError::Arity {
                    offset: start,
                    name: name.into(),
                    expected: "a set and a rational".into(),
                    found: 1,
                });
            }
            self.expect(b',')?;
            self.skip_ws();
            let r_at = self.pos;
            let r = self.rational()?;
            check_range(&r, r_at)?;
            self.skip_ws();
            if self.peek() == Some(b',') {
                return Err(SpecError::Arity {
                    offset: start,
                    name: name.into(),
                    expected: "a set and a rational".into(),
                    found: 3,
                });
            }
            self.expect(b')')?;
            return Ok(SetSpec::Scaled {
                op,
                arg: Box::new(arg),
                r,
            });
        }
        let op = op.expect("checked above");
        let mut args = vec![self.expr()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.syntax("unexpected token", &["','", "')'"])),
            }
        }
        let (min, max) = op.arity();
        if args.len() < min || max.is_some_and(|m| args.len() > m) {
            let expected = match max {
                Some(m) if m == min => format!("{min} argument{}", if min == 1 { "" } else { "s" }),
                Some(m) => format!("{min} to {m} arguments"),
                None => format!("at least {min} argument"),
            };
            return Err(SpecError::Arity {
                offset: start,
                name: name.into(),
                expected,
                found: args.len(),
            });
        }
        Ok(SetSpec::Apply { op, args })
    }

    fn atom_payload(
        &mut self,
        name: &str,
        start: usize,
    ) -> std::result::Result<SetSpec, SpecError> {
        match name {
            "periodic" | "treepath" => {
                let bits: Vec<bool> = self
                    .take_while(|b| b == b'0' || b == b'1')
                    .bytes()
                    .map(|b| b == b'1')
                    .collect();
                if name == "periodic" {
                    if bits.is_empty() {
                        return Err(self.syntax("empty period", &["binary digits"]));
                    }
                    Ok(SetSpec::Periodic(bits))
                } else {
                    Ok(SetSpec::TreePath(bits))
                }
            }
            "finite" => {
                if self.peek() != Some(b'{') {
                    return Err(self.syntax("unexpected token", &["'{'"]));
                }
                self.pos += 1;
                let mut items = Vec::new();
                self.skip_ws();
                if self.peek() == Some(b'}') {
                    self.pos += 1;
                    return Ok(SetSpec::Finite(items));
                }
                loop {
                    self.skip_ws();
                    let digits = self.take_while(|b| b.is_ascii_digit());
                    if digits.is_empty() {
                        return Err(self.syntax("expected an element", &["natural number"]));
                    }
                    items.push(digits.parse().expect("digits"));
                    self.skip_ws();
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b'}') => {
                            self.pos += 1;
                            return Ok(SetSpec::Finite(items));
                        }
                        _ => return Err(self.syntax("unexpected token", &["','", "'}'"])),
                    }
                }
            }
            "rand" => {
                let digits = self.take_while(|b| b.is_ascii_digit());
                digits
                    .parse()
                    .map(SetSpec::Rand)
                    .map_err(|_| self.syntax("expected a seed", &["unsigned 64-bit integer"]))
            }
            "cr" | "xr" => {
                let at = self.pos;
                let r = self.rational()?;
                check_range(&r, at)?;
                Ok(if name == "cr" {
                    SetSpec::Cr(r)
                } else {
                    SetSpec::Xr(r)
                })
            }
            _ => {
                self.pos = start;
                Err(self.syntax(&format!("unknown atom '{name}:'"), &ATOM_NAMES))
            }
        }
    }

    fn rational(&mut self) -> std::result::Result<BigRational, SpecError> {
        let start = self.pos;
        let negative = self.peek() == Some(b'-');
        if negative {
            self.pos += 1;
        }
        let num = self.take_while(|b| b.is_ascii_digit());
        if num.is_empty() {
            self.pos = start;
            return Err(self.syntax("expected a rational", &["p/q", "integer"]));
        }
        let mut num: BigInt = num.parse().expect("digits");
        if negative {
            num = -num;
        }
        let den = if self.peek() == Some(b'/') {
            self.pos += 1;
            let d = self.take_while(|b| b.is_ascii_digit());
            if d.is_empty() {
                return Err(self.syntax("expected a denominator", &["positive integer"]));
            }
            let d: BigInt = d.parse().expect("digits");
            if d.is_zero() {
                self.pos -= 1;
                return Err(self.syntax("zero denominator", &["positive integer"]));
            }
            d
        } else {
            BigInt::one()
        };
        Ok(BigRational::new(num, den))
    }
}

fn check_range(r: &BigRational, offset: usize) -> std::result::Result<(), SpecError> {
    if r.is_negative() || r > &BigRational::one() {
        return Err(SpecError::Range {
            offset,
            value: format_rational(r),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::BigIndex;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let s = parse_spec("symdiff(cr:1/2, not(evens))").unwrap();
        assert_eq!(s.depth(), 3);
        assert!(matches!(
            parse_spec("cr:7/3"),
            Err(SpecError::Range { offset: 3, .. })
        ));
        let m = parse_spec("mid(empty, full, evens)").unwrap();
        assert_eq!(
            m,
            SetSpec::Apply {
                op: Combinator::Mid,
                args: vec![SetSpec::Empty, SetSpec::Full, SetSpec::Evens]
            }
        );
        let f = m.build().unwrap();
        assert_eq!(
            f.range(0, 6).unwrap(),
            vec![false, true, false, true, false, true]
        );
    }

    #[test]
    fn diagnostics() {
        let e = parse_spec("symdiff(evens)").unwrap_err();
        assert!(
            matches!(
                e,
                SpecError::Arity {
                    offset: 0,
                    found: 1,
                    ..
                }
            ),
            "{e}"
        );
        let e = parse_spec("cup(evens, ").unwrap_err();
        assert_eq!(e.offset(), 11);
        let e = parse_spec("not(evens").unwrap_err();
        match e {
            SpecError::Syntax {
                offset, expected, ..
            } => {
                assert_eq!(offset, 9);
                assert!(expected.contains(&"')'".to_string()));
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_spec("ar(evens, 3/2)"),
            Err(SpecError::Range { offset: 10, .. })
        ));
        assert!(matches!(
            parse_spec("geo(evens)"),
            Err(SpecError::Arity { .. })
        ));
        assert!(matches!(
            parse_spec("xr:1/0"),
            Err(SpecError::Syntax { .. })
        ));
        assert!(matches!(
            parse_spec("bogus(evens)"),
            Err(SpecError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse_spec("evens evens"),
            Err(SpecError::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            parse_spec("periodic:"),
            Err(SpecError::Syntax { .. })
        ));
        assert!(parse_spec("").is_err());
        let text = format!("{}", parse_spec("not(evens").unwrap_err());
        assert!(text.contains("byte 9"));
    }

    #[test]
    fn atoms_build() {
        let cases = [
            ("finite:{1, 3,5}", "0101010000"),
            ("periodic:011", "0110110110"),
            ("cr:1/2", "0101001100"),
            ("xr:0", "0101010101"),
            ("join(full, empty)", "1010101010"),
            ("cap(evens, periodic:1100)", "1000100010"),
        ];
        for (text, bits) in cases {
            let s = parse_spec(text).unwrap().build().unwrap();
            assert_eq!(bit_string(&s.range(0, 10).unwrap()), bits, "{text}");
        }
        let t = parse_spec("treepath:1").unwrap().build().unwrap();
        assert!(t.at(5).unwrap());
        let r = parse_spec("rand:1").unwrap().build().unwrap();
        assert_eq!(r.descriptor().to_string(), "rand:1");
        let d = parse_spec("diag(evens, full)").unwrap().build().unwrap();
        d.evaluate(&BigIndex::from(100u32)).unwrap();
        for text in [
            "icode(evens)",
            "jcode(evens)",
            "rcode(evens)",
            "rrel(evens, full)",
            "rjoin(evens, full, empty)",
            "ar(rand:3, 1/3)",
            "geo(evens, 2/3)",
        ] {
            parse_spec(text)
                .unwrap()
                .build()
                .unwrap()
                .range(0, 100)
                .unwrap();
        }
    }

    fn rational() -> impl Strategy<Value = BigRational> {
        (1u64..40)
            .prop_flat_map(|q| (0..=q, Just(q)))
            .prop_map(|(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    fn leaf() -> impl Strategy<Value = SetSpec> {
        prop_oneof![
            Just(SetSpec::Empty),
            Just(SetSpec::Full),
            Just(SetSpec::Evens),
            prop::collection::vec(any::<bool>(), 1..6).prop_map(SetSpec::Periodic),
            prop::collection::vec(0u64..1000, 0..5)
                .prop_map(|v| SetSpec::Finite(v.into_iter().map(BigUint::from).collect())),
            any::<u64>().prop_map(SetSpec::Rand),
            rational().prop_map(SetSpec::Cr),
            rational().prop_map(SetSpec::Xr),
            prop::collection::vec(any::<bool>(), 0..5).prop_map(SetSpec::TreePath),
        ]
    }

    fn spec() -> impl Strategy<Value = SetSpec> {
        leaf().prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                (
                    prop::sample::select(Combinator::ALL.to_vec()),
                    prop::collection::vec(inner.clone(), 1..5)
                )
                    .prop_map(|(op, mut args)| {
                        let (min, max) = op.arity();
                        while args.len() < min {
                            args.push(SetSpec::Evens);
                        }
                        if let Some(max) = max {
                            args.truncate(max);
                        }
                        SetSpec::Apply { op, args }
                    }),
                (
                    prop::sample::select(vec![Scaling::Ar, Scaling::Geo]),
                    inner,
                    rational()
                )
                    .prop_map(|(op, arg, r)| SetSpec::Scaled {
                        op,
                        arg: Box::new(arg),
                        r
                    }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn print_parse_round_trip(s in spec()) {
            let printed = s.to_string();
            let reparsed = parse_spec(&printed).unwrap();
            prop_assert_eq!(&reparsed, &s);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
