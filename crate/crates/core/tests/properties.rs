//! Property tests over randomly generated set expressions.

use densmetric::cauchy::{default_slack, splice_limit};
use densmetric::codings::{
    self, approximate_r, code, decode_j, r_element, DecodePolicy, IntervalKind,
};
use densmetric::density::{self, factor2_check, prefix_counts, CheckpointGrid};
use densmetric::geodesics::{c_r, midpoint_family, TriangularPartition};
use densmetric::numeric::{ratio, rational_from_u64};
use densmetric::seq::{self, bernoulli_stream, BigIndex, BitSequence};
use densmetric::setspec::parse_spec;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn rational_text() -> impl Strategy<Value = String> {
    (1u64..=64)
        .prop_flat_map(|q| (0..=q, Just(q)))
        .prop_map(|(p, q)| format!("{p}/{q}"))
}

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("empty".to_string()),
        Just("full".to_string()),
        Just("evens".to_string()),
        "[01]{1,7}".prop_map(|b| format!("periodic:{b}")),
        prop::collection::vec(0u32..300, 0..6).prop_map(|v| {
            let items: Vec<String> = v.iter().map(u32::to_string).collect();
            format!("finite:{{{}}}", items.join(","))
        }),
        any::<u32>().prop_map(|s| format!("rand:{s}")),
        rational_text().prop_map(|r| format!("cr:{r}")),
        rational_text().prop_map(|r| format!("xr:{r}")),
    ]
}

/// Expressions whose bits are defined at every index, including huge ones.
fn pointwise_spec() -> impl Strategy<Value = String> {
    atom().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| format!("not({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("symdiff({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("agree({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("join({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("cap({a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("cup({a}, {b})")),
            inner.clone().prop_map(|a| format!("jcode({a})")),
            inner.clone().prop_map(|a| format!("rcode({a})")),
            inner.clone().prop_map(|a| format!("icode({a})")),
            (inner.clone(), rational_text()).prop_map(|(a, r)| format!("ar({a}, {r})")),
        ]
    })
}

/// Adds the constructions that materialize a prefix of their inputs.
fn any_spec() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => pointwise_spec(),
        1 => (pointwise_spec(), rational_text()).prop_map(|(a, r)| format!("geo({a}, {r})")),
        1 => (pointwise_spec(), pointwise_spec(), pointwise_spec())
            .prop_map(|(a, b, x)| format!("mid({a}, {b}, {x})")),
    ]
}

fn build(text: &str) -> BitSequence {
    parse_spec(text).unwrap().build().unwrap()
}

fn grid() -> CheckpointGrid {
    CheckpointGrid::geometric(rational_from_u64(5, 4), 64, 1 << 14).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symdiff_is_pointwise_difference(a in any_spec(), b in any_spec()) {
        let (sa, sb) = (build(&a), build(&b));
        let d = seq::symdiff(&sa, &sb).range(0, 10_000).unwrap();
        let (xa, xb) = (sa.range(0, 10_000).unwrap(), sb.range(0, 10_000).unwrap());
        for n in 0..10_000 {
            prop_assert_eq!(d[n], xa[n] != xb[n]);
        }
    }

    #[test]
    fn fill_matches_single_bit_queries(a in any_spec(), start in 0u64..5000) {
        let s = build(&a);
        let bits = s.range(start, start + 300).unwrap();
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(b, s.at(start + i as u64).unwrap());
            prop_assert_eq!(b, s.evaluate(&BigIndex::from(start + i as u64)).unwrap());
        }
    }

    #[test]
    fn evaluation_is_deterministic(a in pointwise_spec(), seeds in prop::collection::vec(any::<u64>(), 20)) {
        let (s, t) = (build(&a), build(&a));
        for (i, seed) in seeds.iter().enumerate() {
            let idx = if i % 2 == 0 {
                BigIndex::from(*seed)
            } else {
                (BigIndex::one() << (70 + i as u32)) + *seed
            };
            prop_assert_eq!(s.evaluate(&idx), s.evaluate(&idx));
            prop_assert_eq!(s.evaluate(&idx), t.evaluate(&idx));
        }
    }

    #[test]
    fn join_projects_back(a in any_spec(), b in any_spec()) {
        let (sa, sb) = (build(&a), build(&b));
        let j = seq::join(&sa, &sb).range(0, 20_000).unwrap();
        let (xa, xb) = (sa.range(0, 10_000).unwrap(), sb.range(0, 10_000).unwrap());
        for n in 0..10_000 {
            prop_assert_eq!(j[2 * n], xa[n]);
            prop_assert_eq!(j[2 * n + 1], xb[n]);
        }
    }

    #[test]
    fn metric_identities(a in any_spec(), b in any_spec(), c in any_spec()) {
        let (sa, sb, sc) = (build(&a), build(&b), build(&c));
        let g = grid();
        let cps = g.checkpoints();
        let count = |x: &BitSequence, y: &BitSequence| {
            prefix_counts(&seq::symdiff(x, y), &cps, g.budget).unwrap()
        };
        let (ac, ab, bc) = (count(&sa, &sc), count(&sa, &sb), count(&sb, &sc));
        for i in 0..cps.len() {
            prop_assert!(ratio(ac[i], cps[i]) <= ratio(ab[i], cps[i]) + ratio(bc[i], cps[i]));
        }
        let (d1, _) = density::delta_estimate(&sa, &sb, &g).unwrap();
        let (d2, _) = density::delta_estimate(&sb, &sa, &g).unwrap();
        prop_assert_eq!(d1, d2);
        let ones = prefix_counts(&sa, &cps, g.budget).unwrap();
        let zeros = prefix_counts(&seq::complement(&sa), &cps, g.budget).unwrap();
        for i in 0..cps.len() {
            prop_assert_eq!(ratio(ones[i], cps[i]) + ratio(zeros[i], cps[i]), BigRational::one());
        }
    }

    #[test]
    fn factor2_inequalities(a in any_spec()) {
        let report = factor2_check(&build(&a), 12).unwrap();
        prop_assert!(report.passed(), "{:?}", report.rows.iter().find(|r| !(r.block_ok && r.prefix_ok)));
    }

    #[test]
    fn counts_agree_with_scans(a in pointwise_spec(), n in 1u64..20_000) {
        let s = build(&a);
        if let Some(fast) = s.count_shortcut(&BigIndex::from(n)) {
            let scanned = density::count_prefix(&s, n, n).unwrap();
            prop_assert_eq!(fast.unwrap(), BigIndex::from(scanned));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn c_r_is_monotone((p1, q1, p2, q2) in (1u64..=64, 1u64..=64).prop_flat_map(|(q1, q2)| (0..=q1, Just(q1), 0..=q2, Just(q2)))) {
        let (r1, r2) = (rational_from_u64(p1, q1), rational_from_u64(p2, q2));
        let (s, r) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let lo = c_r(&s).unwrap().range(0, 100_000).unwrap();
        let hi = c_r(&r).unwrap().range(0, 100_000).unwrap();
        for n in 0..100_000 {
            prop_assert!(!lo[n] || hi[n]);
        }
    }

    #[test]
    fn c_r_checkpoint_bound((p, q) in (1u64..=64).prop_flat_map(|q| (0..=q, Just(q)))) {
        let r = rational_from_u64(p, q);
        let c = c_r(&r).unwrap();
        for i in 2..=2000u64 {
            let m = BigIndex::from(TriangularPartition.start(i));
            let rho = density::rho_at(&c, &m).unwrap();
            prop_assert!(rho <= r);
            prop_assert!(rho >= &r - ratio(2u32, i));
        }
    }

    #[test]
    fn r_relative_projects_along_r_blocks(a in any::<u32>(), c in any::<u32>()) {
        let (sa, sc) = (bernoulli_stream(a.into()), bernoulli_stream(c.into()));
        let rel = codings::r_relative(&sa, &sc);
        for k in 0..6u64 {
            let flip = !sc.at(k).unwrap();
            for n in 0..200u64 {
                let m = r_element(k, &BigIndex::from(n));
                prop_assert_eq!(rel.evaluate(&m).unwrap(), sa.at(n).unwrap() ^ flip);
            }
        }
    }

    #[test]
    fn j_code_round_trip(seed in any::<u32>()) {
        let a = bernoulli_stream(seed.into());
        let cj = code(IntervalKind::J, &a);
        for k in 0..=14u64 {
            prop_assert_eq!(decode_j(&cj, k, DecodePolicy::default()).unwrap(), a.at(k).unwrap());
        }
    }

    #[test]
    fn midpoint_counts(sa in any::<u32>(), sb in any::<u32>(), sx in any::<u32>()) {
        let (a, b, x) = (
            bernoulli_stream(sa.into()),
            bernoulli_stream(u64::from(sb) + (1 << 32)),
            bernoulli_stream(sx.into()),
        );
        let n_max = 5000usize;
        let f = midpoint_family(&a, &b, &x);
        let af = seq::symdiff(&a, &f).range(0, n_max as u64).unwrap();
        let ab = seq::symdiff(&a, &b).range(0, n_max as u64).unwrap();
        let not_x = x.complement().range(0, n_max as u64).unwrap();
        // after the k-th disagreement (0-based) the count is |¬X ↾ (k + 1)|
        let (mut lhs, mut rank, mut expected) = (0usize, 0usize, 0usize);
        for n in 0..n_max {
            lhs += usize::from(af[n]);
            if ab[n] {
                expected += usize::from(not_x[rank]);
                rank += 1;
            }
            prop_assert_eq!(lhs, expected);
        }
    }

    #[test]
    fn splice_is_total_and_faithful(seed in any::<u32>(), len in 2u64..8) {
        let a = bernoulli_stream(seed.into());
        let members: Vec<BitSequence> = (0..len).map(|k| approximate_r(&a, k)).collect();
        let (limit, map) = splice_limit(&members, &default_slack()).unwrap();
        for k in 0..12u64 {
            let n = map.choice(k).unwrap();
            prop_assert!(n as u64 <= k);
            let (lo, hi) = ((1u64 << k) - 1, (1u64 << (k + 1)) - 1);
            prop_assert_eq!(limit.range(lo, hi).unwrap(), members[n].range(lo, hi).unwrap());
        }
    }
}

#[test]
fn r_indexing() {
    for k in 0..=12u64 {
        let mut prev = None;
        for n in 0..=1000u64 {
            let m = r_element(k, &BigIndex::from(n));
            assert_eq!(m, BigIndex::from((1u64 << k) * (2 * n + 1)));
            assert!(prev.is_none_or(|p| p < m));
            let family = codings::IntervalFamily::new(IntervalKind::R);
            assert!(family.contains(&BigIndex::from(k), &m));
            prev = Some(m);
        }
    }
}
