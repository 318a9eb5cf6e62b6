use std::collections::BTreeMap;

use byte_premium::corpus::{sample_lines, Bitext, MultiParallelCorpus};
use byte_premium::estimation::{multiparallel_premiums, pairwise_premium};
use byte_premium::registry::bundled_table;
use byte_premium::{LanguageTag, PremiumTable};
use proptest::prelude::*;

fn tag(s: &str) -> LanguageTag {
    s.parse().unwrap()
}

fn langs(n: usize) -> Vec<LanguageTag> {
    (0..n)
        .map(|i| {
            LanguageTag::new(
                &format!(
                    "q{}{}",
                    (b'a' + (i / 26) as u8) as char,
                    (b'a' + (i % 26) as u8) as char
                ),
                "latn",
            )
            .unwrap()
        })
        .collect()
}

/// Cell text: anything except tab and newline.
fn cell() -> impl Strategy<Value = String> {
    prop::collection::vec(
        any::<char>().prop_filter("no separators", |c| *c != '\t' && *c != '\n' && *c != '\r'),
        1..20,
    )
    .prop_map(String::from_iter)
}

fn corpus() -> impl Strategy<Value = MultiParallelCorpus> {
    (2usize..5, 1usize..12).prop_flat_map(|(cols, rows)| {
        prop::collection::vec(prop::collection::vec(cell(), cols), rows)
            .prop_map(move |rows| MultiParallelCorpus::new(langs(cols), rows).unwrap())
    })
}

fn table() -> impl Strategy<Value = PremiumTable> {
    prop::collection::vec(0.2f64..6.0, 2..10).prop_map(|values| {
        let tags = langs(values.len());
        let mut premiums: BTreeMap<_, _> = tags.iter().copied().zip(values).collect();
        premiums.insert(tags[0], 1.0);
        PremiumTable::new(tags[0], premiums, "generated").unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tsv_round_trip(c in corpus()) {
        let text = c.to_tsv();
        let parsed = MultiParallelCorpus::parse_tsv(&text).unwrap();
        prop_assert_eq!(&parsed, &c);
        prop_assert_eq!(parsed.to_tsv(), text);
    }

    #[test]
    fn sampling_composes(c in corpus(), m in 1usize..15, n in 1usize..15) {
        let nested = sample_lines(&sample_lines(&c, m).unwrap(), n).unwrap();
        let direct = sample_lines(&c, m.min(n)).unwrap();
        prop_assert_eq!(nested, direct);
        prop_assert_eq!(sample_lines(&c, n).unwrap().num_rows(), n.min(c.num_rows()));
    }

    #[test]
    fn multiparallel_premiums_satisfy_ratio_identity(c in corpus()) {
        let all = c.languages().to_vec();
        let base = multiparallel_premiums(&c, &all[0]).unwrap();
        for r in &all {
            let rebased = multiparallel_premiums(&c, r).unwrap();
            prop_assert_eq!(rebased[r], 1.0);
            for a in &all {
                let expected = base[a] / base[r];
                prop_assert!((rebased[a] - expected).abs() <= 1e-12 * expected.max(1.0));
            }
        }
    }

    // Per-segment means are not reciprocal: mean(a/b) * mean(b/a) >= 1 (AM-HM).
    #[test]
    fn pairwise_mean_of_ratios_is_not_reciprocal(pairs in prop::collection::vec((cell(), cell()), 1..20)) {
        let bitext = Bitext::new(tag("aaa_latn"), tag("bbb_latn"), pairs).unwrap();
        let ab = pairwise_premium(&bitext).unwrap().observation.premium;
        let ba = pairwise_premium(&bitext.swapped()).unwrap().observation.premium;
        prop_assert!(ab * ba >= 1.0 - 1e-12);
    }

    #[test]
    fn rebase_preserves_pairwise_lookups(t in table(), pick in any::<prop::sample::Index>()) {
        let tags: Vec<_> = t.premiums().keys().copied().collect();
        let r = tags[pick.index(tags.len())];
        let rebased = t.rebase(&r).unwrap();
        prop_assert_eq!(rebased.get(&r).unwrap(), 1.0);
        for a in &tags {
            for b in &tags {
                let x = t.pairwise_lookup(a, b).unwrap();
                let y = rebased.pairwise_lookup(a, b).unwrap();
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
            }
        }
    }

    #[test]
    fn conversion_round_trips_and_composes(t in table(), size in 0u64..10_000_000_000, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>(), k in any::<prop::sample::Index>()) {
        let tags: Vec<_> = t.premiums().keys().copied().collect();
        let (a, b, c) = (tags[i.index(tags.len())], tags[j.index(tags.len())], tags[k.index(tags.len())]);
        prop_assert_eq!(t.convert_size(size, &a, &a).unwrap(), size);
        let there = t.convert_size(size, &a, &b).unwrap();
        let back = t.convert_size(there, &b, &a).unwrap();
        // The first rounding error (<= 0.5) is scaled by BP_{a/b} on the way back.
        let slack = 0.5 * (1.0 + t.pairwise_lookup(&a, &b).unwrap()) + 1e-6;
        prop_assert!((back as f64 - size as f64).abs() <= slack);
        let via = t.convert_size(t.convert_size(size, &a, &b).unwrap(), &b, &c).unwrap();
        let direct = t.convert_size(size, &a, &c).unwrap();
        prop_assert!((via as f64 - direct as f64).abs() <= 1.0 + 0.5 / t.pairwise_lookup(&b, &c).unwrap() + 1e-6);
    }

    #[test]
    fn conversion_is_monotone(t in table(), x in 0u64..1_000_000_000, dx in 0u64..1_000_000, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let tags: Vec<_> = t.premiums().keys().copied().collect();
        let (a, b) = (tags[i.index(tags.len())], tags[j.index(tags.len())]);
        prop_assert!(t.convert_size(x, &a, &b).unwrap() <= t.convert_size(x + dx, &a, &b).unwrap());
    }

    #[test]
    fn rescaling_ignores_the_reference(t in table(), weights in prop::collection::vec(0.0f64..1.0, 10), pick in any::<prop::sample::Index>()) {
        let tags: Vec<_> = t.premiums().keys().copied().collect();
        let total: f64 = weights.iter().take(tags.len()).sum();
        prop_assume!(total > 1e-3);
        let props: BTreeMap<_, _> = tags.iter().zip(&weights).map(|(t, w)| (*t, w / total)).collect();
        let sum: f64 = props.values().sum();
        prop_assume!((sum - 1.0).abs() <= 1e-9);
        let out = t.rescale_proportions(&props).unwrap();
        let rebased = t.rebase(&tags[pick.index(tags.len())]).unwrap().rescale_proportions(&props).unwrap();
        prop_assert!((out.values().sum::<f64>() - 1.0).abs() <= 1e-12);
        for k in props.keys() {
            prop_assert!((out[k] - rebased[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn bundled_lookups_are_reciprocal_everywhere() {
    let t = bundled_table().unwrap();
    let tags: Vec<_> = t.premiums().keys().copied().collect();
    for a in &tags {
        assert_eq!(t.pairwise_lookup(a, a).unwrap(), 1.0);
        for b in &tags {
            let p = t.pairwise_lookup(a, b).unwrap() * t.pairwise_lookup(b, a).unwrap();
            assert!((p - 1.0).abs() <= 1e-12, "{a} {b}");
        }
    }
}
