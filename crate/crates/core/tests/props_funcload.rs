//! Property tests for entropy and functional load.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use phyloload::funcload::{
    collapse_lexicon, domain_entropy, functional_load, ContrastSpec, DomainDistribution,
};

const ALPHABET: [&str; 8] = ["pa", "pi", "ta", "ti", "ka", "ki", "ma", "mi"];

fn dist_strategy() -> impl Strategy<Value = DomainDistribution> {
    prop::collection::btree_map(
        prop::collection::vec(
            prop::sample::select(ALPHABET.as_slice()).prop_map(str::to_string),
            1..3,
        ),
        1u64..60,
        1..12,
    )
    .prop_map(|counts| DomainDistribution::new(counts).unwrap())
}

fn spec(sets: &[&[&str]]) -> ContrastSpec {
    ContrastSpec::new(
        "test",
        sets.iter()
            .map(|set| set.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>())
            .collect(),
    )
    .unwrap()
}

/// Entropy computed a deliberately different way: natural log, scaled once.
fn entropy_oracle(dist: &DomainDistribution) -> f64 {
    let n = dist.total() as f64;
    let nats: f64 = dist
        .counts()
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -(p * p.ln())
        })
        .sum();
    nats / std::f64::consts::LN_2
}

proptest! {
    /// Entropy agrees with an independent natural-log implementation.
    #[test]
    fn entropy_matches_oracle(dist in dist_strategy()) {
        let h = domain_entropy(&dist);
        let oracle = entropy_oracle(&dist);
        prop_assert!((h - oracle).abs() <= 1e-12 * oracle.max(1.0), "{h} vs {oracle}");
    }

    /// Entropy is bounded by log2 of the type count.
    #[test]
    fn entropy_is_bounded(dist in dist_strategy()) {
        let h = domain_entropy(&dist);
        prop_assert!(h >= 0.0 && h.is_sign_positive());
        prop_assert!(h <= (dist.types() as f64).log2() + 1e-12);
    }

    /// Functional load is nonnegative for every distribution and spec.
    #[test]
    fn functional_load_is_nonnegative(dist in dist_strategy()) {
        let spec = spec(&[&["pa", "pi"], &["ta", "ti", "ka"]]);
        let fl = functional_load(&dist, &spec);
        prop_assert!(fl >= 0.0 && fl.is_sign_positive(), "fl = {fl}");
    }

    /// Collapsing is idempotent, and a collapsed distribution carries no
    /// remaining load for the same spec.
    #[test]
    fn collapse_is_idempotent(dist in dist_strategy()) {
        let spec = spec(&[&["pa", "pi"], &["ka", "ki"]]);
        let once = collapse_lexicon(&dist, &spec);
        let twice = collapse_lexicon(&once, &spec);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(functional_load(&once, &spec), 0.0);
        prop_assert_eq!(once.total(), dist.total());
    }

    /// Scaling every count by a constant leaves entropy and load unchanged.
    #[test]
    fn load_is_scale_invariant(dist in dist_strategy(), factor in 2u64..20) {
        let spec = spec(&[&["pa", "pi"], &["ta", "ti", "ka"]]);
        let scaled = DomainDistribution::new(
            dist.counts()
                .iter()
                .map(|(k, &v)| (k.clone(), v * factor))
                .collect::<BTreeMap<_, _>>(),
        )
        .unwrap();
        let fl = functional_load(&dist, &spec);
        let fl_scaled = functional_load(&scaled, &spec);
        prop_assert!((fl - fl_scaled).abs() <= 1e-12, "{fl} vs {fl_scaled}");
    }

    /// Merging strictly more symbols never lowers the load.
    #[test]
    fn more_collapsing_never_lowers_load(dist in dist_strategy()) {
        let narrow = spec(&[&["pa", "pi"]]);
        let wide = spec(&[&["pa", "pi"], &["ta", "ti"]]);
        let fl_narrow = functional_load(&dist, &narrow);
        let fl_wide = functional_load(&dist, &wide);
        prop_assert!(fl_wide >= fl_narrow - 1e-12, "{fl_wide} < {fl_narrow}");
    }

    /// Load never exceeds the full entropy of the distribution.
    #[test]
    fn load_is_bounded_by_entropy(dist in dist_strategy()) {
        let spec = spec(&[&["pa", "pi", "ta", "ti"], &["ka", "ki"]]);
        let fl = functional_load(&dist, &spec);
        prop_assert!(fl <= domain_entropy(&dist) + 1e-12);
    }
}

/// Brute-force load: recompute both entropies from scratch with the oracle.
#[test]
fn functional_load_matches_brute_force_on_fixed_cases() {
    let spec = spec(&[&["pa", "pi"], &["ka", "ki"]]);
    for (i, counts) in [
        vec![
            (vec!["pa"], 4u64),
            (vec!["pi"], 2),
            (vec!["ka"], 1),
            (vec!["ta"], 1),
        ],
        vec![
            (vec!["pa"], 1),
            (vec!["pi"], 1),
            (vec!["ka"], 1),
            (vec!["ki"], 1),
        ],
        vec![
            (vec!["pa", "ta"], 3),
            (vec!["pi", "ta"], 5),
            (vec!["ma"], 9),
        ],
    ]
    .into_iter()
    .enumerate()
    {
        let counts: BTreeMap<Vec<String>, u64> = counts
            .into_iter()
            .map(|(k, v)| (k.into_iter().map(str::to_string).collect(), v))
            .collect();
        let dist = DomainDistribution::new(counts).unwrap();
        let fl = functional_load(&dist, &spec);
        let oracle = entropy_oracle(&dist) - entropy_oracle(&collapse_lexicon(&dist, &spec));
        assert!(
            (fl - oracle.max(0.0)).abs() <= 1e-12,
            "case {i}: {fl} vs {oracle}"
        );
    }
}
