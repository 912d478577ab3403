//! Entropy and functional load over domain distributions.
//!
//! The functional load of a contrast is the entropy lost when every phoneme
//! set of the contrast is rewritten to a single fresh symbol and the domain
//! types that become identical merge.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use thiserror::Error;

use crate::segmental::{SegmentClass, SegmentInventory};

#[derive(Debug, Error)]
pub enum FlError {
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("contrast spec `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("inventory has no {0} contrast")]
    NoContrast(&'static str),
    #[error("row {row}: {reason}")]
    BadTable { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Counts of domain string types. Types are sequences of segment symbols;
/// probabilities are type counts over the total token count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainDistribution {
    counts: BTreeMap<Vec<String>, u64>,
    total: u64,
}

impl DomainDistribution {
    /// Drops zero counts; errors if nothing remains.
    pub fn new(counts: BTreeMap<Vec<String>, u64>) -> Result<Self, FlError> {
        let counts: BTreeMap<Vec<String>, u64> =
            counts.into_iter().filter(|&(_, c)| c > 0).collect();
        if counts.is_empty() {
            return Err(FlError::EmptyDistribution);
        }
        let total = counts.values().sum();
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &BTreeMap<Vec<String>, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn types(&self) -> usize {
        self.counts.len()
    }
}

/// Shannon entropy of the type distribution, in bits.
pub fn domain_entropy(dist: &DomainDistribution) -> f64 {
    let n = dist.total as f64;
    let h: f64 = dist
        .counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -(p * p.log2())
        })
        .sum();
    // A one-type distribution sums to -0.0 because log2(1) is +0; adding
    // zero normalizes the sign without touching any nonzero value.
    h + 0.0
}

/// A named collection of pairwise-disjoint phoneme sets to merge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContrastSpec {
    name: String,
    sets: Vec<BTreeSet<String>>,
}

impl ContrastSpec {
    pub fn new(name: impl Into<String>, sets: Vec<BTreeSet<String>>) -> Result<Self, FlError> {
        let name = name.into();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for set in &sets {
            if set.len() < 2 {
                return Err(FlError::InvalidSpec {
                    name,
                    reason: format!("set {set:?} has fewer than 2 members"),
                });
            }
            for sym in set {
                if !seen.insert(sym) {
                    return Err(FlError::InvalidSpec {
                        name,
                        reason: format!("symbol `{sym}` appears in two sets"),
                    });
                }
            }
        }
        Ok(Self { name, sets })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sets(&self) -> &[BTreeSet<String>] {
        &self.sets
    }
}

/// Rewrites every symbol of every spec set to a fresh symbol unique to that
/// set; types made identical merge and their counts add. N is unchanged.
pub fn collapse_lexicon(dist: &DomainDistribution, spec: &ContrastSpec) -> DomainDistribution {
    let mut rewrite: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, set) in spec.sets.iter().enumerate() {
        for sym in set {
            rewrite.insert(sym, i);
        }
    }
    // Inventories reject `*`, so one star suffices there; synthetic
    // distributions may contain anything, so grow the prefix until no
    // surviving symbol can collide with a fresh one.
    let mut prefix = String::from("*");
    while dist
        .counts
        .keys()
        .flatten()
        .any(|s| !rewrite.contains_key(s.as_str()) && s.starts_with(&prefix))
    {
        prefix.push('*');
    }

    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for (ty, &c) in &dist.counts {
        let ty: Vec<String> = ty
            .iter()
            .map(|s| match rewrite.get(s.as_str()) {
                Some(i) => format!("{prefix}{i}"),
                None => s.clone(),
            })
            .collect();
        *counts.entry(ty).or_insert(0) += c;
    }
    DomainDistribution {
        counts,
        total: dist.total,
    }
}

/// Entropy difference between the distribution and its collapse, in bits.
/// Nonnegative; exactly zero when the collapse touches nothing.
pub fn functional_load(dist: &DomainDistribution, spec: &ContrastSpec) -> f64 {
    let fl = domain_entropy(dist) - domain_entropy(&collapse_lexicon(dist, spec));
    debug_assert!(fl > -1e-9, "entropy increased under collapse: {fl}");
    fl.max(0.0)
}

/// One set per length-paired vowel quality.
pub fn make_length_spec(inv: &SegmentInventory) -> Result<ContrastSpec, FlError> {
    let sets: Vec<BTreeSet<String>> = inv
        .long_counterparts()
        .values()
        .map(|(short, long)| BTreeSet::from([short.clone(), long.clone()]))
        .collect();
    if sets.is_empty() {
        return Err(FlError::NoContrast("length"));
    }
    ContrastSpec::new("FL_V", sets)
}

/// One set per place label: manner distinctions collapse within each place,
/// place distinctions survive. Size-1 sets are dropped.
pub fn make_manner_spec(inv: &SegmentInventory) -> Result<ContrastSpec, FlError> {
    group_consonants(inv, "FL_C", "manner", |place, _| place)
}

/// One set per manner label: place distinctions collapse within each manner.
pub fn make_place_spec(inv: &SegmentInventory) -> Result<ContrastSpec, FlError> {
    group_consonants(inv, "FL_P", "place", |_, manner| manner)
}

fn group_consonants(
    inv: &SegmentInventory,
    name: &str,
    missing: &'static str,
    key: impl for<'a> Fn(&'a str, &'a str) -> &'a str,
) -> Result<ContrastSpec, FlError> {
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for seg in inv.consonants() {
        if let SegmentClass::Consonant { place, manner } = &seg.class {
            groups
                .entry(key(place, manner).to_string())
                .or_default()
                .insert(seg.symbol.clone());
        }
    }
    let sets: Vec<BTreeSet<String>> = groups.into_values().filter(|s| s.len() >= 2).collect();
    if sets.is_empty() {
        return Err(FlError::NoContrast(missing));
    }
    ContrastSpec::new(name, sets)
}

/// Per-language functional load estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct FlResult {
    pub language: String,
    pub fl_v: f64,
    pub fl_c: f64,
    pub fl_p: f64,
    pub n: u64,
}

/// Why a language was left out of an FL table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exclusion {
    BelowMinTokens {
        language: String,
        n: u64,
        min_n: u64,
    },
    ZeroVowelLengthLoad {
        language: String,
        n: u64,
    },
}

impl Exclusion {
    pub fn language(&self) -> &str {
        match self {
            Exclusion::BelowMinTokens { language, .. }
            | Exclusion::ZeroVowelLengthLoad { language, .. } => language,
        }
    }
}

impl std::fmt::Display for Exclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exclusion::BelowMinTokens { language, n, min_n } => {
                write!(f, "{language}\t{n} domain tokens, below minimum {min_n}")
            }
            Exclusion::ZeroVowelLengthLoad { language, n } => {
                write!(
                    f,
                    "{language}\tvowel length carries zero functional load (n={n})"
                )
            }
        }
    }
}

/// One language's prepared inputs for [`compute_fl_table`].
#[derive(Clone, Debug)]
pub struct LanguageData {
    pub name: String,
    pub dist: DomainDistribution,
    pub inventory: SegmentInventory,
}

/// Computes FL_V, FL_C, FL_P per language and filters by token count and, by
/// default, zero vowel-length load. An inventory that lacks one of the three
/// contrasts entirely scores 0 for it.
pub fn compute_fl_table(
    languages: &[LanguageData],
    min_n: u64,
    drop_zero_flv: bool,
) -> (Vec<FlResult>, Vec<Exclusion>) {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for lang in languages {
        let n = lang.dist.total();
        if n < min_n {
            excluded.push(Exclusion::BelowMinTokens {
                language: lang.name.clone(),
                n,
                min_n,
            });
            continue;
        }
        let fl = |spec: Result<ContrastSpec, FlError>| match spec {
            Ok(spec) => functional_load(&lang.dist, &spec),
            Err(FlError::NoContrast(_)) => 0.0,
            Err(e) => unreachable!("inventory-derived spec is always valid: {e}"),
        };
        let fl_v = fl(make_length_spec(&lang.inventory));
        if drop_zero_flv && fl_v == 0.0 {
            excluded.push(Exclusion::ZeroVowelLengthLoad {
                language: lang.name.clone(),
                n,
            });
            continue;
        }
        rows.push(FlResult {
            language: lang.name.clone(),
            fl_v,
            fl_c: fl(make_manner_spec(&lang.inventory)),
            fl_p: fl(make_place_spec(&lang.inventory)),
            n,
        });
    }
    (rows, excluded)
}

pub const FL_CSV_HEADER: [&str; 5] = ["language", "fl_v", "fl_c", "fl_p", "n"];

/// Writes `language,fl_v,fl_c,fl_p,n` rows. Floats use shortest
/// round-trip formatting, so identical values always print identically.
pub fn write_fl_csv<W: io::Write>(writer: W, rows: &[FlResult]) -> Result<(), FlError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FL_CSV_HEADER)?;
    for r in rows {
        w.write_record(&[
            r.language.clone(),
            format!("{}", r.fl_v),
            format!("{}", r.fl_c),
            format!("{}", r.fl_p),
            format!("{}", r.n),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the CSV written by [`write_fl_csv`].
pub fn read_fl_csv<R: io::Read>(reader: R) -> Result<Vec<FlResult>, FlError> {
    let mut r = csv::Reader::from_reader(reader);
    {
        let headers = r.headers()?;
        if headers.iter().ne(FL_CSV_HEADER) {
            return Err(FlError::BadTable {
                row: 1,
                reason: format!("expected header `{}`", FL_CSV_HEADER.join(",")),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let field = |j: usize| -> Result<f64, FlError> {
            let text = record.get(j).unwrap_or("");
            let value: f64 = text.parse().map_err(|_| FlError::BadTable {
                row,
                reason: format!("`{text}` is not a number"),
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(FlError::BadTable {
                    row,
                    reason: format!("{} must be finite and nonnegative", FL_CSV_HEADER[j]),
                });
            }
            Ok(value)
        };
        let language = record.get(0).unwrap_or("").trim().to_string();
        if language.is_empty() {
            return Err(FlError::BadTable {
                row,
                reason: "empty language name".into(),
            });
        }
        let n: u64 = record
            .get(4)
            .unwrap_or("")
            .parse()
            .map_err(|_| FlError::BadTable {
                row,
                reason: "n must be a positive integer".into(),
            })?;
        if n == 0 {
            return Err(FlError::BadTable {
                row,
                reason: "n must be at least 1".into(),
            });
        }
        rows.push(FlResult {
            language,
            fl_v: field(1)?,
            fl_c: field(2)?,
            fl_p: field(3)?,
            n,
        });
    }
    if rows.is_empty() {
        return Err(FlError::BadTable {
            row: 2,
            reason: "table has no rows".into(),
        });
    }
    Ok(rows)
}

/// The 90-language Pama-Nyungan estimates shipped with the crate.
pub const BUNDLED_FL_CSV: &str = include_str!("../data/pn_fl.csv");

pub fn bundled_fl_table() -> Vec<FlResult> {
    read_fl_csv(BUNDLED_FL_CSV.as_bytes()).expect("bundled FL table parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn dist(pairs: &[(&[&str], u64)]) -> DomainDistribution {
        let counts = pairs
            .iter()
            .map(|(ty, c)| (ty.iter().map(|s| s.to_string()).collect(), *c))
            .collect();
        DomainDistribution::new(counts).unwrap()
    }

    fn spec(name: &str, sets: &[&[&str]]) -> ContrastSpec {
        ContrastSpec::new(
            name,
            sets.iter()
                .map(|s| s.iter().map(|x| x.to_string()).collect())
                .collect(),
        )
        .unwrap()
    }

    fn length_spec() -> ContrastSpec {
        spec("FL_V", &[&["a", "aa"]])
    }

    #[test]
    fn uniform_entropy_is_log2_support() {
        let d = dist(&[
            (&["a", "t"], 1),
            (&["aa", "t"], 1),
            (&["a", "d"], 1),
            (&["aa", "d"], 1),
        ]);
        assert_eq!(domain_entropy(&d), 2.0);
    }

    #[test]
    fn degenerate_entropy_is_positive_zero() {
        let d = dist(&[(&["a", "t"], 7)]);
        let h = domain_entropy(&d);
        assert_eq!(h, 0.0);
        assert!(h.is_sign_positive());
    }

    #[test]
    fn skewed_entropy_by_hand() {
        let d = dist(&[
            (&["a", "t"], 4),
            (&["aa", "t"], 2),
            (&["a", "d"], 1),
            (&["aa", "d"], 1),
        ]);
        assert_abs_diff_eq!(domain_entropy(&d), 1.75, epsilon = 1e-15);
    }

    #[test]
    fn empty_distribution_is_rejected() {
        assert!(matches!(
            DomainDistribution::new(BTreeMap::new()),
            Err(FlError::EmptyDistribution)
        ));
        let zeros = BTreeMap::from([(vec!["a".to_string()], 0u64)]);
        assert!(DomainDistribution::new(zeros).is_err());
    }

    #[test]
    fn collapse_merges_length_pair() {
        let d = dist(&[(&["a", "t"], 1), (&["aa", "t"], 1)]);
        let c = collapse_lexicon(&d, &length_spec());
        assert_eq!(c.types(), 1);
        assert_eq!(c.total(), 2);
        assert_eq!(c.counts().values().copied().collect::<Vec<_>>(), [2]);
    }

    #[test]
    fn collapse_leaves_uninvolved_types_distinct() {
        let d = dist(&[(&["a", "t"], 1), (&["a", "n"], 1)]);
        let c = collapse_lexicon(&d, &length_spec());
        assert_eq!(c.types(), 2);
        assert_eq!(c.total(), 2);
    }

    #[test]
    fn collapse_consonant_pair_by_hand() {
        let d = dist(&[
            (&["a", "t"], 4),
            (&["aa", "t"], 2),
            (&["a", "d"], 1),
            (&["aa", "d"], 1),
        ]);
        let c = collapse_lexicon(&d, &spec("td", &[&["t", "d"]]));
        assert_eq!(c.types(), 2);
        let counts: Vec<u64> = c.counts().values().copied().collect();
        assert_eq!(counts.iter().sum::<u64>(), 8);
        assert!(counts.contains(&5) && counts.contains(&3));
    }

    #[test]
    fn fresh_symbols_avoid_synthetic_collisions() {
        // A surviving type already uses `*0`; the prefix must grow past it.
        let d = dist(&[(&["*0", "t"], 1), (&["a", "t"], 1), (&["aa", "t"], 1)]);
        let c = collapse_lexicon(&d, &length_spec());
        assert_eq!(c.types(), 2);
        assert_eq!(c.total(), 3);
    }

    #[test]
    fn uniform_length_fl_is_one_bit() {
        let d = dist(&[
            (&["a", "t"], 1),
            (&["aa", "t"], 1),
            (&["a", "d"], 1),
            (&["aa", "d"], 1),
        ]);
        assert_eq!(functional_load(&d, &length_spec()), 1.0);
    }

    #[test]
    fn skewed_length_fl_by_hand() {
        let d = dist(&[
            (&["a", "t"], 4),
            (&["aa", "t"], 2),
            (&["a", "d"], 1),
            (&["aa", "d"], 1),
        ]);
        let fl = functional_load(&d, &length_spec());
        assert_abs_diff_eq!(fl, 0.9387218755408672, epsilon = 1e-12);
        assert_eq!(format!("{fl:.6}"), "0.938722");
    }

    #[test]
    fn untouched_spec_has_exactly_zero_load() {
        let d = dist(&[(&["i", "t"], 3), (&["i", "n"], 2)]);
        assert_eq!(functional_load(&d, &length_spec()), 0.0);
    }

    #[test]
    fn spec_rejects_small_and_overlapping_sets() {
        assert!(matches!(
            ContrastSpec::new("x", vec![BTreeSet::from(["a".to_string()])]),
            Err(FlError::InvalidSpec { .. })
        ));
        let overlapping = vec![
            BTreeSet::from(["a".to_string(), "b".to_string()]),
            BTreeSet::from(["b".to_string(), "c".to_string()]),
        ];
        assert!(matches!(
            ContrastSpec::new("x", overlapping),
            Err(FlError::InvalidSpec { .. })
        ));
    }

    fn toy_inventory(rows: &str) -> SegmentInventory {
        let text = format!("symbol\tcategory\tlength\tquality\tplace\tmanner\n{rows}");
        SegmentInventory::parse(&text).unwrap()
    }

    #[test]
    fn length_spec_one_set_per_paired_quality() {
        let inv = toy_inventory(
            "a\tV\tshort\ta\t\t\naa\tV\tlong\ta\t\t\ni\tV\tshort\ti\t\t\nii\tV\tlong\ti\t\t\n\
u\tV\tshort\tu\t\t\nuu\tV\tlong\tu\t\t\nt\tC\t\t\tapical\tstop\n",
        );
        assert_eq!(make_length_spec(&inv).unwrap().sets().len(), 3);
    }

    #[test]
    fn length_spec_skips_unpaired_quality() {
        let inv = toy_inventory(
            "a\tV\tshort\ta\t\t\naa\tV\tlong\ta\t\t\ni\tV\tshort\ti\t\t\nt\tC\t\t\tapical\tstop\n",
        );
        assert_eq!(make_length_spec(&inv).unwrap().sets().len(), 1);
    }

    #[test]
    fn no_long_vowels_means_no_length_contrast() {
        let inv = toy_inventory("a\tV\tshort\ta\t\t\nt\tC\t\t\tapical\tstop\n");
        assert!(matches!(
            make_length_spec(&inv),
            Err(FlError::NoContrast("length"))
        ));
    }

    #[test]
    fn manner_spec_groups_by_place() {
        let inv = toy_inventory(
            "a\tV\tshort\ta\t\t\np\tC\t\t\tlabial\tstop\nb\tC\t\t\tlabial\tstop\n\
m\tC\t\t\tlabial\tnasal\nt\tC\t\t\tapical\tstop\nd\tC\t\t\tapical\tstop\n",
        );
        let spec = make_manner_spec(&inv).unwrap();
        assert_eq!(spec.sets().len(), 2);
        let labial: BTreeSet<String> = ["p", "b", "m"].iter().map(|s| s.to_string()).collect();
        assert!(spec.sets().contains(&labial));
    }

    #[test]
    fn one_consonant_per_place_means_no_manner_contrast() {
        let inv =
            toy_inventory("a\tV\tshort\ta\t\t\np\tC\t\t\tlabial\tstop\nt\tC\t\t\tapical\tstop\n");
        assert!(matches!(
            make_manner_spec(&inv),
            Err(FlError::NoContrast("manner"))
        ));
    }

    #[test]
    fn place_spec_groups_by_manner() {
        let inv = toy_inventory(
            "a\tV\tshort\ta\t\t\np\tC\t\t\tlabial\tstop\nt\tC\t\t\tapical\tstop\n\
k\tC\t\t\tvelar\tstop\nm\tC\t\t\tlabial\tnasal\nn\tC\t\t\tapical\tnasal\n",
        );
        let spec = make_place_spec(&inv).unwrap();
        assert_eq!(spec.sets().len(), 2);
        let stops: BTreeSet<String> = ["p", "t", "k"].iter().map(|s| s.to_string()).collect();
        assert!(spec.sets().contains(&stops));
    }

    fn language(name: &str, pairs: &[(&[&str], u64)], rows: &str) -> LanguageData {
        LanguageData {
            name: name.into(),
            dist: dist(pairs),
            inventory: toy_inventory(rows),
        }
    }

    const LENGTHY_ROWS: &str = "a\tV\tshort\ta\t\t\naa\tV\tlong\ta\t\t\n\
t\tC\t\t\tapical\tstop\nd\tC\t\t\tapical\tstop\nn\tC\t\t\tapical\tnasal\n";

    #[test]
    fn table_excludes_below_min_tokens() {
        let lang = language(
            "small",
            &[(&["a", "t"], 100), (&["aa", "t"], 50)],
            LENGTHY_ROWS,
        );
        let (rows, excluded) = compute_fl_table(&[lang], 200, true);
        assert!(rows.is_empty());
        assert!(matches!(
            &excluded[0],
            Exclusion::BelowMinTokens {
                n: 150,
                min_n: 200,
                ..
            }
        ));
    }

    #[test]
    fn table_excludes_zero_flv() {
        let lang = language(
            "flat",
            &[(&["a", "t"], 300), (&["a", "n"], 200)],
            LENGTHY_ROWS,
        );
        let (rows, excluded) = compute_fl_table(std::slice::from_ref(&lang), 200, true);
        assert!(rows.is_empty());
        assert!(matches!(
            &excluded[0],
            Exclusion::ZeroVowelLengthLoad { n: 500, .. }
        ));

        let (rows, excluded) = compute_fl_table(&[lang], 200, false);
        assert_eq!(rows.len(), 1);
        assert!(excluded.is_empty());
        assert_eq!(rows[0].fl_v, 0.0);
    }

    #[test]
    fn table_keeps_qualifying_language() {
        let lang = language(
            "ok",
            &[
                (&["a", "t"], 150),
                (&["aa", "t"], 100),
                (&["a", "d"], 30),
                (&["a", "n"], 20),
            ],
            LENGTHY_ROWS,
        );
        let (rows, excluded) = compute_fl_table(&[lang], 200, true);
        assert_eq!(rows.len(), 1);
        assert!(excluded.is_empty());
        let row = &rows[0];
        assert_eq!(row.n, 300);
        assert!(row.fl_v > 0.0 && row.fl_c > 0.0 && row.fl_p > 0.0);
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![
            FlResult {
                language: "Alpha".into(),
                fl_v: 0.25,
                fl_c: 1.5,
                fl_p: 0.75,
                n: 321,
            },
            FlResult {
                language: "Beta".into(),
                fl_v: 0.0061234,
                fl_c: 2.0,
                fl_p: 1.0,
                n: 208,
            },
        ];
        let mut buf = Vec::new();
        write_fl_csv(&mut buf, &rows).unwrap();
        let back = read_fl_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn bundled_table_loads() {
        let table = bundled_fl_table();
        assert_eq!(table.len(), 90);
        assert!(table
            .iter()
            .any(|r| r.language == "Warlpiri" && r.n == 3215));
    }

    #[test]
    fn bad_table_rows_are_reported() {
        let text = "language,fl_v,fl_c,fl_p,n\nX,0.1,abc,0.3,100\n";
        assert!(matches!(
            read_fl_csv(text.as_bytes()),
            Err(FlError::BadTable { row: 2, .. })
        ));
    }
}
