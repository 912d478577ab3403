//! Segment inventories, segmented lexicons, and domain extraction.
//!
//! A lexical entry contributes at most one domain token: the word's first
//! vowel (taken as tonic) plus the single consonant standing between it and
//! the next vowel. Vowel length is normalized before extraction so that two
//! adjacent short vowels, or a short vowel echoed across a glide, count as
//! one long vowel.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::funcload::DomainDistribution;

#[derive(Debug, Error)]
pub enum SegmentalError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate symbol `{symbol}` (lines {first} and {second})")]
    DuplicateSymbol {
        symbol: String,
        first: usize,
        second: usize,
    },
    #[error("line {line}: symbol `{symbol}` contains reserved character `*`")]
    ReservedCharacter { symbol: String, line: usize },
    #[error("quality `{quality}` has more than one {length} vowel; length pairing is ambiguous")]
    AmbiguousQuality {
        quality: String,
        length: VowelLength,
    },
    #[error("entry `{entry}` (line {line}): unknown symbol at offset {offset}")]
    UnknownSymbol {
        entry: String,
        line: usize,
        offset: usize,
    },
    #[error("no long counterpart for quality `{quality}`; cannot merge adjacent short vowels")]
    NoLongCounterpart { quality: String },
    #[error("no qualifying domain tokens in lexicon")]
    EmptyDistribution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VowelLength {
    Short,
    Long,
}

impl fmt::Display for VowelLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VowelLength::Short => f.write_str("short"),
            VowelLength::Long => f.write_str("long"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegmentClass {
    Vowel {
        length: VowelLength,
        quality: String,
    },
    Consonant {
        place: String,
        manner: String,
    },
}

/// One phoneme of an inventory. Complex segments (geminates, pre-stopped
/// sonorants, digraph long vowels) are single entries with multi-character
/// symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub symbol: String,
    pub class: SegmentClass,
}

impl Segment {
    pub fn is_vowel(&self) -> bool {
        matches!(self.class, SegmentClass::Vowel { .. })
    }

    pub fn is_short_vowel(&self) -> bool {
        matches!(
            self.class,
            SegmentClass::Vowel {
                length: VowelLength::Short,
                ..
            }
        )
    }

    pub fn quality(&self) -> Option<&str> {
        match &self.class {
            SegmentClass::Vowel { quality, .. } => Some(quality),
            SegmentClass::Consonant { .. } => None,
        }
    }
}

const INVENTORY_HEADER: [&str; 6] = ["symbol", "category", "length", "quality", "place", "manner"];

/// The segment set of one language, with short/long vowel pairs indexed by
/// quality.
#[derive(Clone, Debug, Default)]
pub struct SegmentInventory {
    segments: BTreeMap<String, Segment>,
    /// quality -> (short symbol, long symbol), for qualities attested at both
    /// lengths
    long_counterpart: BTreeMap<String, (String, String)>,
}

impl SegmentInventory {
    /// Parses the TSV inventory format: header
    /// `symbol category length quality place manner`, empty cells for
    /// inapplicable fields. The character `*` is reserved for collapse
    /// symbols and rejected.
    pub fn parse(text: &str) -> Result<Self, SegmentalError> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((i, l)) if l.trim().is_empty() => {
                    let _ = i;
                    continue;
                }
                Some((i, l)) => break (i, l),
                None => {
                    return Err(SegmentalError::MalformedRow {
                        line: 1,
                        reason: "empty inventory".into(),
                    })
                }
            }
        };
        let cells: Vec<&str> = header.1.trim_end_matches('\r').split('\t').collect();
        if cells.iter().map(|c| c.trim()).ne(INVENTORY_HEADER) {
            return Err(SegmentalError::MalformedRow {
                line: header.0 + 1,
                reason: format!("expected header `{}`", INVENTORY_HEADER.join("\\t")),
            });
        }

        let mut segments = BTreeMap::new();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut cells: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
            if cells.len() > 6 && cells[6..].iter().any(|c| !c.trim().is_empty()) {
                return Err(SegmentalError::MalformedRow {
                    line,
                    reason: format!("expected 6 columns, found {}", cells.len()),
                });
            }
            cells.resize(6, "");
            let cell = |i: usize| cells[i].trim();

            let symbol = cell(0);
            if symbol.is_empty() {
                return Err(SegmentalError::MalformedRow {
                    line,
                    reason: "empty symbol".into(),
                });
            }
            if symbol.contains('*') {
                return Err(SegmentalError::ReservedCharacter {
                    symbol: symbol.into(),
                    line,
                });
            }
            if let Some(&first) = seen.get(symbol) {
                return Err(SegmentalError::DuplicateSymbol {
                    symbol: symbol.into(),
                    first,
                    second: line,
                });
            }
            seen.insert(symbol.into(), line);

            let class = match cell(1).to_ascii_lowercase().as_str() {
                "v" | "vowel" => {
                    let length = match cell(2).to_ascii_lowercase().as_str() {
                        "short" => VowelLength::Short,
                        "long" => VowelLength::Long,
                        "" => {
                            return Err(SegmentalError::MalformedRow {
                                line,
                                reason: format!("vowel `{symbol}` missing length"),
                            })
                        }
                        other => {
                            return Err(SegmentalError::MalformedRow {
                                line,
                                reason: format!("unknown length `{other}`"),
                            })
                        }
                    };
                    if cell(3).is_empty() {
                        return Err(SegmentalError::MalformedRow {
                            line,
                            reason: format!("vowel `{symbol}` missing quality"),
                        });
                    }
                    if !cell(4).is_empty() || !cell(5).is_empty() {
                        return Err(SegmentalError::MalformedRow {
                            line,
                            reason: format!("vowel `{symbol}` carries place/manner"),
                        });
                    }
                    SegmentClass::Vowel {
                        length,
                        quality: cell(3).into(),
                    }
                }
                "c" | "consonant" => {
                    if cell(4).is_empty() || cell(5).is_empty() {
                        return Err(SegmentalError::MalformedRow {
                            line,
                            reason: format!("consonant `{symbol}` missing place or manner"),
                        });
                    }
                    if !cell(2).is_empty() || !cell(3).is_empty() {
                        return Err(SegmentalError::MalformedRow {
                            line,
                            reason: format!("consonant `{symbol}` carries length/quality"),
                        });
                    }
                    SegmentClass::Consonant {
                        place: cell(4).into(),
                        manner: cell(5).into(),
                    }
                }
                other => {
                    return Err(SegmentalError::MalformedRow {
                        line,
                        reason: format!("unknown category `{other}`"),
                    })
                }
            };
            segments.insert(
                symbol.to_string(),
                Segment {
                    symbol: symbol.into(),
                    class,
                },
            );
        }

        let long_counterpart = pair_lengths(&segments)?;
        Ok(Self {
            segments,
            long_counterpart,
        })
    }

    pub fn get(&self, symbol: &str) -> Option<&Segment> {
        self.segments.get(symbol)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.segments.contains_key(symbol)
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values()
    }

    pub fn consonants(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values().filter(|s| !s.is_vowel())
    }

    pub fn vowels(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values().filter(|s| s.is_vowel())
    }

    /// quality -> (short symbol, long symbol)
    pub fn long_counterparts(&self) -> &BTreeMap<String, (String, String)> {
        &self.long_counterpart
    }

    pub fn long_of(&self, quality: &str) -> Option<&str> {
        self.long_counterpart.get(quality).map(|(_, l)| l.as_str())
    }
}

fn pair_lengths(
    segments: &BTreeMap<String, Segment>,
) -> Result<BTreeMap<String, (String, String)>, SegmentalError> {
    let mut by_quality: BTreeMap<&str, (Vec<&str>, Vec<&str>)> = BTreeMap::new();
    for seg in segments.values() {
        if let SegmentClass::Vowel { length, quality } = &seg.class {
            let entry = by_quality.entry(quality).or_default();
            match length {
                VowelLength::Short => entry.0.push(&seg.symbol),
                VowelLength::Long => entry.1.push(&seg.symbol),
            }
        }
    }
    let mut map = BTreeMap::new();
    for (quality, (shorts, longs)) in by_quality {
        if shorts.is_empty() || longs.is_empty() {
            continue;
        }
        if shorts.len() > 1 {
            return Err(SegmentalError::AmbiguousQuality {
                quality: quality.into(),
                length: VowelLength::Short,
            });
        }
        if longs.len() > 1 {
            return Err(SegmentalError::AmbiguousQuality {
                quality: quality.into(),
                length: VowelLength::Long,
            });
        }
        map.insert(quality.to_string(), (shorts[0].into(), longs[0].into()));
    }
    Ok(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LexiconMode {
    /// Forms are whitespace-separated segment symbols.
    Canonical,
    /// Forms are undelimited; segmentation is longest-match left to right.
    /// Whitespace inside a form is skipped.
    Tokenize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexicalEntry {
    pub form: Vec<String>,
    pub gloss: Option<String>,
    pub source_line: usize,
}

/// Parses the TSV lexicon format: header `form gloss`, one entry per line.
/// Offsets in errors count characters within the form field.
pub fn parse_lexicon(
    text: &str,
    inv: &SegmentInventory,
    mode: LexiconMode,
) -> Result<Vec<LexicalEntry>, SegmentalError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => {
                return Err(SegmentalError::MalformedRow {
                    line: 1,
                    reason: "empty lexicon".into(),
                })
            }
        }
    };
    let cells: Vec<&str> = header.1.trim_end_matches('\r').split('\t').collect();
    if cells.first().map(|c| c.trim()) != Some("form")
        || cells.get(1).map(|c| c.trim()) != Some("gloss")
    {
        return Err(SegmentalError::MalformedRow {
            line: header.0 + 1,
            reason: "expected header `form\\tgloss`".into(),
        });
    }

    // Longest-match needs symbol lengths in characters.
    let symbols: Vec<(Vec<char>, &str)> = inv
        .segments()
        .map(|s| (s.symbol.chars().collect(), s.symbol.as_str()))
        .collect();

    let mut entries = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
        let form_text = cells[0].trim();
        if form_text.is_empty() {
            return Err(SegmentalError::MalformedRow {
                line,
                reason: "empty form".into(),
            });
        }
        let gloss = cells
            .get(1)
            .map(|c| c.trim())
            .filter(|c| !c.is_empty())
            .map(String::from);

        let chars: Vec<char> = form_text.chars().collect();
        let mut form = Vec::new();
        let mut i = 0;
        match mode {
            LexiconMode::Canonical => {
                while i < chars.len() {
                    if chars[i].is_whitespace() {
                        i += 1;
                        continue;
                    }
                    let start = i;
                    while i < chars.len() && !chars[i].is_whitespace() {
                        i += 1;
                    }
                    let token: String = chars[start..i].iter().collect();
                    if !inv.contains(&token) {
                        return Err(SegmentalError::UnknownSymbol {
                            entry: form_text.into(),
                            line,
                            offset: start,
                        });
                    }
                    form.push(token);
                }
            }
            LexiconMode::Tokenize => {
                while i < chars.len() {
                    if chars[i].is_whitespace() {
                        i += 1;
                        continue;
                    }
                    let best = symbols
                        .iter()
                        .filter(|(sc, _)| chars[i..].starts_with(sc))
                        .map(|(sc, sym)| (sc.len(), *sym))
                        .max();
                    match best {
                        Some((len, sym)) => {
                            form.push(sym.to_string());
                            i += len;
                        }
                        None => {
                            return Err(SegmentalError::UnknownSymbol {
                                entry: form_text.into(),
                                line,
                                offset: i,
                            })
                        }
                    }
                }
            }
        }
        entries.push(LexicalEntry {
            form,
            gloss,
            source_line: line,
        });
    }
    Ok(entries)
}

/// Options for [`normalize_vowel_length`].
#[derive(Clone, Debug)]
pub struct NormalizeOptions {
    /// `(vowel quality, glide symbol)` pairs: a short vowel of the quality,
    /// the glide, and another short vowel of the same quality merge into the
    /// quality's long vowel.
    pub glide_rules: Vec<(String, String)>,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            glide_rules: vec![("u".into(), "w".into()), ("i".into(), "j".into())],
        }
    }
}

/// Rewrites vowel length in a segmented form: first each short-glide-short
/// trigraph over one quality becomes that quality's long vowel, then each
/// pair of adjacent short vowels becomes the long counterpart of the first
/// vowel's quality. Both passes run left to right without rescanning their
/// own output.
pub fn normalize_vowel_length(
    form: &[String],
    inv: &SegmentInventory,
    opts: &NormalizeOptions,
) -> Result<Vec<String>, SegmentalError> {
    let short_quality = |sym: &str| -> Option<&str> {
        let seg = inv.get(sym)?;
        if seg.is_short_vowel() {
            seg.quality()
        } else {
            None
        }
    };
    let long_of = |quality: &str| -> Result<String, SegmentalError> {
        inv.long_of(quality)
            .map(String::from)
            .ok_or_else(|| SegmentalError::NoLongCounterpart {
                quality: quality.into(),
            })
    };

    // Pass 1: vowel-glide-vowel trigraphs.
    let mut pass1: Vec<String> = Vec::with_capacity(form.len());
    let mut i = 0;
    while i < form.len() {
        let merged = (i + 2 < form.len())
            .then(|| short_quality(&form[i]))
            .flatten()
            .filter(|q| {
                opts.glide_rules
                    .iter()
                    .any(|(gq, g)| gq == q && *g == form[i + 1])
                    && short_quality(&form[i + 2]) == Some(q)
            });
        match merged {
            Some(q) => {
                pass1.push(long_of(q)?);
                i += 3;
            }
            None => {
                pass1.push(form[i].clone());
                i += 1;
            }
        }
    }

    // Pass 2: adjacent short vowels.
    let mut out: Vec<String> = Vec::with_capacity(pass1.len());
    let mut i = 0;
    while i < pass1.len() {
        if i + 1 < pass1.len() && short_quality(&pass1[i + 1]).is_some() {
            if let Some(q) = short_quality(&pass1[i]) {
                out.push(long_of(q)?);
                i += 2;
                continue;
            }
        }
        out.push(pass1[i].clone());
        i += 1;
    }
    Ok(out)
}

/// One observation of the analysis domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainToken {
    pub vowel: Segment,
    pub consonant: Segment,
}

/// Extracts the domain token of a normalized entry: the first vowel plus the
/// single consonant standing between it and the next vowel. Entries whose
/// tonic vowel is word-final, is followed by a cluster, or whose following
/// consonant is not intervocalic yield `None`.
pub fn extract_domains(entry: &LexicalEntry, inv: &SegmentInventory) -> Option<DomainToken> {
    let form = &entry.form;
    let tonic = form
        .iter()
        .position(|s| inv.get(s).is_some_and(Segment::is_vowel))?;
    let consonant = inv.get(form.get(tonic + 1)?)?;
    if consonant.is_vowel() {
        return None;
    }
    let next = inv.get(form.get(tonic + 2)?)?;
    if !next.is_vowel() {
        return None;
    }
    Some(DomainToken {
        vowel: inv.get(&form[tonic])?.clone(),
        consonant: consonant.clone(),
    })
}

/// Tally of how lexicon entries fared during domain extraction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestionStats {
    pub entries: usize,
    pub qualifying: usize,
    pub no_vowel: usize,
    pub non_qualifying: usize,
}

/// Counts domain string types over all qualifying entries. Each entry
/// contributes at most one token; entries without vowels are skipped with a
/// warning.
pub fn build_distribution(
    entries: &[LexicalEntry],
    inv: &SegmentInventory,
) -> Result<(DomainDistribution, IngestionStats), SegmentalError> {
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    let mut stats = IngestionStats::default();
    for entry in entries {
        stats.entries += 1;
        if !entry
            .form
            .iter()
            .any(|s| inv.get(s).is_some_and(Segment::is_vowel))
        {
            stats.no_vowel += 1;
            log::warn!("line {}: entry without vowels skipped", entry.source_line);
            continue;
        }
        match extract_domains(entry, inv) {
            Some(token) => {
                stats.qualifying += 1;
                *counts
                    .entry(vec![token.vowel.symbol, token.consonant.symbol])
                    .or_insert(0) += 1;
            }
            None => stats.non_qualifying += 1,
        }
    }
    let dist = DomainDistribution::new(counts).map_err(|_| SegmentalError::EmptyDistribution)?;
    Ok((dist, stats))
}
