//! `phyloload fl`: segmented lexicons in, functional load table out.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use phyloload::funcload::{compute_fl_table, write_fl_csv, Exclusion, LanguageData};
use phyloload::segmental::{
    build_distribution, normalize_vowel_length, parse_lexicon, LexicalEntry, LexiconMode,
    NormalizeOptions, SegmentInventory, SegmentalError,
};

use crate::config::FileConfig;
use crate::util::{atomic_write, read_to_string};
use crate::CliError;

#[derive(Debug, Args)]
pub struct FlArgs {
    /// Directory of per-language lexicon TSVs (one `<language>.tsv` each).
    #[arg(long, value_name = "DIR")]
    pub lexicons: Option<PathBuf>,

    /// Directory of segment inventories named after the lexicons.
    #[arg(long, value_name = "DIR")]
    pub inventories: Option<PathBuf>,

    /// Segment undelimited forms longest-match instead of splitting on
    /// whitespace.
    #[arg(long)]
    pub tokenize: bool,

    /// Minimum qualifying domain tokens for a language to be scored.
    #[arg(long, value_name = "N")]
    pub min_n: Option<u64>,

    /// Keep languages whose vowel-length load is exactly zero.
    #[arg(long)]
    pub keep_zero_flv: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: FlArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let out = super::out_dir(args.out, cfg);
    let lex_dir = args
        .lexicons
        .or_else(|| cfg.lexicons.clone())
        .ok_or_else(|| {
            CliError::Input("--lexicons is required (or set `lexicons` in the config)".into())
        })?;
    let inv_dir = args
        .inventories
        .or_else(|| cfg.inventories.clone())
        .ok_or_else(|| {
            CliError::Input("--inventories is required (or set `inventories` in the config)".into())
        })?;
    let min_n = args.min_n.or(cfg.min_n).unwrap_or(200);
    let keep_zero = args.keep_zero_flv || cfg.keep_zero_flv.unwrap_or(false);
    let mode = if args.tokenize || cfg.tokenize.unwrap_or(false) {
        LexiconMode::Tokenize
    } else {
        LexiconMode::Canonical
    };

    let mut stems: Vec<(String, PathBuf)> = fs::read_dir(&lex_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", lex_dir.display())))?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            if path.extension().is_some_and(|ext| ext == "tsv") {
                let stem = path.file_stem()?.to_str()?.to_string();
                Some((stem, path))
            } else {
                None
            }
        })
        .collect();
    stems.sort();
    if stems.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no .tsv lexicons found",
            lex_dir.display()
        )));
    }

    let mut languages = Vec::new();
    let mut exclusions = Vec::new();
    let mut seen = BTreeSet::new();
    let opts = NormalizeOptions::default();
    for (stem, lex_path) in &stems {
        let language = phyloload::phylotree::canonical_taxon(stem);
        if !seen.insert(language.clone()) {
            return Err(CliError::Input(format!(
                "two lexicons canonicalize to the same language name `{language}`"
            )));
        }
        let inv_path = inv_dir.join(format!("{stem}.tsv"));
        if !inv_path.is_file() {
            return Err(CliError::Input(format!(
                "{}: no inventory for lexicon `{stem}`",
                inv_path.display()
            )));
        }
        let inventory = SegmentInventory::parse(&read_to_string(&inv_path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", inv_path.display())))?;
        let in_context =
            |e: SegmentalError| CliError::Input(format!("{}: {e}", lex_path.display()));
        let entries = parse_lexicon(&read_to_string(lex_path)?, &inventory, mode)
            .map_err(in_context)?
            .into_iter()
            .map(|entry| {
                Ok(LexicalEntry {
                    form: normalize_vowel_length(&entry.form, &inventory, &opts)
                        .map_err(in_context)?,
                    ..entry
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        match build_distribution(&entries, &inventory) {
            Ok((dist, stats)) => {
                log::info!(
                    "{language}: {} entries, {} domain tokens over {} types",
                    stats.entries,
                    stats.qualifying,
                    dist.types()
                );
                languages.push(LanguageData {
                    name: language,
                    dist,
                    inventory,
                });
            }
            Err(SegmentalError::EmptyDistribution) => {
                log::warn!("{language}: no qualifying domain tokens, excluded");
                exclusions.push(Exclusion::BelowMinTokens {
                    language,
                    n: 0,
                    min_n,
                });
            }
            Err(e) => return Err(in_context(e)),
        }
    }

    let (rows, mut excluded) = compute_fl_table(&languages, min_n, !keep_zero);
    exclusions.append(&mut excluded);
    exclusions.sort_by(|a, b| a.language().cmp(b.language()));

    let mut csv = Vec::new();
    write_fl_csv(&mut csv, &rows)?;
    let table_path = out.join("fl.csv");
    atomic_write(&table_path, &csv)?;
    let mut log_text = String::new();
    for e in &exclusions {
        log_text.push_str(&format!("{e}\n"));
    }
    let log_path = out.join("exclusions.log");
    atomic_write(&log_path, log_text.as_bytes())?;

    println!(
        "scored {} languages -> {} ({} excluded; see {})",
        rows.len(),
        table_path.display(),
        exclusions.len(),
        log_path.display()
    );
    Ok(())
}
