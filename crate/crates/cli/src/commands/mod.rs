//! Subcommand implementations plus the input-resolution helpers they share.

pub mod corr;
pub mod fl;
pub mod report;
pub mod signal;
pub mod simulate;

use std::path::{Path, PathBuf};

use phyloload::funcload::bundled_fl_table;
use phyloload::phylotree::{canonical_taxon, parse_tree_sample, TreeSample};
use serde::{Deserialize, Serialize};

use crate::config::FileConfig;
use crate::traits_io::TraitTable;
use crate::util::read_to_string;
use crate::CliError;

/// Output directory: flag, then config, then `out/`.
pub fn out_dir(flag: Option<PathBuf>, cfg: &FileConfig) -> PathBuf {
    flag.or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Resolves the FL table: explicit flag, then config, then a previously
/// written `<out>/fl.csv`, then the bundled estimates. Returns the table and
/// a description of where it came from.
pub fn load_fl_table(
    flag: Option<&Path>,
    cfg: &FileConfig,
    out: &Path,
) -> Result<(TraitTable, String), CliError> {
    let configured = flag.or(cfg.fl_table.as_deref());
    if let Some(path) = configured {
        return Ok((TraitTable::read(path)?, path.display().to_string()));
    }
    let local = out.join("fl.csv");
    if local.is_file() {
        return Ok((TraitTable::read(&local)?, local.display().to_string()));
    }
    Ok((
        TraitTable::from_fl_rows(&bundled_fl_table()),
        "bundled estimates".to_string(),
    ))
}

/// Loads the posterior tree sample and canonicalizes every tip label so tree
/// taxa and data taxa meet in one namespace.
pub fn load_trees(
    flag: Option<&Path>,
    cfg: &FileConfig,
) -> Result<(TreeSample, PathBuf), CliError> {
    let path = flag.or(cfg.trees.as_deref()).ok_or_else(|| {
        CliError::Input("--trees is required (or set `trees` in the config)".into())
    })?;
    let sample = parse_tree_sample(&read_to_string(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let renamed = sample
        .trees()
        .iter()
        .map(|t| t.rename_tips(canonical_taxon))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((TreeSample::new(renamed)?, path.to_path_buf()))
}

/// Picks the tree sample for a statistic over `taxa`, writes
/// `<out>/taxa_report.tsv`, and rejects data taxa the trees do not cover.
/// With `no_phylo` the sample is a single unit-branch star tree over the
/// data taxa, whose covariance is exactly the identity.
pub fn resolve_sample(
    no_phylo: bool,
    trees_flag: Option<&Path>,
    cfg: &FileConfig,
    taxa: &[String],
    out: &Path,
) -> Result<TreeSample, CliError> {
    let sample = if no_phylo {
        log::info!("--no-phylo: independent taxa (identity covariance)");
        TreeSample::new(vec![phyloload::phylotree::star_tree(taxa, 1.0)?])?
    } else {
        let (sample, path) = load_trees(trees_flag, cfg)?;
        log::info!("{}: {} trees", path.display(), sample.len());
        sample
    };
    let tips: Vec<String> = sample.trees()[0]
        .tip_labels()
        .into_iter()
        .map(str::to_string)
        .collect();
    let rec = crate::reconcile::reconcile(taxa, &tips);
    let report = out.join("taxa_report.tsv");
    crate::reconcile::write_taxa_report(&report, &rec)?;
    if !rec.trees_only.is_empty() {
        log::info!(
            "{} tree taxa without data will be pruned (see {})",
            rec.trees_only.len(),
            report.display()
        );
    }
    crate::reconcile::require_full_coverage(&rec, &report)?;
    Ok(sample)
}

/// JSON summary written by `signal` and read back by `report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSummary {
    pub trait_name: String,
    pub n_taxa: usize,
    pub n_trees: usize,
    pub mean_k: f64,
    pub sd_k: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub p_perm: Option<f64>,
    pub n_perm: Option<usize>,
    pub seed: u64,
    pub jitter: bool,
}

/// JSON summary written by `corr` and read back by `report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrSummary {
    pub x: String,
    pub y: String,
    pub n_taxa: usize,
    pub n_trees: usize,
    pub mean_r: f64,
    pub sd_r: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub p: f64,
    pub jitter: bool,
}
