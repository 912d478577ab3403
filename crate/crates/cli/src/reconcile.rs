use std::collections::BTreeSet;
use std::path::Path;

use crate::CliError;

/// Outcome of matching canonical taxon names between a trait table and a
/// tree: taxa only in the data cannot be analyzed, taxa only in the trees
/// are pruned away, matched taxa proceed.
pub struct Reconciliation {
    pub matched: Vec<String>,
    pub data_only: Vec<String>,
    pub trees_only: Vec<String>,
}

pub fn reconcile(data: &[String], tree: &[String]) -> Reconciliation {
    let data: BTreeSet<&String> = data.iter().collect();
    let tree: BTreeSet<&String> = tree.iter().collect();
    Reconciliation {
        matched: data.intersection(&tree).map(|s| (*s).clone()).collect(),
        data_only: data.difference(&tree).map(|s| (*s).clone()).collect(),
        trees_only: tree.difference(&data).map(|s| (*s).clone()).collect(),
    }
}

/// Three aligned TSV columns; shorter columns pad with empty cells.
pub fn write_taxa_report(path: &Path, rec: &Reconciliation) -> Result<(), CliError> {
    let mut text = String::from("in_data_only\tin_trees_only\tmatched\n");
    let rows = rec
        .data_only
        .len()
        .max(rec.trees_only.len())
        .max(rec.matched.len());
    fn cell(v: &[String], i: usize) -> &str {
        v.get(i).map_or("", String::as_str)
    }
    for i in 0..rows {
        text.push_str(&format!(
            "{}\t{}\t{}\n",
            cell(&rec.data_only, i),
            cell(&rec.trees_only, i),
            cell(&rec.matched, i)
        ));
    }
    crate::util::atomic_write(path, text.as_bytes())
}

/// Data taxa absent from the trees are a hard error; the report written
/// beforehand gives the full picture.
pub fn require_full_coverage(rec: &Reconciliation, report: &Path) -> Result<(), CliError> {
    if rec.data_only.is_empty() {
        return Ok(());
    }
    Err(CliError::Input(format!(
        "{} data taxa missing from the trees (see {}): {}",
        rec.data_only.len(),
        report.display(),
        rec.data_only.join(", ")
    )))
}
