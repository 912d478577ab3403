//! `phyloload report`: gathers earlier signal/corr outputs from the output
//! directory and renders a self-contained HTML report with SVG figures.
//! Rendering is deterministic, so regenerating over unchanged inputs
//! reproduces the files byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::config::FileConfig;
use crate::render;
use crate::util::atomic_write;
use crate::CliError;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory holding earlier results; the report lands in
    /// `<out>/report/`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Newick tree sample to draw as a cladogram (first tree).
    #[arg(long, value_name = "FILE")]
    pub trees: Option<PathBuf>,

    /// Trait table CSV for the scatter figures.
    #[arg(long, value_name = "FILE")]
    pub fl_table: Option<PathBuf>,
}

/// Sorted `<out>/<prefix>*.json` paths.
fn summaries(out: &Path, prefix: &str) -> Vec<PathBuf> {
    let Ok(entries) = fs::read_dir(out) else {
        return Vec::new();
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            let name = path.file_name()?.to_str()?;
            (name.starts_with(prefix) && name.ends_with(".json")).then_some(path)
        })
        .collect();
    paths.sort();
    paths
}

/// Second column of a `tree_index,<stat>` CSV, if the file is readable.
fn read_series(path: &Path) -> Option<Vec<f64>> {
    let text = fs::read_to_string(path).ok()?;
    text.lines()
        .skip(1)
        .map(|line| line.split(',').nth(1)?.parse().ok())
        .collect()
}

fn hist_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(5, 30)
}

const STAT_FMT: fn(f64) -> String = |v| format!("{v:.4}");

pub fn run(args: ReportArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let out = super::out_dir(args.out, cfg);
    let signal_paths = summaries(&out, "signal_");
    let corr_paths = summaries(&out, "corr_");
    if signal_paths.is_empty() && corr_paths.is_empty() {
        return Err(CliError::Input(format!(
            "nothing to report: no signal_*.json or corr_*.json in {}; run `phyloload signal` or `phyloload corr` first",
            out.display()
        )));
    }

    let report_dir = out.join("report");
    let mut sections: Vec<(String, String)> = Vec::new();

    // Functional load scatters, when the trait table has the FL columns.
    let (table, source) = super::load_fl_table(args.fl_table.as_deref(), cfg, &out)?;
    for (x, y, file) in [
        ("fl_v", "fl_c", "fl_scatter_v_c.svg"),
        ("fl_v", "fl_p", "fl_scatter_v_p.svg"),
    ] {
        match table.pairs(x, y) {
            Ok(points) => {
                let svg = render::scatter(
                    &format!("{y} against {x} ({} languages)", points.len()),
                    x,
                    y,
                    &points,
                );
                atomic_write(&report_dir.join(file), svg.as_bytes())?;
                sections.push((format!("Functional load: {x} vs {y}"), svg));
            }
            Err(_) => {
                log::info!("trait table {source} lacks `{x}`/`{y}`, skipping that scatter");
            }
        }
    }

    for path in &signal_paths {
        let text = crate::util::read_to_string(path)?;
        let s: super::SignalSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut body = render::kv_table(&[
            ("trait", s.trait_name.clone()),
            ("taxa", s.n_taxa.to_string()),
            ("trees", s.n_trees.to_string()),
            ("mean K", STAT_FMT(s.mean_k)),
            ("sd", STAT_FMT(s.sd_k)),
            (
                "95% interval",
                format!("[{}, {}]", STAT_FMT(s.lo95), STAT_FMT(s.hi95)),
            ),
            (
                "permutation p",
                s.p_perm.map_or("disabled".to_string(), STAT_FMT),
            ),
        ]);
        if let Some(values) = read_series(&path.with_extension("csv")) {
            let svg = render::histogram(
                &format!("K of {} across {} trees", s.trait_name, values.len()),
                "K",
                &values,
                hist_bins(values.len()),
            );
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("signal");
            let tag = stem.strip_prefix("signal_").unwrap_or(stem);
            atomic_write(
                &report_dir.join(format!("k_hist_{tag}.svg")),
                svg.as_bytes(),
            )?;
            body.push_str(&svg);
        }
        sections.push((format!("Phylogenetic signal: {}", s.trait_name), body));
    }

    for path in &corr_paths {
        let text = crate::util::read_to_string(path)?;
        let c: super::CorrSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut body = render::kv_table(&[
            ("traits", format!("{} ~ {}", c.x, c.y)),
            ("taxa", c.n_taxa.to_string()),
            ("trees", c.n_trees.to_string()),
            ("mean r", STAT_FMT(c.mean_r)),
            ("sd", STAT_FMT(c.sd_r)),
            (
                "95% interval",
                format!("[{}, {}]", STAT_FMT(c.lo95), STAT_FMT(c.hi95)),
            ),
            ("p", STAT_FMT(c.p)),
        ]);
        if let Some(values) = read_series(&path.with_extension("csv")) {
            let svg = render::histogram(
                &format!("r of {} ~ {} across {} trees", c.x, c.y, values.len()),
                "r",
                &values,
                hist_bins(values.len()),
            );
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corr");
            let tag = stem.strip_prefix("corr_").unwrap_or(stem);
            atomic_write(
                &report_dir.join(format!("r_hist_{tag}.svg")),
                svg.as_bytes(),
            )?;
            body.push_str(&svg);
        }
        sections.push((format!("Correlation: {} ~ {}", c.x, c.y), body));
    }

    if args.trees.is_some() || cfg.trees.is_some() {
        let (sample, trees_path) = super::load_trees(args.trees.as_deref(), cfg)?;
        let tree = &sample.trees()[0];
        let svg = render::cladogram(
            &format!("first of {} trees ({} tips)", sample.len(), tree.n_tips()),
            tree,
        );
        atomic_write(&report_dir.join("cladogram.svg"), svg.as_bytes())?;
        sections.push((format!("Tree sample: {}", trees_path.display()), svg));
    }

    let html = render::page("phyloload report", &sections);
    let html_path = report_dir.join("report.html");
    atomic_write(&html_path, html.as_bytes())?;
    println!(
        "rendered {} sections -> {}",
        sections.len(),
        html_path.display()
    );
    Ok(())
}
