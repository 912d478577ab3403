//! `phyloload corr`: phylogenetic correlation of two traits over a posterior
//! tree sample.

use std::path::PathBuf;

use clap::Args;
use phyloload::phylostats::{correlation_over_sample, AggregateOptions};

use crate::config::FileConfig;
use crate::util::{atomic_write, slug};
use crate::CliError;

#[derive(Debug, Args)]
pub struct CorrArgs {
    /// The two trait columns to correlate.
    #[arg(long, value_name = "X,Y")]
    pub pair: String,

    /// Trait table CSV; defaults to `<out>/fl.csv`, then the bundled
    /// estimates.
    #[arg(long, value_name = "FILE")]
    pub fl_table: Option<PathBuf>,

    /// Newick tree sample, one tree per line.
    #[arg(long, value_name = "FILE")]
    pub trees: Option<PathBuf>,

    /// Treat taxa as independent instead of reading trees.
    #[arg(long)]
    pub no_phylo: bool,

    /// Regularize singular covariances with a small diagonal jitter.
    #[arg(long)]
    pub jitter: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn split_pair(pair: &str) -> Result<(&str, &str), CliError> {
    let mut parts = pair.split(',').map(str::trim);
    match (parts.next(), parts.next(), parts.next()) {
        (Some(x), Some(y), None) if !x.is_empty() && !y.is_empty() => Ok((x, y)),
        _ => Err(CliError::Input(format!(
            "--pair takes two comma-separated trait names, got `{pair}`"
        ))),
    }
}

pub fn run(args: CorrArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let out = super::out_dir(args.out, cfg);
    let (x_name, y_name) = split_pair(&args.pair)?;
    let (table, source) = super::load_fl_table(args.fl_table.as_deref(), cfg, &out)?;
    log::info!("trait table: {source}");
    let x = table.column(x_name)?;
    let y = table.column(y_name)?;
    let sample = super::resolve_sample(args.no_phylo, args.trees.as_deref(), cfg, x.taxa(), &out)?;

    let opts = AggregateOptions {
        jitter: args.jitter || cfg.jitter.unwrap_or(false),
        n_perm: None,
        seed: cfg.seed.unwrap_or(0),
    };
    let result = correlation_over_sample(&sample, &x, &y, &opts)?;

    let tag = format!("{}_{}", slug(x_name), slug(y_name));
    let mut csv = String::from("tree_index,r\n");
    for (i, r) in result.r.iter().enumerate() {
        csv.push_str(&format!("{i},{r}\n"));
    }
    let csv_path = out.join(format!("corr_{tag}.csv"));
    atomic_write(&csv_path, csv.as_bytes())?;

    let summary = super::CorrSummary {
        x: result.x_name.clone(),
        y: result.y_name.clone(),
        n_taxa: result.n_taxa,
        n_trees: result.r.len(),
        mean_r: result.mean_r,
        sd_r: result.sd_r,
        lo95: result.lo95,
        hi95: result.hi95,
        p: result.p,
        jitter: opts.jitter,
    };
    let json_path = out.join(format!("corr_{tag}.json"));
    atomic_write(
        &json_path,
        format!("{}\n", serde_json::to_string_pretty(&summary)?).as_bytes(),
    )?;

    println!(
        "phylogenetic correlation of {} and {} over {} trees ({} taxa)",
        summary.x, summary.y, summary.n_trees, summary.n_taxa
    );
    println!(
        "  mean r = {:.4} (sd {:.4}), 95% interval [{:.4}, {:.4}], p = {:.4}",
        summary.mean_r, summary.sd_r, summary.lo95, summary.hi95, summary.p
    );
    println!("  wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}
