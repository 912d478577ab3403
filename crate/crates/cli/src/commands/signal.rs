//! `phyloload signal`: Blomberg's K for one trait over a posterior tree
//! sample, with a per-tree permutation test.

use std::path::PathBuf;

use clap::Args;
use phyloload::phylostats::{signal_over_sample, AggregateOptions};

use crate::config::FileConfig;
use crate::util::{atomic_write, slug};
use crate::CliError;

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// Trait column to test (e.g. fl_v).
    #[arg(long = "trait", value_name = "NAME")]
    pub trait_name: String,

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

    /// Permutations per tree for the signal p-value; 0 disables the test.
    #[arg(long, value_name = "N")]
    pub n_perm: Option<usize>,

    /// Random seed for the permutation streams.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Regularize singular covariances with a small diagonal jitter.
    #[arg(long)]
    pub jitter: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: SignalArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let out = super::out_dir(args.out, cfg);
    let (table, source) = super::load_fl_table(args.fl_table.as_deref(), cfg, &out)?;
    log::info!("trait table: {source}");
    let x = table.column(&args.trait_name)?;
    let sample = super::resolve_sample(args.no_phylo, args.trees.as_deref(), cfg, x.taxa(), &out)?;

    let n_perm = match args.n_perm.or(cfg.n_perm) {
        Some(0) => None,
        Some(n) => Some(n),
        None => Some(999),
    };
    let opts = AggregateOptions {
        jitter: args.jitter || cfg.jitter.unwrap_or(false),
        n_perm,
        seed: args.seed.or(cfg.seed).unwrap_or(0),
    };
    let result = signal_over_sample(&sample, &x, &opts)?;

    let tag = slug(&args.trait_name);
    let mut csv = String::from("tree_index,k\n");
    for (i, k) in result.k.iter().enumerate() {
        csv.push_str(&format!("{i},{k}\n"));
    }
    let csv_path = out.join(format!("signal_{tag}.csv"));
    atomic_write(&csv_path, csv.as_bytes())?;

    let summary = super::SignalSummary {
        trait_name: result.trait_name.clone(),
        n_taxa: result.n_taxa,
        n_trees: result.k.len(),
        mean_k: result.mean_k,
        sd_k: result.sd_k,
        lo95: result.lo95,
        hi95: result.hi95,
        p_perm: result.p_perm,
        n_perm,
        seed: opts.seed,
        jitter: opts.jitter,
    };
    let json_path = out.join(format!("signal_{tag}.json"));
    atomic_write(
        &json_path,
        format!("{}\n", serde_json::to_string_pretty(&summary)?).as_bytes(),
    )?;

    println!(
        "phylogenetic signal of {} over {} trees ({} taxa)",
        summary.trait_name, summary.n_trees, summary.n_taxa
    );
    println!(
        "  mean K = {:.4} (sd {:.4}), 95% interval [{:.4}, {:.4}]",
        summary.mean_k, summary.sd_k, summary.lo95, summary.hi95
    );
    match (summary.p_perm, n_perm) {
        (Some(p), Some(n)) => println!("  permutation p = {p:.4} ({n} permutations per tree)"),
        _ => println!("  permutation test disabled"),
    }
    println!("  wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}
