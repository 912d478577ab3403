//! `phyloload simulate`: Brownian-motion trait replicates on a tree, written
//! as one trait table per replicate plus a manifest.

use std::path::PathBuf;

use clap::Args;
use phyloload::phylostats::{BmSampler, RateMatrix};
use serde::Serialize;

use crate::config::FileConfig;
use crate::util::atomic_write;
use crate::CliError;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Newick tree sample; simulation runs on the first tree.
    #[arg(long, value_name = "FILE")]
    pub trees: Option<PathBuf>,

    /// Rate: `sigma2` for one trait, `var_x,var_y,rho` for two.
    #[arg(long, value_name = "RATE")]
    pub rate: String,

    /// Root state per trait, comma-separated; defaults to zeros.
    #[arg(long, value_name = "X[,Y]")]
    pub root: Option<String>,

    /// Number of replicate data sets.
    #[arg(long, value_name = "N")]
    pub replicates: Option<u64>,

    /// Random seed; replicate i draws from stream (seed, i).
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Output directory; replicates land under `<out>/sim/`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest {
    source_trees: String,
    tree_index: usize,
    n_taxa: usize,
    trait_names: Vec<String>,
    rate: Vec<Vec<f64>>,
    root: Vec<f64>,
    replicates: u64,
    seed: u64,
    files: Vec<String>,
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{what}: `{part}` is not a number")))
        })
        .collect()
}

pub fn run(args: SimulateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let out = super::out_dir(args.out, cfg);
    let (sample, trees_path) = super::load_trees(args.trees.as_deref(), cfg)?;
    if sample.len() > 1 {
        log::info!(
            "{}: {} trees, simulating on the first",
            trees_path.display(),
            sample.len()
        );
    }
    let tree = &sample.trees()[0];

    let rate = match *parse_floats(&args.rate, "--rate")? {
        [sigma2] => RateMatrix::scalar(sigma2)?,
        [var_x, var_y, rho] => RateMatrix::correlated(var_x, var_y, rho)?,
        _ => {
            return Err(CliError::Input(
                "--rate takes `sigma2` or `var_x,var_y,rho`".into(),
            ))
        }
    };
    let root = match &args.root {
        Some(text) => parse_floats(text, "--root")?,
        None => vec![0.0; rate.dim()],
    };
    let replicates = args.replicates.unwrap_or(100);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let sampler = BmSampler::from_tree(tree, &rate, &root)?;
    let sim_dir = out.join("sim");
    let mut files = Vec::new();
    let mut trait_names = Vec::new();
    for rep in 0..replicates {
        let traits = sampler.sample_with_seed(seed, 0, rep);
        if rep == 0 {
            trait_names = traits.iter().map(|t| t.name().to_string()).collect();
        }
        let mut csv = format!("taxon,{}\n", trait_names.join(","));
        for (i, taxon) in sampler.taxa().iter().enumerate() {
            csv.push_str(taxon);
            for t in &traits {
                csv.push_str(&format!(",{}", t.values()[i]));
            }
            csv.push('\n');
        }
        let name = format!("rep_{rep:04}.csv");
        atomic_write(&sim_dir.join(&name), csv.as_bytes())?;
        files.push(name);
    }

    let manifest = Manifest {
        source_trees: trees_path.display().to_string(),
        tree_index: 0,
        n_taxa: sampler.taxa().len(),
        trait_names,
        rate: rate
            .matrix()
            .row_iter()
            .map(|row| row.iter().copied().collect())
            .collect(),
        root,
        replicates,
        seed,
        files,
    };
    let manifest_path = sim_dir.join("manifest.json");
    atomic_write(
        &manifest_path,
        format!("{}\n", serde_json::to_string_pretty(&manifest)?).as_bytes(),
    )?;

    println!(
        "simulated {} replicates of {} traits on {} taxa -> {}",
        replicates,
        sampler.n_traits(),
        sampler.taxa().len(),
        sim_dir.display()
    );
    Ok(())
}
