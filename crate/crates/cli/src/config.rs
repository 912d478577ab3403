use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Keys mirror the command-line flags; a flag given on the command line
/// always wins over the config file, which wins over built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lexicons: Option<PathBuf>,
    pub inventories: Option<PathBuf>,
    pub trees: Option<PathBuf>,
    pub fl_table: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub min_n: Option<u64>,
    pub tokenize: Option<bool>,
    pub keep_zero_flv: Option<bool>,
    pub n_perm: Option<usize>,
    pub seed: Option<u64>,
    pub jitter: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = crate::util::read_to_string(path)?;
        toml::from_str(&text).map_err(|err| CliError::Input(format!("{}: {err}", path.display())))
    }
}
