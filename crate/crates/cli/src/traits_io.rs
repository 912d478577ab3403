use std::collections::BTreeSet;
use std::path::Path;

use phyloload::funcload::FlResult;
use phyloload::phylostats::TraitVector;
use phyloload::phylotree::canonical_taxon;

use crate::CliError;

/// A taxon-keyed table of numeric traits: the first CSV column names the
/// taxon (any header), every remaining column is a named trait. Both the
/// functional load table and simulator replicates use this shape.
pub struct TraitTable {
    taxa: Vec<String>,
    columns: Vec<(String, Vec<f64>)>,
}

impl TraitTable {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = crate::util::read_to_string(path)?;
        Self::parse(&text).map_err(|err| CliError::Input(format!("{}: {err}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|err| err.to_string())?.clone();
        if headers.len() < 2 {
            return Err("need a taxon column plus at least one trait column".into());
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut taxa: Vec<String> = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        let mut seen = BTreeSet::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|err| err.to_string())?;
            let row = i + 2;
            if record.len() != headers.len() {
                return Err(format!(
                    "row {row}: expected {} fields, got {}",
                    headers.len(),
                    record.len()
                ));
            }
            let taxon = canonical_taxon(&record[0]);
            if taxon.is_empty() {
                return Err(format!("row {row}: empty taxon"));
            }
            if !seen.insert(taxon.clone()) {
                return Err(format!("row {row}: duplicate taxon `{taxon}`"));
            }
            for (j, cell) in record.iter().skip(1).enumerate() {
                let value: f64 = cell.trim().parse().map_err(|_| {
                    format!("row {row}, column `{}`: `{cell}` is not a number", names[j])
                })?;
                if !value.is_finite() {
                    return Err(format!(
                        "row {row}, column `{}`: non-finite value",
                        names[j]
                    ));
                }
                columns[j].push(value);
            }
            taxa.push(taxon);
        }
        if taxa.is_empty() {
            return Err("no data rows".into());
        }
        Ok(Self {
            taxa,
            columns: names.into_iter().zip(columns).collect(),
        })
    }

    pub fn from_fl_rows(rows: &[FlResult]) -> Self {
        Self {
            taxa: rows.iter().map(|r| canonical_taxon(&r.language)).collect(),
            columns: vec![
                ("fl_v".into(), rows.iter().map(|r| r.fl_v).collect()),
                ("fl_c".into(), rows.iter().map(|r| r.fl_c).collect()),
                ("fl_p".into(), rows.iter().map(|r| r.fl_p).collect()),
                ("n".into(), rows.iter().map(|r| r.n as f64).collect()),
            ],
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Result<TraitVector, CliError> {
        let values = self
            .columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| {
                CliError::Input(format!(
                    "no trait column `{name}`; available: {}",
                    self.names().join(", ")
                ))
            })?;
        TraitVector::new(name, self.taxa.clone(), values).map_err(CliError::from)
    }

    /// Paired values for scatter plots, labeled by taxon.
    pub fn pairs(&self, x: &str, y: &str) -> Result<Vec<(f64, f64, String)>, CliError> {
        let xs = self.column(x)?;
        let ys = self.column(y)?;
        Ok(self
            .taxa
            .iter()
            .zip(xs.values().iter().zip(ys.values()))
            .map(|(taxon, (&a, &b))| (a, b, taxon.clone()))
            .collect())
    }
}
