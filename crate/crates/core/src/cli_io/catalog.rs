use std::path::Path;

use super::config::{within, ExperimentConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! entries {
    ($($name:literal),* $(,)?) => {
        [$(CatalogEntry { name: $name, text: include_str!(concat!("../../../../configs/", $name, ".toml")) }),*]
    };
}

const ENTRIES: [CatalogEntry; 14] = entries![
    "half-disk-pair",
    "half-disk-pair-unstructured",
    "triangle-pair",
    "rectangle-pair",
    "spherical-half-disk-pair",
    "spherical-half-disk-first",
    "quarter-sphere-trio",
    "symmetry-pair-equality",
    "disk-sweep",
    "dtn-scan",
    "cover-check",
    "heat-balance",
    "disk-oracle",
    "square-oracle",
];

/// The shipped reproduction configs, in the order `list` prints them.
pub fn catalog() -> &'static [CatalogEntry] {
    &ENTRIES
}

impl CatalogEntry {
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(self.text).map_err(|e| within(e, &format!("catalog entry {}", self.name)))
    }
}

/// A path to a config file, or the name of a catalog entry.
pub fn find_config(arg: &str) -> Result<ExperimentConfig> {
    let path = Path::new(arg);
    if path.is_file() {
        return ExperimentConfig::from_path(path);
    }
    catalog()
        .iter()
        .find(|e| e.name == arg)
        .ok_or_else(|| Error::Config(format!("{arg} is neither a config file nor a catalog entry (see `list`)")))?
        .config()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_validates_and_names_match() {
        assert!(catalog().len() >= 10);
        for e in catalog() {
            let c = e.config().unwrap();
            assert_eq!(c.name, e.name);
        }
        assert!(find_config("half-disk-pair").is_ok());
        assert!(find_config("no-such-entry").is_err());
    }
}
