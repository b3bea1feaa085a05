//! Threshold propositions over discretized KPI features.
//!
//! File format (one JSON object per line, header first):
//!
//! ```text
//! {"version":1}
//! {"name":"cov_ok","feature":"coverage","threshold_bin":2}
//! {"name":"qual_ok","feature":"quality","threshold_bin":1}
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Feature, FeatureSet};

pub const CATALOG_VERSION: u32 = 1;

/// `name` holds in a state iff the state's bin for `feature` is at least
/// `threshold_bin`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomicProposition {
    pub name: String,
    pub feature: Feature,
    pub threshold_bin: usize,
}

impl AtomicProposition {
    pub fn new(name: impl Into<String>, feature: Feature, threshold_bin: usize) -> Self {
        AtomicProposition {
            name: name.into(),
            feature,
            threshold_bin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing or unsupported version header (expected version {CATALOG_VERSION})")]
    Version,
    #[error("duplicate proposition `{0}`")]
    Duplicate(String),
    #[error("invalid proposition name `{0}` (expected lowercase snake_case)")]
    BadName(String),
    #[error("proposition `{name}` threshold bin {threshold_bin} outside [0, {max}]")]
    ThresholdOutOfRange {
        name: String,
        threshold_bin: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropositionCatalog {
    props: BTreeMap<String, AtomicProposition>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && !matches!(name, "true" | "false")
}

impl PropositionCatalog {
    pub fn new(props: Vec<AtomicProposition>) -> Result<Self, CatalogError> {
        let mut map = BTreeMap::new();
        for p in props {
            if !valid_name(&p.name) {
                return Err(CatalogError::BadName(p.name));
            }
            if map.contains_key(&p.name) {
                return Err(CatalogError::Duplicate(p.name));
            }
            map.insert(p.name.clone(), p);
        }
        Ok(PropositionCatalog { props: map })
    }

    /// `cov_ok`, `cap_ok` and `qual_ok`, each holding from `threshold_bin` up.
    pub fn kpi_defaults(threshold_bin: usize) -> Self {
        PropositionCatalog::new(vec![
            AtomicProposition::new("cov_ok", Feature::Coverage, threshold_bin),
            AtomicProposition::new("cap_ok", Feature::Capacity, threshold_bin),
            AtomicProposition::new("qual_ok", Feature::Quality, threshold_bin),
        ])
        .expect("default catalog is well-formed")
    }

    pub fn get(&self, name: &str) -> Option<&AtomicProposition> {
        self.props.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomicProposition> {
        self.props.values()
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    /// Features that the named propositions predicate on. Unknown names are skipped.
    pub fn features_of<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> FeatureSet {
        names
            .into_iter()
            .filter_map(|n| self.get(n))
            .map(|p| p.feature)
            .collect()
    }

    /// Checks every threshold against a bin count.
    pub fn validate_bins(&self, nb: usize) -> Result<(), CatalogError> {
        for p in self.props.values() {
            if p.threshold_bin >= nb {
                return Err(CatalogError::ThresholdOutOfRange {
                    name: p.name.clone(),
                    threshold_bin: p.threshold_bin,
                    max: nb.saturating_sub(1),
                });
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }

        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, l)) => match serde_json::from_str::<Header>(l) {
                Ok(h) if h.version == CATALOG_VERSION => {}
                _ => return Err(CatalogError::Version),
            },
            None => return Err(CatalogError::Version),
        }
        let mut props = Vec::new();
        for (line, l) in lines {
            let p: AtomicProposition = serde_json::from_str(l).map_err(|e| CatalogError::Malformed {
                line,
                message: e.to_string(),
            })?;
            props.push(p);
        }
        PropositionCatalog::new(props)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{{\"version\":{CATALOG_VERSION}}}\n");
        for p in self.props.values() {
            out.push_str(&serde_json::to_string(p).expect("proposition serializes"));
            out.push('\n');
        }
        out
    }
}
