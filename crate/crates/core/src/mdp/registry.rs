use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use super::{Discretizer, ExperienceBuffer, Mdp, MdpError};
use crate::ltl::{atoms_of, LtlFormula, PropositionCatalog};
use crate::{Feature, FeatureSet};

/// Companion MDPs estimated from one experience buffer, built on demand and
/// cached by feature set.
#[derive(Debug)]
pub struct CmdpRegistry {
    buffer: Arc<ExperienceBuffer>,
    discretizer: Discretizer,
    gamma: f64,
    include_action_feature: bool,
    cache: Mutex<BTreeMap<FeatureSet, Arc<Mdp>>>,
}

impl CmdpRegistry {
    /// Estimates the full-feature MDP eagerly.
    pub fn new(buffer: Arc<ExperienceBuffer>, discretizer: Discretizer, gamma: f64) -> Result<Self, MdpError> {
        let full = Mdp::estimate(&buffer, &discretizer, FeatureSet::all(), gamma)?;
        let cache = [(FeatureSet::all(), Arc::new(full))].into_iter().collect();
        Ok(CmdpRegistry {
            buffer,
            discretizer,
            gamma,
            include_action_feature: false,
            cache: Mutex::new(cache),
        })
    }

    /// Always key matched CMDPs by tilt as well as the intent's features.
    pub fn with_action_feature(mut self, on: bool) -> Self {
        self.include_action_feature = on;
        self
    }

    pub fn buffer(&self) -> &ExperienceBuffer {
        &self.buffer
    }

    pub fn full(&self) -> Arc<Mdp> {
        self.get(FeatureSet::all())
            .expect("the full feature set is always valid")
    }

    /// The CMDP over `features`, estimating it on first use.
    pub fn get(&self, features: FeatureSet) -> Result<Arc<Mdp>, MdpError> {
        let mut cache = self.cache.lock().expect("registry lock poisoned");
        if let Some(m) = cache.get(&features) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(Mdp::estimate(&self.buffer, &self.discretizer, features, self.gamma)?);
        cache.insert(features, Arc::clone(&m));
        Ok(m)
    }

    /// Features mentioned by the intent's atoms, plus tilt when configured.
    /// An intent without atoms is matched to the full MDP.
    pub fn features_for(&self, intent: &LtlFormula, catalog: &PropositionCatalog) -> FeatureSet {
        let mut fs = catalog.features_of(&atoms_of(intent));
        if fs.is_empty() {
            return FeatureSet::all();
        }
        if self.include_action_feature {
            fs.insert(Feature::Tilt);
        }
        fs
    }

    pub fn match_cmdp(&self, intent: &LtlFormula, catalog: &PropositionCatalog) -> Arc<Mdp> {
        self.get(self.features_for(intent, catalog))
            .expect("matched feature sets are non-empty")
    }

    pub fn cached_feature_sets(&self) -> Vec<FeatureSet> {
        self.cache
            .lock()
            .expect("registry lock poisoned")
            .keys()
            .copied()
            .collect()
    }
}
