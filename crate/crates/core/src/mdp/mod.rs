//! MDPs estimated from experience.
//!
//! Raw observations are binned per feature, transition probabilities and
//! rewards are maximum-likelihood estimates, and companion MDPs (CMDPs) are
//! the same estimator keyed by a subset of the features.

mod discretize;
mod experience;
mod model;
mod registry;

pub use discretize::{bin_index, discretize, DiscreteState, Discretizer, FeatureRanges};
pub use experience::{
    ingest_experience, ExperienceBuffer, ExperienceError, ExperienceRecord, RawState, EXPERIENCE_VERSION,
};
pub use model::{
    estimate_mdp, label_state, project_cmdp, ExportReward, ExportState, ExportTransition, Mdp, MdpError, MdpExport,
    MDP_FORMAT_VERSION,
};
pub use registry::CmdpRegistry;
