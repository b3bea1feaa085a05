//! Model checking of intents against learned MDPs, and the runtime shield.
//!
//! The product of an MDP with the intent's automaton is classified into
//! hopeful nodes (some accepting run exists) and doomed nodes. The shield
//! blocks any action with a positive-probability successor whose monitor
//! set holds no hopeful pair.

mod check;
mod export;
mod product;
mod runtime;

pub use check::{
    accepting_lasso, check_satisfiable, classify, find_violating_trace, LassoTrace, SafetyClassification, TraceStep,
    Verdict, VerdictKind,
};
pub use export::{
    export_product, export_shield, product_to_dot, ProductExport, ProductExportEdge, ProductNode, ShieldExport,
    PRODUCT_FORMAT_VERSION,
};
pub use product::{build_product, check_features, ProductEdge, ProductError, ProductGraph};
pub use runtime::{synthesize_shield, Filtered, Shield, ShieldDecision, ShieldEntry, ShieldError, ShieldMode};
