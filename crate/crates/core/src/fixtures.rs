//! Bundled sample network contexts and the curated triplet corpus.

use crate::context::{load_context, NetworkContext};

pub const ECOMMERCE_JSON: &str = include_str!("../fixtures/contexts/ecommerce.json");
pub const SMART_FACTORY_JSON: &str = include_str!("../fixtures/contexts/smart-factory.json");
pub const TRIPLETS_JSON: &str = include_str!("../fixtures/triplets.json");

pub fn ecommerce() -> NetworkContext {
    load_context(ECOMMERCE_JSON.as_bytes()).expect("bundled ecommerce context is valid")
}

pub fn smart_factory() -> NetworkContext {
    load_context(SMART_FACTORY_JSON.as_bytes()).expect("bundled smart-factory context is valid")
}

pub fn all_contexts() -> Vec<NetworkContext> {
    vec![ecommerce(), smart_factory()]
}

/// The curated corpus. Panics if the bundled file has invalid cases.
pub fn triplets() -> Vec<crate::eval::Triplet> {
    let set = crate::eval::parse_triplets(TRIPLETS_JSON.as_bytes());
    assert!(set.findings.is_empty(), "bundled triplets invalid: {:?}", set.findings);
    set.cases
}
