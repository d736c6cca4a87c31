//! Evaluation harness: triplet corpus, similarity scoring and suite reports.

mod similarity;
mod suite;
mod triplet;

pub use similarity::{matched_chars, similarity};
pub use suite::{ir_equal, run_suite, run_suite_on, CaseReport, SuiteReport};
pub use triplet::{load_triplets, parse_triplets, triplets_to_value, Triplet, TripletSet};
