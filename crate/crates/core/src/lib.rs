pub mod dataset;
pub mod geometry;
pub mod ontology;
pub mod rng;
pub mod stats;
pub mod extraction;
pub mod analysis;
