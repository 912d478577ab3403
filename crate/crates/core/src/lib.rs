//! Functional load of phonological contrasts and phylogenetic comparative
//! statistics over samples of dated trees.
//!
//! The crate has two halves. [`segmental`] and [`funcload`] ingest segment
//! inventories and segmented lexicons, extract tonic-vowel plus post-tonic
//! consonant domains, and measure the entropy cost of collapsing a contrast.
//! [`phylotree`] and [`phylostats`] parse Newick tree samples, build
//! Brownian-motion covariance matrices, and estimate Blomberg's K and
//! phylogenetic correlations per tree, with a seeded BM simulator for
//! calibration.

pub mod funcload;
pub mod phylostats;
pub mod phylotree;
pub mod rng;
pub mod segmental;
