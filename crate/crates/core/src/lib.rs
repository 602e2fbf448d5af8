//! Paraphrase-type preference optimization and evaluation.
//!
//! The crate is organised bottom-up: [`taxonomy`] and [`corpus`] define the data,
//! [`prefloss`] and [`tinylm`] cover training, and [`textmetrics`], [`evalstats`]
//! and [`ptd`] cover evaluation. All randomness flows through [`rng::SeededRng`].

pub mod corpus;
pub mod evalstats;
pub mod prefloss;
pub mod ptd;
pub mod rng;
pub mod taxonomy;
pub mod textmetrics;
pub mod tinylm;
