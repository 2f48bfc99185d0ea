//! Individualized neighborhoods on a 100 m grid.
//!
//! Residents are tallied per square ([`GridIndex`]); each ego's neighborhood
//! is grown ring by ring around their square until it holds at least `k`
//! other adults ([`k_nearest_aggregate`]); the five indicator shares of every
//! ego in a year are then reduced to a single disadvantage score by the first
//! principal component ([`disadvantage_scores`]).

mod grid;
mod knn;
mod pca;

pub use grid::{build_grid_index, GridIndex, ResidentRecord, Square, SquareCounts};
pub use knn::{k_nearest_aggregate, neighborhoods_for_year, EgoNeighborhood, NeighborhoodShares, RingCache};
pub use pca::{disadvantage_scores, DisadvantageScores, PcaDiagnostics};

use thiserror::Error;

/// Indicator columns, in the order used by every share and loading vector.
pub const INDICATORS: [&str; 5] = ["low_edu", "low_income", "social_assistance", "unemployed", "low_skill"];

/// Position of the social-assistance share; its loading fixes the PCA sign.
pub const SOCIAL_ASSISTANCE: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("record for person {person_id} has a negative grid coordinate")]
    NegativeCoordinate { person_id: u64 },
    #[error("record for person {person_id} sets an indicator but is not counted as an adult")]
    FlagWithoutAdult { person_id: u64 },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("insufficient population: need {needed} neighbors but only {available} are indexed (short by {})", needed - available)]
    InsufficientPopulation { needed: u64, available: u64 },
    #[error("at least 2 egos are required, got {0}")]
    InsufficientData(usize),
    #[error("share column '{column}' has zero variance")]
    DegenerateInput { column: &'static str },
    #[error("eigen decomposition failed: {0}")]
    Eigen(String),
}
