//! Component-based expert forecasting: decomposition, atomic models,
//! expert ranking, closed-itemset mining, combination and series grouping.

pub mod combine;
pub mod decomposition;
pub mod error;
pub mod experts;
pub mod mining;
pub mod models;
pub mod pipeline;
pub mod series;
pub mod similarity;
pub mod testing;

pub use error::{Error, Result};
