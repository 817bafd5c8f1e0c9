//! Binary quantification: estimating class prevalence in unlabeled score
//! sets under prior probability shift.

pub mod baselines;
pub mod data;
pub mod dist;
pub mod error;
pub mod io;
pub mod numerics;
pub mod quantify;
pub mod real;
pub mod sim;
pub mod special;
pub mod theory;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision aliases for the generic core types.
pub type Params64 = dist::DistributionParams<f64>;
pub type Model64 = dist::ClassConditionalModel<f64>;
pub type Scores64 = data::ScoreSet<f64>;
pub type Labeled64 = data::LabeledScores<f64>;
pub type Window64 = quantify::ThresholdWindow<f64>;
pub type Estimate64 = quantify::PrevalenceEstimate<f64>;
pub type Profile64 = theory::VarianceProfile<f64>;
pub type Histogram64 = baselines::Histogram<f64>;
