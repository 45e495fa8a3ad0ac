//! Community detection on connected time-dependent hashtag networks.
//!
//! Posts are binned into daily layers ([`ingest`]), users active on a day
//! become nodes linked by shared hashtags within a day and across
//! consecutive days ([`tdnet`]), communities are found by minimizing the
//! two-level map equation ([`mapeq`]), and the result is summarized over
//! time ([`temporal`]). [`synth`] generates planted test streams.

pub mod detect;
pub mod error;
pub mod ingest;
pub mod mapeq;
pub mod scalar;
pub mod synth;
pub mod tdnet;
pub mod temporal;

pub use error::{Error, Result};
pub use scalar::Real;

pub type WeightedGraph = mapeq::FlowGraph<f64>;
pub type WeightedGraph32 = mapeq::FlowGraph<f32>;
pub type VisitRates = mapeq::FlowDistribution<f64>;
pub type Modules = mapeq::Partition<f64>;
pub type Codelength = mapeq::CodelengthBreakdown<f64>;
pub type Detection = mapeq::Optimized<f64>;
