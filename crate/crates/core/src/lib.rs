//! Kolmogorov-Arnold network surrogates for expensive evolutionary optimization.

pub mod data;
pub mod experiments;
pub mod frameworks;
pub mod kan;
pub mod mlp;
pub mod model;
pub mod operators;
pub mod optim;
pub mod problems;
pub mod scalar;
pub mod surrogate;

pub use scalar::Scalar;

pub type Kan = kan::KanNetwork<f64>;
pub type KanF32 = kan::KanNetwork<f32>;
pub type Mlp = mlp::Mlp<f64>;
pub type MlpF32 = mlp::Mlp<f32>;
pub type Dataset = data::TrainingSet<f64>;
pub type DatasetF32 = data::TrainingSet<f32>;
pub type SurrogateModel = surrogate::Surrogate<f64>;
pub type SurrogateModelF32 = surrogate::Surrogate<f32>;
