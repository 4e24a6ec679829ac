// Validity tests are negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod domains;
pub mod error;
pub mod expr;
pub mod fields;
pub mod gaussgreen;
pub mod hcalc;
pub mod mesh;
pub mod metric;
pub mod mollify;
pub mod poly;
pub mod quadrature;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Algebra = algebra::StratifiedAlgebra<f64>;
pub type Norm = metric::HomogeneousNorm<f64>;
pub type Region = metric::BoxRegion<f64>;
pub type Quadrature = quadrature::QuadratureSpec<f64>;
pub type Field = hcalc::ScalarField<f64>;
pub type HField = hcalc::HorizontalField<f64>;
pub type Domain = domains::DomainSpec<f64>;
pub type Sample = domains::BoundarySample<f64>;
pub type Kernel = mollify::Mollifier<f64>;
pub type Discretization = gaussgreen::Discretization<f64>;

pub type Algebra32 = algebra::StratifiedAlgebra<f32>;
pub type Norm32 = metric::HomogeneousNorm<f32>;
pub type Domain32 = domains::DomainSpec<f32>;
