//! Trial-spec compiler: estimands from intercurrent-event strategies,
//! single-world intervention graphs, d-separation, identification with
//! checkable traces, an enumeration oracle, and figure markup.

pub mod dsep;
pub mod dsl;
pub mod estimand;
pub mod graph;
pub mod identify;
pub mod oracle;
pub mod render;
pub mod scalar;
pub mod swig;

pub use dsl::{parse, serialize, StudySpec};
pub use graph::{CausalGraph, InterventionContext, Value, VarName};
pub use swig::{split, Swig};

pub type Rational = num_rational::BigRational;
pub type ExactGodTable = oracle::GodTable<Rational>;
pub type FloatGodTable = oracle::GodTable<f64>;
