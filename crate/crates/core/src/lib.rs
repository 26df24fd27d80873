//! Model selection for small designed experiments: exact best-subsets
//! regression tuned by cross-validation or the little bootstrap, lasso
//! variants, design construction and diagnostics, polynomial truth
//! generators, and a reproducible simulation harness.

pub mod cv;
pub mod design;
pub mod error;
pub mod lasso;
pub mod lb;
pub mod ols;
pub mod screening;
pub mod sim;
pub mod subsets;
pub mod surface;
pub mod term;

pub use error::{Error, Result};
