// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimate;
pub mod fluctuation;
pub mod laplace;
pub mod models;
mod quad;
pub mod scale;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
pub use fluctuation::{ExpTimeLaw, PassageLaw};
pub use models::LevyModel;
pub use scale::{Backend, ScaleEvaluator};
