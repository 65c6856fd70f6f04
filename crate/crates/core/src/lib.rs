pub mod cauchy;
pub mod codings;
pub mod density;
pub mod error;
pub mod geodesics;
pub mod numeric;
pub mod rank;
pub mod seq;
pub mod setspec;
pub mod tree;

pub use error::{Error, Result};
