// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod acceptance;
pub mod error;
pub mod exec;
pub mod fit;
pub mod gamma_lab;
pub mod oracles;
pub mod plot;
pub mod quad;
pub mod slab_oracle;
pub mod specfun;
pub mod spectral_field;
pub mod symbol;
pub mod table;

pub use error::{Error, Result};
pub use exec::Exec;
