pub mod commutators;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod harness;
pub mod model;
pub mod norms;
pub mod quadrature;
pub mod snapshot;
pub mod symbol;

pub use error::{Error, Result};
pub use field::{Direction, Field};
pub use grid::{Axis, AxisKind, GridSpec, Layout, Rep};
pub use symbol::{apply_multiplier, eval_symbol, MultiplierSpec, SymbolKind};
