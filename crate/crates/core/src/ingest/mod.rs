//! Loading workbooks into an immutable in-memory model.

pub mod address;
pub mod model;
pub mod reader;

pub use address::{parse_address, BadAddressSyntax, CellAddress};
pub use model::*;
pub use reader::{load_bytes, load_workbook, LoadError};
