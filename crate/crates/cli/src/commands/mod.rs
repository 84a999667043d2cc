//! Subcommand implementations.

pub mod apps;
pub mod hash;
pub mod instance;
pub mod ratio;
pub mod transport;

use pairwise_ot::CostSpace;

use crate::output::Cell;

/// Label of point `x` as an output cell.
pub fn label(space: &CostSpace, x: usize) -> Cell {
    Cell::Text(space.label(x).to_string())
}
