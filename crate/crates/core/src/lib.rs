//! Grid laboratory for the nonlocal Minkowski-type perimeter
//! `Per_r(E, Ω) = |((∂E) ⊕ B_r) ∩ Ω| / 2r` and the energies
//! `F_{r,g}(E, Ω) = Per_r(E, Ω) + ∫_{E∩Ω} g`.

pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod energy;
pub mod maxflow;
pub mod mincut;
pub mod morphology;
pub mod planelike;
pub mod raster;
pub mod stencil;

pub use error::{Error, Result};
