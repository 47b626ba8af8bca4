//! Nonlinear Laplacian, resolvent, heat flow and coarse Ricci curvature of
//! weighted finite hypergraphs.

pub mod curvature;
mod dual;
pub mod error;
pub mod heat;
pub mod hypergraph;
pub mod instances;
pub mod io;
pub mod laplacian;
pub mod oracle;
pub mod resolvent;
pub mod rigidity;
mod minnorm;

pub use error::{Error, Result};
pub use hypergraph::{GeodesicPath, Hypergraph, VertexFunction, View};
