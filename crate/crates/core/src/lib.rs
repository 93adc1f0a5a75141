//! Finite element analysis of functionally graded Reissner-Mindlin plates
//! with the cell-based smoothed discrete-shear-gap triangle.

pub mod cli;
pub mod eigen;
pub mod element;
pub mod error;
pub mod material;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{PlateError, Result};
