//! Exact and numeric verification toolkit for Nijenhuis operators.

pub mod canon;
pub mod cluster;
pub mod geopn;
pub mod lsa;
pub mod matrix;
pub mod sampling;
pub mod scalarfield;
pub mod spectral;
pub mod splitfun;
pub mod tensorcore;
pub mod univariate;
pub mod verdict;
