pub mod combinatorial;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod hmds;
pub mod linalg;
pub mod optim;
pub mod pga;
pub mod scalar;
