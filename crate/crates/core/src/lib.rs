pub mod circuit;
pub mod distill;
pub mod gates;
pub mod hilbert;
pub mod identities;
pub mod transpile;
