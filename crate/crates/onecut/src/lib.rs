pub mod cli;
pub mod curve;
pub mod finitemop;
pub mod hgeometry;
pub mod kernels;
pub mod montecarlo;
pub mod polyroots;
pub mod quad;
