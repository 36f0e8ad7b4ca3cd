//! Exact combinatorics of postcritically finite branched self-coverings of
//! the marked sphere: wreath recursions, isotopy classes of curves and
//! arcs, blow-up surgery along arcs, and Thurston obstruction certificates.

pub mod catalog;
pub mod checkers;
pub mod cover;
pub mod enumerate;
pub mod intersect;
pub mod isotopy;
pub mod marked;
pub mod perm;
pub mod spectra;
pub mod surgery;

pub use cover::{CoverError, Recursion, Violation};
pub use marked::{MarkedSphere, Word};
pub use perm::Perm;
