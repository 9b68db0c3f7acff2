//! Oriented supersingular elliptic curves at desk scale.
//!
//! The crate implements, over small finite fields, the algorithmic toolkit
//! around orientations of supersingular elliptic curves by imaginary
//! quadratic orders:
//!
//! * division of isogenies by integers and by isogenies, together with the
//!   Kani kernel construction and its isotropy verification,
//! * primitivisation of an orientation given the factored discriminant,
//! * class-group actions of smooth ideals on oriented curves, with the
//!   canonical `enc` encoding of oriented isomorphism classes,
//! * navigation of oriented isogeny volcanoes (ascending walks, edge census,
//!   graph export),
//! * classical meet-in-the-middle vectorisation and a brute-force hidden-shift
//!   validation of the quantum reduction's structure.
//!
//! Everything is exact: fields are explicit towers over a small prime, class
//! groups are enumerated, and the randomized searches are driven by a seeded
//! RNG so that runs reproduce bit for bit.

pub mod arith;
pub mod curve;
pub mod division;
pub mod error;
pub mod field;
pub mod io;
pub mod isogeny;
pub mod orientation;
pub mod quadratic;
pub mod vectorisation;
pub mod volcano;

pub use error::{Error, Result};
