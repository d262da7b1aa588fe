//! Deck groups, covering algebras and Dirac spectra for solenoidal towers.
//!
//! An integer matrix `B` with `|det B| > 1` makes the torus `ℝᵖ/ℤᵖ` a
//! self-covering. Iterating it gives a tower of coverings whose inductive
//! limit is a solenoid. This crate computes, exactly where possible, the
//! objects living on that tower:
//!
//! * [`intlat`]: Smith form, cofactors, `A = (Bᵀ)⁻¹`, purely-expanding test.
//! * [`lattice`]: the deck group `ℤᵖ/Bℤᵖ`, its dual, sections, cocycles,
//!   the mode bijection and ball enumeration in `Aⁿℤᵖ`.
//! * [`covalg`]: trigonometric polynomials, eigenspace projections, the
//!   matrix embedding, the `can` map and the regularity checker.
//! * [`nctorus`]: rational rotation algebras as matrix-valued polynomials.
//! * [`dirac`]: Clifford generators, Dirac spectra, Lip seminorms, radii.
//! * [`spectral`]: counting functions, zeta sums, dimension and residue fits.
//!
//! The guide in `book/` walks through each part; its code blocks run as
//! doctests of this crate.

pub mod covalg;
pub mod cyclotomic;
pub mod dirac;
pub mod error;
pub mod intlat;
pub mod lattice;
pub mod nctorus;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/coverings.md")]
mod book_coverings {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/covering-algebras.md")]
mod book_covering_algebras {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/nctorus.md")]
mod book_nctorus {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dirac.md")]
mod book_dirac {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spectral.md")]
mod book_spectral {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/radii.md")]
mod book_radii {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
