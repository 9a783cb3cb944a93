//! Numerical toolkit for finitely generated Fuchsian groups and their
//! linear representations.
//!
//! The crate is organised around a pipeline:
//!
//! * [`hyperbolic`] — Möbius maps on the upper half plane, classification,
//!   translation lengths, fixed points, and the circle at infinity.
//! * [`freegroup`] — reduced words, ball enumeration with cached prefix
//!   products, limit set sampling, and peripheral detection.
//! * [`matnum`] — dense matrix analysis: singular/eigenvalue data,
//!   attracting subspaces, Jordan–Chevalley decomposition over the reals,
//!   proximality tests, and conjugacy invariants.
//! * [`reps`] — representation constructors (irreducible images of
//!   SL(2,ℝ), exterior powers, direct sums, conjugates, explicit images)
//!   with cached evaluation, the rational Veronese curve, and the
//!   cusp-representation builder.
//! * [`posflags`] — full and partial flags, transversality margins,
//!   totally positive unipotent tests, and positivity of flag tuples.
//! * [`diagnostics`] — scatter statistics for singular and eigenvalue
//!   gaps, limit-map sampling with equivariance checks, growth exponents
//!   at parabolic elements, type preservation, norm distortion in cusps,
//!   and the certification drivers.

pub mod diagnostics;
pub mod freegroup;
pub mod hyperbolic;
pub mod matnum;
pub mod posflags;
pub mod reps;
