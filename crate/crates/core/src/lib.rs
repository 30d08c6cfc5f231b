//! Symbolic-numeric toolkit for deciding and certifying conservativeness
//! and Poisson structure of polynomial and piecewise-smooth vector fields:
//! inverse Jacobi multiplier verification, reduction of 3D zero-Hopf systems
//! to planar families on invariant level sets, focus quantities for the
//! center-focus problem, explicit Poisson structure construction and
//! verification, and numeric certification of measure preservation and weak
//! (distributional) multipliers.

pub mod catalog;
pub mod coeff;
pub mod expr;
pub mod field;
pub mod focus;
pub mod numeric;
pub mod poisson;
pub mod poly;
pub mod reduce;
pub mod series;
