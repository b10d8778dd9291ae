//! Exact divisor classes and top intersection numbers on the moduli spaces
//! `M(d | d₁,…,dₙ)` of weighted degree-`d` self-maps of the projective line.
//!
//! The crate is organised bottom-up:
//!
//! * [`weights`]: admissibility and stability of weight tuples;
//! * [`picard`]: the basis of divisor classes on `Y_{d,n}`, identification
//!   from test curves, and reduction to the quotient;
//! * [`divisors`]: closed-form geometric divisor classes;
//! * [`pullbacks`]: pullbacks along composition and forgetful maps;
//! * [`equivloc`]: equivariant integrals on `M̄_{0,n}(P¹,k)`;
//! * [`engine`]: the recursive top-intersection algorithm;
//! * [`selfcheck`]: invariant suites used by the tests and the CLI.

pub mod divisors;
pub mod engine;
pub mod equivloc;
pub mod error;
pub mod linalg;
pub mod markings;
pub mod picard;
pub mod pullbacks;
pub mod rational;
pub mod selfcheck;
pub mod weights;

pub use divisors::Axis;
pub use engine::{intersect, IntersectionQuery};
pub use equivloc::{BAtom, EquivPoly, FixedGraph};
pub use error::{Error, Result};
pub use markings::MarkingSet;
pub use picard::{DivClass, GeneratorId, Profile};
pub use rational::Rational;
pub use weights::WeightTuple;
