//! Nonlinear Dirichlet functionals on finite measure spaces.
//!
//! The crate computes proximal resolvents, Crandall–Liggett semigroups and
//! Moreau–Yoshida regularizations of convex energies, and evaluates the
//! defining inequalities of Markovianity, locality and invariance on seeded
//! samples, reporting the largest violation together with a witness.
//!
//! Module map:
//!
//! * [`space`]: finite weighted point sets, fields and their lattice/L² structure.
//! * [`contraction`]: scalar contractions and the stripe projections on pairs.
//! * [`energy`]: the extended-real energy interface and the builtin catalog.
//! * [`prox`]: resolvents, semigroups, Yoshida regularizations, energy recovery.
//! * [`checks`]: the property harness and its reports.
//! * [`oracles`]: independent reference computations.
//! * [`cli`]: config-driven batch runner behind the `dirichlet` binary.

pub mod checks;
pub mod cli;
pub mod contraction;
pub mod energy;
mod error;
pub mod numeric;
pub mod oracles;
pub mod par;
pub mod prox;
pub mod space;

pub use error::{Error, Result};

pub use checks::{CheckReport, Checker, Sampler, Strategy, Tolerances, Verdict};
pub use contraction::{ScalarContraction, StripeKind};
pub use energy::{Capability, EnergyFlags, EnergyFunctional, EnergyValue};
pub use par::Execution;
pub use prox::{FlowResult, ProxConfig, ProxResult, YoshidaPair};
pub use space::{Field, FieldPair, MeasureSpace, PointSet};
