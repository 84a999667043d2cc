//! Pairwise multi-marginal couplings on finite spaces.
//!
//! Every coupling here is universal: each distribution is hashed on its own
//! from one shared [`SeedContext`], and the joint law of the hashes over a
//! random seed couples any collection of distributions at once. The crate
//! provides the Poisson functional representation, sequential locality
//! sensitive hashes for finite metric spaces and discrete tori, closed-form
//! couplings for ordered spaces and the circle, an exact transport oracle,
//! ratio estimators with lower-bound instances and bound calculators, and
//! small application demos.

pub mod apps;
pub mod couplings;
pub mod dist;
pub mod error;
pub mod mc;
pub mod oracle;
pub mod poisson;
pub mod ratio;
pub mod seed;
pub mod space;
pub mod spfr;

pub use dist::DiscreteDistribution;
pub use error::{Error, Result};
pub use oracle::{emd_exact, tv_distance, EmdResult, TransportPlan};
pub use seed::{derive_exponential, derive_uniform, RaceSource, SeedContext};
pub use space::{validate_space, CostSpace, SpaceKind};
