//! Finite-truncation laboratory for ideal convergence.
//!
//! The crate decides `I`-convergence of finite point sequences for ideals on
//! ℕ (finite sets, density zero, or a custom rule), constructs `I`-divergent
//! subsequences and rearrangements by the block-extension method, and runs
//! seeded Monte Carlo experiments over random selections.
//!
//! Sequence values are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case. Densities are exact
//! rationals.

pub mod construction;
pub mod convergence;
pub mod error;
pub mod experiments;
pub mod families;
pub mod ideal;
pub mod pair;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod sequence;

pub use construction::{
    build_divergent_perm, build_divergent_subseq, extend_prefix, in_am, AmVerdict, BlockPlan,
    Construction, TraceStep,
};
pub use convergence::{
    i_cauchy, i_converges, indicator_sequence, CauchyVerdict, ConvergenceVerdict, EpsGrid,
    VerdictTag,
};
pub use error::{Error, Result};
pub use ideal::{
    check_witness, density_profile, image_set, interval_witness, is_invariant_sample, Horizon,
    IdealSpec, IndexSet, IntervalWitness, InvarianceVerdict, Membership, MembershipVerdict,
};
pub use pair::{witness_pair, WitnessPair};
pub use scalar::Scalar;
pub use selection::{
    coins_to_subseq, sample_lambda, sample_perm, subseq_to_coins, CoinVector, PermPrefix,
    Selection, SubseqPrefix,
};
pub use sequence::{MetricKind, PointSeq};

pub type PointSeq64 = PointSeq<f64>;
pub type PointSeq32 = PointSeq<f32>;
pub type EpsGrid64 = EpsGrid<f64>;
pub type ConvergenceVerdict64 = ConvergenceVerdict<f64>;
pub type WitnessPair64 = WitnessPair<f64>;
