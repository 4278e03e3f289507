//! Radially symmetric damped semilinear wave equation
//! `u_tt - rho^{-1} Lap u + u_t + m^2 u = f(u)` on a ball with Dirichlet data:
//! discretization, energy functionals, an adaptive integrator with blow-up
//! detection, checks of the blow-up hypotheses and independent oracles.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` and `*32`
//! aliases below name the concrete instantiations.

pub mod criteria;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod integrator;
pub mod oracle;
pub mod physics;
pub mod scalar;

pub use criteria::{
    blow_up_bound, bump_profile, check_thm23, check_thm25, derive_t1_t0, search_high_energy_datum,
    threshold_coefficient, Candidate, Condition, DatumFamily, HypothesisReport, SearchOutcome,
    SearchRanges, Theorem, Tolerances,
};
pub use error::{Error, Result};
pub use functionals::{
    alpha_from_embedding_constant, poincare_alpha, Auxiliary, EigenOptions, EnergyBreakdown,
    GParams, Model, PoincareEstimate, StateSnapshot,
};
pub use grid::{unit_sphere_area, RadialField, RadialGrid};
pub use integrator::{
    fit_blowup_time, rhs, simulate, Outcome, Sample, SolverConfig, TrajectoryRecord,
};
pub use oracle::{
    concavity_check, default_s_samples, discriminant_check, fd_energy_check, quadrature_oracle,
    ConcavityReport, DiscriminantSample, FdEnergyReport,
};
pub use physics::{
    check_superlinearity, DensityProfile, Nonlinearity, Source, SuperlinearityReport,
};
pub use scalar::{lit, Scalar};

pub type RadialGrid64 = RadialGrid<f64>;
pub type RadialField64 = RadialField<f64>;
pub type Model64 = Model<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type TrajectoryRecord64 = TrajectoryRecord<f64>;
pub type HypothesisReport64 = HypothesisReport<f64>;
pub type GParams64 = GParams<f64>;

pub type RadialGrid32 = RadialGrid<f32>;
pub type RadialField32 = RadialField<f32>;
pub type Model32 = Model<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type TrajectoryRecord32 = TrajectoryRecord<f32>;
