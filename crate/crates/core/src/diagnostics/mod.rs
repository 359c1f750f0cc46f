//! Free-boundary diagnostics: boundary traces, radial growth and decay
//! profiles, the two-phase monotonicity functional, slope fits and checks
//! of nonradiating data.

mod field;
mod nonradiating;
mod phi;
mod probes;
mod profile;
mod traces;

pub use field::{planar, AnalyticField, FemScalarField, Reduction, ScalarField, P3};
pub use nonradiating::{verify_nonradiating, NonradiatingReport};
pub use phi::{convexity_gap, friedland_hayman_phi, phi_linear_exact, phi_log_branch, surface_identity_defect};
pub use probes::{
    acf_functional, ball_average, linear_growth_probe, negative_part_decay, positivity_scan, BallAverages,
    PositivityReport, ProbeReport, DECAY_THRESHOLD, GROWTH_THRESHOLD,
};
pub use profile::{dyadic_radii, power_fit, RadialProfile, DYADIC_LEVELS, FIT_FLOOR};
pub use traces::{
    bernoulli_trace, boundary_points, flux_identity, flux_jump_check, nondegeneracy_trace, sector_parameters,
    slope_extract, BernoulliReport, BernoulliSample, BoundaryPoint, CornerTrace, FluxReport, FluxSample,
    NondegeneracyReport, NondegeneracyVerdict, SlopeReport, SlopeVerdict, TraceSample,
};
