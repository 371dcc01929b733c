//! Numerical evaluation of the condensation bounds.

pub mod field;
pub mod quadrature;
pub mod sequences;
pub mod trial;

pub use field::{
    cell_masses, geometric_cell_bound, partition_occupation_bound, support_cell_count, PartitionSpec,
    ScalarField,
};
pub use sequences::{
    hardcore_vanishing_criterion, interaction_lower_bound, parse_sequence_fixture, rate_fixtures,
    soft_conditions_check, HardcoreReport, RateFixture, SequenceFixture, SequenceRow, SlopeTest,
    SoftConditionsReport, Trend,
};
pub use trial::{
    bump_constants, build_trial_state, trial_energy_density, BoundReport, InteractionSpec, PairKernel,
    Profile, TrialState,
};
