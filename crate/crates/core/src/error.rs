use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("time {t} µs lies outside the drive window [0, {tau}] µs")]
    TimeOutsideDrive { t: f64, tau: f64 },
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("degenerate Hamiltonian (gap {gap:e} peV)")]
    DegenerateHamiltonian { gap: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(&'static str),
    #[error("non-positive-temperature populations")]
    NonPositiveTemperature,
    #[error("map is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("propagator did not converge: change {change:e} at {n_steps} steps")]
    NotConverged { n_steps: usize, change: f64 },
    #[error("transition probabilities disagree: {forward} vs {backward}")]
    InconsistentTransition { forward: f64, backward: f64 },
    #[error("invalid energy distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("characteristic-function grid is not uniform")]
    NonUniformGrid,
    #[error("relative entropy infinite: support of the first state exceeds the second")]
    RelativeEntropyInfinite,
    #[error("efficiency undefined: {0}")]
    EfficiencyUndefined(&'static str),
    #[error("mean heat from the hot source is zero")]
    ZeroHeat,
    #[error("tau list is empty")]
    EmptySweep,
    #[error("invalid process matrix: {0}")]
    InvalidProcess(&'static str),
}
