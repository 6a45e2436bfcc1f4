use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coupling table is not symmetric: J[{i}][{j}] = {a} Hz but J[{j}][{i}] = {b} Hz")]
    AsymmetricCoupling { i: usize, j: usize, a: f64, b: f64 },

    #[error("spin {0} couples to itself")]
    SelfCoupling(usize),

    #[error("spin index {index} out of range for a {n_spins}-spin system")]
    SpinIndexOutOfRange { index: usize, n_spins: usize },

    #[error("unknown species `{0}`")]
    UnknownSpecies(String),

    #[error("species blocks cover {got} spins but the lattice has {expected}")]
    SpeciesBlockMismatch { expected: usize, got: usize },

    #[error("{n_spins} spins exceeds the explicit-state cap of {cap}; use subgroups")]
    SizeCapExceeded { n_spins: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },

    #[error("subgroup is empty")]
    EmptySubgroup,

    #[error("subgroup lists spin {0} twice")]
    DuplicateSpin(usize),

    #[error("matrix is not unitary (max deviation of U^dagger U from I is {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("all robustness weights are zero")]
    ZeroWeights,

    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),

    #[error("nothing to average: empty list")]
    EmptyAverage,

    #[error("objective returned a non-finite value {value} after {evals} evaluations")]
    NonFiniteObjective { value: f64, evals: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
