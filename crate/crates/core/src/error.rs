use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("stochastic domination F >= G fails at x = {witness}")]
    DominationViolated { witness: f64 },

    #[error("super-level sets of F - G are disconnected: F - G rises by {rise} after its peak, at x = {at}")]
    SuperlevelDisconnected { at: f64, rise: f64 },

    #[error("interval endpoint {at} sits on an atom; perturb the endpoint")]
    AtomCollision { at: f64 },

    #[error("reflection coupling requires a law symmetric about its centre")]
    AsymmetricLaw,

    #[error("law is not supported on a lattice; use the Monte Carlo only mode")]
    NonLattice,

    #[error("infeasible transport problem: {0}")]
    Infeasible(String),

    #[error("cost is unbounded: {0}")]
    UnboundedCost(String),
}
