use thiserror::Error;

/// Errors raised by the model, the closed forms and the numerical oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}` = {value}: {reason}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("not stable by criterion 1 (requires max(rho1, rho2) < rho < 1; rho = {rho}, rho1 = {rho1}, rho2 = {rho2})")]
    NotCriterion1 { rho: f64, rho1: f64, rho2: f64 },

    #[error("not strongly pooled (pooling margin {margin} <= 0)")]
    NotStronglyPooled { margin: f64 },

    #[error("not strongly balanced: the series over l does not converge")]
    NotStronglyBalanced,

    #[error("unstable parameters: rho = {rho} >= 1")]
    Unstable { rho: f64 },

    #[error("parameters are not symmetric (need lambda1 = lambda2 and alpha1 = alpha2); use the asymmetric approximation")]
    NotSymmetric,

    #[error("discriminant {which} is negative at z = {z}")]
    NegativeDiscriminant { which: &'static str, z: f64 },

    #[error("no root of f(z) = 1 found in (1, {z_max}]")]
    RootNotFound { z_max: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
