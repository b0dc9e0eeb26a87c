use crate::circuit::Sign;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("filaments intersect or coincide (minimum separation {min_distance:.3e} m)")]
    SingularGeometry { min_distance: f64 },

    #[error(
        "quadrature did not converge: estimate {estimate:.6e}, error bound {error_bound:.3e} after {subdivisions} subdivisions"
    )]
    Convergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("impedance matrix is singular (reciprocal condition number {rcond:.3e})")]
    SingularSystem { rcond: f64 },

    #[error("input impedance undefined: {0}")]
    UndefinedImpedance(String),

    #[error("outside the closed-form model's domain: {0}")]
    ModelDomain(String),

    #[error("polarity controller oscillated through {} sign patterns", visited.len())]
    ControllerOscillation { visited: Vec<[Sign; 3]> },

    #[error("no sweep records")]
    EmptyRecords,

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularGeometry { .. }
                | Error::Convergence { .. }
                | Error::SingularSystem { .. }
                | Error::UndefinedImpedance(_)
                | Error::ControllerOscillation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
