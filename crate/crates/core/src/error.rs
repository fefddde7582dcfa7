use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("no sign change on bracket [{lo:.6e}, {hi:.6e}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("infeasible energy budget: harvestable {harvest:.6e} W <= processing cost {p_p:.6e} W")]
    InfeasibleEnergy { harvest: f64, p_p: f64 },

    #[error("energy-balance residual not monotone in lambda2 near {lambda2:.6e}")]
    MonotonicityViolation { lambda2: f64 },

    #[error("joint solver did not converge: {context} (budget residual {budget_residual:.3e}, energy residual {energy_residual:.3e})")]
    JointSolverNonConvergence {
        context: String,
        budget_residual: f64,
        energy_residual: f64,
    },

    #[error("distribution shape error: {0}")]
    Shape(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            msg: msg.into(),
        }
    }
}
