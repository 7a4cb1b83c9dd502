use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("particles {i} and {j} coincide")]
    CoincidentParticles { i: usize, j: usize },

    #[error("jacobian of particle {0} is singular")]
    SingularJacobian(usize),

    #[error("{what} of particle {particle} is not symmetric in its last two slots (deviation {deviation:e})")]
    Asymmetric {
        what: &'static str,
        particle: usize,
        deviation: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("integration produced non-finite values at step {step}")]
    BlowUp { step: usize },

    #[error("particles {i} and {j} collided at step {step}")]
    Collision { step: usize, i: usize, j: usize },

    #[error("flow carries derivatives up to order {available}, order {needed} required")]
    MissingJacobian { needed: usize, available: usize },

    #[error("parse error at line {line}{}: {msg}", field.as_ref().map(|f| format!(", field {f}")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<String>,
        msg: String,
    },

    #[error("PGM parse error at byte {offset}: {msg}")]
    Pgm { offset: usize, msg: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
