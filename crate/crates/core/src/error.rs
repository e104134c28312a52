use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("invalid settings: {0}")]
    Settings(String),

    #[error("resolution floor violated: {what} requires at least {required} nodes, got {requested}")]
    Resolution {
        what: String,
        required: usize,
        requested: usize,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("solve failed at q = {q}, nodes = {nodes}, half-width = {half_width}: {reason}")]
    Solve {
        q: f64,
        nodes: usize,
        half_width: f64,
        reason: String,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{what} = {value} lies outside the data range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}
