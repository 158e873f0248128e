use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown unit conversion: {from} -> {to}")]
    UnknownUnit { from: String, to: String },

    #[error("non-finite weight {value} at r = {radius} a0")]
    NonFiniteWeight { radius: f64, value: f64 },

    #[error("basis conditioning failure: overlap not positive definite (smallest pivot {pivot:e} at index {index})")]
    Conditioning { index: usize, pivot: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("unsupported Taylor order {order}: {reason}")]
    UnsupportedOrder { order: u32, reason: &'static str },

    #[error("unsupported monomial degree {degree} (maximum {max})")]
    AngularDegree { degree: u32, max: u32 },

    #[error("scattering-length extraction failed: {0}")]
    Scattering(String),

    #[error("branch error: target a_sc not reachable without crossing a pole near shift s = {pole_shift} a0")]
    Branch { pole_shift: f64 },

    #[error("pole at {location}: {context}")]
    Pole { location: f64, context: &'static str },

    #[error("classification failed: {message}\n{table}")]
    Classification { message: String, table: String },

    #[error("symmetry mismatch: {0}")]
    Symmetry(String),

    #[error("incomplete ledger: no '{tag}' state in {level}")]
    IncompleteLedger { tag: String, level: String },

    #[error("incompatible states: {0}")]
    Incompatible(String),

    #[error("binding-energy anchor missing: {0}")]
    Anchor(String),

    #[error("inconclusive fit: {0}")]
    InconclusiveFit(String),

    #[error("configuration error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("parse error in {path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{module}: {source}")]
    Context {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn within(self, module: &'static str) -> Self {
        Error::Context { module, source: Box::new(self) }
    }
}
