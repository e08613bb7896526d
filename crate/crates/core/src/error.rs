use thiserror::Error;

/// Errors raised by the unmixing kernels and their data containers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch between {left} ({left_dims}) and {right} ({right_dims})")]
    DimensionMismatch {
        left: &'static str,
        left_dims: String,
        right: &'static str,
        right_dims: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero-norm column {index} in {what}")]
    ZeroColumn { what: &'static str, index: usize },

    #[error("{solver} did not converge after {iterations} iterations")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        /// Best iterate reached before giving up.
        best: Vec<f64>,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("pixel {pixel}: {source}")]
    Pixel {
        pixel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn mismatch(
        left: &'static str,
        left_dims: (usize, usize),
        right: &'static str,
        right_dims: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            left,
            left_dims: format!("{}x{}", left_dims.0, left_dims.1),
            right,
            right_dims: format!("{}x{}", right_dims.0, right_dims.1),
        }
    }

    pub(crate) fn at_pixel(self, pixel: usize) -> Self {
        Error::Pixel {
            pixel,
            source: Box::new(self),
        }
    }
}
