use serde::{Deserialize, Serialize};

use crate::model::{AbundanceMatrix, ScalingFactors, VariabilityCoefficients};

/// Outcome of a single pixel solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelStatus {
    /// Closed-form or active-set solve, or ADMM met its tolerance.
    Converged,
    /// ADMM hit `max_iter`; the last iterate is returned.
    NotConverged,
    /// The abundances summed to (almost) zero; the pixel gets zero
    /// abundance and zero scale.
    Degenerate,
}

impl PixelStatus {
    pub fn as_code(self) -> u8 {
        match self {
            PixelStatus::Converged => 0,
            PixelStatus::NotConverged => 1,
            PixelStatus::Degenerate => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PixelStatus::Converged),
            1 => Some(PixelStatus::NotConverged),
            2 => Some(PixelStatus::Degenerate),
            _ => None,
        }
    }
}

/// Image-wide unmixing result.
#[derive(Debug, Clone, PartialEq)]
pub struct Unmixing {
    pub abundances: AbundanceMatrix,
    pub scales: Option<ScalingFactors>,
    pub coefficients: Option<VariabilityCoefficients>,
    pub status: Vec<PixelStatus>,
}

impl Unmixing {
    pub fn count(&self, status: PixelStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }
}
