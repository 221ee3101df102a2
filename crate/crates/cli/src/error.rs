use std::fmt;

use hypermsf::dynamics::DynamicsError;
use hypermsf::hypergraph::HypergraphError;
use hypermsf::io::IoError;
use hypermsf::spectral::SpectralError;
use hypermsf::stability::StabilityError;

pub const USAGE: u8 = 64;
pub const IO: u8 = 2;
pub const ISOLATED_VERTEX: u8 = 3;
pub const PRECLUDED: u8 = 4;
pub const DOMAIN: u8 = 5;
pub const INTERNAL: u8 = 70;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: IO,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self {
            code: DOMAIN,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::io(e.to_string())
    }
}

impl From<HypergraphError> for CliError {
    fn from(e: HypergraphError) -> Self {
        Self::io(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        let code = match e {
            SpectralError::ZeroDegree { .. } => ISOLATED_VERTEX,
            SpectralError::NoNeutralModes => PRECLUDED,
            SpectralError::ShapeMismatch(_) => DOMAIN,
            SpectralError::NegativeEigenvalue { .. } | SpectralError::NotConverged { .. } => INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        let code = match e {
            DynamicsError::BadSpec(_) => USAGE,
            _ => DOMAIN,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Spectral(s) => s.into(),
            StabilityError::Dynamics(d) => d.into(),
            StabilityError::SynchronizationPrecluded => Self {
                code: PRECLUDED,
                message: e.to_string(),
            },
            StabilityError::BadParams(_) => Self::usage(e.to_string()),
            _ => Self::domain(e.to_string()),
        }
    }
}
