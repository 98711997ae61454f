use thiserror::Error;

/// Errors produced by the simulation layers.
#[derive(Debug, Error)]
pub enum GrazeError {
    /// Input violates a documented invariant (bad angle, non-positive
    /// energy, start height inside the interaction region, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mathematical operation left its domain (asin argument out of
    /// range, no bracketing interval for a root, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A trajectory did not finish as an outgoing free particle.
    #[error("trajectory integration failed: {0}")]
    Integration(String),

    /// The coupled-channel or wavepacket solve lost flux beyond the hard
    /// tolerance; the grid or basis needs refinement.
    #[error("propagation unstable: {0}")]
    NonUnitary(String),

    /// Scattering setup with no energetically open channel.
    #[error("no open diffraction channel: {0}")]
    NoOpenChannels(String),

    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Configuration file or CLI override could not be interpreted.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl GrazeError {
    /// Process exit code for the CLI: usage/config problems exit 2,
    /// runtime/physics failures exit 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            GrazeError::Config(_) | GrazeError::InvalidInput(_) | GrazeError::EmptyInput(_) => 2,
            _ => 1,
        }
    }
}
