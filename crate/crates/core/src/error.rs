use thiserror::Error;

pub type Result<T> = std::result::Result<T, BanditError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("invalid bandit instance: {0}")]
    InvalidInstance(String),
    #[error("arm {arm} out of range for {arms} arms")]
    InvalidArm { arm: usize, arms: usize },
    #[error("invalid window [{start}, {end}) for horizon {horizon}")]
    InvalidWindow {
        start: usize,
        end: usize,
        horizon: usize,
    },
    #[error("invalid policy configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
