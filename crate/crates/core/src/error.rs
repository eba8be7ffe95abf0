use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series too short: need at least {needed} samples, got {got}")]
    Length { needed: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("simulation diverged at t = {time} s")]
    Diverged { time: f64 },

    #[error("response has not settled: {0}")]
    NotSettled(String),

    #[error("degenerate response: output span is zero")]
    DegenerateResponse,

    #[error("dead time is zero, the PI rule would give an infinite gain; cap tau at a floor (e.g. {floor} s)")]
    InfiniteGain { floor: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        domain(format!("sampling interval must be positive and finite, got {h}"))
    }
}
