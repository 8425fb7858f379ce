use crate::bootstrap::DivergenceSource;

/// Errors raised by the bound chain, the checks and the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("nu must be at least 1 (the weighted sums are only bounded for nu >= 1)")]
    ZeroNu,
    #[error("truncation N must be at least 1")]
    ZeroTruncation,
    #[error("nu_max must be at least 2, got {0}")]
    NuMaxTooSmall(u32),
    #[error("random-walk table has no entry for nu = {0}")]
    MissingNu(u32),
    #[error("diagram index ({lambda},{rho}) would need epsilon^(0), which is not available")]
    UnsupportedIndex { lambda: u32, rho: u32 },
    #[error("series index N must be at least 3, got {0}")]
    SeriesIndex(u32),
    #[error("bootstrap constants must be finite and exceed 1")]
    InvalidConstants,
    #[error("bound chain diverges: {0}")]
    Divergent(DivergenceSource),
    #[error("replay mode is only defined at d = 9, got d = {0}")]
    ReplayDimension(u32),
    #[error("invalid search spec: {0}")]
    InvalidSearch(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(&'static str),
    #[error("exact 1-d oracle limited to t_max <= {max}, got {got}")]
    DpBudget { max: u32, got: u32 },
    #[error("unknown policy (expected \"certified\" or \"fast\")")]
    UnknownPolicy,
}
