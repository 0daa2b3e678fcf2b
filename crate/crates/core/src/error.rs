use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time scale has no segments")]
    EmptyTimeScale,
    #[error("segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },
    #[error("segments {first} and {second} overlap or touch (need a positive gap)")]
    OverlappingSegments { first: usize, second: usize },
    #[error("time {0} is not a grid point")]
    NotOnGrid(f64),
    #[error("interval [{a}, {b}] is invalid: {reason}")]
    InvalidInterval { a: f64, b: f64, reason: String },
    #[error("time {0} is the final grid point; no forward step exists")]
    FinalPoint(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("system is not regressive at t = {t} (smallest singular value of I + mu A is {sigma_min:e})")]
    NotRegressive { t: f64, sigma_min: f64 },
    #[error("1 + mu*lambda vanishes at t = {t}: lambda is on the regressivity boundary")]
    RegressivityBoundary { t: f64 },
    #[error("system is not controllable on [{t0}, {tf}] (controllability Gramian is singular)")]
    NotControllable { t0: f64, tf: f64 },
    #[error("system is not observable on [{t0}, {tf}] (observability Gramian is singular)")]
    NotObservable { t0: f64, tf: f64 },
    #[error("signal has no sample at t = {0}")]
    MissingSample(f64),
    #[error("t = {t} is too close to the end of the grid for {needed} forward steps")]
    TooCloseToEnd { t: f64, needed: usize },
    #[error("controllability matrix has rank 0: no controllable subspace")]
    ZeroRank,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("entry ({row}, {col}) is not a strictly-proper rational function of z")]
    NotStrictlyProper { row: usize, col: usize },
    #[error("empty transfer-function matrix")]
    EmptyMatrix,
    #[error("eigenvalue multiplicity {0} exceeds the supported maximum of 4")]
    MultiplicityTooHigh(usize),
    #[error("eigenvalue clustering is ambiguous near {0}")]
    ClusterAmbiguity(String),
    #[error("only f_0 .. f_3 are available (requested f_{0})")]
    UnsupportedOrder(usize),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
