use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Bad timestamp, bus name, or other record field.
    InvalidRecord(String),
    /// The operation needs at least one input item.
    EmptyInput(&'static str),
    /// A network could not be constructed or fails an invariant.
    InvalidNetwork(String),
    /// A pattern is empty, disconnected, or not part of the network.
    InvalidPattern(String),
    /// A degree sequence is not a valid connected simple sequence.
    InvalidSequence(String),
    InvalidParameter(String),
    /// Every observed pattern has one line; the likelihood grows without bound.
    NoFiniteMle,
    /// No path between two sequences within the line-count cap.
    CapExceeded { cap: u32 },
    /// Bisection bracket does not contain the target.
    UnreachableTarget { target: f64, at_zero: f64, at_one: f64 },
    /// A generated ensemble had no pattern of three or more lines.
    InsufficientData(&'static str),
    /// Distribution masses do not balance.
    Infeasible(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRecord(msg) => write!(f, "invalid record: {msg}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::InvalidNetwork(msg) => write!(f, "invalid network: {msg}"),
            Error::InvalidPattern(msg) => write!(f, "invalid pattern: {msg}"),
            Error::InvalidSequence(msg) => write!(f, "invalid degree sequence: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NoFiniteMle => {
                write!(f, "no finite maximum likelihood estimate: all sizes equal 1")
            }
            Error::CapExceeded { cap } => {
                write!(f, "no path between degree sequences within {cap} lines")
            }
            Error::UnreachableTarget { target, at_zero, at_one } => write!(
                f,
                "target {target} unreachable: generated value is {at_zero} at p=0 and {at_one} at p=1"
            ),
            Error::InsufficientData(what) => write!(f, "insufficient data: {what}"),
            Error::Infeasible(msg) => write!(f, "infeasible transport problem: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
