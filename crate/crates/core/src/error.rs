use core::fmt;

use crate::model::{FragmentKey, Stage};

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration field violates its range.
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },
    /// The two-EN delivery scheme was requested for another topology.
    UnsupportedTopology {
        kt: usize,
        kr: usize,
    },
    /// An integer argument lies outside `0..=max`.
    OutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },
    /// A documented precondition of the operation does not hold.
    Precondition(&'static str),
    InvalidDemand {
        user: usize,
        file: usize,
        n_files: usize,
    },
    DemandLength {
        expected: usize,
        got: usize,
    },
    /// A constraint handed to the LP solver is malformed.
    InvalidConstraint {
        index: usize,
    },
    Infeasible,
    /// A user could not reconstruct its file. Always an implementation bug.
    DecodeFailure {
        user: usize,
        key: FragmentKey,
        missing_bits: usize,
        wrong_bits: usize,
    },
    /// A coded message contains an operand the receiving user does not cache.
    Unrecoverable {
        stage: Stage,
        user: usize,
        key: FragmentKey,
    },
    /// A bit reached a user twice, or a user received a bit it already caches.
    DuplicateDelivery {
        stage: Stage,
        user: usize,
        key: FragmentKey,
    },
    /// A transmitter was asked to send bits it does not hold.
    SenderMissingData {
        stage: Stage,
        key: FragmentKey,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig { field, reason } => write!(f, "{field} {reason}"),
            Error::UnsupportedTopology { kt, kr } => write!(
                f,
                "unsupported topology kt={kt}, kr={kr}: the delivery scheme needs kt = 2 and kr >= 2"
            ),
            Error::OutOfRange { what, value, max } => {
                write!(f, "{what} = {value} out of range 0..={max}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::InvalidDemand { user, file, n_files } => {
                write!(f, "user {} demands file {file}, expected 1..={n_files}", user + 1)
            }
            Error::DemandLength { expected, got } => {
                write!(f, "demand vector has {got} entries, expected {expected}")
            }
            Error::InvalidConstraint { index } => write!(
                f,
                "constraint {index} must have finite, nonnegative coefficients, not both zero"
            ),
            Error::Infeasible => write!(f, "linear program is infeasible"),
            Error::DecodeFailure {
                user,
                key,
                missing_bits,
                wrong_bits,
            } => write!(
                f,
                "user {} failed to decode fragment {key}: {missing_bits} missing, {wrong_bits} wrong bits",
                user + 1
            ),
            Error::Unrecoverable { stage, user, key } => {
                write!(f, "stage {stage}: user {} lacks side information {key}", user + 1)
            }
            Error::DuplicateDelivery { stage, user, key } => {
                write!(f, "stage {stage}: fragment {key} delivered twice to user {}", user + 1)
            }
            Error::SenderMissingData { stage, key } => {
                write!(f, "stage {stage}: transmitter does not hold fragment {key}")
            }
        }
    }
}

impl core::error::Error for Error {}
