use std::fmt;

use vgfit_core::Error;

/// Error kinds raised by the front end itself, mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Failure::Usage(msg.into()).into()
}

pub fn data(msg: impl Into<String>) -> anyhow::Error {
    Failure::Data(msg.into()).into()
}

pub fn numerical(msg: impl Into<String>) -> anyhow::Error {
    Failure::Numerical(msg.into()).into()
}

/// 2 usage, 3 data, 4 numerical. Anything unclassified counts as numerical.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => 2,
                Failure::Data(_) => 3,
                Failure::Numerical(_) => 4,
            };
        }
        if let Some(core) = cause.downcast_ref::<Error>() {
            return match core {
                Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::Config(_) => 2,
                e if e.is_data_error() => 3,
                _ => 4,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<csv::Error>().is_some() {
            return 3;
        }
    }
    4
}
