use std::fmt;

use discoctx::inference::InferenceError;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input data or a validation failure.
    Data(anyhow::Error),
    /// Bad configuration or arguments.
    Config(anyhow::Error),
    /// The inference endpoint could not be used.
    Endpoint(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Data(_) => 1,
            Failure::Config(_) => 2,
            Failure::Endpoint(_) => 3,
        }
    }

    fn inner(&self) -> &anyhow::Error {
        match self {
            Failure::Data(e) | Failure::Config(e) | Failure::Endpoint(e) => e,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.inner())
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Endpoint { .. } => Failure::Endpoint(e.into()),
            InferenceError::Config(_) => Failure::Config(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn data(self) -> Outcome<T>;
    fn config(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn data(self) -> Outcome<T> {
        self.map_err(|e| Failure::Data(e.into()))
    }

    fn config(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }
}

macro_rules! config_bail {
    ($($arg:tt)*) => {
        return Err($crate::error::Failure::Config(anyhow::anyhow!($($arg)*)))
    };
}

macro_rules! data_bail {
    ($($arg:tt)*) => {
        return Err($crate::error::Failure::Data(anyhow::anyhow!($($arg)*)))
    };
}

pub(crate) use {config_bail, data_bail};
