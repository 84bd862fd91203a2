use std::fmt;

/// Broad failure category. The FFI layer maps these to stable status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Dimension,
    Domain,
    Normalization,
    Precondition,
    Parameter,
    Convergence,
    Positivity,
    StepSize,
    Conservation,
    Parse,
    Io,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Dimension => "dimension error",
            ErrorKind::Domain => "domain error",
            ErrorKind::Normalization => "normalization error",
            ErrorKind::Precondition => "precondition violated",
            ErrorKind::Parameter => "parameter error",
            ErrorKind::Convergence => "convergence error",
            ErrorKind::Positivity => "positivity error",
            ErrorKind::StepSize => "step-size error",
            ErrorKind::Conservation => "conservation error",
            ErrorKind::Parse => "parse error",
            ErrorKind::Io => "io error",
        };
        f.write_str(s)
    }
}

/// Every error names the module that raised it and the violated condition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{module}: {kind}: {detail}")]
pub struct Error {
    pub kind: ErrorKind,
    pub module: &'static str,
    pub detail: String,
}

impl Error {
    pub fn new(kind: ErrorKind, module: &'static str, detail: impl Into<String>) -> Self {
        Error {
            kind,
            module,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $module:expr, $($arg:tt)*) => {
        return Err($crate::error::Error::new(
            $crate::error::ErrorKind::$kind,
            $module,
            format!($($arg)*),
        ))
    };
}
pub(crate) use bail;
