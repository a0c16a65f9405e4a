use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("planning error: {0}")]
    Planning(String),
    #[error("lesion clipped: {clipped_fraction:.4} of inserted energy lost to the code range")]
    LesionClipped { clipped_fraction: f64 },
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
