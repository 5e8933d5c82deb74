//! Command implementations behind the `fnirs-bnn` binary.

pub mod commands;
pub mod config;
pub mod svg;

/// Bad invocation or configuration; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Process exit code for an error: 2 for usage and configuration problems,
/// 1 for failures during computation.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<fnirs_bnn::Error>() {
            return if e.is_usage() { 2 } else { 1 };
        }
    }
    1
}
