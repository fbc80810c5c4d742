use sketchlab::attack::AttackError;
use sketchlab::shatter::ShatterError;
use sketchlab::SketchError;
use thiserror::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_REJECTED: u8 = 2;
pub const EXIT_FAILED: u8 = 3;

/// Outcomes the binary decides on itself rather than inheriting from the library.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Rejected(String),

    #[error("attack failed: {0}")]
    AttackFailed(String),
}

pub fn rejected<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(CliError::Rejected(format!("invalid parameters: {}", msg.into())).into())
}

fn core_code(e: &sketchlab::Error) -> u8 {
    match e {
        sketchlab::Error::DimensionMismatch { .. }
        | sketchlab::Error::AttributeOutOfRange { .. }
        | sketchlab::Error::EmptyDatabase { .. } => EXIT_REJECTED,
        _ => EXIT_IO,
    }
}

fn sketch_code(e: &SketchError) -> u8 {
    match e {
        SketchError::Format(_) | SketchError::Io(_) => EXIT_IO,
        SketchError::Core(e) => core_code(e),
        _ => EXIT_REJECTED,
    }
}

/// Exit code for an error, judged by the first cause the binary recognises.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Rejected(_) => EXIT_REJECTED,
                CliError::AttackFailed(_) => EXIT_FAILED,
            };
        }
        if let Some(e) = cause.downcast_ref::<AttackError>() {
            return if e.is_rejection() {
                EXIT_REJECTED
            } else {
                EXIT_FAILED
            };
        }
        if let Some(e) = cause.downcast_ref::<SketchError>() {
            return sketch_code(e);
        }
        if cause.is::<ShatterError>() {
            return EXIT_REJECTED;
        }
        if let Some(e) = cause.downcast_ref::<sketchlab::Error>() {
            return core_code(e);
        }
    }
    EXIT_IO
}
