//! File formats, problem specifications and commands for the `lemnilab`
//! executable. The numerics live in `lemnilab-core`.

pub mod commands;
pub mod error;
pub mod output;
pub mod spec;

pub use commands::{analyze, laurent, verify, AnalyzeOutput, Check, VerifyOutput};
pub use error::{CliError, CliResult};
pub use spec::{Function, GridSpec, Overrides, Problem, ProblemSpec, Region};

/// Version tag carried by every JSON document.
pub const SCHEMA: &str = "lemnilab/1";

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "LEMNILAB_THREADS";
