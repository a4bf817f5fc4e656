//! Config-driven experiments on top of `fairapp-core`: seed sweeps,
//! frontier sweeps, brute-force condition checks and SVG plots.

pub mod commands;
pub mod output;
pub mod spec;
pub mod svg;

use std::fmt;

/// A configuration or input problem on the user's side (exit code 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const INVALID: u8 = 2;
    pub const SOLVER: u8 = 3;
    pub const GUARD: u8 = 4;
}

/// Exit code for an error, from the first classifiable cause in its chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use fairapp_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::GridTooLarge { .. } => exit::GUARD,
                E::Solver(_) | E::NonConvergence { .. } | E::Unbounded(_) | E::RoundFailed { .. } => exit::SOLVER,
                _ => exit::INVALID,
            };
        }
        if cause.is::<Invalid>() || cause.is::<serde_json::Error>() {
            return exit::INVALID;
        }
    }
    exit::IO
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn exit_codes_follow_the_cause() {
        let guard: anyhow::Error = fairapp_core::Error::GridTooLarge { points: 1e9, limit: 1e7 }.into();
        assert_eq!(exit_code(&guard.context("check")), exit::GUARD);
        let solver: anyhow::Error = fairapp_core::Error::Solver("cycling".into()).into();
        assert_eq!(exit_code(&solver), exit::SOLVER);
        let bad: anyhow::Result<()> = Err(Invalid("x".into()).into());
        assert_eq!(exit_code(&bad.context("outer").unwrap_err()), exit::INVALID);
        let io: anyhow::Error = std::io::Error::other("disk").into();
        assert_eq!(exit_code(&io), exit::IO);
    }
}
