//! IO companion to `secplf-core`: scenario files, attack reports, market-data
//! analysis artifacts, and randomized invariant sweeps. The `secplf` binary
//! is a thin wrapper over these modules.

pub mod analysis;
pub mod runner;
pub mod scenario;
pub mod suite;

/// Process exit codes shared by every subcommand.
pub mod exit_codes {
    /// Ran to completion; an expected in-simulation revert still counts.
    pub const OK: i32 = 0;
    /// Configuration or input problem (bad scenario, unreadable data).
    pub const CONFIG_ERROR: i32 = 2;
    /// A simulated invariant was violated (property-suite failure).
    pub const INVARIANT_VIOLATION: i32 = 3;
}
