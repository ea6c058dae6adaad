//! End-to-end runs: Strang splitting of the bubble flow, the spectral
//! reference, test-case presets, configuration and CSV output.

pub mod config;
pub mod output;
pub mod run;
pub mod testcase;

pub use config::{ConfigFile, Method, RunConfig, TestCase};
pub use output::{drift, write_outputs};
pub use run::{
    run_grid, run_simulation, simulate, strang_step_bubbles, DiagnosticRecord, RunOutput, StrangStep,
};
pub use testcase::{load_test_case, TestCaseData, TC3_RADIUS};
