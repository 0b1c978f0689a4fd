//! Scenario runner for the `coagfrag` library.

pub mod bundled;
pub mod execute;
pub mod scenario;

pub use execute::{execute, ExecError, Outcome};
pub use scenario::{
    parse_scenario, parse_str, Diagnostic, Scenario, ScenarioError, ScenarioFile, Severity,
};

/// Environment variable that overrides the default output root.
pub const OUTPUT_ROOT_ENV: &str = "COAGFRAG_OUTPUT_ROOT";
