//! Study files, run configuration, the bundled survey data and the
//! subcommand driver behind the command-line tool.

mod config;
mod gss;
mod results;
mod run;
mod study_file;

pub use config::{
    CompositeConfig, FiducialConfig, FitSection, Overrides, RunConfig, SharpConfig, SimulateConfig,
    DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
pub use gss::{gss_dataset, gss_study_file, GSS_CONTROL, GSS_CSV, GSS_LABELS, GSS_TREATED};
pub use results::{ResultsDocument, RESULTS_FILE};
pub use run::{run_subcommand, simulate_staircase_study, RunOutput, Subcommand};
pub use study_file::{load_study, load_study_file, save_study, StudyFile};
