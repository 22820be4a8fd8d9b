//! Experiment drivers: configuration, sweeps, lemma batteries and reports.

pub mod battery;
pub mod config;
pub mod fit;
pub mod hartree_run;
pub mod rate;
pub mod report;
pub mod section2;

pub use battery::run_lemma_battery;
pub use config::{load_config, ExperimentConfig, LoadedConfig};
pub use fit::{fit_rate, run_fit, FitVerdict, RateFit};
pub use hartree_run::run_hartree;
pub use rate::{rate_bundle, run_rate_sweep, RateReport};
pub use report::{Bundle, CheckRecord, CsvTable};
pub use section2::{run_section2_suite, section2_bundle, Section2Report};
