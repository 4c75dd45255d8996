//! Experiment specs, seeded replica farms and self-describing outputs.

mod checks;
mod output;
mod run;
mod sharpness;
mod spec;

pub use checks::{
    couple_check, default_oracle_cases, default_oracle_table, oracle_checks, ordered_pair, CheckRow, CoupledRun,
};
pub use output::{csv_body, csv_document, json_document, write_atomic, OutputHeader, OUTPUT_SCHEMA_VERSION};
pub use run::{oracle_table_csv, run_experiment, RunReport};
pub use sharpness::{sharpness_scan, Inversion, QProfileRow, SharpnessReport, SharpnessSettings};
pub use spec::{Experiment, ExperimentSpec, Options, Outputs, QSpec, ValidationReport, SPEC_SCHEMA_VERSION};
