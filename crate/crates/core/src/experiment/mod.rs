//! Experiment configuration, sweeps and CSV output.

mod config;
mod csv;
mod run;

pub use config::{
    load_config, ChannelSection, ExperimentConfig, ExperimentKind, FadingKind, LinkSection,
    NodeSpec, OffsetSpec, SnrSweep, TopologySection,
};
pub use csv::{emit_csv, render_csv, CSV_HEADER};
pub use run::{point_metrics, run_experiment, scenario_hash};
