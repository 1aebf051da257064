//! Experiment runner: validated experiment documents, seeded deterministic
//! parallel replication, verdict evaluation and report emission.

mod config;
mod report;
mod runner;

pub use config::{
    parse_config, validate_config, BinPolicy, ComponentLawConfig, DefectRule, ExperimentConfig,
    Ladder, ModelConfig, MotifConfig, PmfConfig, Severity, SizePlan, ValidatedSpec, Violation,
    CUBE_LIKE_FLOOR, DEFAULT_RESOURCE_CAP, MIN_REPLICATES, SCHEMA_VERSION,
};
pub use report::{
    emit_report, DecompositionExtras, EmitFormat, RunReport, SizeReport, TimingMetrics, Verdict,
    VerdictStatus,
};
pub use runner::{criteria, run};
