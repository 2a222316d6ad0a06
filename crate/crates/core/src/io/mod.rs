//! File interchange: Touchstone v1 (.s1p/.s2p), admittance CSV, and JSON
//! design/result documents.

pub mod config;
pub mod csv;
pub mod touchstone;

pub use config::{
    read_design_config, write_design_config, DesignConfig, FitJson, GridConfig, MatchJson,
    MetricsJson, ParamsConfig, PortConfig, ResonatorMetricsJson, SpecConfig, StageConfig,
    SynthesisJson,
};
pub use csv::{read_admittance_csv, write_admittance_csv};
pub use touchstone::{
    read_s1p, read_s2p, s11_to_admittance, s1p_to_admittance, write_s1p, write_s2p, DataFormat,
    FreqUnit, TouchstoneHeader,
};
