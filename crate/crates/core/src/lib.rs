//! Circuit-level modeling toolkit for thin-film acoustic resonators and the
//! ladder filters built from them.
//!
//! The crate covers the full design/analysis loop:
//!
//! - [`network`]: two-port ABCD algebra and S-parameter conversion under
//!   real and complex (power-wave) port references.
//! - [`mbvd`]: the modified Butterworth-Van Dyke resonator model with
//!   routing parasitics and resonator-metric extraction.
//! - [`ladder`]: ladder filter construction, simulation, passband metrics,
//!   static-capacitance synthesis and complex-port matching.
//! - [`fitting`]: Nelder-Mead based MBVD extraction from measured or
//!   synthetic admittance sweeps.
//! - [`io`]: Touchstone v1, admittance CSV and JSON config/result files.

pub mod error;
pub mod fitting;
pub mod io;
pub mod ladder;
pub mod mbvd;
pub mod network;
pub mod sweep;

pub use error::{Error, Result};
pub use fitting::{fit_mbvd, init_guess, nelder_mead, FitOptions, FitResult, NmOptions};
pub use ladder::{
    apply_static_caps, build_ladder, extract_metrics, find_complex_match, ladder_abcd_sweep,
    metrics_from_db_trace, optimize_static_caps, simulate, synthesis_objective, FilterMetrics,
    LadderDesign, MatchResult, MatchSearch, Placement, Resonator, Stage, SynthesisOptions,
    SynthesisResult,
};
pub use mbvd::{
    admittance, em_resonance_freq, k2_from_freqs, mbvd_from_spec, resonance_extrema,
    resonator_metrics, MbvdParams, ResonatorMetrics, ResonatorSpec,
};
pub use network::{
    abcd_sweep_from_s, cascade, renormalize_sweep, series_abcd, shunt_abcd, transducer_gain,
    Abcd2x2, PortImpedance, SMatrix,
};
pub use sweep::{linspace, SSweep, SimSweep, Sweep, YSweep};
