//! JSON design configs and result documents.
//!
//! All physical quantities carry SI-unit key suffixes (`_hz`, `_f`, `_ohm`,
//! `_h`) so files stay unambiguous. Stages may carry a design-level `spec`
//! or raw element `params`; specs are expanded at load time and both forms
//! are preserved when writing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{FilterMetrics, LadderDesign, Placement, Resonator, Stage};
use crate::mbvd::{MbvdParams, ResonatorMetrics, ResonatorSpec};
use crate::network::PortImpedance;
use crate::sweep::linspace;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortConfig {
    pub re_ohm: f64,
    #[serde(default)]
    pub im_ohm: f64,
}

impl PortConfig {
    pub fn to_port(&self, field: &str) -> Result<PortImpedance> {
        PortImpedance::new(self.re_ohm, self.im_ohm)
            .map_err(|e| Error::schema(field, e.to_string()))
    }

    pub fn from_port(z: PortImpedance) -> Self {
        Self {
            re_ohm: z.re(),
            im_ohm: z.im(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::schema(
                "grid.points",
                format!("need at least 2 points, got {}", self.points),
            ));
        }
        linspace(self.start_hz, self.stop_hz, self.points)
            .map_err(|e| Error::schema("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PlacementConfig {
    Shunt,
    Series,
}

impl From<PlacementConfig> for Placement {
    fn from(p: PlacementConfig) -> Self {
        match p {
            PlacementConfig::Shunt => Placement::Shunt,
            PlacementConfig::Series => Placement::Series,
        }
    }
}

impl From<Placement> for PlacementConfig {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Shunt => PlacementConfig::Shunt,
            Placement::Series => PlacementConfig::Series,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub fs_hz: f64,
    pub k2: f64,
    pub q: f64,
    pub c0_f: f64,
    #[serde(default)]
    pub rs_ohm: f64,
    #[serde(default)]
    pub ls_h: f64,
}

impl SpecConfig {
    fn to_spec(&self, field: &str) -> Result<ResonatorSpec> {
        let spec = ResonatorSpec {
            fs: self.fs_hz,
            k2: self.k2,
            q: self.q,
            c0: self.c0_f,
            rs: self.rs_ohm,
            ls: self.ls_h,
        };
        spec.validate().map_err(|e| Error::schema(field, e.to_string()))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ResonatorSpec) -> Self {
        Self {
            fs_hz: spec.fs,
            k2: spec.k2,
            q: spec.q,
            c0_f: spec.c0,
            rs_ohm: spec.rs,
            ls_h: spec.ls,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub c0_f: f64,
    pub rm_ohm: f64,
    pub lm_h: f64,
    pub cm_f: f64,
    #[serde(default)]
    pub rs_ohm: f64,
    #[serde(default)]
    pub ls_h: f64,
}

impl ParamsConfig {
    fn to_params(&self, field: &str) -> Result<MbvdParams> {
        let p = MbvdParams {
            c0: self.c0_f,
            rm: self.rm_ohm,
            lm: self.lm_h,
            cm: self.cm_f,
            rs: self.rs_ohm,
            ls: self.ls_h,
        };
        p.validate().map_err(|e| Error::schema(field, e.to_string()))?;
        Ok(p)
    }

    pub fn from_params(p: &MbvdParams) -> Self {
        Self {
            c0_f: p.c0,
            rm_ohm: p.rm,
            lm_h: p.lm,
            cm_f: p.cm,
            rs_ohm: p.rs,
            ls_h: p.ls,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub placement: PlacementConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub port_ohm: PortConfig,
    /// Optional second-port reference; defaults to `port_ohm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port2_ohm: Option<PortConfig>,
    pub grid: GridConfig,
    pub stages: Vec<StageConfig>,
}

impl DesignConfig {
    pub fn to_design(&self) -> Result<LadderDesign> {
        if self.stages.is_empty() {
            return Err(Error::schema("stages", "at least one stage required"));
        }
        let p1 = self.port_ohm.to_port("port_ohm")?;
        let p2 = match &self.port2_ohm {
            Some(p) => p.to_port("port2_ohm")?,
            None => p1,
        };
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, sc)| {
                let resonator = match (&sc.spec, &sc.params) {
                    (Some(spec), None) => {
                        Resonator::Spec(spec.to_spec(&format!("stages[{i}].spec"))?)
                    }
                    (None, Some(params)) => {
                        Resonator::Params(params.to_params(&format!("stages[{i}].params"))?)
                    }
                    (None, None) => {
                        return Err(Error::schema(
                            format!("stages[{i}]"),
                            "stage needs either `spec` or `params`",
                        ))
                    }
                    (Some(_), Some(_)) => {
                        return Err(Error::schema(
                            format!("stages[{i}]"),
                            "stage must not carry both `spec` and `params`",
                        ))
                    }
                };
                Ok(Stage {
                    placement: sc.placement.into(),
                    resonator,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LadderDesign::new(stages, [p1, p2])
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        self.grid.to_grid()
    }

    pub fn from_design(design: &LadderDesign, grid: GridConfig) -> Self {
        let stages = design
            .stages
            .iter()
            .map(|s| match &s.resonator {
                Resonator::Spec(spec) => StageConfig {
                    placement: s.placement.into(),
                    spec: Some(SpecConfig::from_spec(spec)),
                    params: None,
                },
                Resonator::Params(p) => StageConfig {
                    placement: s.placement.into(),
                    spec: None,
                    params: Some(ParamsConfig::from_params(p)),
                },
            })
            .collect();
        let [p1, p2] = design.ports;
        Self {
            port_ohm: PortConfig::from_port(p1),
            port2_ohm: if p1 == p2 {
                None
            } else {
                Some(PortConfig::from_port(p2))
            },
            grid,
            stages,
        }
    }
}

fn json_error(e: &serde_json::Error) -> Error {
    Error::parse(e.line().max(1), e.to_string())
}

/// Parses and validates a design config document; the expansion of every
/// `spec` stage is checked as part of validation.
pub fn read_design_config(text: &str) -> Result<DesignConfig> {
    let cfg: DesignConfig = serde_json::from_str(text).map_err(|e| json_error(&e))?;
    cfg.to_design()?;
    cfg.grid()?;
    Ok(cfg)
}

pub fn write_design_config(cfg: &DesignConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("design config serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsJson {
    pub f_center_hz: f64,
    pub il_db: f64,
    pub fbw_3db_percent: f64,
    pub oob_rejection_db: f64,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
}

impl From<&FilterMetrics> for MetricsJson {
    fn from(m: &FilterMetrics) -> Self {
        Self {
            f_center_hz: m.f_center,
            il_db: m.il_db,
            fbw_3db_percent: m.fbw_3db,
            oob_rejection_db: m.oob_rejection_db,
            band_lo_hz: m.band_lo,
            band_hi_hz: m.band_hi,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResonatorMetricsJson {
    pub fs_hz: f64,
    pub fp_hz: f64,
    pub k2: f64,
    pub q: f64,
    pub fom: f64,
    pub f_em_hz: Option<f64>,
}

impl From<&ResonatorMetrics> for ResonatorMetricsJson {
    fn from(m: &ResonatorMetrics) -> Self {
        Self {
            fs_hz: m.fs,
            fp_hz: m.fp,
            k2: m.k2,
            q: m.q,
            fom: m.fom,
            f_em_hz: m.f_em,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitJson {
    pub converged: bool,
    pub residual: f64,
    pub seed: u64,
    pub params: ParamsConfig,
    pub metrics: ResonatorMetricsJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchJson {
    pub z_source_ohm: PortConfig,
    pub z_load_ohm: PortConfig,
    pub peak_s21_db: f64,
    pub matched: Option<MetricsJson>,
    pub unmatched_50ohm_peak_s21_db: f64,
    pub unmatched_50ohm: Option<MetricsJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisJson {
    pub c0_shunt_f: f64,
    pub c0_series_f: f64,
    pub objective_db: f64,
    pub metrics: Option<MetricsJson>,
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result document serializes");
    s.push('\n');
    s
}
