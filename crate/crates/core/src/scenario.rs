//! Scenario files: human-editable TOML in presentation units (mm, µH, Ω,
//! kHz, degrees), converted to SI on ingestion.
//!
//! ```toml
//! [geometry]            rx_distance_mm, pitch_mm, pair_axial_offset_mm
//! [geometry.tx|rp|rx]   radius_mm, turns
//! [coils.<label>]       inductance_uh, resistance_ohm, quality_factor
//!                       (labels Tx1..Tx3, Rp1..Rp3, Rx are all required)
//! [electrical]          f0_khz, v_dc | v_s, r_load_ohm,
//!                       x_t_ohm = <ohms> | "auto", include_cross
//! [sweep]               start_deg, stop_deg, step_deg
//! [controller]          dead_band, phase_tolerance, max_iters
//! [quadrature]          tolerance, max_subdivisions, base_order
//! [output]              csv, summary (optional paths)
//! ```
//!
//! Individual keys can be overridden with dotted `section.key=value` strings.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::v_s_from_dc;
use crate::controller::ControllerSettings;
use crate::error::{Error, Result};
use crate::geometry::{CoilSpec, LayoutParams};
use crate::quadrature::QuadratureSpec;

/// The bundled prototype scenario.
pub const PROTOTYPE_SCENARIO: &str = include_str!("../scenarios/prototype.scenario");

const COIL_LABELS: [&str; 7] = ["Tx1", "Tx2", "Tx3", "Rp1", "Rp2", "Rp3", "Rx"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub geometry: GeometryConfig,
    pub coils: BTreeMap<String, CoilElectrical>,
    pub electrical: ElectricalConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub rx_distance_mm: f64,
    #[serde(default = "default_pitch_mm")]
    pub pitch_mm: f64,
    #[serde(default)]
    pub pair_axial_offset_mm: f64,
    pub tx: CoilShape,
    pub rp: CoilShape,
    pub rx: CoilShape,
}

fn default_pitch_mm() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilShape {
    pub radius_mm: f64,
    pub turns: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilElectrical {
    pub inductance_uh: f64,
    pub resistance_ohm: f64,
    #[serde(default)]
    pub quality_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Auto,
}

/// Transmitter reactance: fixed ohms, or tuned from the computed couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XtSetting {
    Ohms(f64),
    Auto(Keyword),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricalConfig {
    pub f0_khz: f64,
    #[serde(default)]
    pub v_dc: Option<f64>,
    #[serde(default)]
    pub v_s: Option<f64>,
    pub r_load_ohm: f64,
    pub x_t_ohm: XtSetting,
    #[serde(default)]
    pub include_cross: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            start_deg: 0.0,
            stop_deg: 360.0,
            step_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub dead_band: f64,
    pub phase_tolerance: f64,
    pub max_iters: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let s = ControllerSettings::default();
        Self {
            dead_band: s.dead_band,
            phase_tolerance: s.phase_tolerance,
            max_iters: s.max_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub tolerance: f64,
    pub max_subdivisions: usize,
    pub base_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            tolerance: q.tolerance,
            max_subdivisions: q.max_subdivisions,
            base_order: q.base_order,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Scenario {
    pub fn prototype() -> Self {
        Self::parse(PROTOTYPE_SCENARIO).expect("bundled scenario is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides::<&str>(text, &[])
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `text` and applies `section.key=value` overrides before
    /// validation. Values are read as TOML literals, falling back to strings.
    pub fn parse_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o.as_ref())?;
        }
        let scenario: Scenario = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Re-applies overrides to an already parsed scenario.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let text = toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Scenario(msg));
        for label in COIL_LABELS {
            let Some(c) = self.coils.get(label) else {
                return err(format!("coil {label} is not defined"));
            };
            if !(c.inductance_uh > 0.0) || !(c.resistance_ohm >= 0.0) {
                return err(format!(
                    "coil {label}: need inductance > 0 and resistance >= 0"
                ));
            }
        }
        if let Some(extra) = self
            .coils
            .keys()
            .find(|k| !COIL_LABELS.contains(&k.as_str()))
        {
            return err(format!("unknown coil {extra}"));
        }
        let g = &self.geometry;
        if !(g.rx_distance_mm > 0.0) {
            return err("geometry.rx_distance_mm must be positive".into());
        }
        if !(g.pitch_mm >= 0.0) || !g.pair_axial_offset_mm.is_finite() {
            return err("geometry.pitch_mm must be >= 0".into());
        }
        for (name, shape) in [("tx", g.tx), ("rp", g.rp), ("rx", g.rx)] {
            if !(shape.radius_mm > 0.0) || shape.turns == 0 {
                return err(format!(
                    "geometry.{name}: need radius_mm > 0 and turns >= 1"
                ));
            }
        }
        let e = &self.electrical;
        if !(e.f0_khz > 0.0) || !(e.r_load_ohm > 0.0) {
            return err("electrical: f0_khz and r_load_ohm must be positive".into());
        }
        match (e.v_dc, e.v_s) {
            (Some(_), Some(_)) => return err("electrical: give v_dc or v_s, not both".into()),
            (None, None) => return err("electrical: one of v_dc or v_s is required".into()),
            (Some(v), None) | (None, Some(v)) if !v.is_finite() => {
                return err("electrical: source voltage must be finite".into())
            }
            _ => {}
        }
        if let XtSetting::Ohms(x) = e.x_t_ohm {
            if !x.is_finite() {
                return err("electrical.x_t_ohm must be finite".into());
            }
        }
        let s = &self.sweep;
        if !(s.step_deg > 0.0) || !(s.start_deg < s.stop_deg) {
            return err("sweep: need step_deg > 0 and start_deg < stop_deg".into());
        }
        if !(self.controller.dead_band >= 0.0 && self.controller.phase_tolerance >= 0.0)
            || self.controller.max_iters == 0
        {
            return err(
                "controller: need dead_band, phase_tolerance >= 0 and max_iters >= 1".into(),
            );
        }
        self.quadrature_spec().validate()
    }

    pub fn layout_params(&self) -> LayoutParams {
        let spec = |label: &str, shape: CoilShape| {
            let c = &self.coils[label];
            CoilSpec {
                radius: shape.radius_mm * 1e-3,
                turns: shape.turns,
                resistance: c.resistance_ohm,
                inductance: c.inductance_uh * 1e-6,
                quality_factor: c.quality_factor,
            }
        };
        let g = &self.geometry;
        LayoutParams {
            tx: [spec("Tx1", g.tx), spec("Tx2", g.tx), spec("Tx3", g.tx)],
            rp: [spec("Rp1", g.rp), spec("Rp2", g.rp), spec("Rp3", g.rp)],
            rx: spec("Rx", g.rx),
            pitch: g.pitch_mm * 1e-3,
            pair_axial_offset: g.pair_axial_offset_mm * 1e-3,
            rx_distance: g.rx_distance_mm * 1e-3,
        }
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.electrical.f0_khz * 1e3
    }

    /// RMS source voltage.
    pub fn v_s(&self) -> f64 {
        match (self.electrical.v_s, self.electrical.v_dc) {
            (Some(v), _) => v,
            (None, Some(v)) => v_s_from_dc(v),
            (None, None) => unreachable!("validated scenario has a source voltage"),
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            tolerance: self.quadrature.tolerance,
            max_subdivisions: self.quadrature.max_subdivisions,
            base_order: self.quadrature.base_order,
        }
    }

    pub fn controller_settings(&self) -> ControllerSettings {
        ControllerSettings {
            phase_tolerance: self.controller.phase_tolerance,
            dead_band: self.controller.dead_band,
            max_iters: self.controller.max_iters,
        }
    }

    /// Receiver angles in degrees; the stop angle is included when the grid
    /// lands on it.
    pub fn angles_deg(&self) -> Vec<f64> {
        let s = &self.sweep;
        let n = ((s.stop_deg - s.start_deg) / s.step_deg + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| s.start_deg + k as f64 * s.step_deg)
            .collect()
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Scenario(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys
        .split_last()
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| Error::Scenario(format!("override `{assignment}` has an empty key")))?;
    let mut node = table;
    for key in parents {
        node = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::Scenario(format!("override path `{path}`: `{key}` is not a table"))
            })?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenario_parses() {
        let s = Scenario::prototype();
        assert_eq!(s.angles_deg().len(), 73);
        assert_eq!(s.electrical.x_t_ohm, XtSetting::Ohms(17.5));
        let p = s.layout_params();
        assert_eq!(p.tx[0].radius, 0.13);
        assert_eq!(p.rx.turns, 10);
        assert!((p.rp[2].resistance - 0.037).abs() < 1e-15);
        assert!((s.v_s() - 9.003163161571061).abs() < 1e-12);
        assert!((s.omega0() - 2.0 * PI * 592.6e3).abs() < 1e-6);
    }

    #[test]
    fn overrides_replace_keys() {
        let s = Scenario::parse_with_overrides(
            PROTOTYPE_SCENARIO,
            &[
                "sweep.step_deg=10",
                "electrical.x_t_ohm=auto",
                "output.csv=out/a.csv",
            ],
        )
        .unwrap();
        assert_eq!(s.angles_deg().len(), 37);
        assert_eq!(s.electrical.x_t_ohm, XtSetting::Auto(Keyword::Auto));
        assert_eq!(s.output.csv.as_deref(), Some(Path::new("out/a.csv")));
        let again = s.with_overrides(&["geometry.rx_distance_mm=250"]).unwrap();
        assert_eq!(again.layout_params().rx_distance, 0.25);
        assert_eq!(again.angles_deg().len(), 37);
    }

    #[test]
    fn rejects_missing_coil_and_bad_values() {
        let text = PROTOTYPE_SCENARIO.replace("[coils.Rp3]", "[coils.Rp4]");
        assert!(matches!(Scenario::parse(&text), Err(Error::Scenario(_))));
        assert!(Scenario::parse_with_overrides(PROTOTYPE_SCENARIO, &["sweep.step_deg=0"]).is_err());
        assert!(
            Scenario::parse_with_overrides(PROTOTYPE_SCENARIO, &["sweep.stop_deg=-5"]).is_err()
        );
        assert!(
            Scenario::parse_with_overrides(PROTOTYPE_SCENARIO, &["electrical.v_s=9.0"]).is_err()
        );
        assert!(
            Scenario::parse_with_overrides(PROTOTYPE_SCENARIO, &["electrical.x_t_ohm=manual"])
                .is_err()
        );
        assert!(Scenario::parse_with_overrides(PROTOTYPE_SCENARIO, &["geometry.typo=1"]).is_err());
        assert!(Scenario::parse_with_overrides(PROTOTYPE_SCENARIO, &["novalue"]).is_err());
        assert!(Scenario::parse("not toml [").is_err());
    }

    #[test]
    fn v_s_may_be_given_directly() {
        let text = PROTOTYPE_SCENARIO.replace("v_dc = 10.0", "v_s = 12.5");
        assert_eq!(Scenario::parse(&text).unwrap().v_s(), 12.5);
    }

    #[test]
    fn partial_sweep_grid() {
        let s = Scenario::parse_with_overrides(
            PROTOTYPE_SCENARIO,
            &[
                "sweep.start_deg=10",
                "sweep.stop_deg=25",
                "sweep.step_deg=4",
            ],
        )
        .unwrap();
        assert_eq!(s.angles_deg(), vec![10.0, 14.0, 18.0, 22.0]);
    }
}
