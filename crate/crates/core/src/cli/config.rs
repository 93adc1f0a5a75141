//! Run configuration (JSON, `"schema": 1`).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "table_deflection",
//!   "material": { "preset": { "name": "Al/ZrO2-1" } },
//!   "gradient_index": 0.0,
//!   "geometry": { "a": 1.0, "a_over_h": 5.0 },
//!   "mesh": { "kind": "rectangle", "nx": 40, "ny": 40 },
//!   "normalization": { "phase": "metal" },
//!   "cases": [ { "kind": "static", "pressure": 1.0, "bc": "ssss" } ],
//!   "sweep": { "mesh": [4, 8, 16, 32, 40], "gradient_index": [0, 1, 2] }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigen::EigenStrategy;
use crate::element::{Formulation, Stabilization};
use crate::error::{PlateError, Result};
use crate::material::{
    presets, FgmDefinition, Homogenization, PhaseProperties, ProfileKind, ShearCorrection,
};
use crate::mesh::DiagonalRule;
use crate::solver::{BoundaryCondition, LoadPattern, PrestressMode};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub name: String,
    pub material: MaterialSource,
    #[serde(default)]
    pub gradient_index: f64,
    pub geometry: GeometryConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub thermal: Option<ThermalConfig>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub solver: SolverConfig,
    pub cases: Vec<CaseConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Constituents by preset name, inline definition, or a single isotropic material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSource {
    Preset {
        name: String,
        #[serde(default)]
        homogenization: Homogenization,
        #[serde(default)]
        shear_correction: ShearCorrection,
    },
    Inline {
        ceramic: PhaseProperties,
        metal: PhaseProperties,
        #[serde(default)]
        homogenization: Homogenization,
        #[serde(default)]
        shear_correction: ShearCorrection,
    },
    Isotropic {
        youngs_modulus: f64,
        poisson: f64,
        #[serde(default = "default_density")]
        density: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "default_conductivity")]
        conductivity: f64,
        #[serde(default)]
        shear_correction: ShearCorrection,
    },
}

fn default_density() -> f64 {
    1.0
}

fn default_conductivity() -> f64 {
    1.0
}

impl MaterialSource {
    pub fn definition(&self, gradient_index: f64, thickness: f64) -> Result<FgmDefinition> {
        let fgm = match self {
            MaterialSource::Preset { name, homogenization, shear_correction } => {
                let mut fgm = presets::fgm(name, gradient_index, thickness)?;
                fgm.homogenization = *homogenization;
                fgm.shear_correction = *shear_correction;
                fgm
            }
            MaterialSource::Inline { ceramic, metal, homogenization, shear_correction } => FgmDefinition {
                ceramic: *ceramic,
                metal: *metal,
                gradient_index,
                thickness,
                homogenization: *homogenization,
                shear_correction: *shear_correction,
            },
            MaterialSource::Isotropic { youngs_modulus, poisson, density, alpha, conductivity, shear_correction } => {
                let phase = PhaseProperties::constant(*youngs_modulus, *poisson, *alpha, *density, *conductivity);
                FgmDefinition {
                    ceramic: phase,
                    metal: phase,
                    gradient_index,
                    thickness,
                    homogenization: Homogenization::RuleOfMixtures,
                    shear_correction: *shear_correction,
                }
            }
        };
        fgm.validate()?;
        Ok(fgm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: f64,
    /// Defaults to `a`.
    #[serde(default)]
    pub b: Option<f64>,
    /// Thickness; exactly one of `h` and `a_over_h` is required.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub a_over_h: Option<f64>,
    #[serde(default)]
    pub skew_deg: f64,
    /// Cutout radius as a fraction of `a`, for perforated meshes.
    #[serde(default)]
    pub hole_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    Rectangle {
        nx: usize,
        ny: usize,
        #[serde(default)]
        diagonal: DiagonalRule,
    },
    Perforated {
        radial: usize,
        circumferential: usize,
    },
    /// A mesh in the plain-text format; geometry metadata comes from `geometry`.
    File { path: String },
}

/// Through-thickness temperature field. With a `delta_t` sweep the ceramic
/// surface sits at `metal + delta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    #[serde(default = "default_temperature")]
    pub ceramic: f64,
    #[serde(default = "default_temperature")]
    pub metal: f64,
    #[serde(default = "default_temperature")]
    pub reference: f64,
    #[serde(default)]
    pub profile: ProfileKind,
    #[serde(default)]
    pub prestress: PrestressMode,
}

fn default_temperature() -> f64 {
    300.0
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            ceramic: 300.0,
            metal: 300.0,
            reference: 300.0,
            profile: ProfileKind::default(),
            prestress: PrestressMode::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Ceramic,
    Metal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMeasure {
    /// `omega a^2 sqrt(rho h / D) (1 - nu^2)^poisson_power`.
    #[default]
    OmegaBar,
    /// `(omega_bar^2 / (1 - nu^2))^(1/4)`.
    Omega,
}

/// Reference properties for dimensionless results. `D` is the plate
/// rigidity `E h^3 / (12 (1 - nu^2))` of the reference phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    #[serde(default)]
    pub phase: Phase,
    /// Temperature at which the reference modulus is evaluated.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub frequency: FrequencyMeasure,
    /// Exponent of the `(1 - nu^2)` factor in the frequency parameter.
    #[serde(default)]
    pub poisson_power: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            phase: Phase::Ceramic,
            temperature: 300.0,
            frequency: FrequencyMeasure::OmegaBar,
            poisson_power: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub formulation: Formulation,
    /// Shear stabilization `alpha`; absent or `null` disables it.
    #[serde(default = "default_alpha")]
    pub stabilization: Option<f64>,
    #[serde(default)]
    pub eigen: EigenStrategy,
    #[serde(default)]
    pub force_transform: bool,
}

fn default_alpha() -> Option<f64> {
    Stabilization::default().alpha
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            formulation: Formulation::default(),
            stabilization: default_alpha(),
            eigen: EigenStrategy::default(),
            force_transform: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    /// Label for report rows; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub bc: BoundaryCondition,
    #[serde(flatten)]
    pub kind: CaseKind,
    /// Overrides the run-level normalization.
    #[serde(default)]
    pub normalization: Option<Normalization>,
}

impl CaseConfig {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.label().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseKind {
    Static {
        #[serde(default = "default_pressure")]
        pressure: f64,
    },
    Modal {
        #[serde(default = "default_modes")]
        modes: usize,
    },
    Buckling {
        pattern: LoadPattern,
        #[serde(default)]
        prestress: PrestressMode,
    },
    ThermalBuckling {
        #[serde(default = "default_metal_rise")]
        metal_rise: f64,
    },
    /// Static deflection with and without cell smoothing plus the Kirchhoff
    /// reference, for shear-locking studies.
    Locking {
        #[serde(default = "default_pressure")]
        pressure: f64,
    },
}

fn default_pressure() -> f64 {
    1.0
}

fn default_modes() -> usize {
    1
}

fn default_metal_rise() -> f64 {
    5.0
}

impl CaseKind {
    pub fn label(&self) -> &'static str {
        match self {
            CaseKind::Static { .. } => "static",
            CaseKind::Modal { .. } => "modal",
            CaseKind::Buckling { .. } => "buckling",
            CaseKind::ThermalBuckling { .. } => "thermal_buckling",
            CaseKind::Locking { .. } => "locking",
        }
    }
}

/// One entry of a mesh sweep: `N` for an `N x N` grid, `[nx, ny]`, or
/// `{"radial": .., "circumferential": ..}` for perforated plates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSize {
    Square(usize),
    Grid([usize; 2]),
    Ring { radial: usize, circumferential: usize },
}

/// Sweep axes. The run executes the cross product in the order
/// mesh, gradient index, a/h, delta T, hole radius, skew.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub mesh: Option<Vec<MeshSize>>,
    #[serde(default)]
    pub gradient_index: Option<Vec<f64>>,
    #[serde(default)]
    pub a_over_h: Option<Vec<f64>>,
    #[serde(default)]
    pub delta_t: Option<Vec<f64>>,
    #[serde(default)]
    pub hole_radius: Option<Vec<f64>>,
    #[serde(default)]
    pub skew_deg: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV file name, relative to the output directory; defaults to `<name>.csv`.
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
}

fn config_err(msg: impl Into<String>) -> PlateError {
    PlateError::Config(msg.into())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_axis<T>(name: &str, axis: &Option<Vec<T>>) -> Result<()> {
    match axis {
        Some(v) if v.is_empty() => Err(config_err(format!("sweep axis {name:?} is declared but empty"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema {}; this build reads schema {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if self.cases.is_empty() {
            return Err(config_err("at least one case is required"));
        }
        let g = &self.geometry;
        check_positive("geometry.a", g.a)?;
        if let Some(b) = g.b {
            check_positive("geometry.b", b)?;
        }
        match (g.h, g.a_over_h) {
            (Some(h), None) => check_positive("geometry.h", h)?,
            (None, Some(r)) => check_positive("geometry.a_over_h", r)?,
            (None, None) if self.sweep.a_over_h.is_some() => {}
            _ => return Err(config_err("give exactly one of geometry.h and geometry.a_over_h")),
        }
        if g.skew_deg.abs() >= 90.0 {
            return Err(config_err(format!("skew angle {} deg must lie in (-90, 90)", g.skew_deg)));
        }
        if !(self.gradient_index >= 0.0) || !self.gradient_index.is_finite() {
            return Err(config_err(format!("gradient index must be >= 0, got {}", self.gradient_index)));
        }
        let s = &self.sweep;
        check_axis("mesh", &s.mesh)?;
        check_axis("gradient_index", &s.gradient_index)?;
        check_axis("a_over_h", &s.a_over_h)?;
        check_axis("delta_t", &s.delta_t)?;
        check_axis("hole_radius", &s.hole_radius)?;
        check_axis("skew_deg", &s.skew_deg)?;
        if s.delta_t.is_some() && self.thermal.is_none() {
            return Err(config_err("a delta_t sweep needs a thermal block"));
        }
        let perforated = matches!(self.mesh, MeshConfig::Perforated { .. });
        if perforated && g.hole_radius.is_none() && s.hole_radius.is_none() {
            return Err(config_err("a perforated mesh needs geometry.hole_radius or a hole_radius sweep"));
        }
        if let Some(sizes) = &s.mesh {
            for size in sizes {
                let ok = match (size, &self.mesh) {
                    (MeshSize::Ring { .. }, MeshConfig::Perforated { .. }) => true,
                    (MeshSize::Square(_) | MeshSize::Grid(_), MeshConfig::Rectangle { .. }) => true,
                    _ => false,
                };
                if !ok {
                    return Err(config_err(format!("mesh sweep entry {size:?} does not fit the mesh kind")));
                }
            }
        }
        for case in &self.cases {
            match case.kind {
                CaseKind::Static { pressure } | CaseKind::Locking { pressure } => {
                    if !pressure.is_finite() {
                        return Err(config_err("pressure must be finite"));
                    }
                }
                CaseKind::Modal { modes } => {
                    if modes == 0 {
                        return Err(config_err("modal cases need at least one mode"));
                    }
                }
                CaseKind::ThermalBuckling { metal_rise } => {
                    if !metal_rise.is_finite() {
                        return Err(config_err("metal_rise must be finite"));
                    }
                }
                CaseKind::Buckling { .. } => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1, "name": "t",
        "material": {"preset": {"name": "Al/ZrO2"}},
        "geometry": {"a": 1.0, "a_over_h": 10},
        "mesh": {"kind": "rectangle", "nx": 4, "ny": 4},
        "cases": [{"kind": "static"}]
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.cases[0].bc, BoundaryCondition::Ssss);
        assert_eq!(c.cases[0].kind, CaseKind::Static { pressure: 1.0 });
        assert_eq!(c.solver.stabilization, None);
        assert_eq!(c.normalization, Normalization::default());
    }

    #[test]
    fn empty_case_list_is_rejected() {
        let text = MINIMAL.replace(r#"[{"kind": "static"}]"#, "[]");
        assert!(matches!(RunConfig::from_json(&text), Err(PlateError::Config(_))));
    }

    #[test]
    fn empty_axis_and_wrong_schema_are_rejected() {
        let text = MINIMAL.replace(r#""cases""#, r#""sweep": {"gradient_index": []}, "cases""#);
        assert!(RunConfig::from_json(&text).is_err());
        let text = MINIMAL.replace(r#""schema": 1"#, r#""schema": 2"#);
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn per_edge_and_case_parameters_parse() {
        let text = MINIMAL.replace(
            r#"[{"kind": "static"}]"#,
            r#"[{"kind": "modal", "modes": 3, "bc": {"per_edge": {"x0": ["u", "w"], "y0": ["w"]}}},
                {"kind": "buckling", "pattern": "biaxial", "name": "bi"}]"#,
        );
        let c = RunConfig::from_json(&text).unwrap();
        assert_eq!(c.cases[0].kind, CaseKind::Modal { modes: 3 });
        assert!(matches!(c.cases[0].bc, BoundaryCondition::PerEdge(_)));
        assert_eq!(c.cases[1].label(), "bi");
    }

    #[test]
    fn mesh_sweep_entries_must_fit_the_plan() {
        let text = MINIMAL.replace(r#""cases""#, r#""sweep": {"mesh": [{"radial": 4, "circumferential": 16}]}, "cases""#);
        assert!(RunConfig::from_json(&text).is_err());
        let text = MINIMAL.replace(r#""cases""#, r#""sweep": {"mesh": [4, [8, 6]]}, "cases""#);
        assert!(RunConfig::from_json(&text).is_ok());
    }
}
