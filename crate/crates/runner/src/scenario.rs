//! Scenario documents: TOML with fixed sections, unknown keys rejected.

use std::path::{Path, PathBuf};

use aggspec_core::geometry::{DipoleFrame, DipoleSpec, EllipseScaling, GeometrySpec, TangentKind};
use aggspec_core::lineshape::{Broadening, EnergyGrid, LineshapeModel};
use aggspec_core::{CouplingRange, Polarization, ReferenceCoupling, Vec3};
use serde::{Deserialize, Serialize};

pub const REQUIRED_SECTIONS: [&str; 5] = ["scenario", "geometry", "dipole", "lineshape", "spectra"];

/// Scalar keys a `[sweep]` block may vary.
pub const SWEEPABLE: [&str; 16] = [
    "geometry.n",
    "geometry.vertex",
    "geometry.bend_angle",
    "geometry.flattening",
    "dipole.tangent_angle",
    "dipole.polar_angle",
    "lineshape.e00",
    "lineshape.vib_spacing",
    "lineshape.huang_rhys",
    "lineshape.n_peaks",
    "lineshape.width",
    "lineshape.epsilon",
    "lineshape.delta",
    "spectra.grid.min",
    "spectra.grid.max",
    "spectra.grid.points",
];

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required section(s): {}", .0.join(", "))]
    MissingSections(Vec<String>),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{0}")]
    Io(String),
}

fn invalid(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioInfo {
    pub id: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKindName {
    Chain,
    BentChain,
    Ring,
    Ellipse,
    Custom,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalingName {
    #[default]
    ConstantPerimeter,
    FixedMajorAxis,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum TangentName {
    #[default]
    Analytic,
    Chord,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum RangeName {
    #[default]
    All,
    NearestNeighbour,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub kind: GeometryKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bend_angle: Option<f64>,
    #[serde(default)]
    pub flattening: f64,
    #[serde(default)]
    pub ellipse_scaling: ScalingName,
    #[serde(default)]
    pub ellipse_tangent: TangentName,
    #[serde(default)]
    pub coupling_range: RangeName,
    /// Custom sites: rows `x y z mx my mz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites_file: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrameName {
    #[default]
    Segment,
    Global,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DipoleBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    #[serde(default)]
    pub frame: FrameName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangent_angle: Option<f64>,
    #[serde(default = "default_polar")]
    pub polar_angle: f64,
}

fn default_polar() -> f64 {
    90.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum LineshapeKindName {
    #[default]
    Vibronic,
    Electronic,
    Tabulated,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum BroadeningName {
    #[default]
    Lorentzian,
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LineshapeBlock {
    #[serde(default)]
    pub model: LineshapeKindName,
    #[serde(default = "defaults::e00")]
    pub e00: f64,
    #[serde(default = "defaults::vib_spacing")]
    pub vib_spacing: f64,
    #[serde(default = "defaults::huang_rhys")]
    pub huang_rhys: f64,
    #[serde(default = "defaults::n_peaks")]
    pub n_peaks: usize,
    #[serde(default = "defaults::width")]
    pub width: f64,
    #[serde(default)]
    pub broadening: BroadeningName,
    /// One-level model transition energy; defaults to `e00`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    /// Tabulated model: two-column `energy absorption` file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

mod defaults {
    use aggspec_core::LineshapeModel;

    pub fn e00() -> f64 {
        LineshapeModel::default().e00
    }
    pub fn vib_spacing() -> f64 {
        LineshapeModel::default().vib_spacing
    }
    pub fn huang_rhys() -> f64 {
        LineshapeModel::default().huang_rhys
    }
    pub fn n_peaks() -> usize {
        LineshapeModel::default().n_peaks
    }
    pub fn width() -> f64 {
        LineshapeModel::default().width
    }
    pub fn delta() -> f64 {
        1.0
    }
    pub fn grid_min() -> f64 {
        8000.0
    }
    pub fn grid_max() -> f64 {
        32000.0
    }
    pub fn grid_points() -> usize {
        4096
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PolarizationValue {
    Named(String),
    Vector([f64; 3]),
}

impl Default for PolarizationValue {
    fn default() -> Self {
        PolarizationValue::Named("isotropic".into())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceName {
    #[default]
    UndistortedNeighbour,
    DipoleUnit,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Geometry,
    Sticks,
    Wavefunctions,
    Monomer,
    Ces,
}

impl OutputKind {
    /// Whether the output needs the monomer lineshape.
    pub fn needs_lineshape(&self) -> bool {
        matches!(self, OutputKind::Monomer | OutputKind::Ces)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "defaults::grid_min")]
    pub min: f64,
    #[serde(default = "defaults::grid_max")]
    pub max: f64,
    #[serde(default = "defaults::grid_points")]
    pub points: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            min: defaults::grid_min(),
            max: defaults::grid_max(),
            points: defaults::grid_points(),
        }
    }
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Sticks, OutputKind::Ces]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectraBlock {
    #[serde(default)]
    pub polarization: PolarizationValue,
    pub coupling_cm1: Vec<f64>,
    #[serde(default)]
    pub reference: ReferenceName,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// A validated scenario with defaults applied.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: ScenarioInfo,
    pub geometry: GeometryBlock,
    pub dipole: DipoleBlock,
    pub lineshape: LineshapeBlock,
    pub spectra: SpectraBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    /// Directory that relative file references resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn parse_error(text: &str, err: toml::de::Error) -> ScenarioError {
    let (line, column) = err.span().map_or((1, 1), |s| position(text, s.start));
    ScenarioError::Parse {
        line,
        column,
        message: err.message().to_string(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    let missing: Vec<String> = REQUIRED_SECTIONS
        .iter()
        .filter(|s| !table.contains_key(**s))
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ScenarioError::MissingSections(missing));
    }
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    spec.validate()?;
    Ok(spec)
}

/// Reads a scenario file; relative paths inside it resolve against its
/// directory.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    let mut spec = parse_scenario(&text)?;
    spec.base_dir = path.parent().map(Path::to_path_buf);
    Ok(spec)
}

fn finite(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, "must be finite"))
    }
}

impl ScenarioSpec {
    pub fn id(&self) -> &str {
        &self.scenario.id
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let id = &self.scenario.id;
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        {
            return Err(invalid(
                "scenario.id",
                "must be non-empty and use only letters, digits, '_', '-', '.'",
            ));
        }
        self.validate_geometry()?;
        self.validate_lineshape()?;
        self.validate_spectra()?;
        if let Some(sweep) = &self.sweep {
            if !SWEEPABLE.contains(&sweep.parameter.as_str()) {
                return Err(invalid(
                    "sweep.parameter",
                    format!(
                        "unknown parameter '{}'; sweepable: {}",
                        sweep.parameter,
                        SWEEPABLE.join(", ")
                    ),
                ));
            }
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "must list at least one value"));
            }
            for v in &sweep.values {
                finite("sweep.values", *v)?;
            }
        }
        Ok(())
    }

    fn validate_geometry(&self) -> Result<(), ScenarioError> {
        let g = &self.geometry;
        let d = &self.dipole;
        let need_n = || g.n.ok_or_else(|| invalid("geometry.n", "required for this kind"));
        let need_dir = || {
            d.direction
                .ok_or_else(|| invalid("dipole.direction", "required for chain geometries"))
        };
        let need_tangent = || {
            d.tangent_angle
                .ok_or_else(|| invalid("dipole.tangent_angle", "required for ring and ellipse"))
        };
        match g.kind {
            GeometryKindName::Chain => {
                need_n()?;
                need_dir()?;
            }
            GeometryKindName::BentChain => {
                need_n()?;
                need_dir()?;
                g.vertex
                    .ok_or_else(|| invalid("geometry.vertex", "required for bent_chain"))?;
                let a = g
                    .bend_angle
                    .ok_or_else(|| invalid("geometry.bend_angle", "required for bent_chain"))?;
                finite("geometry.bend_angle", a)?;
            }
            GeometryKindName::Ring | GeometryKindName::Ellipse => {
                need_n()?;
                finite("dipole.tangent_angle", need_tangent()?)?;
                finite("dipole.polar_angle", d.polar_angle)?;
                if g.kind == GeometryKindName::Ellipse && !(0.0..1.0).contains(&g.flattening) {
                    return Err(invalid("geometry.flattening", "must lie in [0, 1)"));
                }
            }
            GeometryKindName::Custom => {
                if g.sites_file.is_none() {
                    return Err(invalid("geometry.sites_file", "required for custom geometry"));
                }
            }
        }
        if let Some(dir) = d.direction {
            let norm = Vec3::new(dir[0], dir[1], dir[2]).norm();
            if !(norm > 1e-12) || !norm.is_finite() {
                return Err(invalid("dipole.direction", "must be a non-zero finite vector"));
            }
        }
        Ok(())
    }

    fn validate_lineshape(&self) -> Result<(), ScenarioError> {
        let l = &self.lineshape;
        match l.model {
            LineshapeKindName::Vibronic => {
                self.lineshape_model()
                    .validate()
                    .map_err(|e| invalid("lineshape", e.to_string()))?;
            }
            LineshapeKindName::Electronic => {
                if !(l.delta > 0.0) || !l.delta.is_finite() {
                    return Err(invalid("lineshape.delta", "must be positive"));
                }
            }
            LineshapeKindName::Tabulated => {
                if l.file.is_none() {
                    return Err(invalid("lineshape.file", "required for tabulated model"));
                }
            }
        }
        Ok(())
    }

    fn validate_spectra(&self) -> Result<(), ScenarioError> {
        let s = &self.spectra;
        if s.coupling_cm1.is_empty() && s.outputs.contains(&OutputKind::Ces) {
            return Err(invalid("spectra.coupling_cm1", "must list at least one value"));
        }
        if let Some(v) = s.coupling_cm1.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(invalid("spectra.coupling_cm1", format!("values must be > 0, got {v}")));
        }
        self.polarization()?;
        if s.outputs.is_empty() {
            return Err(invalid("spectra.outputs", "must request at least one output"));
        }
        let mut seen = s.outputs.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != s.outputs.len() {
            return Err(invalid("spectra.outputs", "outputs must not repeat"));
        }
        self.grid()?;
        Ok(())
    }

    pub fn polarization(&self) -> Result<Polarization, ScenarioError> {
        match &self.spectra.polarization {
            PolarizationValue::Named(name) if name == "isotropic" => Ok(Polarization::isotropic()),
            PolarizationValue::Named(other) => Err(invalid(
                "spectra.polarization",
                format!("expected \"isotropic\" or a 3-vector, got \"{other}\""),
            )),
            PolarizationValue::Vector(v) => Polarization::fixed(Vec3::new(v[0], v[1], v[2]))
                .map_err(|e| invalid("spectra.polarization", e.to_string())),
        }
    }

    pub fn grid(&self) -> Result<EnergyGrid, ScenarioError> {
        let g = self.spectra.grid;
        EnergyGrid::new(g.min, g.max, g.points).map_err(|e| invalid("spectra.grid", e.to_string()))
    }

    pub fn lineshape_model(&self) -> LineshapeModel {
        let l = &self.lineshape;
        LineshapeModel {
            e00: l.e00,
            vib_spacing: l.vib_spacing,
            huang_rhys: l.huang_rhys,
            n_peaks: l.n_peaks,
            width: l.width,
            broadening: match l.broadening {
                BroadeningName::Lorentzian => Broadening::Lorentzian,
                BroadeningName::Gaussian => Broadening::Gaussian,
            },
        }
    }

    pub fn coupling_range(&self) -> CouplingRange {
        match self.geometry.coupling_range {
            RangeName::All => CouplingRange::All,
            RangeName::NearestNeighbour => CouplingRange::NearestNeighbour,
        }
    }

    pub fn reference(&self) -> ReferenceCoupling {
        match self.spectra.reference {
            ReferenceName::UndistortedNeighbour => ReferenceCoupling::UndistortedNeighbour,
            ReferenceName::DipoleUnit => ReferenceCoupling::DipoleUnit,
        }
    }

    /// Core geometry recipe; `None` for custom geometries, which are read
    /// from `sites_file`.
    pub fn geometry_spec(&self) -> Option<GeometrySpec> {
        let g = &self.geometry;
        let d = &self.dipole;
        let dir = d.direction.map(|v| Vec3::new(v[0], v[1], v[2]));
        let n = g.n.unwrap_or(0);
        Some(match g.kind {
            GeometryKindName::Chain => GeometrySpec::Chain {
                n,
                dipole: dir.unwrap_or_else(Vec3::z),
            },
            GeometryKindName::BentChain => GeometrySpec::BentChain {
                n,
                vertex: g.vertex.unwrap_or(0),
                bend_angle_deg: g.bend_angle.unwrap_or(0.0),
                dipole: DipoleSpec {
                    direction: dir.unwrap_or_else(Vec3::z),
                    frame: match d.frame {
                        FrameName::Segment => DipoleFrame::Segment,
                        FrameName::Global => DipoleFrame::Global,
                    },
                },
            },
            GeometryKindName::Ring => GeometrySpec::Ring {
                n,
                tangent_angle_deg: d.tangent_angle.unwrap_or(0.0),
                polar_angle_deg: d.polar_angle,
            },
            GeometryKindName::Ellipse => GeometrySpec::Ellipse {
                n,
                flattening: g.flattening,
                tangent_angle_deg: d.tangent_angle.unwrap_or(0.0),
                polar_angle_deg: d.polar_angle,
                scaling: match g.ellipse_scaling {
                    ScalingName::ConstantPerimeter => EllipseScaling::ConstantPerimeter,
                    ScalingName::FixedMajorAxis => EllipseScaling::FixedMajorAxis,
                },
                tangent: match g.ellipse_tangent {
                    TangentName::Analytic => TangentKind::Analytic,
                    TangentName::Chord => TangentKind::Chord,
                },
            },
            GeometryKindName::Custom => return None,
        })
    }

    pub fn resolve_path(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// The scenario with one scalar parameter replaced and re-validated.
    /// The sweep block is dropped.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<ScenarioSpec, ScenarioError> {
        if !SWEEPABLE.contains(&parameter) {
            return Err(invalid(parameter, "not a sweepable parameter"));
        }
        let mut base = self.clone();
        base.sweep = None;
        let mut table = toml::Table::try_from(&base)
            .map_err(|e| ScenarioError::Io(format!("cannot serialize scenario: {e}")))?;
        let item = if value.fract() == 0.0 && value.abs() < 9e15 {
            toml::Value::Integer(value as i64)
        } else {
            toml::Value::Float(value)
        };
        let mut keys = parameter.split('.').peekable();
        let mut cursor = &mut table;
        while let Some(key) = keys.next() {
            if keys.peek().is_none() {
                cursor.insert(key.to_string(), item.clone());
                break;
            }
            cursor = cursor
                .entry(key.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .ok_or_else(|| invalid(parameter, "path does not name a table"))?;
        }
        let mut spec: ScenarioSpec = table
            .try_into()
            .map_err(|e: toml::de::Error| invalid(parameter, e.message().to_string()))?;
        spec.base_dir = self.base_dir.clone();
        spec.validate()?;
        Ok(spec)
    }

    /// One entry per run: the sweep values in order, or the scenario itself.
    pub fn points(&self) -> Vec<SweepPoint> {
        match &self.sweep {
            None => vec![SweepPoint {
                index: 0,
                label: "run".to_string(),
                parameter: None,
                value: None,
                spec: Ok(self.clone()),
            }],
            Some(sweep) => {
                let short = sweep.parameter.rsplit('.').next().unwrap_or("value");
                sweep
                    .values
                    .iter()
                    .enumerate()
                    .map(|(index, &value)| SweepPoint {
                        index,
                        label: format!("{index:03}_{short}_{value}"),
                        parameter: Some(sweep.parameter.clone()),
                        value: Some(value),
                        spec: self.with_parameter(&sweep.parameter, value),
                    })
                    .collect()
            }
        }
    }

    /// Applies command-line grid overrides to the scenario.
    pub fn override_grid(
        &mut self,
        min: Option<f64>,
        max: Option<f64>,
        points: Option<usize>,
    ) -> Result<(), ScenarioError> {
        if let Some(v) = min {
            self.spectra.grid.min = v;
        }
        if let Some(v) = max {
            self.spectra.grid.max = v;
        }
        if let Some(v) = points {
            self.spectra.grid.points = v;
        }
        self.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub label: String,
    pub parameter: Option<String>,
    pub value: Option<f64>,
    pub spec: Result<ScenarioSpec, ScenarioError>,
}
