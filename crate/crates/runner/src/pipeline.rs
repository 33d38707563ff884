//! geometry → excitonics → lineshape → spectra for every sweep point.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aggspec_core::excitonics::{coupling_matrix_with, ring_eigenvalues_analytic, CouplingMatrix};
use aggspec_core::export::{geometry_table, spectrum_table, stick_table, wavefunction_table};
use aggspec_core::geometry::MonomerSite;
use aggspec_core::lineshape::{
    electronic_green, load_tabulated_lineshape, parse_lineshape_table, vibronic_green,
    MonomerGreen,
};
use aggspec_core::{
    ces_spectrum, diagonalize, monomer_spectrum, stick_spectrum, AggregateGeometry, CesOptions,
    ExcitonBasis, GeometryKind, Vec3,
};
use anyhow::{anyhow, bail, Context};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::{LineshapeKindName, OutputKind, ScenarioSpec, SweepPoint};

pub const MANIFEST_NAME: &str = "manifest.json";

const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const CIRCULANT_TOL: f64 = 1e-10;
const SUM_RULE_TOL: f64 = 0.01;
const POSITIVITY_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: None,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, floor: f64) -> Self {
        CheckRecord {
            name: name.into(),
            passed: value >= floor,
            value,
            tolerance: floor,
            detail: None,
        }
    }

    fn note(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OutputRecord {
    pub kind: OutputKind,
    /// Relative to the manifest's directory.
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_cm1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PointRecord {
    pub index: usize,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_parameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    /// Fully resolved scenario, null when it could not be resolved.
    pub parameters: Option<serde_json::Value>,
    pub succeeded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<OutputRecord>,
    pub checks: Vec<CheckRecord>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub scenario_id: String,
    pub library_version: String,
    pub jobs: usize,
    pub points: Vec<PointRecord>,
    pub succeeded: usize,
    pub failed: usize,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn all_succeeded(&self) -> bool {
        self.failed == 0
    }
}

/// Reads custom sites: one `x y z mx my mz` row per monomer, `#` comments.
pub fn read_sites(path: &Path) -> anyhow::Result<AggregateGeometry> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading sites {}", path.display()))?;
    let mut sites = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}: not a number", path.display(), i + 1))?;
        if v.len() != 6 {
            bail!("{}:{}: expected 6 columns, found {}", path.display(), i + 1, v.len());
        }
        sites.push(MonomerSite {
            position: Vec3::new(v[0], v[1], v[2]),
            dipole: Vec3::new(v[3], v[4], v[5]),
        });
    }
    Ok(AggregateGeometry::custom(sites)?)
}

pub fn build_geometry(spec: &ScenarioSpec) -> anyhow::Result<AggregateGeometry> {
    match spec.geometry_spec() {
        Some(g) => Ok(g.build()?),
        None => {
            let file = spec
                .geometry
                .sites_file
                .as_deref()
                .ok_or_else(|| anyhow!("custom geometry without sites_file"))?;
            read_sites(&spec.resolve_path(file))
        }
    }
}

pub fn build_lineshape(spec: &ScenarioSpec) -> anyhow::Result<MonomerGreen> {
    let grid = spec.grid()?;
    let l = &spec.lineshape;
    Ok(match l.model {
        LineshapeKindName::Vibronic => vibronic_green(&spec.lineshape_model(), &grid)?,
        LineshapeKindName::Electronic => electronic_green(l.epsilon.unwrap_or(l.e00), l.delta, &grid)?,
        LineshapeKindName::Tabulated => {
            let file = l.file.as_deref().ok_or_else(|| anyhow!("tabulated model without file"))?;
            let path = spec.resolve_path(file);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading lineshape {}", path.display()))?;
            load_tabulated_lineshape(&parse_lineshape_table(&text)?, &grid)?
        }
    })
}

/// Writes the a_{nk} / a_{nk}² table of a basis.
pub fn export_wavefunctions(basis: &ExcitonBasis, out: &Path) -> std::io::Result<()> {
    fs::write(out, wavefunction_table(basis))
}

fn eigen_checks(cm: &CouplingMatrix, basis: &ExcitonBasis) -> Vec<CheckRecord> {
    let v = basis.vectors();
    let n = basis.n();
    let scale = cm.max_abs().max(1.0);
    let mut residual = 0.0f64;
    for k in 0..n {
        let col = v.column(k);
        let r = cm.values() * col - col * basis.energies()[k];
        residual = residual.max(r.amax() / scale);
    }
    let ortho = (v.transpose() * v - DMatrix::identity(n, n)).amax();
    vec![
        CheckRecord::at_most("eigen_residual", residual, EIGEN_RESIDUAL_TOL),
        CheckRecord::at_most("orthonormality", ortho, ORTHONORMALITY_TOL),
    ]
}

fn circulant_check(geom: &AggregateGeometry, cm: &CouplingMatrix, basis: &ExcitonBasis) -> Option<CheckRecord> {
    if geom.kind() != GeometryKind::Ring || geom.len() % 2 != 0 {
        return None;
    }
    let mut analytic = ring_eigenvalues_analytic(&cm.first_column()).ok()?;
    analytic.sort_by(f64::total_cmp);
    let scale = cm.max_abs().max(1.0);
    let dev = analytic
        .iter()
        .zip(basis.energies().iter())
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max);
    Some(CheckRecord::at_most("circulant_eigenvalues", dev, CIRCULANT_TOL))
}

fn format_coupling(v: f64) -> String {
    format!("{v}")
}

struct PointOutput<'a> {
    root: &'a Path,
    dir: PathBuf,
    rel: String,
    outputs: Vec<OutputRecord>,
}

impl PointOutput<'_> {
    fn write(&mut self, kind: OutputKind, name: &str, content: &str, v: Option<f64>) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        debug_assert!(path.starts_with(self.root));
        self.outputs.push(OutputRecord {
            kind,
            path: format!("{}/{name}", self.rel),
            coupling_cm1: v,
        });
        Ok(())
    }
}

fn run_pipeline(
    spec: &ScenarioSpec,
    out: &mut PointOutput<'_>,
    checks: &mut Vec<CheckRecord>,
) -> anyhow::Result<()> {
    fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
    let pol = spec.polarization()?;
    let geom = build_geometry(spec)?;
    let cm = coupling_matrix_with(&geom, spec.coupling_range(), spec.reference())?;
    let basis = diagonalize(&cm)?;
    checks.extend(eigen_checks(&cm, &basis));
    checks.extend(circulant_check(&geom, &cm, &basis));

    let sticks = stick_spectrum(&basis, &pol)?;
    let normalization = if sticks.zero_strength {
        CheckRecord::at_most("stick_normalization", 0.0, 1e-12)
            .note("zero total strength for this polarization")
    } else {
        CheckRecord::at_most("stick_normalization", (sticks.total_strength() - 1.0).abs(), 1e-12)
    };
    checks.push(normalization);

    let outputs = &spec.spectra.outputs;
    let lineshape = if outputs.iter().any(OutputKind::needs_lineshape) {
        let g = build_lineshape(spec)?;
        let d = g.diagnostics();
        checks.push(CheckRecord::at_least("lineshape_positivity", d.min_absorption, POSITIVITY_FLOOR));
        checks.push(CheckRecord::at_most("lineshape_normalization", (d.weight - 1.0).abs(), SUM_RULE_TOL));
        checks.push(CheckRecord::at_most(
            "lineshape_tail",
            d.tail_deviation,
            aggspec_core::lineshape::GreenDiagnostics::TAIL_TOL,
        ));
        Some(g)
    } else {
        None
    };

    let mut kinds = outputs.clone();
    kinds.sort();
    for kind in kinds {
        match kind {
            OutputKind::Geometry => out.write(kind, "geometry.tsv", &geometry_table(&geom), None)?,
            OutputKind::Sticks => out.write(kind, "sticks.tsv", &stick_table(&sticks), None)?,
            OutputKind::Wavefunctions => {
                out.write(kind, "wavefunctions.tsv", &wavefunction_table(&basis), None)?
            }
            OutputKind::Monomer => {
                let g = lineshape.as_ref().expect("lineshape built for monomer output");
                let m = monomer_spectrum(&geom, &pol, g);
                let expected: f64 = geom.dipoles().map(|mu| pol.weight(&mu)).sum();
                let c = m.continuous.as_ref().expect("monomer spectrum is continuous");
                let dev = if expected > 0.0 {
                    (c.integrated() / (PI * expected) - 1.0).abs()
                } else {
                    0.0
                };
                checks.push(CheckRecord::at_most("monomer_sum_rule", dev, SUM_RULE_TOL));
                out.write(kind, "monomer.tsv", &spectrum_table(&m).unwrap_or_default(), None)?;
            }
            OutputKind::Ces => {
                let g = lineshape.as_ref().expect("lineshape built for ces output");
                for &v in &spec.spectra.coupling_cm1 {
                    let s = ces_spectrum(&basis, &pol, g, v, CesOptions::default())
                        .with_context(|| format!("CES spectrum at V = {v} cm^-1"))?;
                    let c = s.continuous.as_ref().expect("ces spectrum is continuous");
                    let tag = format_coupling(v);
                    if s.zero_strength {
                        checks.push(
                            CheckRecord::at_most(format!("ces_sum_rule[V={tag}]"), 0.0, SUM_RULE_TOL)
                                .note("zero total strength for this polarization"),
                        );
                    } else {
                        checks.push(CheckRecord::at_most(
                            format!("ces_sum_rule[V={tag}]"),
                            (c.integrated() / PI - 1.0).abs(),
                            SUM_RULE_TOL,
                        ));
                    }
                    checks.push(CheckRecord::at_least(
                        format!("ces_positivity[V={tag}]"),
                        c.min_value(),
                        POSITIVITY_FLOOR,
                    ));
                    if !s.pole_flags.is_empty() {
                        checks.push(
                            CheckRecord::at_most(format!("ces_pole_proximity[V={tag}]"), 0.0, 0.0)
                                .note(format!("{} grid points within 1e-12 of a pole", s.pole_flags.len())),
                        );
                    }
                    let table = spectrum_table(&s).unwrap_or_default();
                    out.write(kind, &format!("ces_V{tag}.tsv"), &table, Some(v))?;
                }
            }
        }
    }
    Ok(())
}

fn run_point(point: &SweepPoint, root: &Path) -> PointRecord {
    let start = Instant::now();
    let mut checks = Vec::new();
    let mut out = PointOutput {
        root,
        dir: root.join(&point.label),
        rel: point.label.clone(),
        outputs: Vec::new(),
    };
    let (parameters, result) = match &point.spec {
        Ok(spec) => (
            serde_json::to_value(spec).ok(),
            run_pipeline(spec, &mut out, &mut checks),
        ),
        Err(e) => (None, Err(anyhow!("{e}"))),
    };
    let missing: Vec<&str> = out
        .outputs
        .iter()
        .filter(|o| fs::metadata(root.join(&o.path)).map_or(true, |m| m.len() == 0))
        .map(|o| o.path.as_str())
        .collect();
    let error = match result {
        Err(e) => Some(format!("{e:#}")),
        Ok(()) if !missing.is_empty() => Some(format!("empty or missing outputs: {}", missing.join(", "))),
        Ok(()) => checks
            .iter()
            .find(|c| !c.passed)
            .map(|c| format!("invariant check '{}' failed: {} (tolerance {})", c.name, c.value, c.tolerance)),
    };
    PointRecord {
        index: point.index,
        label: point.label.clone(),
        sweep_parameter: point.parameter.clone(),
        sweep_value: point.value,
        parameters,
        succeeded: error.is_none(),
        error,
        outputs: out.outputs,
        checks,
        wall_clock_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs every sweep point, `jobs` at a time, under `out_dir/<scenario id>/`
/// and writes the manifest there. Point failures are recorded, not
/// propagated; only setup and manifest I/O errors are returned.
pub fn run(spec: &ScenarioSpec, out_dir: &Path, jobs: usize) -> anyhow::Result<RunManifest> {
    let start = Instant::now();
    let root = out_dir.join(spec.id());
    fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
    let points = spec.points();
    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building thread pool")?;
    let records: Vec<PointRecord> =
        pool.install(|| points.par_iter().map(|p| run_point(p, &root)).collect());
    let failed = records.iter().filter(|r| !r.succeeded).count();
    let manifest = RunManifest {
        scenario_id: spec.id().to_string(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        jobs,
        succeeded: records.len() - failed,
        failed,
        points: records,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let path = root.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
