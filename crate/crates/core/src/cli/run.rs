//! Sweep execution and report rows.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    CaseConfig, CaseKind, FrequencyMeasure, MeshConfig, MeshSize, Normalization, Phase, RunConfig,
};
use crate::element::{Formulation, Stabilization};
use crate::error::{PlateError, Result};
use crate::material::{section_stiffness, FgmDefinition, SectionStiffness, ThermalState};
use crate::mesh::{boundary_sets, read_mesh, Mesh, MeshSpec, PlateGeometry};
use crate::solver::{
    buckling_parameter, buckling_solve, deflection_from_normalized, frequency_parameter, mechanical_prestress,
    modal_solve, navier_center_deflection, normalized_deflection, normalized_frequency, static_solve,
    thermal_buckling, thermal_prestress, BoundaryCondition, Prestress, SolverOptions, ThermalBucklingSetup,
};

/// Terms per direction in the Kirchhoff reference series.
const NAVIER_TERMS: usize = 199;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run sweep points one after another and assemble element matrices serially.
    pub serial: bool,
    /// Use this mesh for every sweep point instead of generating one.
    pub mesh_in: Option<Mesh>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Solved, but the result describes an unstable state (negative `omega^2`).
    Flagged,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Flagged => "flagged",
            Status::Error => "error",
        }
    }
}

/// One line of the report.
///
/// `raw` is the centre deflection [m] for static cases, the angular frequency
/// [rad/s] for modal cases, the critical in-plane resultant [N/m] for
/// mechanical buckling and the critical temperature difference [K] for
/// thermal buckling. `normalized` is recomputable from `raw` with `a`, `b`,
/// `h`, `rigidity`, `density` and `nu`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub case: String,
    pub kind: String,
    pub bc: String,
    pub mesh: String,
    pub nodes: usize,
    pub formulation: String,
    pub mode: usize,
    pub n: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub a_over_h: f64,
    pub delta_t: Option<f64>,
    pub hole_radius: Option<f64>,
    pub skew_deg: f64,
    pub raw: Option<f64>,
    pub normalized: Option<f64>,
    pub rigidity: Option<f64>,
    pub density: Option<f64>,
    pub nu: Option<f64>,
    pub status: Status,
    pub message: String,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub exit_code: i32,
}

pub const CSV_COLUMNS: [&str; 22] = [
    "case", "kind", "bc", "mesh", "nodes", "formulation", "mode", "n", "a", "b", "h", "a_over_h", "delta_t",
    "hole_radius", "skew_deg", "raw", "normalized", "rigidity", "density", "nu", "status", "message",
];

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl ReportRow {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.case.clone(),
            self.kind.clone(),
            self.bc.clone(),
            self.mesh.clone(),
            self.nodes.to_string(),
            self.formulation.clone(),
            self.mode.to_string(),
            num(self.n),
            num(self.a),
            num(self.b),
            num(self.h),
            num(self.a_over_h),
            opt(self.delta_t),
            opt(self.hole_radius),
            num(self.skew_deg),
            opt(self.raw),
            opt(self.normalized),
            opt(self.rigidity),
            opt(self.density),
            opt(self.nu),
            self.status.as_str().to_string(),
            self.message.clone(),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub name: String,
    pub wall_time_s: f64,
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    /// CSV with a header row, LF line endings and shortest round-trip numbers.
    /// Contains no timing, so serial runs of the same config are byte-identical.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| PlateError::Internal(format!("csv writer: {e}"));
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.csv_fields()).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| PlateError::Internal(format!("csv writer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| PlateError::Internal(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// 0 when every row solved, otherwise the code of the first failing row.
    pub fn exit_code(&self) -> i32 {
        self.rows.iter().find(|r| r.status == Status::Error).map_or(0, |r| r.exit_code)
    }
}

/// Coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub mesh: Option<MeshSize>,
    pub gradient_index: f64,
    pub a_over_h: f64,
    pub delta_t: Option<f64>,
    pub hole_radius: Option<f64>,
    pub skew_deg: f64,
}

fn axis<T: Copy>(axis: &Option<Vec<T>>, base: T) -> Vec<T> {
    axis.clone().unwrap_or_else(|| vec![base])
}

/// Cross product of the declared axes, mesh outermost.
pub fn sweep_points(config: &RunConfig) -> Vec<SweepPoint> {
    let g = &config.geometry;
    let s = &config.sweep;
    let base_ratio = match (g.h, g.a_over_h) {
        (Some(h), _) => g.a / h,
        (None, Some(r)) => r,
        (None, None) => f64::NAN,
    };
    let meshes: Vec<Option<MeshSize>> = match &s.mesh {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let deltas: Vec<Option<f64>> = match &s.delta_t {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let holes: Vec<Option<f64>> = match &s.hole_radius {
        Some(v) => v.iter().copied().map(Some).collect(),
        None => vec![g.hole_radius],
    };
    let mut points = Vec::new();
    for &mesh in &meshes {
        for &gradient_index in &axis(&s.gradient_index, config.gradient_index) {
            for &a_over_h in &axis(&s.a_over_h, base_ratio) {
                for &delta_t in &deltas {
                    for &hole_radius in &holes {
                        for &skew_deg in &axis(&s.skew_deg, g.skew_deg) {
                            points.push(SweepPoint { mesh, gradient_index, a_over_h, delta_t, hole_radius, skew_deg });
                        }
                    }
                }
            }
        }
    }
    points
}

fn bc_label(bc: &BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::Ssss => "ssss",
        BoundaryCondition::Cccc => "cccc",
        BoundaryCondition::Free => "free",
        BoundaryCondition::PerEdge(_) => "per_edge",
    }
}

fn formulation_label(f: Formulation) -> &'static str {
    match f {
        Formulation::CellSmoothed => "cell_smoothed",
        Formulation::Dsg3 => "dsg3",
    }
}

/// Everything shared by the cases of one sweep point.
struct PointContext {
    mesh: Mesh,
    mesh_label: String,
    fgm: FgmDefinition,
    thermal: ThermalState,
    a: f64,
    b: f64,
    h: f64,
}

fn build_mesh(config: &RunConfig, point: &SweepPoint, mesh_in: Option<&Mesh>) -> Result<(Mesh, String)> {
    let a = config.geometry.a;
    let b = config.geometry.b.unwrap_or(a);
    let skew = point.skew_deg.to_radians();
    let geometry = PlateGeometry { a, b, skew, cutout_radius: point.hole_radius.map(|r| r * a) };
    let attach = |mut mesh: Mesh| -> Result<Mesh> {
        if mesh.geometry.is_none() {
            mesh.geometry = Some(geometry);
        }
        if mesh.boundary_sets.is_empty() {
            mesh.boundary_sets = boundary_sets(&mesh, &geometry)?;
        }
        mesh.validate()?;
        Ok(mesh)
    };
    if let Some(mesh) = mesh_in {
        return Ok((attach(mesh.clone())?, "file".to_string()));
    }
    match &config.mesh {
        MeshConfig::Rectangle { nx, ny, diagonal } => {
            let (nx, ny) = match point.mesh {
                Some(MeshSize::Square(n)) => (n, n),
                Some(MeshSize::Grid([x, y])) => (x, y),
                _ => (*nx, *ny),
            };
            let mesh = MeshSpec::rectangle(a, b, nx, ny).with_diagonal(*diagonal).with_skew(skew).generate()?;
            Ok((mesh, format!("{nx}x{ny}")))
        }
        MeshConfig::Perforated { radial, circumferential } => {
            let (radial, circumferential) = match point.mesh {
                Some(MeshSize::Ring { radial, circumferential }) => (radial, circumferential),
                _ => (*radial, *circumferential),
            };
            let r = point
                .hole_radius
                .ok_or_else(|| PlateError::Config("perforated mesh without a hole radius".into()))?;
            let mesh = MeshSpec::perforated(a, r * a, radial, circumferential).with_skew(skew).generate()?;
            Ok((mesh, format!("{radial}x{circumferential}")))
        }
        MeshConfig::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| PlateError::Config(format!("cannot read mesh {path}: {e}")))?;
            Ok((attach(read_mesh(&text)?)?, "file".to_string()))
        }
    }
}

fn thermal_state(config: &RunConfig, point: &SweepPoint) -> ThermalState {
    match &config.thermal {
        None => ThermalState::default(),
        Some(t) => {
            let ceramic = point.delta_t.map_or(t.ceramic, |dt| t.metal + dt);
            ThermalState::gradient(ceramic, t.metal).with_reference(t.reference).with_profile(t.profile)
        }
    }
}

fn point_context(config: &RunConfig, point: &SweepPoint, mesh_in: Option<&Mesh>) -> Result<PointContext> {
    let a = config.geometry.a;
    let b = config.geometry.b.unwrap_or(a);
    if !(point.a_over_h > 0.0) || !point.a_over_h.is_finite() {
        return Err(PlateError::Config(format!("a/h must be positive, got {}", point.a_over_h)));
    }
    let h = a / point.a_over_h;
    let fgm = config.material.definition(point.gradient_index, h)?;
    let thermal = thermal_state(config, point);
    thermal.validate()?;
    let (mesh, mesh_label) = build_mesh(config, point, mesh_in)?;
    Ok(PointContext { mesh, mesh_label, fgm, thermal, a, b, h })
}

/// Reference rigidity, density and Poisson ratio, plus the frequency factor
/// `(1 - nu^2)^poisson_power`.
struct Reference {
    rigidity: f64,
    density: f64,
    nu: f64,
    frequency_factor: f64,
}

fn reference(norm: &Normalization, fgm: &FgmDefinition, h: f64) -> Result<Reference> {
    let phase = match norm.phase {
        Phase::Ceramic => &fgm.ceramic,
        Phase::Metal => &fgm.metal,
    };
    let e = phase.youngs_modulus(norm.temperature)?;
    let nu = phase.poisson;
    let rigidity = e * h.powi(3) / (12.0 * (1.0 - nu * nu));
    Ok(Reference { rigidity, density: phase.density, nu, frequency_factor: (1.0 - nu * nu).powf(norm.poisson_power) })
}

fn solver_options(config: &RunConfig, serial: bool) -> SolverOptions {
    SolverOptions {
        formulation: config.solver.formulation,
        stabilization: Stabilization { alpha: config.solver.stabilization },
        eigen: config.solver.eigen,
        parallel: !serial,
        force_transform: config.solver.force_transform,
    }
}

/// A row skeleton with the sweep coordinates filled in.
fn blank_row(config: &RunConfig, case: &CaseConfig, point: &SweepPoint) -> ReportRow {
    let a = config.geometry.a;
    ReportRow {
        case: case.label(),
        kind: case.kind.label().to_string(),
        bc: bc_label(&case.bc).to_string(),
        mesh: String::new(),
        nodes: 0,
        formulation: formulation_label(config.solver.formulation).to_string(),
        mode: 1,
        n: point.gradient_index,
        a,
        b: config.geometry.b.unwrap_or(a),
        h: a / point.a_over_h,
        a_over_h: point.a_over_h,
        delta_t: point.delta_t,
        hole_radius: point.hole_radius,
        skew_deg: point.skew_deg,
        raw: None,
        normalized: None,
        rigidity: None,
        density: None,
        nu: None,
        status: Status::Ok,
        message: String::new(),
        wall_time_s: 0.0,
        exit_code: 0,
    }
}

fn error_row(mut row: ReportRow, err: &PlateError) -> ReportRow {
    row.status = Status::Error;
    row.message = err.to_string();
    row.exit_code = err.exit_code();
    row
}

fn run_case(
    config: &RunConfig,
    case: &CaseConfig,
    ctx: &PointContext,
    template: &ReportRow,
    opts: &SolverOptions,
) -> Result<Vec<ReportRow>> {
    let norm = case.normalization.unwrap_or(config.normalization);
    let refr = reference(&norm, &ctx.fgm, ctx.h)?;
    let mut base = template.clone();
    base.mesh = ctx.mesh_label.clone();
    base.nodes = ctx.mesh.node_count();
    base.rigidity = Some(refr.rigidity);
    base.density = Some(refr.density);
    base.nu = Some(refr.nu);
    let sec = || -> Result<SectionStiffness> { section_stiffness(&ctx.fgm, &ctx.thermal) };
    let thermal_mode = config.thermal.map(|t| t.prestress).unwrap_or_default();
    match case.kind {
        CaseKind::Static { pressure } => {
            let res = static_solve(&ctx.mesh, &sec()?, &case.bc, pressure, opts)?;
            let mut row = base;
            row.raw = Some(res.center_deflection);
            row.normalized =
                Some(normalized_deflection(res.center_deflection, pressure, ctx.a, refr.rigidity)?);
            Ok(vec![row])
        }
        CaseKind::Locking { pressure } => {
            let sec = sec()?;
            let mut rows = Vec::new();
            for formulation in [Formulation::CellSmoothed, Formulation::Dsg3] {
                let o = SolverOptions { formulation, ..*opts };
                let res = static_solve(&ctx.mesh, &sec, &case.bc, pressure, &o)?;
                let mut row = base.clone();
                row.formulation = formulation_label(formulation).to_string();
                row.raw = Some(res.center_deflection);
                row.normalized =
                    Some(normalized_deflection(res.center_deflection, pressure, ctx.a, refr.rigidity)?);
                rows.push(row);
            }
            // Kirchhoff plate with the section's D11, exact for homogeneous sections
            let w_bar = navier_center_deflection(ctx.a / ctx.b, NAVIER_TERMS);
            let raw = deflection_from_normalized(w_bar, pressure, ctx.a, sec.bending[(0, 0)])?;
            let mut row = base;
            row.formulation = "kirchhoff".to_string();
            row.raw = Some(raw);
            row.normalized = Some(normalized_deflection(raw, pressure, ctx.a, refr.rigidity)?);
            rows.push(row);
            Ok(rows)
        }
        CaseKind::Modal { modes } => {
            let sec = sec()?;
            let prestress = if config.thermal.is_some() {
                thermal_prestress(&ctx.mesh, &sec, thermal_mode, opts)?
            } else {
                Prestress::zero()
            };
            let res = modal_solve(&ctx.mesh, &sec, &case.bc, &prestress, modes, opts)?;
            let mut rows = Vec::new();
            for (i, &w2) in res.omega_squared.iter().enumerate() {
                let mut row = base.clone();
                row.mode = i + 1;
                let omega = w2.abs().sqrt();
                let bar = normalized_frequency(omega, ctx.a, ctx.h, refr.density, refr.rigidity)? * refr.frequency_factor;
                let value = match norm.frequency {
                    FrequencyMeasure::OmegaBar => bar,
                    FrequencyMeasure::Omega => frequency_parameter(bar, refr.nu),
                };
                if w2 < 0.0 {
                    row.status = Status::Flagged;
                    row.message = "negative omega^2: the prestressed state is unstable".to_string();
                    row.raw = Some(-omega);
                    row.normalized = Some(-value);
                } else {
                    row.raw = Some(omega);
                    row.normalized = Some(value);
                }
                rows.push(row);
            }
            Ok(rows)
        }
        CaseKind::Buckling { pattern, prestress } => {
            let sec = sec()?;
            let unit = mechanical_prestress(&ctx.mesh, &sec, pattern, prestress, opts)?;
            let res = buckling_solve(&ctx.mesh, &sec, &case.bc, &Prestress::zero(), &unit, opts)?;
            let mut row = base;
            row.raw = Some(res.multiplier);
            row.normalized = Some(buckling_parameter(res.multiplier, ctx.b, refr.rigidity)?);
            Ok(vec![row])
        }
        CaseKind::ThermalBuckling { metal_rise } => {
            let t = config.thermal.unwrap_or_default();
            let setup = ThermalBucklingSetup {
                metal_rise,
                reference_temperature: t.reference,
                profile: t.profile,
                prestress: t.prestress,
                ..ThermalBucklingSetup::default()
            };
            let res = thermal_buckling(&ctx.mesh, &ctx.fgm, &case.bc, &setup, opts)?;
            let mut row = base;
            row.raw = Some(res.critical_difference);
            row.normalized = Some(res.critical_difference);
            Ok(vec![row])
        }
    }
}

fn run_point(config: &RunConfig, point: &SweepPoint, options: &RunOptions) -> Vec<ReportRow> {
    let opts = solver_options(config, options.serial);
    let ctx = point_context(config, point, options.mesh_in.as_ref());
    let mut rows = Vec::new();
    for case in &config.cases {
        let template = blank_row(config, case, point);
        let start = Instant::now();
        let result = ctx.as_ref().map_err(clone_err).and_then(|ctx| run_case(config, case, ctx, &template, &opts));
        let elapsed = start.elapsed().as_secs_f64();
        match result {
            Ok(case_rows) => rows.extend(case_rows.into_iter().map(|mut r| {
                r.wall_time_s = elapsed;
                r
            })),
            Err(e) => {
                let mut row = error_row(template, &e);
                if let Ok(ctx) = &ctx {
                    row.mesh = ctx.mesh_label.clone();
                    row.nodes = ctx.mesh.node_count();
                }
                row.wall_time_s = elapsed;
                rows.push(row);
            }
        }
    }
    rows
}

/// Errors are not `Clone`; a shared point failure is re-raised per case with
/// the same message and exit code.
fn clone_err(e: &PlateError) -> PlateError {
    match e.exit_code() {
        2 => PlateError::Config(e.to_string()),
        _ => PlateError::Numeric(e.to_string()),
    }
}

/// Runs every case at every sweep point. Solver failures become error rows;
/// only an invalid configuration is returned as `Err`.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    if options.mesh_in.is_some() && config.sweep.mesh.is_some() {
        return Err(PlateError::Config("an input mesh cannot be combined with a mesh sweep".into()));
    }
    let start = Instant::now();
    let points = sweep_points(config);
    let per_point: Vec<Vec<ReportRow>> = if options.serial {
        points.iter().map(|p| run_point(config, p, options)).collect()
    } else {
        points.par_iter().map(|p| run_point(config, p, options)).collect()
    };
    Ok(RunReport {
        schema: super::config::SCHEMA_VERSION,
        name: config.name.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        rows: per_point.into_iter().flatten().collect(),
    })
}

/// Centre deflection of the smoothed and plain elements against the
/// Kirchhoff value at one thickness ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockingPoint {
    pub a_over_h: f64,
    pub cell_smoothed: f64,
    pub dsg3: f64,
    pub kirchhoff: f64,
}

/// Runs the first static or locking case of `config` as a locking study over
/// its `a_over_h` axis.
pub fn locking_sweep(config: &RunConfig, options: &RunOptions) -> Result<Vec<LockingPoint>> {
    let pressure = config
        .cases
        .iter()
        .find_map(|c| match c.kind {
            CaseKind::Static { pressure } | CaseKind::Locking { pressure } => Some((pressure, c.bc.clone())),
            _ => None,
        })
        .ok_or_else(|| PlateError::Config("locking sweep needs a static or locking case".into()))?;
    let mut cfg = config.clone();
    cfg.cases = vec![CaseConfig {
        name: Some("locking".into()),
        bc: pressure.1,
        kind: CaseKind::Locking { pressure: pressure.0 },
        normalization: None,
    }];
    let report = run(&cfg, options)?;
    if let Some(bad) = report.rows.iter().find(|r| r.status == Status::Error) {
        return Err(PlateError::Numeric(format!("locking sweep at a/h = {}: {}", bad.a_over_h, bad.message)));
    }
    let mut by_ratio: BTreeMap<u64, LockingPoint> = BTreeMap::new();
    let mut order = Vec::new();
    for row in &report.rows {
        let key = row.a_over_h.to_bits();
        let entry = by_ratio.entry(key).or_insert_with(|| {
            order.push(key);
            LockingPoint { a_over_h: row.a_over_h, cell_smoothed: f64::NAN, dsg3: f64::NAN, kirchhoff: f64::NAN }
        });
        let v = row.normalized.unwrap_or(f64::NAN);
        match row.formulation.as_str() {
            "cell_smoothed" => entry.cell_smoothed = v,
            "dsg3" => entry.dsg3 = v,
            _ => entry.kirchhoff = v,
        }
    }
    Ok(order.into_iter().map(|k| by_ratio[&k]).collect())
}
