//! Global assembly, boundary conditions and the static, vibration and
//! buckling analyses.
//!
//! Global dof `5 * node + k` carries `u, v, w, theta_x, theta_y` for
//! `k = 0..5`. Nodes on skew edges (`x0`, `xa` of a sheared plate) are
//! rotated into edge-local dofs `delta = L_g delta'` before constraints are
//! applied, with
//!
//! ```text
//! L_g = [ c  s  0  0  0
//!        -s  c  0  0  0
//!         0  0  1  0  0
//!         0  0  0  c  s
//!         0  0  0 -s  c ],  c = cos(psi), s = sin(psi)
//! ```
//!
//! so `u'` is the in-plane displacement normal to the edge and `theta_y'`
//! the rotation component along it.
//!
//! Simply supported plates fix `u', w, theta_y'` on the `x` edges and
//! `v, w, theta_x` on the `y` edges; a corner receives the union of both sets,
//! which is all five dofs. On an `nx` by `ny` grid that constrains
//! `6 (nx + ny) + 8` dofs. Clamped plates fix all five dofs on every outer
//! edge node; the edge of a cutout is free.

use std::collections::BTreeMap;

use nalgebra::{Matrix5, SMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigenpairs, smallest_positive_eigenpair, EigenStrategy};
use crate::element::{
    element_geometric, element_mass, element_operators, element_stiffness, Formulation, Mat15,
    MembraneResultants, Stabilization, DOFS_PER_NODE,
};
use crate::error::{PlateError, Result};
use crate::material::{section_stiffness, FgmDefinition, ProfileKind, SectionStiffness, ThermalState};
use crate::mesh::{Mesh, PlateGeometry, SET_X0, SET_XA, SET_Y0, SET_YB};
use crate::sparse::{CsrMatrix, SkylineLdlt};

/// Nodal degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dof {
    U,
    V,
    W,
    ThetaX,
    ThetaY,
}

impl Dof {
    pub const ALL: [Dof; 5] = [Dof::U, Dof::V, Dof::W, Dof::ThetaX, Dof::ThetaY];

    pub fn index(self) -> usize {
        match self {
            Dof::U => 0,
            Dof::V => 1,
            Dof::W => 2,
            Dof::ThetaX => 3,
            Dof::ThetaY => 4,
        }
    }
}

pub fn dof_index(node: usize, dof: Dof) -> usize {
    DOFS_PER_NODE * node + dof.index()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Ssss,
    Cccc,
    Free,
    /// Constrained dofs per named node set.
    PerEdge(BTreeMap<String, Vec<Dof>>),
}

impl BoundaryCondition {
    fn edge_dofs(&self) -> BTreeMap<String, Vec<Dof>> {
        let ss_x = vec![Dof::U, Dof::W, Dof::ThetaY];
        let ss_y = vec![Dof::V, Dof::W, Dof::ThetaX];
        match self {
            BoundaryCondition::Ssss => [
                (SET_X0.to_string(), ss_x.clone()),
                (SET_XA.to_string(), ss_x),
                (SET_Y0.to_string(), ss_y.clone()),
                (SET_YB.to_string(), ss_y),
            ]
            .into_iter()
            .collect(),
            BoundaryCondition::Cccc => [SET_X0, SET_XA, SET_Y0, SET_YB]
                .into_iter()
                .map(|s| (s.to_string(), Dof::ALL.to_vec()))
                .collect(),
            BoundaryCondition::Free => BTreeMap::new(),
            BoundaryCondition::PerEdge(map) => map.clone(),
        }
    }
}

/// Mask over all dofs, `true` where the dof (in the edge-local frame) is fixed.
pub fn constrained_dofs(mesh: &Mesh, bc: &BoundaryCondition) -> Result<Vec<bool>> {
    let mut mask = vec![false; DOFS_PER_NODE * mesh.node_count()];
    for (set, dofs) in bc.edge_dofs() {
        let nodes = mesh
            .boundary_sets
            .get(&set)
            .ok_or_else(|| PlateError::Config(format!("mesh has no node set named {set:?}")))?;
        for &node in nodes {
            for &dof in &dofs {
                mask[dof_index(node, dof)] = true;
            }
        }
    }
    Ok(mask)
}

/// The printed nodal transformation for skew angle `psi`.
pub fn skew_matrix(psi: f64) -> Matrix5<f64> {
    let (s, c) = psi.sin_cos();
    let mut l = Matrix5::identity();
    l[(0, 0)] = c;
    l[(0, 1)] = s;
    l[(1, 0)] = -s;
    l[(1, 1)] = c;
    l[(3, 3)] = c;
    l[(3, 4)] = s;
    l[(4, 3)] = -s;
    l[(4, 4)] = c;
    l
}

/// Block-diagonal change of basis `delta = T delta'`, identity on nodes without
/// an entry.
#[derive(Debug, Clone, Default)]
pub struct NodalTransforms {
    blocks: BTreeMap<usize, Matrix5<f64>>,
}

impl NodalTransforms {
    /// `L_g` on every node of the skew edges of `mesh` (applied even at
    /// `psi = 0`, where it is the identity).
    pub fn skew_edges(mesh: &Mesh) -> Self {
        let psi = mesh.geometry.map(|g| g.skew).unwrap_or(0.0);
        let l = skew_matrix(psi);
        let mut blocks = BTreeMap::new();
        for set in [SET_X0, SET_XA] {
            for &node in mesh.set(set) {
                blocks.insert(node, l);
            }
        }
        Self { blocks }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, node: usize) -> Option<&Matrix5<f64>> {
        self.blocks.get(&node)
    }

    /// `T' A T`.
    pub fn congruence(&self, a: &CsrMatrix) -> Result<CsrMatrix> {
        if self.blocks.is_empty() {
            return Ok(a.clone());
        }
        let mut triplets = Vec::with_capacity(a.nnz() * 2);
        for r in 0..a.n {
            let (rn, rk) = (r / DOFS_PER_NODE, r % DOFS_PER_NODE);
            for (c, v) in a.row(r) {
                let (cn, ck) = (c / DOFS_PER_NODE, c % DOFS_PER_NODE);
                // (T'AT)[i,j] = sum T[r,i] A[r,c] T[c,j]
                let rows: Vec<(usize, f64)> = match self.blocks.get(&rn) {
                    Some(t) => (0..DOFS_PER_NODE)
                        .filter(|&i| t[(rk, i)] != 0.0)
                        .map(|i| (rn * DOFS_PER_NODE + i, t[(rk, i)]))
                        .collect(),
                    None => vec![(r, 1.0)],
                };
                let cols: Vec<(usize, f64)> = match self.blocks.get(&cn) {
                    Some(t) => (0..DOFS_PER_NODE)
                        .filter(|&j| t[(ck, j)] != 0.0)
                        .map(|j| (cn * DOFS_PER_NODE + j, t[(ck, j)]))
                        .collect(),
                    None => vec![(c, 1.0)],
                };
                for &(i, ti) in &rows {
                    for &(j, tj) in &cols {
                        triplets.push((i, j, ti * v * tj));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(a.n, &triplets)
    }

    /// `T' f`.
    pub fn to_local(&self, f: &[f64]) -> Vec<f64> {
        let mut out = f.to_vec();
        for (&node, t) in &self.blocks {
            let o = node * DOFS_PER_NODE;
            for j in 0..DOFS_PER_NODE {
                out[o + j] = (0..DOFS_PER_NODE).map(|i| t[(i, j)] * f[o + i]).sum();
            }
        }
        out
    }

    /// `T delta'`.
    pub fn to_global(&self, d: &[f64]) -> Vec<f64> {
        let mut out = d.to_vec();
        for (&node, t) in &self.blocks {
            let o = node * DOFS_PER_NODE;
            for i in 0..DOFS_PER_NODE {
                out[o + i] = (0..DOFS_PER_NODE).map(|j| t[(i, j)] * d[o + j]).sum();
            }
        }
        out
    }
}

/// Element-level options shared by all analyses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    pub formulation: Formulation,
    pub stabilization: Stabilization,
    pub eigen: EigenStrategy,
    /// Evaluate element matrices on the rayon pool.
    pub parallel: bool,
    /// Rotate skew-edge nodes into edge-local dofs even when `psi = 0`.
    pub force_transform: bool,
}

impl SolverOptions {
    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }
}

fn map_elements<T: Send>(mesh: &Mesh, parallel: bool, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if parallel {
        (0..mesh.triangles.len()).into_par_iter().map(f).collect()
    } else {
        (0..mesh.triangles.len()).map(f).collect()
    }
}

/// Scatter-adds element matrices in element order.
pub fn assemble(mesh: &Mesh, elements: &[Mat15]) -> Result<CsrMatrix> {
    let n = DOFS_PER_NODE * mesh.node_count();
    if elements.len() != mesh.triangles.len() {
        return Err(PlateError::Internal("one element matrix per triangle expected".into()));
    }
    let mut triplets = Vec::with_capacity(elements.len() * 225);
    for (tri, ke) in mesh.triangles.iter().zip(elements) {
        let dofs: Vec<usize> = tri
            .iter()
            .flat_map(|&node| (0..DOFS_PER_NODE).map(move |k| DOFS_PER_NODE * node + k))
            .collect();
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                triplets.push((i, j, ke[(a, b)]));
            }
        }
    }
    CsrMatrix::from_triplets(n, &triplets)
}

pub fn assemble_stiffness(mesh: &Mesh, sec: &SectionStiffness, opts: &SolverOptions) -> Result<CsrMatrix> {
    let elements = map_elements(mesh, opts.parallel, |t| {
        let ops = element_operators(&mesh.element_coords(t), opts.formulation)?;
        Ok(element_stiffness(&ops, sec, opts.stabilization))
    })?;
    assemble(mesh, &elements)
}

pub fn assemble_mass(mesh: &Mesh, sec: &SectionStiffness, opts: &SolverOptions) -> Result<CsrMatrix> {
    let elements = map_elements(mesh, opts.parallel, |t| element_mass(&mesh.element_coords(t), sec))?;
    assemble(mesh, &elements)
}

/// In-plane resultants acting on the plate before the eigen analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum Prestress {
    Uniform(MembraneResultants),
    PerElement(Vec<MembraneResultants>),
}

impl Prestress {
    pub fn zero() -> Self {
        Prestress::Uniform(MembraneResultants::default())
    }

    pub fn at(&self, element: usize) -> MembraneResultants {
        match self {
            Prestress::Uniform(n) => *n,
            Prestress::PerElement(v) => v[element],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Prestress::Uniform(n) => n.is_zero(),
            Prestress::PerElement(v) => v.iter().all(|n| n.is_zero()),
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        match self {
            Prestress::Uniform(n) => Prestress::Uniform(n.scaled(f)),
            Prestress::PerElement(v) => Prestress::PerElement(v.iter().map(|n| n.scaled(f)).collect()),
        }
    }
}

pub fn assemble_geometric(mesh: &Mesh, prestress: &Prestress, h: f64, opts: &SolverOptions) -> Result<CsrMatrix> {
    if let Prestress::PerElement(v) = prestress {
        if v.len() != mesh.triangles.len() {
            return Err(PlateError::Internal("one resultant per element expected".into()));
        }
    }
    let elements = map_elements(mesh, opts.parallel, |t| {
        element_geometric(&mesh.element_coords(t), prestress.at(t), h)
    })?;
    assemble(mesh, &elements)
}

/// Global matrices before constraints, in the global frame.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub stiffness: CsrMatrix,
    pub mass: Option<CsrMatrix>,
    pub geometric: Option<CsrMatrix>,
    pub load: Option<Vec<f64>>,
    pub transforms: NodalTransforms,
}

impl GlobalSystem {
    pub fn new(stiffness: CsrMatrix) -> Self {
        Self { stiffness, mass: None, geometric: None, load: None, transforms: NodalTransforms::default() }
    }

    pub fn dim(&self) -> usize {
        self.stiffness.n
    }
}

/// Rotates skew-edge nodes into edge-local dofs.
pub fn skew_transform(system: GlobalSystem, mesh: &Mesh, force: bool) -> Result<GlobalSystem> {
    let psi = mesh.geometry.map(|g| g.skew).unwrap_or(0.0);
    if psi.abs() >= 0.5 * std::f64::consts::PI {
        return Err(PlateError::Config("skew angle must satisfy |psi| < pi/2".into()));
    }
    if psi == 0.0 && !force {
        return Ok(system);
    }
    let t = NodalTransforms::skew_edges(mesh);
    Ok(GlobalSystem {
        stiffness: t.congruence(&system.stiffness)?,
        mass: system.mass.as_ref().map(|m| t.congruence(m)).transpose()?,
        geometric: system.geometric.as_ref().map(|m| t.congruence(m)).transpose()?,
        load: system.load.as_ref().map(|f| t.to_local(f)),
        transforms: t,
    })
}

/// System restricted to the free dofs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub free: Vec<usize>,
    pub full_dim: usize,
    pub stiffness: CsrMatrix,
    pub mass: Option<CsrMatrix>,
    pub geometric: Option<CsrMatrix>,
    pub load: Option<Vec<f64>>,
    pub transforms: NodalTransforms,
}

impl ReducedSystem {
    pub fn constrained_count(&self) -> usize {
        self.full_dim - self.free.len()
    }

    /// Expands a reduced vector to all dofs and rotates it back to the global frame.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.full_dim];
        for (&i, &v) in self.free.iter().zip(reduced) {
            full[i] = v;
        }
        self.transforms.to_global(&full)
    }
}

/// Eliminates the constrained rows and columns.
pub fn apply_bcs(system: &GlobalSystem, mask: &[bool]) -> Result<ReducedSystem> {
    if mask.len() != system.dim() {
        return Err(PlateError::Internal("constraint mask does not match the system".into()));
    }
    let free: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    Ok(ReducedSystem {
        stiffness: system.stiffness.submatrix(&free),
        mass: system.mass.as_ref().map(|m| m.submatrix(&free)),
        geometric: system.geometric.as_ref().map(|m| m.submatrix(&free)),
        load: system.load.as_ref().map(|f| free.iter().map(|&i| f[i]).collect()),
        full_dim: system.dim(),
        transforms: system.transforms.clone(),
        free,
    })
}

fn geometry_of(mesh: &Mesh) -> Result<PlateGeometry> {
    mesh.geometry.ok_or_else(|| PlateError::Config("mesh carries no plate geometry".into()))
}

/// Node nearest the plate centre `(a/2, b/2)` of the parametric frame.
pub fn center_node(mesh: &Mesh) -> Result<usize> {
    let g = geometry_of(mesh)?;
    Ok(mesh.nearest_node(g.to_physical(0.5 * g.a, 0.5 * g.b)))
}

/// Consistent load of a uniform transverse pressure, `p A_e / 3` per node.
pub fn pressure_load(mesh: &Mesh, pressure: f64) -> Vec<f64> {
    let mut f = vec![0.0; DOFS_PER_NODE * mesh.node_count()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let share = pressure * mesh.signed_area(t) / 3.0;
        for &node in tri {
            f[dof_index(node, Dof::W)] += share;
        }
    }
    f
}

#[derive(Debug, Clone)]
pub struct StaticResult {
    /// All dofs in the global frame.
    pub displacements: Vec<f64>,
    pub center_node: usize,
    pub center_deflection: f64,
}

pub fn static_solve(
    mesh: &Mesh,
    sec: &SectionStiffness,
    bc: &BoundaryCondition,
    pressure: f64,
    opts: &SolverOptions,
) -> Result<StaticResult> {
    if !pressure.is_finite() {
        return Err(PlateError::Config("pressure must be finite".into()));
    }
    let mut system = GlobalSystem::new(assemble_stiffness(mesh, sec, opts)?);
    system.load = Some(pressure_load(mesh, pressure));
    let system = skew_transform(system, mesh, opts.force_transform)?;
    let reduced = apply_bcs(&system, &constrained_dofs(mesh, bc)?)?;
    let factor = SkylineLdlt::factor(&reduced.stiffness)?;
    if factor.negative_pivots() > 0 {
        return Err(PlateError::Singular("stiffness is not positive definite; check the supports".into()));
    }
    let x = factor.solve(reduced.load.as_deref().unwrap_or(&[]));
    let displacements = reduced.expand(&x);
    let center = center_node(mesh)?;
    Ok(StaticResult { center_deflection: displacements[dof_index(center, Dof::W)], center_node: center, displacements })
}

#[derive(Debug, Clone)]
pub struct ModalResult {
    /// Ascending `omega^2`, possibly negative for a thermally destabilized plate.
    pub omega_squared: Vec<f64>,
    /// Mass-normalized modes over all dofs, global frame.
    pub modes: Vec<Vec<f64>>,
}

impl ModalResult {
    /// `true` when some `omega^2` is negative (the prestressed plate is past buckling).
    pub fn destabilized(&self) -> bool {
        self.omega_squared.iter().any(|&w| w < 0.0)
    }

    /// Angular frequency of mode `i`, `None` when `omega^2 < 0`.
    pub fn angular_frequency(&self, i: usize) -> Option<f64> {
        let w2 = *self.omega_squared.get(i)?;
        (w2 >= 0.0).then(|| w2.sqrt())
    }
}

/// Solves `(K + K_G) phi = omega^2 M phi` for the `count` lowest modes.
pub fn modal_solve(
    mesh: &Mesh,
    sec: &SectionStiffness,
    bc: &BoundaryCondition,
    prestress: &Prestress,
    count: usize,
    opts: &SolverOptions,
) -> Result<ModalResult> {
    if count == 0 {
        return Err(PlateError::Config("at least one mode must be requested".into()));
    }
    let mut k = assemble_stiffness(mesh, sec, opts)?;
    if !prestress.is_zero() {
        k = k.add_scaled(&assemble_geometric(mesh, prestress, sec.thickness, opts)?, 1.0)?;
    }
    let mut system = GlobalSystem::new(k);
    system.mass = Some(assemble_mass(mesh, sec, opts)?);
    let system = skew_transform(system, mesh, opts.force_transform)?;
    let reduced = apply_bcs(&system, &constrained_dofs(mesh, bc)?)?;
    let mass = reduced.mass.as_ref().ok_or_else(|| PlateError::Internal("mass matrix missing".into()))?;
    let pairs = smallest_eigenpairs(&reduced.stiffness, mass, count, opts.eigen)?;
    Ok(ModalResult { modes: pairs.vectors.iter().map(|v| reduced.expand(v)).collect(), omega_squared: pairs.values })
}

#[derive(Debug, Clone)]
pub struct BucklingResult {
    /// Smallest positive multiplier on the load pattern.
    pub multiplier: f64,
    pub mode: Vec<f64>,
}

/// Smallest positive `lambda` with `(K + K_G(base) + lambda K_G(pattern)) phi = 0`.
pub fn buckling_solve(
    mesh: &Mesh,
    sec: &SectionStiffness,
    bc: &BoundaryCondition,
    base: &Prestress,
    pattern: &Prestress,
    opts: &SolverOptions,
) -> Result<BucklingResult> {
    let mut k = assemble_stiffness(mesh, sec, opts)?;
    if !base.is_zero() {
        k = k.add_scaled(&assemble_geometric(mesh, base, sec.thickness, opts)?, 1.0)?;
    }
    let mut system = GlobalSystem::new(k);
    system.geometric = Some(assemble_geometric(mesh, pattern, sec.thickness, opts)?.scaled(-1.0));
    let system = skew_transform(system, mesh, opts.force_transform)?;
    let reduced = apply_bcs(&system, &constrained_dofs(mesh, bc)?)?;
    let load = reduced.geometric.as_ref().ok_or_else(|| PlateError::Internal("load matrix missing".into()))?;
    let (multiplier, mode) = smallest_positive_eigenpair(&reduced.stiffness, load, opts.eigen)?;
    Ok(BucklingResult { multiplier, mode: reduced.expand(&mode) })
}

/// In-plane load pattern for mechanical buckling, unit compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPattern {
    Uniaxial,
    Biaxial,
}

impl LoadPattern {
    pub fn unit_resultants(self) -> MembraneResultants {
        match self {
            LoadPattern::Uniaxial => MembraneResultants::new(-1.0, 0.0, 0.0),
            LoadPattern::Biaxial => MembraneResultants::new(-1.0, -1.0, 0.0),
        }
    }
}

/// How the prestress field is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrestressMode {
    /// Section resultants applied uniformly over the plate.
    #[default]
    Uniform,
    /// Resultants from an in-plane elastic solution on the actual mesh.
    MembraneSolve,
}

fn boundary_edges(mesh: &Mesh) -> Vec<(usize, usize)> {
    let mut count: BTreeMap<(usize, usize), (usize, usize, usize)> = BTreeMap::new();
    for tri in &mesh.triangles {
        for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            let key = (a.min(b), a.max(b));
            count.entry(key).or_insert((a, b, 0)).2 += 1;
        }
    }
    count.into_values().filter(|e| e.2 == 1).map(|e| (e.0, e.1)).collect()
}

fn on_outer_edge(mesh: &Mesh, a: usize, b: usize) -> bool {
    [SET_X0, SET_XA, SET_Y0, SET_YB].iter().any(|s| {
        let set = mesh.set(s);
        set.binary_search(&a).is_ok() && set.binary_search(&b).is_ok()
    })
}

/// Membrane (u, v) stiffness on all nodes; other dofs absent.
fn membrane_problem(mesh: &Mesh, sec: &SectionStiffness, opts: &SolverOptions) -> Result<(CsrMatrix, Vec<SMatrix<f64, 3, 15>>)> {
    let ops = map_elements(mesh, opts.parallel, |t| {
        Ok(element_operators(&mesh.element_coords(t), opts.formulation)?.membrane)
    })?;
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|t| mesh.signed_area(t)).collect();
    let elements: Vec<Mat15> = ops
        .iter()
        .zip(&areas)
        .map(|(bp, &area)| {
            let k = bp.transpose() * sec.extensional * bp * area;
            (k + k.transpose()) * 0.5
        })
        .collect();
    Ok((assemble(mesh, &elements)?, ops))
}

/// Solves the in-plane problem for the membrane dofs only, with `fixed`
/// marking restrained membrane dofs, then evaluates element resultants
/// `A eps - n_th`.
fn membrane_resultants(
    mesh: &Mesh,
    sec: &SectionStiffness,
    load: &[f64],
    fixed: &[bool],
    thermal: Vector3<f64>,
    opts: &SolverOptions,
) -> Result<Prestress> {
    let (k, ops) = membrane_problem(mesh, sec, opts)?;
    let keep: Vec<usize> = (0..k.n)
        .filter(|&i| {
            let d = i % DOFS_PER_NODE;
            d < 2 && !fixed[i]
        })
        .collect();
    let kr = k.submatrix(&keep);
    let fr: Vec<f64> = keep.iter().map(|&i| load[i]).collect();
    let x = SkylineLdlt::factor(&kr)?.solve(&fr);
    let mut full = vec![0.0; k.n];
    for (&i, &v) in keep.iter().zip(&x) {
        full[i] = v;
    }
    let resultants = mesh
        .triangles
        .iter()
        .zip(&ops)
        .map(|(tri, bp)| {
            let mut d = nalgebra::SVector::<f64, 15>::zeros();
            for (a, &node) in tri.iter().enumerate() {
                for k in 0..DOFS_PER_NODE {
                    d[DOFS_PER_NODE * a + k] = full[DOFS_PER_NODE * node + k];
                }
            }
            let n = sec.extensional * (bp * d) - thermal;
            MembraneResultants::new(n[0], n[1], n[2])
        })
        .collect();
    Ok(Prestress::PerElement(resultants))
}

/// Thermal prestress `-N_th`. In membrane-solve mode the outer edges are
/// restrained in-plane and the thermal strains are free to redistribute
/// around cutouts.
pub fn thermal_prestress(mesh: &Mesh, sec: &SectionStiffness, mode: PrestressMode, opts: &SolverOptions) -> Result<Prestress> {
    let nth = sec.thermal_force;
    match mode {
        PrestressMode::Uniform => Ok(Prestress::Uniform(MembraneResultants::new(-nth[0], -nth[1], -nth[2]))),
        PrestressMode::MembraneSolve => {
            let n = DOFS_PER_NODE * mesh.node_count();
            let mut fixed = vec![false; n];
            for set in [SET_X0, SET_XA, SET_Y0, SET_YB] {
                for &node in mesh.set(set) {
                    fixed[dof_index(node, Dof::U)] = true;
                    fixed[dof_index(node, Dof::V)] = true;
                }
            }
            // equivalent nodal forces of the thermal resultants, int Bp' N_th
            let mut f = vec![0.0; n];
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let bp = element_operators(&mesh.element_coords(t), opts.formulation)?.membrane;
                let fe = bp.transpose() * nth * mesh.signed_area(t);
                for (a, &node) in tri.iter().enumerate() {
                    for k in 0..2 {
                        f[DOFS_PER_NODE * node + k] += fe[DOFS_PER_NODE * a + k];
                    }
                }
            }
            membrane_resultants(mesh, sec, &f, &fixed, nth, opts)
        }
    }
}

/// Unit mechanical prestress. In membrane-solve mode the uniform stress state
/// of `pattern` is applied as tractions on the outer edges, the plate is held
/// against rigid in-plane motion only, and resultants are recovered per element.
pub fn mechanical_prestress(
    mesh: &Mesh,
    sec: &SectionStiffness,
    pattern: LoadPattern,
    mode: PrestressMode,
    opts: &SolverOptions,
) -> Result<Prestress> {
    let unit = pattern.unit_resultants();
    match mode {
        PrestressMode::Uniform => Ok(Prestress::Uniform(unit)),
        PrestressMode::MembraneSolve => {
            let n = DOFS_PER_NODE * mesh.node_count();
            let mut f = vec![0.0; n];
            for (a, b) in boundary_edges(mesh) {
                if !on_outer_edge(mesh, a, b) {
                    continue;
                }
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                // outward normal times length for a counterclockwise boundary
                let nx = pb[1] - pa[1];
                let ny = -(pb[0] - pa[0]);
                let tx = unit.nxx * nx + unit.nxy * ny;
                let ty = unit.nxy * nx + unit.nyy * ny;
                for node in [a, b] {
                    f[dof_index(node, Dof::U)] += 0.5 * tx;
                    f[dof_index(node, Dof::V)] += 0.5 * ty;
                }
            }
            // remove rigid in-plane motion: pin the first and last nodes of y0
            let y0 = mesh.set(SET_Y0);
            let g = geometry_of(mesh)?;
            let by_x = |p: usize| g.to_parametric(mesh.nodes[p])[0];
            let first = *y0.iter().min_by(|&&p, &&q| by_x(p).total_cmp(&by_x(q))).ok_or_else(|| {
                PlateError::Mesh("membrane solve needs a y0 edge".into())
            })?;
            let last = *y0.iter().max_by(|&&p, &&q| by_x(p).total_cmp(&by_x(q))).unwrap();
            let mut fixed = vec![false; n];
            fixed[dof_index(first, Dof::U)] = true;
            fixed[dof_index(first, Dof::V)] = true;
            fixed[dof_index(last, Dof::V)] = true;
            membrane_resultants(mesh, sec, &f, &fixed, Vector3::zeros(), opts)
        }
    }
}

/// Settings for the critical temperature difference of a heated plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBucklingSetup {
    /// Rise of the metal-rich surface above the reference temperature.
    pub metal_rise: f64,
    pub reference_temperature: f64,
    pub profile: ProfileKind,
    pub prestress: PrestressMode,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ThermalBucklingSetup {
    fn default() -> Self {
        Self {
            metal_rise: 5.0,
            reference_temperature: 300.0,
            profile: ProfileKind::Series,
            prestress: PrestressMode::Uniform,
            max_iterations: 30,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThermalBucklingResult {
    /// Critical `T_c - T_m`.
    pub critical_difference: f64,
    pub iterations: usize,
    pub mode: Vec<f64>,
}

fn thermal_state(setup: &ThermalBucklingSetup, difference: f64) -> ThermalState {
    let tm = setup.reference_temperature + setup.metal_rise;
    ThermalState::gradient(tm + difference, tm)
        .with_reference(setup.reference_temperature)
        .with_profile(setup.profile)
}

/// Critical temperature difference across the thickness. The thermal
/// resultants are linearized about the current estimate,
/// `N(dT) = N(est) + (dT - est) N'`, the stiffness is evaluated at the
/// estimate, and the eigenproblem is solved for `dT` directly. The loop stops
/// once the estimate is stationary, which takes one correction for
/// temperature-independent constituents.
pub fn thermal_buckling(
    mesh: &Mesh,
    fgm: &FgmDefinition,
    bc: &BoundaryCondition,
    setup: &ThermalBucklingSetup,
    opts: &SolverOptions,
) -> Result<ThermalBucklingResult> {
    let mut estimate = 0.0f64;
    for iteration in 1..=setup.max_iterations {
        let sec = section_stiffness(fgm, &thermal_state(setup, estimate))?;
        let step = 1.0f64.max(1e-3 * estimate.abs());
        let sec_up = section_stiffness(fgm, &thermal_state(setup, estimate + step))?;
        let slope = (sec_up.thermal_force - sec.thermal_force) / step;
        let mut sec_base = sec.clone();
        sec_base.thermal_force = sec.thermal_force - slope * estimate;
        let mut sec_rate = sec.clone();
        sec_rate.thermal_force = slope;
        let base = thermal_prestress(mesh, &sec_base, setup.prestress, opts)?;
        let rate = thermal_prestress(mesh, &sec_rate, setup.prestress, opts)?;
        let result = buckling_solve(mesh, &sec, bc, &base, &rate, opts)?;
        let next = result.multiplier;
        let converged = (next - estimate).abs() <= setup.tolerance * next.abs().max(1.0);
        estimate = next;
        if converged {
            return Ok(ThermalBucklingResult { critical_difference: estimate, iterations: iteration, mode: result.mode });
        }
    }
    Err(PlateError::Numeric(format!(
        "critical temperature iteration did not settle in {} steps",
        setup.max_iterations
    )))
}

/// `E h^3 / (12 (1 - nu^2))`.
pub fn flexural_rigidity(e: f64, nu: f64, h: f64) -> f64 {
    e * h.powi(3) / (12.0 * (1.0 - nu * nu))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(PlateError::Config(format!("{name} must be positive, got {v}")))
    }
}

/// `100 w D / (p a^4)`.
pub fn normalized_deflection(w: f64, pressure: f64, a: f64, rigidity: f64) -> Result<f64> {
    Ok(100.0 * w * rigidity / (positive("pressure", pressure)? * positive("a", a)?.powi(4)))
}

pub fn deflection_from_normalized(w_bar: f64, pressure: f64, a: f64, rigidity: f64) -> Result<f64> {
    Ok(w_bar * positive("pressure", pressure)? * positive("a", a)?.powi(4) / (100.0 * positive("D", rigidity)?))
}

/// `omega a^2 sqrt(rho h / D)`.
pub fn normalized_frequency(omega: f64, a: f64, h: f64, density: f64, rigidity: f64) -> Result<f64> {
    Ok(omega * a * a * (positive("rho", density)? * positive("h", h)? / positive("D", rigidity)?).sqrt())
}

/// `Omega = (omega_bar^2 / (1 - nu^2))^(1/4)`.
pub fn frequency_parameter(omega_bar: f64, nu: f64) -> f64 {
    (omega_bar * omega_bar / (1.0 - nu * nu)).powf(0.25)
}

/// `N b^2 / (pi^2 D)`.
pub fn buckling_parameter(load: f64, b: f64, rigidity: f64) -> Result<f64> {
    Ok(load * b * b / (std::f64::consts::PI.powi(2) * positive("D", rigidity)?))
}

/// Kirchhoff centre deflection of a simply supported rectangle under uniform
/// pressure, as `100 w D / (p a^4)`, summing odd `m, n` up to `terms`.
pub fn navier_center_deflection(aspect: f64, terms: usize) -> f64 {
    let pi6 = std::f64::consts::PI.powi(6);
    let mut sum = 0.0;
    for m in (1..=terms).step_by(2) {
        for n in (1..=terms).step_by(2) {
            let (mf, nf) = (m as f64, n as f64);
            let sign = if ((m + n) / 2 - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let k = mf * mf + nf * nf * aspect * aspect;
            sum += sign / (mf * nf * k * k);
        }
    }
    100.0 * 16.0 / pi6 * sum
}
