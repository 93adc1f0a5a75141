//! Structured triangular meshes for rectangular, skew and perforated plates,
//! plus a plain-text mesh format.
//!
//! Text format (UTF-8, LF line endings):
//!
//! ```text
//! plmesh 1
//! nodes N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based, counterclockwise)
//! set NAME K     (optional, repeated)
//! i0 i1 ...      (K indices, whitespace separated, may span lines)
//! ```
//!
//! A perforated mesh with `nr` radial and `nc` circumferential divisions has
//! `nc * (nr + 1)` nodes and `2 * nc * nr` triangles.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};

pub const SET_X0: &str = "x0";
pub const SET_XA: &str = "xa";
pub const SET_Y0: &str = "y0";
pub const SET_YB: &str = "yb";
pub const SET_HOLE: &str = "hole";

/// Plate dimensions carried alongside a generated mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateGeometry {
    pub a: f64,
    pub b: f64,
    /// skew angle in radians
    #[serde(default)]
    pub skew: f64,
    #[serde(default)]
    pub cutout_radius: Option<f64>,
}

impl PlateGeometry {
    pub fn rectangle(a: f64, b: f64) -> Self {
        Self { a, b, skew: 0.0, cutout_radius: None }
    }

    /// Maps an un-skewed parametric point to physical coordinates.
    pub fn to_physical(&self, x: f64, y: f64) -> [f64; 2] {
        [x + y * self.skew.sin(), y * self.skew.cos()]
    }

    pub fn to_parametric(&self, p: [f64; 2]) -> [f64; 2] {
        let y = p[1] / self.skew.cos();
        [p[0] - y * self.skew.sin(), y]
    }

    pub fn center(&self) -> [f64; 2] {
        self.to_physical(0.5 * self.a, 0.5 * self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_sets: BTreeMap<String, Vec<usize>>,
    pub geometry: Option<PlateGeometry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// Diagonal direction alternates cell by cell (union-jack pattern).
    #[default]
    Alternating,
    /// Every cell split along the same diagonal.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshPlan {
    Rectangle {
        nx: usize,
        ny: usize,
        #[serde(default)]
        diagonal: DiagonalRule,
    },
    Perforated {
        radius: f64,
        radial: usize,
        circumferential: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub plan: MeshPlan,
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub h: f64,
    /// skew angle in radians
    #[serde(default)]
    pub skew: f64,
}

impl MeshSpec {
    pub fn rectangle(a: f64, b: f64, nx: usize, ny: usize) -> Self {
        Self {
            plan: MeshPlan::Rectangle { nx, ny, diagonal: DiagonalRule::default() },
            a,
            b,
            h: 0.0,
            skew: 0.0,
        }
    }

    pub fn perforated(a: f64, radius: f64, radial: usize, circumferential: usize) -> Self {
        Self {
            plan: MeshPlan::Perforated { radius, radial, circumferential },
            a,
            b: a,
            h: 0.0,
            skew: 0.0,
        }
    }

    pub fn with_skew(mut self, skew: f64) -> Self {
        self.skew = skew;
        self
    }

    pub fn with_diagonal(mut self, rule: DiagonalRule) -> Self {
        if let MeshPlan::Rectangle { diagonal, .. } = &mut self.plan {
            *diagonal = rule;
        }
        self
    }

    pub fn generate(&self) -> Result<Mesh> {
        match self.plan {
            MeshPlan::Rectangle { .. } => structured_rectangle(self),
            MeshPlan::Perforated { .. } => perforated_square(self),
        }
    }
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [i, j, k] = self.triangles[tri];
        signed_area(self.nodes[i], self.nodes[j], self.nodes[k])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn element_coords(&self, tri: usize) -> [[f64; 2]; 3] {
        let [i, j, k] = self.triangles[tri];
        [self.nodes[i], self.nodes[j], self.nodes[k]]
    }

    pub fn set(&self, name: &str) -> &[usize] {
        self.boundary_sets.get(name).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Index of the node closest to `p`.
    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.nodes.iter().enumerate() {
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Checks index ranges, orientation and duplicate nodes.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(PlateError::Mesh(format!("triangle {t} references a missing node")));
            }
            if !(self.signed_area(t) > 0.0) {
                return Err(PlateError::Mesh(format!("triangle {t} has nonpositive area")));
            }
        }
        for (name, set) in &self.boundary_sets {
            if set.iter().any(|&i| i >= n) {
                return Err(PlateError::Mesh(format!("set {name} references a missing node")));
            }
        }
        let scale = self
            .nodes
            .iter()
            .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
            .max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;
        let mut sorted: Vec<usize> = (0..n).collect();
        sorted.sort_by(|&i, &j| self.nodes[i][0].total_cmp(&self.nodes[j][0]));
        for (pos, &i) in sorted.iter().enumerate() {
            for &j in &sorted[pos + 1..] {
                if self.nodes[j][0] - self.nodes[i][0] > tol {
                    break;
                }
                if (self.nodes[j][1] - self.nodes[i][1]).abs() <= tol {
                    return Err(PlateError::Mesh(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }
}

pub fn signed_area(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]) -> f64 {
    0.5 * ((p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]))
}

/// Uniform `nx` by `ny` grid, each cell split into two triangles.
pub fn structured_rectangle(spec: &MeshSpec) -> Result<Mesh> {
    let (nx, ny, diagonal) = match spec.plan {
        MeshPlan::Rectangle { nx, ny, diagonal } => (nx, ny, diagonal),
        _ => return Err(PlateError::Spec("expected a rectangle plan".into())),
    };
    if nx == 0 || ny == 0 {
        return Err(PlateError::Spec("rectangle needs at least one division per side".into()));
    }
    if !(spec.a > 0.0 && spec.b > 0.0) {
        return Err(PlateError::Spec("plate dimensions must be positive".into()));
    }
    if !(spec.skew.abs() < 0.5 * PI) {
        return Err(PlateError::Spec("skew angle must satisfy |psi| < pi/2".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([spec.a * i as f64 / nx as f64, spec.b * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let rising = match diagonal {
                DiagonalRule::Single => true,
                DiagonalRule::Alternating => (i + j) % 2 == 0,
            };
            if rising {
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            } else {
                triangles.push([p00, p10, p01]);
                triangles.push([p10, p11, p01]);
            }
        }
    }
    let geometry = PlateGeometry { a: spec.a, b: spec.b, skew: 0.0, cutout_radius: None };
    let mut mesh = Mesh { nodes, triangles, boundary_sets: BTreeMap::new(), geometry: Some(geometry) };
    mesh.boundary_sets = boundary_sets(&mesh, &geometry)?;
    skew_map(&mesh, spec.skew)
}

/// Shears the mesh: `(x, y) -> (x + y sin(psi), y cos(psi))`.
pub fn skew_map(mesh: &Mesh, psi: f64) -> Result<Mesh> {
    if !(psi.abs() < 0.5 * PI) {
        return Err(PlateError::Spec("skew angle must satisfy |psi| < pi/2".into()));
    }
    let (s, c) = psi.sin_cos();
    let mut out = mesh.clone();
    for p in &mut out.nodes {
        *p = [p[0] + p[1] * s, p[1] * c];
    }
    if let Some(g) = &mut out.geometry {
        g.skew += psi;
    }
    Ok(out)
}

/// Square plate of side `a` with a central circular hole, meshed as eight
/// transfinite blocks between the circle and the outer boundary.
pub fn perforated_square(spec: &MeshSpec) -> Result<Mesh> {
    let (radius, radial, circumferential) = match spec.plan {
        MeshPlan::Perforated { radius, radial, circumferential } => (radius, radial, circumferential),
        _ => return Err(PlateError::Spec("expected a perforated plan".into())),
    };
    let a = spec.a;
    if !(a > 0.0) {
        return Err(PlateError::Spec("plate side must be positive".into()));
    }
    if radial == 0 || circumferential == 0 || circumferential % 8 != 0 {
        return Err(PlateError::Spec(
            "perforated mesh needs radial >= 1 and circumferential a positive multiple of 8".into(),
        ));
    }
    if !(radius > 0.0 && radius < 0.5 * a) {
        return Err(PlateError::Spec(format!("cutout radius {radius} must lie in (0, a/2)")));
    }
    // Blocks invert once the circle approaches the edge midpoints.
    if radius > 0.45 * a {
        return Err(PlateError::Spec(format!("cutout radius {radius} too close to a/2: blocks invert")));
    }
    let per_block = circumferential / 8;
    let center = [0.5 * a, 0.5 * a];
    let half = 0.5 * a;
    // outer boundary point for global circumferential index k (counterclockwise from +x)
    let outer = |k: usize| -> [f64; 2] {
        let block = k / per_block;
        let local = (k % per_block) as f64 / per_block as f64;
        // block endpoints alternate between edge midpoints and corners
        let corner = |m: usize| -> [f64; 2] {
            let ang = m as f64 * PI / 4.0;
            let (s, c) = ang.sin_cos();
            let scale = half / c.abs().max(s.abs());
            [center[0] + scale * c, center[1] + scale * s]
        };
        let p0 = corner(block);
        let p1 = corner((block + 1) % 8);
        [p0[0] + local * (p1[0] - p0[0]), p0[1] + local * (p1[1] - p0[1])]
    };
    let mut nodes = Vec::with_capacity(circumferential * (radial + 1));
    for r in 0..=radial {
        let t = r as f64 / radial as f64;
        for k in 0..circumferential {
            let ang = 2.0 * PI * k as f64 / circumferential as f64;
            let inner = [center[0] + radius * ang.cos(), center[1] + radius * ang.sin()];
            let o = outer(k);
            nodes.push(if r == radial {
                o
            } else if r == 0 {
                inner
            } else {
                [inner[0] + t * (o[0] - inner[0]), inner[1] + t * (o[1] - inner[1])]
            });
        }
    }
    let id = |r: usize, k: usize| r * circumferential + (k % circumferential);
    let mut triangles = Vec::with_capacity(2 * radial * circumferential);
    for r in 0..radial {
        for k in 0..circumferential {
            // local indices within the block so 90-degree rotations map blocks onto blocks
            let local = k % per_block;
            let (p00, p10, p01, p11) = (id(r, k), id(r, k + 1), id(r + 1, k), id(r + 1, k + 1));
            if (local + r) % 2 == 0 {
                triangles.push([p00, p11, p10]);
                triangles.push([p00, p01, p11]);
            } else {
                triangles.push([p00, p01, p10]);
                triangles.push([p10, p01, p11]);
            }
        }
    }
    let geometry = PlateGeometry { a, b: a, skew: 0.0, cutout_radius: Some(radius) };
    let mut mesh = Mesh { nodes, triangles, boundary_sets: BTreeMap::new(), geometry: Some(geometry) };
    mesh.boundary_sets = boundary_sets(&mesh, &geometry)?;
    for t in 0..mesh.triangles.len() {
        if !(mesh.signed_area(t) > 0.0) {
            return Err(PlateError::Spec(format!("block inversion at triangle {t}")));
        }
    }
    skew_map(&mesh, spec.skew)
}

/// Classifies nodes onto the plate edges and the cutout, in the un-skewed frame.
pub fn boundary_sets(mesh: &Mesh, geometry: &PlateGeometry) -> Result<BTreeMap<String, Vec<usize>>> {
    let scale = geometry.a.max(geometry.b);
    let tol = 1e-9 * scale;
    let mut sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for name in [SET_X0, SET_XA, SET_Y0, SET_YB] {
        sets.insert(name.to_string(), Vec::new());
    }
    let center = [0.5 * geometry.a, 0.5 * geometry.b];
    if geometry.cutout_radius.is_some() {
        sets.insert(SET_HOLE.to_string(), Vec::new());
    }
    for (i, &p) in mesh.nodes.iter().enumerate() {
        let [x, y] = geometry.to_parametric(p);
        if x.abs() <= tol {
            sets.get_mut(SET_X0).unwrap().push(i);
        }
        if (x - geometry.a).abs() <= tol {
            sets.get_mut(SET_XA).unwrap().push(i);
        }
        if y.abs() <= tol {
            sets.get_mut(SET_Y0).unwrap().push(i);
        }
        if (y - geometry.b).abs() <= tol {
            sets.get_mut(SET_YB).unwrap().push(i);
        }
        if let Some(r) = geometry.cutout_radius {
            let d = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
            if (d - r).abs() <= tol {
                sets.get_mut(SET_HOLE).unwrap().push(i);
            }
        }
    }
    for (name, set) in &sets {
        if set.is_empty() {
            return Err(PlateError::Mesh(format!("boundary set {name:?} is empty")));
        }
    }
    Ok(sets)
}

pub fn write_mesh(mesh: &Mesh) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("plmesh 1\n");
    let _ = writeln!(out, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    for (name, set) in &mesh.boundary_sets {
        let _ = writeln!(out, "set {} {}", name, set.len());
        let line: Vec<String> = set.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: &str| PlateError::Parse { line, message: message.to_string() };

    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty mesh file"))?;
    if header != "plmesh 1" {
        return Err(err(ln, "expected header \"plmesh 1\""));
    }
    let count = |ln: usize, line: &str, keyword: &str| -> Result<usize> {
        let mut it = line.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(err(ln, &format!("expected \"{keyword} <count>\"")));
        }
        let n = it
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| err(ln, &format!("malformed {keyword} count")))?;
        if it.next().is_some() {
            return Err(err(ln, "trailing tokens"));
        }
        Ok(n)
    };

    let (ln, line) = lines.next().ok_or_else(|| err(2, "missing nodes section"))?;
    let n_nodes = count(ln, line, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, line) = lines.next().ok_or_else(|| err(ln, "fewer node lines than declared"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "malformed node coordinates"))?;
        if vals.len() != 2 || !vals.iter().all(|v| v.is_finite()) {
            return Err(err(ln, "node line must hold two finite coordinates"));
        }
        nodes.push([vals[0], vals[1]]);
    }

    let (ln, line) = lines.next().ok_or_else(|| err(ln, "missing triangles section"))?;
    let n_tris = count(ln, line, "triangles")?;
    if n_tris == 0 {
        return Err(err(ln, "mesh has no triangles"));
    }
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (ln, line) = lines.next().ok_or_else(|| err(ln, "fewer triangle lines than declared"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "malformed triangle indices"))?;
        if idx.len() != 3 {
            return Err(err(ln, "triangle line must hold three indices"));
        }
        if idx.iter().any(|&i| i >= n_nodes) {
            return Err(err(ln, "triangle index out of range"));
        }
        let tri = [idx[0], idx[1], idx[2]];
        if !(signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) > 0.0) {
            return Err(err(ln, "triangle has nonpositive area"));
        }
        triangles.push(tri);
    }

    let mut boundary_sets = BTreeMap::new();
    let mut pending: Option<(usize, String, usize, Vec<usize>)> = None;
    for (ln, line) in lines {
        if let Some((_, _, k, ref mut items)) = pending {
            if items.len() < k {
                for tok in line.split_whitespace() {
                    let i = tok.parse::<usize>().map_err(|_| err(ln, "malformed set index"))?;
                    if i >= n_nodes {
                        return Err(err(ln, "set index out of range"));
                    }
                    items.push(i);
                }
                if items.len() > k {
                    return Err(err(ln, "more set indices than declared"));
                }
                if items.len() == k {
                    let (_, name, _, items) = pending.take().unwrap();
                    boundary_sets.insert(name, items);
                }
                continue;
            }
        }
        let mut it = line.split_whitespace();
        if it.next() != Some("set") {
            return Err(err(ln, "expected \"set NAME K\""));
        }
        let name = it.next().ok_or_else(|| err(ln, "missing set name"))?.to_string();
        let k = it
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| err(ln, "malformed set count"))?;
        if k == 0 {
            boundary_sets.insert(name, Vec::new());
        } else {
            pending = Some((ln, name, k, Vec::with_capacity(k)));
        }
    }
    if let Some((ln, name, _, _)) = pending {
        return Err(err(ln, &format!("set {name} has fewer indices than declared")));
    }
    Ok(Mesh { nodes, triangles, boundary_sets, geometry: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_cell_rectangle() {
        let m = MeshSpec::rectangle(2.0, 3.0, 1, 1).generate().unwrap();
        assert_eq!(m.nodes.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        assert!((m.total_area() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn counts_and_area_partition() {
        let m = MeshSpec::rectangle(1.0, 1.0, 4, 4).generate().unwrap();
        assert_eq!((m.nodes.len(), m.triangles.len()), (25, 32));
        let m = MeshSpec::rectangle(1.0, 1.0, 40, 40).generate().unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        m.validate().unwrap();
        assert!(MeshSpec::rectangle(1.0, 1.0, 0, 4).generate().is_err());
    }

    #[test]
    fn edge_sets_and_corners() {
        let m = MeshSpec::rectangle(1.0, 1.0, 4, 4).generate().unwrap();
        for name in [SET_X0, SET_XA, SET_Y0, SET_YB] {
            assert_eq!(m.set(name).len(), 5, "{name}");
        }
        let corner = m.nearest_node([0.0, 0.0]);
        assert!(m.set(SET_X0).contains(&corner) && m.set(SET_Y0).contains(&corner));
        assert!(!m.boundary_sets.contains_key(SET_HOLE));
    }

    #[test]
    fn skew_examples() {
        let m = MeshSpec::rectangle(1.0, 2.0, 3, 3).generate().unwrap();
        assert_eq!(skew_map(&m, 0.0).unwrap().nodes, m.nodes);
        let psi = 30f64.to_radians();
        let s = skew_map(&m, psi).unwrap();
        let top_left = m.nearest_node([0.0, 2.0]);
        assert!((s.nodes[top_left][0] - 1.0).abs() < 1e-14);
        assert!((s.nodes[top_left][1] - 3f64.sqrt()).abs() < 1e-14);
        for t in 0..m.triangles.len() {
            assert!((s.signed_area(t) - m.signed_area(t) * psi.cos()).abs() < 1e-14);
        }
        assert_eq!(s.boundary_sets, m.boundary_sets);
        // generator classifies skewed meshes in the parametric frame
        let g = MeshSpec::rectangle(1.0, 2.0, 3, 3).with_skew(psi).generate().unwrap();
        assert_eq!(g.boundary_sets, m.boundary_sets);
        assert!(skew_map(&m, 1.6).is_err());
    }

    #[test]
    fn perforated_geometry() {
        let a = 1.0;
        let r = 0.2;
        let spec = MeshSpec::perforated(a, r, 8, 64);
        let m = spec.generate().unwrap();
        assert_eq!(m.nodes.len(), 64 * 9);
        assert_eq!(m.triangles.len(), 2 * 64 * 8);
        assert_eq!(m.set(SET_HOLE).len(), 64);
        m.validate().unwrap();
        let exact = a * a - PI * r * r;
        assert!((m.total_area() - exact).abs() / exact < 5e-3);
        for &i in m.set(SET_HOLE) {
            let p = m.nodes[i];
            let d = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt();
            assert!((d - r).abs() < 1e-12 * a);
        }
        for name in [SET_X0, SET_XA, SET_Y0, SET_YB] {
            assert_eq!(m.set(name).len(), 64 / 4 + 1);
        }
        assert!(MeshSpec::perforated(a, 0.49, 8, 64).generate().is_err());
        assert!(MeshSpec::perforated(a, 0.2, 8, 60).generate().is_err());
    }

    #[test]
    fn perforated_rotational_symmetry() {
        let m = MeshSpec::perforated(1.0, 0.25, 5, 32).generate().unwrap();
        let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let nodes: std::collections::BTreeSet<_> = m.nodes.iter().map(|&p| key(p)).collect();
        let rot = |p: [f64; 2]| [1.0 - p[1], p[0]];
        for &p in &m.nodes {
            assert!(nodes.contains(&key(rot(p))));
        }
        let tri_key = |t: &[usize; 3], f: &dyn Fn([f64; 2]) -> [f64; 2]| {
            let mut v: Vec<_> = t.iter().map(|&i| key(f(m.nodes[i]))).collect();
            v.sort();
            v
        };
        let tris: std::collections::BTreeSet<_> = m.triangles.iter().map(|t| tri_key(t, &|p| p)).collect();
        for t in &m.triangles {
            assert!(tris.contains(&tri_key(t, &rot)));
        }
    }

    #[test]
    fn text_round_trip() {
        let m = MeshSpec::perforated(1.0, 0.2, 3, 16).with_skew(0.0).generate().unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_sets, m.boundary_sets);
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn fixture_and_parse_errors() {
        let fixture = "plmesh 1\nnodes 4\n0 0\n1 0\n1 1\n0 1\ntriangles 2\n0 1 2\n0 2 3\nset x0 2\n0 3\n";
        let m = read_mesh(fixture).unwrap();
        assert_eq!(m.nodes.len(), 4);
        assert_eq!(m.set("x0"), &[0, 3]);

        let empty = "plmesh 1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 0\n";
        assert!(matches!(read_mesh(empty), Err(PlateError::Parse { line: 6, .. })));

        let out_of_range = "plmesh 1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7\n";
        assert!(matches!(read_mesh(out_of_range), Err(PlateError::Parse { line: 7, .. })));

        let clockwise = "plmesh 1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\n";
        assert!(matches!(read_mesh(clockwise), Err(PlateError::Parse { line: 7, .. })));

        let bad_count = "plmesh 1\nnodes x\n";
        assert!(matches!(read_mesh(bad_count), Err(PlateError::Parse { line: 2, .. })));

        let short = "plmesh 1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nset hole 3\n0 1\n";
        assert!(matches!(read_mesh(short), Err(PlateError::Parse { line: 8, .. })));

        assert!(read_mesh("mesh 2\n").is_err());
    }

    fn node_keys(m: &Mesh) -> std::collections::BTreeSet<(i64, i64)> {
        m.nodes.iter().map(|p| ((p[0] * 1e10).round() as i64, (p[1] * 1e10).round() as i64)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn refinement_nests_and_commutes_with_skew(
            nx in 1usize..6, ny in 1usize..6,
            a in 0.5f64..3.0, b in 0.5f64..3.0,
            psi in -1.2f64..1.2,
            single in any::<bool>(),
        ) {
            let rule = if single { DiagonalRule::Single } else { DiagonalRule::Alternating };
            let coarse = MeshSpec::rectangle(a, b, nx, ny).with_diagonal(rule).generate().unwrap();
            let fine = MeshSpec::rectangle(a, b, 2 * nx, 2 * ny).with_diagonal(rule).generate().unwrap();
            let fine_keys = node_keys(&fine);
            prop_assert!(node_keys(&coarse).is_subset(&fine_keys));

            let skewed_fine = skew_map(&fine, psi).unwrap();
            let fine_of_skewed = MeshSpec::rectangle(a, b, 2 * nx, 2 * ny).with_diagonal(rule).with_skew(psi).generate().unwrap();
            for (p, q) in skewed_fine.nodes.iter().zip(&fine_of_skewed.nodes) {
                prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
            }
            let area = fine_of_skewed.total_area();
            prop_assert!((area - a * b * psi.cos()).abs() < 1e-12 * a * b);
            for t in 0..fine_of_skewed.triangles.len() {
                prop_assert!(fine_of_skewed.signed_area(t) > 0.0);
            }
        }

        #[test]
        fn perforated_meshes_partition_the_ring(
            ratio in 0.05f64..0.4, radial in 2usize..8, blocks in 1usize..6,
        ) {
            let m = MeshSpec::perforated(1.0, ratio, radial, 8 * blocks * 2).generate().unwrap();
            let exact = 1.0 - PI * ratio * ratio;
            prop_assert!(m.triangles.iter().enumerate().all(|(t, _)| m.signed_area(t) > 0.0));
            // polygonal hole: area overshoot bounded by the chord-segment area
            let nc = (16 * blocks) as f64;
            let segment = 0.5 * ratio * ratio * (2.0 * PI - nc * (2.0 * PI / nc).sin());
            prop_assert!((m.total_area() - exact - segment).abs() < 1e-10);
        }
    }
}
