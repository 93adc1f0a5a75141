//! Cell-based smoothed discrete-shear-gap triangle (CS-DSG3).
//!
//! Five dofs per node in the order `u, v, w, theta_x, theta_y`; element
//! vectors stack the three nodes. Strains follow
//! `eps_p = (u_x, v_y, u_y + v_x)`, `eps_b = (tx_x, ty_y, tx_y + ty_x)` and
//! `eps_s = (tx + w_x, ty + w_y)`.
//!
//! The element is split at its centroid into three subtriangles
//! `(O,1,2)`, `(O,2,3)`, `(O,3,1)`. Each subtriangle uses the DSG3 operators
//! with the centroid as its first vertex; the centroid dofs are the mean of
//! the three field nodes and are condensed out. The smoothed operators are the
//! area-weighted mean of the three condensed subtriangle operators.

use nalgebra::{Matrix2, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::material::SectionStiffness;

pub const DOFS_PER_NODE: usize = 5;
pub const ELEMENT_DOFS: usize = 15;

pub type Mat3x15 = SMatrix<f64, 3, 15>;
pub type Mat2x15 = SMatrix<f64, 2, 15>;
pub type Mat15 = SMatrix<f64, 15, 15>;

/// Area / squared-longest-edge ratio below which a triangle is degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-12;

const U: usize = 0;
const V: usize = 1;
const W: usize = 2;
const TX: usize = 3;
const TY: usize = 4;

/// Strain operators of a single DSG3 triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTriangleOperators {
    pub membrane: Mat3x15,
    pub bending: Mat3x15,
    pub shear: Mat2x15,
    pub area: f64,
}

/// Smoothed operators and element matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub membrane: Mat3x15,
    pub bending: Mat3x15,
    pub shear: Mat2x15,
    pub area: f64,
    /// longest edge, used by the optional shear stabilization
    pub characteristic_length: f64,
}

/// Which strain operators the element uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Centroid subdivision with cell-based smoothing.
    #[default]
    CellSmoothed,
    /// Plain DSG3 on the whole element.
    Dsg3,
}

fn longest_edge_sq(v: &[[f64; 2]; 3]) -> f64 {
    let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    d(v[0], v[1]).max(d(v[1], v[2])).max(d(v[2], v[0]))
}

/// DSG3 operators of the triangle `(v1, v2, v3)`.
pub fn dsg3_operators(v1: [f64; 2], v2: [f64; 2], v3: [f64; 2]) -> Result<SubTriangleOperators> {
    let a = v2[0] - v1[0];
    let b = v2[1] - v1[1];
    let c = v3[1] - v1[1];
    let d = v3[0] - v1[0];
    let area = 0.5 * (a * c - b * d);
    let edge_sq = longest_edge_sq(&[v1, v2, v3]);
    if !(area > DEGENERACY_RATIO * edge_sq) {
        return Err(PlateError::Geometry(format!(
            "degenerate or inverted triangle (area {area:e}, longest edge^2 {edge_sq:e})"
        )));
    }
    let s = 1.0 / (2.0 * area);
    // derivative weights of the linear shape functions
    let dx = [b - c, c, -b];
    let dy = [d - a, -d, a];

    let mut membrane = Mat3x15::zeros();
    let mut bending = Mat3x15::zeros();
    for i in 0..3 {
        let o = DOFS_PER_NODE * i;
        membrane[(0, o + U)] = dx[i] * s;
        membrane[(1, o + V)] = dy[i] * s;
        membrane[(2, o + U)] = dy[i] * s;
        membrane[(2, o + V)] = dx[i] * s;
        bending[(0, o + TX)] = dx[i] * s;
        bending[(1, o + TY)] = dy[i] * s;
        bending[(2, o + TX)] = dy[i] * s;
        bending[(2, o + TY)] = dx[i] * s;
    }

    let mut shear = Mat2x15::zeros();
    let rows: [[f64; 15]; 2] = [
        [
            0.0, 0.0, b - c, area, 0.0, //
            0.0, 0.0, c, a * c / 2.0, b * c / 2.0, //
            0.0, 0.0, -b, -b * d / 2.0, -b * c / 2.0,
        ],
        [
            0.0, 0.0, d - a, 0.0, area, //
            0.0, 0.0, -d, -a * d / 2.0, -b * d / 2.0, //
            0.0, 0.0, a, a * d / 2.0, a * c / 2.0,
        ],
    ];
    for (r, row) in rows.iter().enumerate() {
        for (k, val) in row.iter().enumerate() {
            shear[(r, k)] = val * s;
        }
    }
    Ok(SubTriangleOperators { membrane, bending, shear, area })
}

fn scatter_condensed<const R: usize>(
    sub: &SMatrix<f64, R, 15>,
    field_nodes: [usize; 2],
    target: &mut SMatrix<f64, R, 15>,
    weight: f64,
) {
    // sub-triangle columns: [centroid | field_nodes[0] | field_nodes[1]]
    for r in 0..R {
        for k in 0..DOFS_PER_NODE {
            let centroid = sub[(r, k)] / 3.0;
            for node in 0..3 {
                target[(r, DOFS_PER_NODE * node + k)] += weight * centroid;
            }
            target[(r, DOFS_PER_NODE * field_nodes[0] + k)] += weight * sub[(r, DOFS_PER_NODE + k)];
            target[(r, DOFS_PER_NODE * field_nodes[1] + k)] += weight * sub[(r, 2 * DOFS_PER_NODE + k)];
        }
    }
}

/// Smoothed strain operators of the cell-based DSG3 element.
pub fn csdsg3_operators(coords: &[[f64; 2]; 3]) -> Result<ElementMatrices> {
    let whole = dsg3_operators(coords[0], coords[1], coords[2])?;
    let centroid = [
        (coords[0][0] + coords[1][0] + coords[2][0]) / 3.0,
        (coords[0][1] + coords[1][1] + coords[2][1]) / 3.0,
    ];
    let mut membrane = Mat3x15::zeros();
    let mut bending = Mat3x15::zeros();
    let mut shear = Mat2x15::zeros();
    let mut sub_area_sum = 0.0;
    for (i, j) in [(0usize, 1usize), (1, 2), (2, 0)] {
        let sub = dsg3_operators(centroid, coords[i], coords[j])?;
        let weight = sub.area / whole.area;
        scatter_condensed(&sub.membrane, [i, j], &mut membrane, weight);
        scatter_condensed(&sub.bending, [i, j], &mut bending, weight);
        scatter_condensed(&sub.shear, [i, j], &mut shear, weight);
        sub_area_sum += sub.area;
    }
    debug_assert!((sub_area_sum - whole.area).abs() <= 1e-12 * whole.area);
    Ok(ElementMatrices {
        membrane,
        bending,
        shear,
        area: whole.area,
        characteristic_length: longest_edge_sq(coords).sqrt(),
    })
}

/// Unsmoothed DSG3 operators packaged like the smoothed ones.
pub fn plain_dsg3_operators(coords: &[[f64; 2]; 3]) -> Result<ElementMatrices> {
    let op = dsg3_operators(coords[0], coords[1], coords[2])?;
    Ok(ElementMatrices {
        membrane: op.membrane,
        bending: op.bending,
        shear: op.shear,
        area: op.area,
        characteristic_length: longest_edge_sq(coords).sqrt(),
    })
}

pub fn element_operators(coords: &[[f64; 2]; 3], formulation: Formulation) -> Result<ElementMatrices> {
    match formulation {
        Formulation::CellSmoothed => csdsg3_operators(coords),
        Formulation::Dsg3 => plain_dsg3_operators(coords),
    }
}

/// Optional shear stabilization `E_s * h^2 / (h^2 + alpha * l_e^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stabilization {
    pub alpha: Option<f64>,
}

impl Stabilization {
    pub const DEFAULT_ALPHA: f64 = 0.1;

    pub fn factor(&self, thickness: f64, characteristic_length: f64) -> f64 {
        match self.alpha {
            None => 1.0,
            Some(alpha) => {
                let h2 = thickness * thickness;
                h2 / (h2 + alpha * characteristic_length * characteristic_length)
            }
        }
    }
}

/// `A_e (Bp' A Bp + Bp' B Bb + Bb' B Bp + Bb' D Bb + Bs' E Bs)`.
pub fn element_stiffness(ops: &ElementMatrices, sec: &SectionStiffness, stab: Stabilization) -> Mat15 {
    let bp = &ops.membrane;
    let bb = &ops.bending;
    let bs = &ops.shear;
    let shear: Matrix2<f64> = sec.shear * stab.factor(sec.thickness, ops.characteristic_length);
    let coupled = bp.transpose() * sec.coupling * bb;
    let k = bp.transpose() * sec.extensional * bp
        + coupled
        + coupled.transpose()
        + bb.transpose() * sec.bending * bb
        + bs.transpose() * shear * bs;
    symmetrize(k * ops.area)
}

fn symmetrize(k: Mat15) -> Mat15 {
    (k + k.transpose()) * 0.5
}

/// Consistent mass from linear shape functions, translational inertia `p` on
/// `u, v, w` and rotary inertia `I` on the rotations.
pub fn element_mass(coords: &[[f64; 2]; 3], sec: &SectionStiffness) -> Result<Mat15> {
    let area = crate::mesh::signed_area(coords[0], coords[1], coords[2]);
    if !(area > DEGENERACY_RATIO * longest_edge_sq(coords)) {
        return Err(PlateError::Geometry("degenerate triangle in mass matrix".into()));
    }
    let mut m = Mat15::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let shape = area / 12.0 * if i == j { 2.0 } else { 1.0 };
            for k in 0..DOFS_PER_NODE {
                let density = if k < 3 { sec.inertia_p } else { sec.inertia_i };
                m[(DOFS_PER_NODE * i + k, DOFS_PER_NODE * j + k)] = density * shape;
            }
        }
    }
    Ok(m)
}

/// In-plane membrane resultants `(Nxx, Nyy, Nxy)`, tension positive.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MembraneResultants {
    pub nxx: f64,
    pub nyy: f64,
    pub nxy: f64,
}

impl MembraneResultants {
    pub fn new(nxx: f64, nyy: f64, nxy: f64) -> Self {
        Self { nxx, nyy, nxy }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self::new(self.nxx * f, self.nyy * f, self.nxy * f)
    }

    pub fn plus(&self, o: &Self) -> Self {
        Self::new(self.nxx + o.nxx, self.nyy + o.nyy, self.nxy + o.nxy)
    }

    pub fn is_zero(&self) -> bool {
        self.nxx == 0.0 && self.nyy == 0.0 && self.nxy == 0.0
    }
}

/// Gradients of the three linear shape functions, `[d/dx; d/dy]`.
pub fn shape_gradients(coords: &[[f64; 2]; 3]) -> Result<SMatrix<f64, 2, 3>> {
    let op = dsg3_operators(coords[0], coords[1], coords[2])?;
    let mut g = SMatrix::<f64, 2, 3>::zeros();
    for i in 0..3 {
        g[(0, i)] = op.membrane[(0, DOFS_PER_NODE * i + U)];
        g[(1, i)] = op.membrane[(1, DOFS_PER_NODE * i + V)];
    }
    Ok(g)
}

/// Geometric stiffness: second variation of the in-plane resultant work,
/// `int N (w_a w_b) + (h^2/24) N (tx_a tx_b + ty_a ty_b) dA`.
pub fn element_geometric(coords: &[[f64; 2]; 3], resultants: MembraneResultants, h: f64) -> Result<Mat15> {
    let area = crate::mesh::signed_area(coords[0], coords[1], coords[2]);
    let g = shape_gradients(coords)?;
    let n = Matrix2::new(resultants.nxx, resultants.nxy, resultants.nxy, resultants.nyy);
    let base = g.transpose() * n * g * area;
    let rotation_weight = h * h / 24.0;
    let mut kg = Mat15::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let v = base[(i, j)];
            kg[(DOFS_PER_NODE * i + W, DOFS_PER_NODE * j + W)] = v;
            kg[(DOFS_PER_NODE * i + TX, DOFS_PER_NODE * j + TX)] = rotation_weight * v;
            kg[(DOFS_PER_NODE * i + TY, DOFS_PER_NODE * j + TY)] = rotation_weight * v;
        }
    }
    Ok(symmetrize(kg))
}

/// The six rigid-body modes of an element with nodes at `coords`.
pub fn rigid_modes(coords: &[[f64; 2]]) -> Vec<Vec<f64>> {
    let n = coords.len();
    let mut modes = vec![vec![0.0; DOFS_PER_NODE * n]; 6];
    for (i, p) in coords.iter().enumerate() {
        let o = DOFS_PER_NODE * i;
        modes[0][o + U] = 1.0;
        modes[1][o + V] = 1.0;
        modes[2][o + U] = -p[1];
        modes[2][o + V] = p[0];
        modes[3][o + W] = 1.0;
        modes[4][o + W] = p[0];
        modes[4][o + TX] = -1.0;
        modes[5][o + W] = p[1];
        modes[5][o + TY] = -1.0;
    }
    modes
}
