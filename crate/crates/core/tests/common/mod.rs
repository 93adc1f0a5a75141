//! Shared fixtures and independent checks for the integration tests and the
//! acceptance runner. Each `check_*` returns `Err` with a description of the
//! first violation.

#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SMatrix};

use fgplate::cli::RunConfig;
use fgplate::eigen::EigenStrategy;
use fgplate::element::{element_geometric, element_operators, element_stiffness, Formulation, MembraneResultants, Stabilization};
use fgplate::material::{
    effective_isotropic, mori_tanaka, presets, temperature_profile, FgmDefinition, ModuliPair, PhaseProperties,
    ProfileKind, SectionStiffness, ThermalState,
};
use fgplate::mesh::{boundary_sets, Mesh, MeshSpec};
use fgplate::solver::{
    apply_bcs, assemble_mass, assemble_stiffness, constrained_dofs, dof_index, modal_solve, skew_transform,
    BoundaryCondition, Dof, GlobalSystem, Prestress, SolverOptions,
};
use fgplate::sparse::CsrMatrix;

pub type Check = Result<(), String>;

pub fn rel(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

pub fn presets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets")
}

pub fn preset(name: &str) -> RunConfig {
    RunConfig::from_path(&presets_dir().join(format!("{name}.json"))).expect("bundled preset parses")
}

pub fn steel(h: f64) -> SectionStiffness {
    SectionStiffness::isotropic(210e9, 0.3, h, 7850.0, 5.0 / 6.0)
}

pub fn graded(name: &str, n: f64, h: f64) -> SectionStiffness {
    let fgm = presets::fgm(name, n, h).unwrap();
    fgplate::material::section_stiffness(&fgm, &ThermalState::default()).unwrap()
}

/// Unit square, `n x n` cells, with interior nodes moved off the grid so no
/// element is a right triangle.
pub fn distorted_square(n: usize) -> Mesh {
    let mut mesh = MeshSpec::rectangle(1.0, 1.0, n, n).generate().unwrap();
    let h = 1.0 / n as f64;
    for p in mesh.nodes.iter_mut() {
        let interior = p[0] > 1e-9 && p[0] < 1.0 - 1e-9 && p[1] > 1e-9 && p[1] < 1.0 - 1e-9;
        if interior {
            let (x, y) = (p[0], p[1]);
            p[0] += 0.23 * h * (7.1 * x + 3.3 * y).sin();
            p[1] += 0.19 * h * (5.3 * x - 4.7 * y).cos();
        }
    }
    mesh.boundary_sets = boundary_sets(&mesh, &mesh.geometry.unwrap()).unwrap();
    mesh
}

pub fn on_boundary(p: [f64; 2]) -> bool {
    p[0].abs() < 1e-9 || p[1].abs() < 1e-9 || (p[0] - 1.0).abs() < 1e-9 || (p[1] - 1.0).abs() < 1e-9
}

/// Solves `K d = 0` with `d` prescribed on boundary nodes and returns the
/// largest interior deviation from `field`.
pub fn patch_error(mesh: &Mesh, sec: &SectionStiffness, formulation: Formulation, field: impl Fn([f64; 2]) -> [f64; 5]) -> f64 {
    let opts = SolverOptions { formulation, ..SolverOptions::default() }.serial();
    let k = assemble_stiffness(mesh, sec, &opts).unwrap().to_dense();
    let exact: Vec<f64> = mesh.nodes.iter().flat_map(|&p| field(p)).collect();
    let fixed: Vec<bool> = mesh.nodes.iter().flat_map(|&p| [on_boundary(p); 5]).collect();
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| !fixed[i]).collect();
    let kff = DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]);
    let rhs = DVector::from_fn(free.len(), |i, _| {
        -(0..fixed.len()).filter(|&j| fixed[j]).map(|j| k[(free[i], j)] * exact[j]).sum::<f64>()
    });
    let d = kff.lu().solve(&rhs).expect("interior stiffness is regular");
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    free.iter().enumerate().map(|(r, &i)| (d[r] - exact[i]).abs()).fold(0.0, f64::max) / scale
}

pub fn membrane_field(p: [f64; 2]) -> [f64; 5] {
    let (x, y) = (p[0], p[1]);
    [1e-3 * (1.0 + 2.0 * x - 0.7 * y), 1e-3 * (-0.5 + 0.4 * x + 1.3 * y), 0.0, 0.0, 0.0]
}

/// Constant curvature with zero transverse shear: `w` quadratic and the
/// rotations equal to `-grad w`.
pub fn bending_field(p: [f64; 2]) -> [f64; 5] {
    let (x, y) = (p[0], p[1]);
    let (k1, k2, k3) = (1.0e-3, -0.6e-3, 0.4e-3);
    let w = 0.5 * (k1 * x * x + 2.0 * k3 * x * y + k2 * y * y);
    [0.0, 0.0, w, -(k1 * x + k3 * y), -(k3 * x + k2 * y)]
}

pub fn check_patch_tests() -> Check {
    let mesh = distorted_square(4);
    let sec = steel(0.01);
    for formulation in [Formulation::CellSmoothed, Formulation::Dsg3] {
        let e = patch_error(&mesh, &sec, formulation, membrane_field);
        if e > 1e-9 {
            return Err(format!("{formulation:?} membrane patch error {e:.3e}"));
        }
        let e = patch_error(&mesh, &sec, formulation, bending_field);
        if e > 1e-9 {
            return Err(format!("{formulation:?} bending patch error {e:.3e}"));
        }
    }
    Ok(())
}

/// Meshes used for the free-plate zero-mode check.
pub fn free_plate_meshes() -> Vec<(String, Mesh)> {
    let mut out = Vec::new();
    for (nx, ny) in [(2, 2), (4, 3), (6, 6)] {
        out.push((format!("{nx}x{ny}"), MeshSpec::rectangle(1.0, 0.8, nx, ny).generate().unwrap()));
    }
    out.push(("skew 30 6x6".into(), MeshSpec::rectangle(1.0, 1.0, 6, 6).with_skew(30f64.to_radians()).generate().unwrap()));
    out.push(("distorted 5x5".into(), distorted_square(5)));
    out.push(("perforated 3x16".into(), MeshSpec::perforated(1.0, 0.2, 3, 16).generate().unwrap()));
    out
}

/// Number of near-zero eigenvalues of the free plate and the ratio of the
/// largest of them to the first elastic one.
pub fn free_plate_spectrum(mesh: &Mesh, sec: &SectionStiffness) -> (usize, f64) {
    let opts = SolverOptions { eigen: EigenStrategy::Dense, ..SolverOptions::default() }.serial();
    let res = modal_solve(mesh, sec, &BoundaryCondition::Free, &Prestress::zero(), 10, &opts).unwrap();
    let elastic = res.omega_squared[9];
    let zero = res.omega_squared.iter().filter(|w| w.abs() < 1e-8 * elastic).count();
    let largest_zero = res.omega_squared[..zero].iter().fold(0.0f64, |m, w| m.max(w.abs()));
    (zero, largest_zero / res.omega_squared[zero])
}

pub fn check_free_plate_modes() -> Check {
    let sec = graded("Al/Al2O3", 1.0, 0.05);
    for (name, mesh) in free_plate_meshes() {
        let (zero, _) = free_plate_spectrum(&mesh, &sec);
        if zero != 6 {
            return Err(format!("{name}: {zero} zero-energy modes"));
        }
    }
    Ok(())
}

/// Voigt and Reuss bounds on a property.
pub fn voigt_reuss(pc: f64, pm: f64, vc: f64) -> (f64, f64) {
    (vc * pc + (1.0 - vc) * pm, 1.0 / (vc / pc + (1.0 - vc) / pm))
}

pub fn check_mori_tanaka() -> Check {
    for (name, (c, m)) in presets::NAMES.iter().map(|n| (*n, presets::phases(n).unwrap())) {
        let mc = c.moduli(300.0).unwrap();
        let mm = m.moduli(300.0).unwrap();
        for i in 0..=20 {
            let vc = i as f64 / 20.0;
            let eff = mori_tanaka(mc, mm, vc).unwrap();
            for (label, pc, pm, p) in [("bulk", mc.bulk, mm.bulk, eff.bulk), ("shear", mc.shear, mm.shear, eff.shear)] {
                let (upper, lower) = voigt_reuss(pc, pm, vc);
                if p > upper * (1.0 + 1e-12) || p < lower * (1.0 - 1e-12) {
                    return Err(format!("{name} {label} at vc={vc}: {p} outside [{lower}, {upper}]"));
                }
            }
        }
        let (e, nu) = effective_isotropic(mori_tanaka(mc, mm, 1.0).unwrap());
        let e_c = c.youngs_modulus(300.0).unwrap();
        if rel(e, e_c) > 1e-12 || (nu - c.poisson).abs() > 1e-12 {
            return Err(format!("{name}: ceramic end does not round-trip ({e}, {nu})"));
        }
    }
    let pair = ModuliPair::from_young_poisson(123e9, 0.27).unwrap();
    let (e, nu) = effective_isotropic(pair);
    if rel(e, 123e9) > 1e-14 || (nu - 0.27).abs() > 1e-14 {
        return Err(format!("(E, nu) round trip gave ({e}, {nu})"));
    }
    Ok(())
}

/// Largest relative variation of the heat flux `kappa(z) T'(z)` across the
/// interior of the thickness.
pub fn conduction_flux_variation(fgm: &FgmDefinition, thermal: &ThermalState) -> f64 {
    let h = fgm.thickness;
    let step = 1e-5 * h;
    let (kc, km) = (fgm.ceramic.conductivity, fgm.metal.conductivity);
    let fluxes: Vec<f64> = (1..20)
        .map(|i| {
            let z = -0.5 * h + h * i as f64 / 20.0;
            let slope = (temperature_profile(thermal, fgm, z + step).unwrap()
                - temperature_profile(thermal, fgm, z - step).unwrap())
                / (2.0 * step);
            let vc = (z / h + 0.5).powf(fgm.gradient_index);
            (km + (kc - km) * vc) * slope
        })
        .collect();
    let mean = fluxes.iter().sum::<f64>() / fluxes.len() as f64;
    fluxes.iter().map(|f| rel(*f, mean)).fold(0.0, f64::max)
}

pub fn check_conduction_residual() -> Check {
    for n in [0.5, 1.0, 2.0, 5.0] {
        let fgm = presets::fgm("Al/Al2O3", n, 0.1).unwrap();
        let thermal = ThermalState::gradient(600.0, 300.0).with_profile(ProfileKind::Exact);
        let v = conduction_flux_variation(&fgm, &thermal);
        if v > 1e-6 {
            return Err(format!("n={n}: heat flux varies by {v:.3e}"));
        }
    }
    Ok(())
}

fn cross(o: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
}

/// Shear operator of one three-node triangle from the shear-gap formula,
/// columns ordered `(u, v, w, theta_x, theta_y)` per node.
pub fn shear_gap_operator(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]) -> SMatrix<f64, 2, 15> {
    let (a, b) = (p2[0] - p1[0], p2[1] - p1[1]);
    let (d, c) = (p3[0] - p1[0], p3[1] - p1[1]);
    let area = 0.5 * cross(p1, p2, p3);
    #[rustfmt::skip]
    let m = SMatrix::<f64, 2, 15>::from_row_slice(&[
        0.0, 0.0, b - c, area, 0.0,  0.0, 0.0, c, a * c / 2.0, b * c / 2.0,  0.0, 0.0, -b, -b * d / 2.0, -b * c / 2.0,
        0.0, 0.0, d - a, 0.0, area,  0.0, 0.0, -d, -a * d / 2.0, -b * d / 2.0,  0.0, 0.0, a, a * d / 2.0, a * c / 2.0,
    ]);
    m / (2.0 * area)
}

fn linear_gradients(p: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let two_a = cross(p[0], p[1], p[2]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) / two_a, (p[k][0] - p[j][0]) / two_a];
    }
    g
}

/// Element stiffness assembled from first principles: constant membrane and
/// bending strains of the linear triangle and the area-averaged shear-gap
/// operators of the three centroid subtriangles.
pub fn reference_stiffness(p: &[[f64; 2]; 3], sec: &SectionStiffness) -> SMatrix<f64, 15, 15> {
    let g = linear_gradients(p);
    let mut bp = SMatrix::<f64, 3, 15>::zeros();
    let mut bb = SMatrix::<f64, 3, 15>::zeros();
    for i in 0..3 {
        let (gx, gy) = (g[i][0], g[i][1]);
        bp[(0, 5 * i)] = gx;
        bp[(1, 5 * i + 1)] = gy;
        bp[(2, 5 * i)] = gy;
        bp[(2, 5 * i + 1)] = gx;
        bb[(0, 5 * i + 3)] = gx;
        bb[(1, 5 * i + 4)] = gy;
        bb[(2, 5 * i + 3)] = gy;
        bb[(2, 5 * i + 4)] = gx;
    }
    let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
    let area = 0.5 * cross(p[0], p[1], p[2]);
    let mut bs = SMatrix::<f64, 2, 15>::zeros();
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let sub = shear_gap_operator(centroid, p[i], p[j]);
        let sub_area = 0.5 * cross(centroid, p[i], p[j]);
        for r in 0..2 {
            for k in 0..5 {
                let centre = sub[(r, k)] / 3.0;
                for node in 0..3 {
                    bs[(r, 5 * node + k)] += sub_area / area * centre;
                }
                bs[(r, 5 * i + k)] += sub_area / area * sub[(r, 5 + k)];
                bs[(r, 5 * j + k)] += sub_area / area * sub[(r, 10 + k)];
            }
        }
    }
    let (a, b, d): (Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) = (sec.extensional, sec.coupling, sec.bending);
    let s: Matrix2<f64> = sec.shear;
    (bp.transpose() * a * bp
        + bp.transpose() * b * bb
        + bb.transpose() * b * bp
        + bb.transpose() * d * bb
        + bs.transpose() * s * bs)
        * area
}

/// Geometric stiffness from the integrand
/// `grad(w)' N grad(w) + h^2/24 (grad(tx)' N grad(tx) + grad(ty)' N grad(ty))`.
pub fn reference_geometric(p: &[[f64; 2]; 3], n: MembraneResultants, h: f64) -> SMatrix<f64, 15, 15> {
    let g = linear_gradients(p);
    let area = 0.5 * cross(p[0], p[1], p[2]);
    let nmat = Matrix2::new(n.nxx, n.nxy, n.nxy, n.nyy);
    let mut k = SMatrix::<f64, 15, 15>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let gi = nalgebra::Vector2::new(g[i][0], g[i][1]);
            let gj = nalgebra::Vector2::new(g[j][0], g[j][1]);
            let v = (gi.transpose() * nmat * gj)[0] * area;
            k[(5 * i + 2, 5 * j + 2)] += v;
            k[(5 * i + 3, 5 * j + 3)] += h * h / 24.0 * v;
            k[(5 * i + 4, 5 * j + 4)] += h * h / 24.0 * v;
        }
    }
    k
}

pub const ORACLE_TRIANGLES: [[[f64; 2]; 3]; 3] = [
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
    [[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]],
    [[2.0, 1.0], [2.5, 1.1], [1.7, 3.0]],
];

pub fn check_element_oracles() -> Check {
    let sections = [steel(0.05), graded("Al/Al2O3", 2.0, 0.1), graded("Si3N4/SUS304", 0.5, 0.02)];
    for tri in &ORACLE_TRIANGLES {
        let ops = element_operators(tri, Formulation::CellSmoothed).map_err(|e| e.to_string())?;
        for sec in &sections {
            let k = element_stiffness(&ops, sec, Stabilization::default());
            let oracle = reference_stiffness(tri, sec);
            let e = (k - oracle).amax() / oracle.amax();
            if e > 1e-10 {
                return Err(format!("stiffness of {tri:?} differs from the oracle by {e:.3e}"));
            }
        }
        let n = MembraneResultants::new(-1.3, 0.4, 0.25);
        let kg = element_geometric(tri, n, 0.1).map_err(|e| e.to_string())?;
        let oracle = reference_geometric(tri, n, 0.1);
        let e = (kg - oracle).amax() / oracle.amax();
        if e > 1e-10 {
            return Err(format!("geometric stiffness of {tri:?} differs from the oracle by {e:.3e}"));
        }
    }
    Ok(())
}

/// Largest relative difference between the dense and Lanczos eigenvalues of
/// a clamped plate with at most 2000 free dofs.
pub fn lanczos_against_dense(mesh: &Mesh, sec: &SectionStiffness, bc: &BoundaryCondition, count: usize) -> f64 {
    let solve = |eigen| {
        let opts = SolverOptions { eigen, ..SolverOptions::default() };
        modal_solve(mesh, sec, bc, &Prestress::zero(), count, &opts).unwrap().omega_squared
    };
    let dense = solve(EigenStrategy::Dense);
    let lanczos = solve(EigenStrategy::Lanczos);
    dense.iter().zip(&lanczos).map(|(d, l)| rel(*l, *d)).fold(0.0, f64::max)
}

pub fn check_lanczos_against_dense() -> Check {
    let sec = graded("Si3N4/SUS304", 1.0, 0.1);
    for (mesh, bc) in [
        (MeshSpec::rectangle(1.0, 1.0, 12, 12).generate().unwrap(), BoundaryCondition::Ssss),
        (MeshSpec::rectangle(1.0, 0.6, 14, 8).generate().unwrap(), BoundaryCondition::Cccc),
        (MeshSpec::perforated(1.0, 0.2, 4, 24).generate().unwrap(), BoundaryCondition::Ssss),
    ] {
        let e = lanczos_against_dense(&mesh, &sec, &bc, 6);
        if e > 1e-8 {
            return Err(format!("Lanczos and dense eigenvalues differ by {e:.3e}"));
        }
    }
    Ok(())
}

/// Stiffness and mass with and without the edge transformation forced on an
/// unskewed plate, after constraints.
pub fn transform_congruence_error(mesh: &Mesh, sec: &SectionStiffness) -> f64 {
    let opts = SolverOptions::default();
    let build = || {
        let mut s = GlobalSystem::new(assemble_stiffness(mesh, sec, &opts).unwrap());
        s.mass = Some(assemble_mass(mesh, sec, &opts).unwrap());
        s
    };
    let mask = constrained_dofs(mesh, &BoundaryCondition::Ssss).unwrap();
    let plain = apply_bcs(&skew_transform(build(), mesh, false).unwrap(), &mask).unwrap();
    let forced = apply_bcs(&skew_transform(build(), mesh, true).unwrap(), &mask).unwrap();
    let diff = |a: &CsrMatrix, b: &CsrMatrix| (a.to_dense() - b.to_dense()).amax() / a.to_dense().amax();
    diff(&plain.stiffness, &forced.stiffness).max(diff(plain.mass.as_ref().unwrap(), forced.mass.as_ref().unwrap()))
}

pub fn check_transform_congruence() -> Check {
    let mesh = MeshSpec::rectangle(1.0, 1.0, 6, 6).generate().unwrap();
    let e = transform_congruence_error(&mesh, &graded("Al/Al2O3", 1.0, 0.1));
    if e > 1e-12 {
        return Err(format!("transformed system differs by {e:.3e}"));
    }
    Ok(())
}

pub fn phases_constant(e: f64, nu: f64) -> PhaseProperties {
    PhaseProperties::constant(e, nu, 1e-5, 2000.0, 10.0)
}

pub fn center_w(displacements: &[f64], node: usize) -> f64 {
    displacements[dof_index(node, Dof::W)]
}
