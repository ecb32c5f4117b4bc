//! Global DOF numbering, boundary conditions, assembly and solve.
//!
//! Global DOFs are numbered vertices first, then `k - 1` nodes per edge
//! (along the canonical low-to-high direction), then face moments, then cell
//! interior moments. Dirichlet DOFs are eliminated symmetrically: the
//! assembled matrix only couples free DOFs and the prescribed values are
//! moved to the right-hand side.

mod linear;

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::basis::{poly_dim_signed, CellBasis};
use crate::element::{
    cell_face_projectors, compute_all_face_projectors, compute_cell_operators, local_neumann,
    StabilizationConfig,
};
use crate::error::{Result, VemError};
use crate::face::FaceProjectors;
use crate::mesh::{Mesh, Point3, Vec3};

pub use linear::{solve_linear, write_matrix_market, SolveStats, SolverKind, SolverOptions};

/// Cells processed per parallel batch during assembly.
const ASSEMBLY_CHUNK: usize = 256;

/// Data of a scalar diffusion(-reaction) problem `-Δu + c u = f`.
pub trait Problem: Sync {
    fn forcing(&self, p: &Point3) -> f64;
    /// Boundary value on Dirichlet faces.
    fn dirichlet(&self, p: &Point3) -> f64;
    /// Flux `∇u·n` on Neumann faces, `n` the outward unit normal.
    fn neumann(&self, _p: &Point3, _n: &Vec3) -> f64 {
        0.0
    }
    /// Reaction coefficient `c`; the mass matrix is only assembled when non-zero.
    fn reaction(&self) -> f64 {
        0.0
    }
}

/// Boundary tags carrying Dirichlet and (non-homogeneous) Neumann data.
/// Boundary faces in neither set get homogeneous Neumann conditions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<String>,
    pub neumann: Vec<String>,
}

impl BoundaryConditions {
    pub fn all_dirichlet(mesh: &Mesh) -> Self {
        Self {
            dirichlet: mesh.boundary_tags(),
            neumann: Vec::new(),
        }
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        let known = mesh.boundary_tags();
        for t in self.dirichlet.iter().chain(&self.neumann) {
            if !known.contains(t) {
                return Err(VemError::Config(format!(
                    "unknown boundary tag `{t}` (mesh has {known:?})"
                )));
            }
        }
        if let Some(t) = self.neumann.iter().find(|t| self.dirichlet.contains(t)) {
            return Err(VemError::Config(format!(
                "tag `{t}` is both Dirichlet and Neumann"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    pub n_vertices: usize,
    pub edge_offset: usize,
    pub face_offset: usize,
    pub cell_offset: usize,
    pub n_face_moments: usize,
    pub n_interior: usize,
    pub n_dofs: usize,
    /// Global index of every local DOF of each cell.
    pub cell_dofs: Vec<Vec<usize>>,
    pub dirichlet: Vec<bool>,
    /// Boundary faces carrying Dirichlet data.
    pub dirichlet_faces: Vec<bool>,
    /// Position among the free DOFs, `None` for Dirichlet DOFs.
    pub free_index: Vec<Option<usize>>,
    pub n_free: usize,
}

impl DofMap {
    pub fn vertex(&self, v: usize) -> usize {
        v
    }

    pub fn edge_node(&self, e: usize, node: usize) -> usize {
        self.edge_offset + e * (self.k - 1) + node
    }

    pub fn face_moment(&self, f: usize, m: usize) -> usize {
        self.face_offset + f * self.n_face_moments + m
    }

    pub fn interior(&self, c: usize, m: usize) -> usize {
        self.cell_offset + c * self.n_interior + m
    }

    /// Global indices of the DOFs of `face`, in face layout order.
    pub fn face_dofs(&self, mesh: &Mesh, face: usize) -> Vec<usize> {
        let mut d: Vec<usize> = mesh.faces[face].vertices.clone();
        for &e in &mesh.face_edges[face] {
            d.extend((0..self.k - 1).map(|i| self.edge_node(e, i)));
        }
        d.extend((0..self.n_face_moments).map(|m| self.face_moment(face, m)));
        d
    }

    /// DOFs evaluated pointwise (vertices and edge nodes).
    pub fn nodal_range(&self) -> std::ops::Range<usize> {
        0..self.face_offset
    }
}

/// Numbers all DOFs and marks those on faces tagged in `dirichlet_tags`.
pub fn build_dof_map(mesh: &Mesh, k: usize, dirichlet_tags: &[String]) -> Result<DofMap> {
    if k == 0 {
        return Err(VemError::Config("polynomial degree must be at least 1".into()));
    }
    let known = mesh.boundary_tags();
    if let Some(t) = dirichlet_tags.iter().find(|t| !known.contains(t)) {
        return Err(VemError::Config(format!(
            "unknown boundary tag `{t}` (mesh has {known:?})"
        )));
    }
    let n_face_moments = poly_dim_signed(k as isize - 2, 2);
    let n_interior = poly_dim_signed(k as isize - 2, 3);
    let edge_offset = mesh.vertices.len();
    let face_offset = edge_offset + mesh.edges.len() * (k - 1);
    let cell_offset = face_offset + mesh.faces.len() * n_face_moments;
    let n_dofs = cell_offset + mesh.cells.len() * n_interior;
    let mut map = DofMap {
        k,
        n_vertices: mesh.vertices.len(),
        edge_offset,
        face_offset,
        cell_offset,
        n_face_moments,
        n_interior,
        n_dofs,
        cell_dofs: Vec::with_capacity(mesh.cells.len()),
        dirichlet: vec![false; n_dofs],
        dirichlet_faces: vec![false; mesh.faces.len()],
        free_index: Vec::new(),
        n_free: 0,
    };
    for c in 0..mesh.cells.len() {
        let mut d: Vec<usize> = mesh.cell_vertices[c].clone();
        for &e in &mesh.cell_edges[c] {
            d.extend((0..k - 1).map(|i| map.edge_node(e, i)));
        }
        for cf in &mesh.cells[c].faces {
            d.extend((0..n_face_moments).map(|m| map.face_moment(cf.face, m)));
        }
        d.extend((0..n_interior).map(|m| map.interior(c, m)));
        map.cell_dofs.push(d);
    }
    let tags: HashSet<&str> = dirichlet_tags.iter().map(String::as_str).collect();
    for (f, face) in mesh.faces.iter().enumerate() {
        let on_gamma = face.is_boundary() && face.tag.as_deref().is_some_and(|t| tags.contains(t));
        if on_gamma {
            map.dirichlet_faces[f] = true;
            for g in map.face_dofs(mesh, f) {
                map.dirichlet[g] = true;
            }
        }
    }
    let mut next = 0;
    map.free_index = map
        .dirichlet
        .iter()
        .map(|&d| {
            if d {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect();
    map.n_free = next;
    Ok(map)
}

/// Prescribed values on Dirichlet DOFs (zero elsewhere): nodal values of `r`
/// and face moments by quadrature of degree `2k + 2`.
pub fn interpolate_dirichlet(
    mesh: &Mesh,
    dofmap: &DofMap,
    faces: &[FaceProjectors],
    r: impl Fn(&Point3) -> f64,
) -> DVector<f64> {
    let mut values = DVector::zeros(dofmap.n_dofs);
    for f in (0..mesh.faces.len()).filter(|&f| dofmap.dirichlet_faces[f]) {
        let local = faces[f].interpolate(mesh, &r);
        for (i, g) in dofmap.face_dofs(mesh, f).into_iter().enumerate() {
            values[g] = local[i];
        }
    }
    values
}

/// Polynomial projections of one cell, kept for post-processing.
#[derive(Debug, Clone)]
pub struct CellProjection {
    pub basis: CellBasis,
    pub pi_nabla: DMatrix<f64>,
    pub pi0: DMatrix<f64>,
}

/// Free-DOF linear system after symmetric Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub dofmap: DofMap,
    pub matrix: CsrMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Full-length vector holding the prescribed Dirichlet values.
    pub prescribed: DVector<f64>,
    pub cells: Vec<CellProjection>,
}

struct LocalContribution {
    matrix: DMatrix<f64>,
    load: DVector<f64>,
    projection: CellProjection,
}

/// Assembles `a_h(u, v) + c m_h(u, v) = (f_h, v) + (g_h, v)_{Γ'}` on the free DOFs.
///
/// Cells are processed in parallel batches and scattered in cell order, so
/// the result does not depend on the number of threads.
pub fn assemble(
    mesh: &Mesh,
    k: usize,
    problem: &dyn Problem,
    bc: &BoundaryConditions,
    stab: &StabilizationConfig,
) -> Result<Assembly> {
    bc.check(mesh)?;
    let dofmap = build_dof_map(mesh, k, &bc.dirichlet)?;
    let faces = compute_all_face_projectors(mesh, k)?;
    let prescribed = interpolate_dirichlet(mesh, &dofmap, &faces, |p| problem.dirichlet(p));
    let reaction = problem.reaction();

    let mut coo = CooMatrix::new(dofmap.n_free, dofmap.n_free);
    let mut rhs = DVector::zeros(dofmap.n_free);
    let mut cells = Vec::with_capacity(mesh.cells.len());
    let ids: Vec<usize> = (0..mesh.cells.len()).collect();
    for chunk in ids.chunks(ASSEMBLY_CHUNK) {
        let locals: Vec<LocalContribution> = chunk
            .par_iter()
            .map(|&c| {
                let refs = cell_face_projectors(mesh, c, &faces);
                let ops = compute_cell_operators(mesh, c, k, &refs)?;
                let (mut m, _) = ops.stiffness(stab);
                if reaction != 0.0 {
                    m += ops.mass() * reaction;
                }
                let load = ops.load(mesh, |p| problem.forcing(p))?;
                Ok(LocalContribution {
                    matrix: m,
                    load,
                    projection: CellProjection {
                        basis: ops.basis,
                        pi_nabla: ops.pi_nabla,
                        pi0: ops.pi0,
                    },
                })
            })
            .collect::<Result<_>>()?;
        for (&c, local) in chunk.iter().zip(locals) {
            let dofs = &dofmap.cell_dofs[c];
            for (i, &gi) in dofs.iter().enumerate() {
                let Some(fi) = dofmap.free_index[gi] else {
                    continue;
                };
                rhs[fi] += local.load[i];
                for (j, &gj) in dofs.iter().enumerate() {
                    let v = local.matrix[(i, j)];
                    match dofmap.free_index[gj] {
                        Some(fj) => coo.push(fi, fj, v),
                        None => rhs[fi] -= v * prescribed[gj],
                    }
                }
            }
            cells.push(local.projection);
        }
    }

    let neumann: HashSet<&str> = bc.neumann.iter().map(String::as_str).collect();
    for (f, face) in mesh.faces.iter().enumerate() {
        if !face.is_boundary() || !face.tag.as_deref().is_some_and(|t| neumann.contains(t)) {
            continue;
        }
        let n = mesh.face_frames[f].normal;
        let local = local_neumann(mesh, &faces[f], |p| problem.neumann(p, &n))?;
        for (i, g) in dofmap.face_dofs(mesh, f).into_iter().enumerate() {
            if let Some(fi) = dofmap.free_index[g] {
                rhs[fi] += local[i];
            }
        }
    }

    Ok(Assembly {
        matrix: CsrMatrix::from(&coo),
        rhs,
        prescribed,
        cells,
        dofmap,
    })
}

/// Full DOF vector together with solver statistics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: DVector<f64>,
    pub stats: SolveStats,
}

impl Assembly {
    /// Solves the free system and restores the prescribed values.
    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution> {
        let (free, stats) = solve_linear(&self.matrix, &self.rhs, opts)?;
        let mut values = self.prescribed.clone();
        for (g, fi) in self.dofmap.free_index.iter().enumerate() {
            if let Some(fi) = fi {
                values[g] = free[*fi];
            }
        }
        Ok(Solution { values, stats })
    }

    /// Local DOF values of cell `c`.
    pub fn cell_values(&self, solution: &Solution, c: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.dofmap.cell_dofs[c].len(),
            self.dofmap.cell_dofs[c].iter().map(|&g| solution.values[g]),
        )
    }
}
