//! The 3D local virtual element space on a polyhedral cell.
//!
//! Cell DOFs are ordered as vertex values (cell vertex order), edge node
//! values (cell edge order, `k - 1` nodes each along the canonical edge
//! direction), face moments (`dim P_{k-2}(f)` per face, cell face order) and
//! interior moments `(1/|P|) ∫_P v m_α` for `|α| <= k - 2`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{poly_dim, poly_dim_signed, CellBasis};
use crate::error::{Result, VemError};
use crate::face::{condition_number_spd, solve_dense, solve_spd, FaceProjectors, MASS_CONDITION_WARN};
use crate::mesh::{Mesh, Point3};
use crate::quadrature::{polygon_quadrature, polyhedron_quadrature, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilizationKind {
    #[serde(rename = "dofi")]
    DofiDofi,
    #[serde(rename = "recipe")]
    DiagonalRecipe,
}

impl fmt::Display for StabilizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::DofiDofi => "dofi",
            Self::DiagonalRecipe => "recipe",
        })
    }
}

impl FromStr for StabilizationKind {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dofi" | "dofi-dofi" | "dofidofi" => Ok(Self::DofiDofi),
            "recipe" | "diagonal-recipe" | "diagonalrecipe" => Ok(Self::DiagonalRecipe),
            _ => Err(VemError::Config(format!("unknown stabilization `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationConfig {
    pub kind: StabilizationKind,
    pub tau: f64,
}

impl StabilizationConfig {
    pub fn new(kind: StabilizationKind, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(VemError::Config(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { kind, tau })
    }

    /// Diagonal stabilization weight for one DOF.
    pub fn weight(&self, h: f64, consistency_diag: f64) -> f64 {
        match self.kind {
            StabilizationKind::DofiDofi => self.tau * h,
            StabilizationKind::DiagonalRecipe => self.tau * h.max(consistency_diag),
        }
    }
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        Self {
            kind: StabilizationKind::DofiDofi,
            tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellDof {
    /// Value at a global vertex.
    Vertex(usize),
    /// Value at node `node` of a global edge.
    EdgeNode { edge: usize, node: usize },
    /// Scaled moment on a global face.
    FaceMoment { face: usize, index: usize },
    Interior(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellDofLayout {
    pub k: usize,
    /// Global vertex ids.
    pub vertices: Vec<usize>,
    /// Global edge ids.
    pub edges: Vec<usize>,
    /// Global face ids, in cell face order.
    pub faces: Vec<usize>,
    pub n_face_moments: usize,
    pub n_interior: usize,
    /// For each cell face, the cell DOF index of every face DOF.
    pub face_maps: Vec<Vec<usize>>,
}

impl CellDofLayout {
    pub fn len(&self) -> usize {
        self.vertices.len()
            + self.edges.len() * (self.k - 1)
            + self.faces.len() * self.n_face_moments
            + self.n_interior
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_node(&self, local_edge: usize, node: usize) -> usize {
        self.vertices.len() + local_edge * (self.k - 1) + node
    }

    pub fn face_moment(&self, local_face: usize, m: usize) -> usize {
        self.vertices.len() + self.edges.len() * (self.k - 1) + local_face * self.n_face_moments + m
    }

    pub fn interior(&self, m: usize) -> usize {
        self.len() - self.n_interior + m
    }

    pub fn descriptors(&self) -> Vec<CellDof> {
        let mut d: Vec<CellDof> = self.vertices.iter().map(|&v| CellDof::Vertex(v)).collect();
        for &edge in &self.edges {
            d.extend((0..self.k - 1).map(|node| CellDof::EdgeNode { edge, node }));
        }
        for &face in &self.faces {
            d.extend((0..self.n_face_moments).map(|index| CellDof::FaceMoment { face, index }));
        }
        d.extend((0..self.n_interior).map(CellDof::Interior));
        d
    }
}

pub fn cell_dof_layout(mesh: &Mesh, cell: usize, k: usize) -> CellDofLayout {
    assert!(k >= 1);
    let vertices = mesh.cell_vertices[cell].clone();
    let edges = mesh.cell_edges[cell].clone();
    let faces: Vec<usize> = mesh.cells[cell].faces.iter().map(|cf| cf.face).collect();
    let mut layout = CellDofLayout {
        k,
        vertices,
        edges,
        faces,
        n_face_moments: poly_dim_signed(k as isize - 2, 2),
        n_interior: poly_dim_signed(k as isize - 2, 3),
        face_maps: Vec::new(),
    };
    let local_of = |list: &[usize], g: usize| list.iter().position(|&x| x == g).unwrap();
    layout.face_maps = layout
        .faces
        .iter()
        .enumerate()
        .map(|(s, &f)| {
            let vs = &mesh.faces[f].vertices;
            let mut map: Vec<usize> = vs.iter().map(|&v| local_of(&layout.vertices, v)).collect();
            for &e in &mesh.face_edges[f] {
                let le = local_of(&layout.edges, e);
                map.extend((0..k - 1).map(|i| layout.edge_node(le, i)));
            }
            map.extend((0..layout.n_face_moments).map(|m| layout.face_moment(s, m)));
            map
        })
        .collect();
    layout
}

/// Positions of the pointwise cell DOFs (vertices then edge nodes).
pub fn cell_nodes(mesh: &Mesh, layout: &CellDofLayout) -> Vec<Point3> {
    let t = crate::quadrature::gauss_lobatto_internal_nodes(layout.k);
    let mut pts: Vec<Point3> = layout.vertices.iter().map(|&v| mesh.vertices[v]).collect();
    for &e in &layout.edges {
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        pts.extend(t.iter().map(|&s| pa + s * (pb - pa)));
    }
    pts
}

/// Projectors and local matrices of one cell.
#[derive(Debug, Clone)]
pub struct CellOperators {
    pub cell: usize,
    pub layout: CellDofLayout,
    pub basis: CellBasis,
    pub volume: f64,
    pub diameter: f64,
    /// `∫_P m_α m_β`.
    pub mass_poly: DMatrix<f64>,
    /// `∫_P ∇m_α · ∇m_β`.
    pub stiffness_poly: DMatrix<f64>,
    pub dof_of_monomials: DMatrix<f64>,
    /// Right-hand side of the energy projection before row replacement.
    pub energy_rhs: DMatrix<f64>,
    pub pi_nabla: DMatrix<f64>,
    pub mom_ext: DMatrix<f64>,
    pub pi0: DMatrix<f64>,
}

impl CellOperators {
    /// Cell quadrature exact to `2k + 2`.
    pub fn rule(&self, mesh: &Mesh) -> Result<QuadratureRule<3>> {
        polyhedron_quadrature(mesh, self.cell, 2 * self.layout.k + 2)
    }

    /// Consistency part `Π∇ᵀ G̃ Π∇` of the stiffness matrix.
    pub fn consistency_stiffness(&self) -> DMatrix<f64> {
        self.pi_nabla.transpose() * &self.stiffness_poly * &self.pi_nabla
    }

    /// Local stiffness matrix and the consistency diagonal `d_i`.
    pub fn stiffness(&self, stab: &StabilizationConfig) -> (DMatrix<f64>, Vec<f64>) {
        let n = self.layout.len();
        let mut k = self.consistency_stiffness();
        let d: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
        let s = DMatrix::identity(n, n) - &self.dof_of_monomials * &self.pi_nabla;
        let mut ws = s.clone();
        for (i, mut row) in ws.row_iter_mut().enumerate() {
            row *= stab.weight(self.diameter, d[i]);
        }
        k += s.transpose() * ws;
        symmetrize(&mut k);
        (k, d)
    }

    /// Largest deviation of `a_h(p, q)` from `∫ ∇p·∇q` over monomial pairs,
    /// split into the projection part and the stabilization leakage
    /// `‖Σ^{1/2} S D‖²` so that no large-entry product is formed.
    pub fn consistency_defect(&self, stab: &StabilizationConfig) -> f64 {
        let d = &self.dof_of_monomials;
        let pd = &self.pi_nabla * d;
        let proj = (pd.transpose() * &self.stiffness_poly * &pd - &self.stiffness_poly).abs().max();
        let diag = self.consistency_stiffness().diagonal();
        let mut leak = d - d * &pd;
        for (i, mut row) in leak.row_iter_mut().enumerate() {
            row *= stab.weight(self.diameter, diag[i]).sqrt();
        }
        proj + (leak.transpose() * leak).abs().max()
    }

    /// Same as [`Self::consistency_defect`] for the mass form.
    pub fn mass_consistency_defect(&self) -> f64 {
        let d = &self.dof_of_monomials;
        let pd = &self.pi0 * d;
        let proj = (pd.transpose() * &self.mass_poly * &pd - &self.mass_poly).abs().max();
        let leak = (d - d * &pd) * self.volume.sqrt();
        proj + (leak.transpose() * leak).abs().max()
    }

    /// Local mass matrix with `|P|`-weighted dofi-dofi stabilization.
    pub fn mass(&self) -> DMatrix<f64> {
        let n = self.layout.len();
        let s = DMatrix::identity(n, n) - &self.dof_of_monomials * &self.pi0;
        let mut m = self.pi0.transpose() * &self.mass_poly * &self.pi0 + self.volume * s.transpose() * s;
        symmetrize(&mut m);
        m
    }

    /// `∫_P f_h φ_i` with `f_h` the `L²` projection of `f` onto `P_k(P)`.
    pub fn load(&self, mesh: &Mesh, f: impl Fn(&Point3) -> f64) -> Result<DVector<f64>> {
        let rule = self.rule(mesh)?;
        let nk = self.basis.len();
        let mut b = DVector::zeros(nk);
        let mut m = vec![0.0; nk];
        for (q, w) in rule.iter() {
            let fx = f(&Point3::from(*q));
            self.basis.eval_into(q, &mut m);
            for a in 0..nk {
                b[a] += w * fx * m[a];
            }
        }
        let c = self.project_moments(b)?;
        Ok(self.mom_ext.tr_mul(&c))
    }

    /// Coefficients of the `L²` projection given its moments `∫_P f m_α`.
    pub fn project_moments(&self, moments: DVector<f64>) -> Result<DVector<f64>> {
        match self.mass_poly.clone().cholesky() {
            Some(ch) => Ok(ch.solve(&moments)),
            None => Err(VemError::Singular {
                what: "cell monomial mass",
                entity: format!("cell {}", self.cell),
            }),
        }
    }

    /// DOF vector of a function on the cell; `faces` as in [`compute_cell_operators`].
    pub fn interpolate(
        &self,
        mesh: &Mesh,
        faces: &[&FaceProjectors],
        f: impl Fn(&Point3) -> f64,
    ) -> Result<DVector<f64>> {
        let mut dofs = DVector::zeros(self.layout.len());
        for (i, p) in cell_nodes(mesh, &self.layout).iter().enumerate() {
            dofs[i] = f(p);
        }
        if self.layout.n_face_moments > 0 {
            for (s, fp) in faces.iter().enumerate() {
                let fd = fp.interpolate(mesh, &f);
                for m in 0..self.layout.n_face_moments {
                    dofs[self.layout.face_moment(s, m)] = fd[fp.layout.moment(m)];
                }
            }
            let rule = self.rule(mesh)?;
            let mut acc = vec![0.0; self.layout.n_interior];
            let mut m = vec![0.0; self.basis.len()];
            for (q, w) in rule.iter() {
                let fx = f(&Point3::from(*q));
                self.basis.eval_into(q, &mut m);
                for (a, mv) in acc.iter_mut().zip(&m) {
                    *a += w * fx * mv;
                }
            }
            for (j, a) in acc.into_iter().enumerate() {
                dofs[self.layout.interior(j)] = a / self.volume;
            }
        }
        Ok(dofs)
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `∫_f g ψ_i` over face DOFs, with `g_h` the `L²` projection of `g` onto `P_k(f)`.
pub fn local_neumann(mesh: &Mesh, face: &FaceProjectors, g: impl Fn(&Point3) -> f64) -> Result<DVector<f64>> {
    let frame = &mesh.face_frames[face.face];
    let rule = face.rule(mesh);
    let nk = face.basis.len();
    let mut b = DVector::zeros(nk);
    let mut m = vec![0.0; nk];
    for (q, w) in rule.iter() {
        let gx = g(&frame.to_global(q));
        face.basis.eval_into(q, &mut m);
        for a in 0..nk {
            b[a] += w * gx * m[a];
        }
    }
    let c = face
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| VemError::Singular {
            what: "face monomial mass",
            entity: format!("face {}", face.face),
        })?
        .solve(&b);
    Ok(face.mom_ext.tr_mul(&c))
}

/// Builds all projectors of `cell`; `faces[s]` belongs to the cell's `s`-th face.
pub fn compute_cell_operators(
    mesh: &Mesh,
    cell: usize,
    k: usize,
    faces: &[&FaceProjectors],
) -> Result<CellOperators> {
    let c = &mesh.cells[cell];
    let layout = cell_dof_layout(mesh, cell, k);
    let basis = CellBasis::new(c.centroid.into(), c.diameter, k);
    let nk = basis.len();
    let ndof = layout.len();
    let volume = c.volume;
    let rule = polyhedron_quadrature(mesh, cell, 2 * k + 2)?;

    let mut mass = DMatrix::zeros(nk, nk);
    let mut stiff = DMatrix::zeros(nk, nk);
    let mut m = vec![0.0; nk];
    let mut g = vec![[0.0; 3]; nk];
    for (q, w) in rule.iter() {
        basis.eval_into(q, &mut m);
        basis.grad_into(q, &mut g);
        for a in 0..nk {
            for b in a..nk {
                mass[(a, b)] += w * m[a] * m[b];
                stiff[(a, b)] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2]);
            }
        }
    }
    for a in 0..nk {
        for b in 0..a {
            mass[(a, b)] = mass[(b, a)];
            stiff[(a, b)] = stiff[(b, a)];
        }
    }

    let mut dofs_of_m = DMatrix::zeros(ndof, nk);
    for (i, p) in cell_nodes(mesh, &layout).iter().enumerate() {
        basis.eval_into(&(*p).into(), &mut m);
        for a in 0..nk {
            dofs_of_m[(i, a)] = m[a];
        }
    }
    for j in 0..layout.n_interior {
        for a in 0..nk {
            dofs_of_m[(layout.interior(j), a)] = mass[(j, a)] / volume;
        }
    }

    let mut rhs = DMatrix::zeros(nk, ndof);
    for a in 0..nk {
        for (j, coef) in basis.laplacian_terms(a) {
            rhs[(a, layout.interior(j))] -= coef * volume;
        }
    }

    let nk1_face = poly_dim(k - 1, 2);
    for (s, cf) in c.faces.iter().enumerate() {
        let fp = faces[s];
        if fp.face != cf.face || fp.layout.k != k {
            return Err(VemError::Validation(format!(
                "projectors of face {} (degree {}) passed for face {} (degree {k})",
                fp.face, fp.layout.k, cf.face
            )));
        }
        let frame = &mesh.face_frames[cf.face];
        let normal = mesh.outward_normal(cf);
        let map = &layout.face_maps[s];
        let nf = fp.basis.len();
        let face_rule = polygon_quadrature(mesh, cf.face, 2 * k + 2);

        // Cell monomials restricted to the face for the face-moment DOFs, and
        // normal derivatives tested against face monomials up to degree k - 1.
        let mut restricted = DMatrix::<f64>::zeros(nk, nf);
        let mut normal_moments = DMatrix::zeros(nk, nk1_face);
        let mut mf = vec![0.0; nf];
        for (q, w) in face_rule.iter() {
            let x: [f64; 3] = frame.to_global(q).into();
            basis.eval_into(&x, &mut m);
            basis.grad_into(&x, &mut g);
            fp.basis.eval_into(q, &mut mf);
            for a in 0..nk {
                let dn = g[a][0] * normal.x + g[a][1] * normal.y + g[a][2] * normal.z;
                for b in 0..nf {
                    restricted[(a, b)] += w * m[a] * mf[b];
                }
                for b in 0..nk1_face {
                    normal_moments[(a, b)] += w * dn * mf[b];
                }
            }
        }
        for j in 0..layout.n_face_moments {
            for a in 0..nk {
                dofs_of_m[(layout.face_moment(s, j), a)] = restricted[(a, j)] / fp.area;
            }
        }

        let h1 = fp.mass.view((0, 0), (nk1_face, nk1_face)).into_owned();
        let coeffs = solve_spd(&h1, &normal_moments.transpose(), "face mass", || {
            format!("face {}", cf.face)
        })?;
        let local = coeffs.transpose() * fp.mom_ext.rows(0, nk1_face);
        for (i_face, &i_cell) in map.iter().enumerate() {
            for a in 0..nk {
                rhs[(a, i_cell)] += local[(a, i_face)];
            }
        }
    }

    let mut lhs = stiff.clone();
    let mut fixed_rhs = rhs.clone();
    fixed_rhs.row_mut(0).fill(0.0);
    if k == 1 {
        let nv = layout.vertices.len();
        for a in 0..nk {
            lhs[(0, a)] = (0..nv).map(|i| dofs_of_m[(i, a)]).sum::<f64>() / nv as f64;
        }
        for i in 0..nv {
            fixed_rhs[(0, i)] = 1.0 / nv as f64;
        }
    } else {
        for a in 0..nk {
            lhs[(0, a)] = mass[(0, a)] / volume;
        }
        fixed_rhs[(0, layout.interior(0))] = 1.0;
    }
    let pi_nabla = solve_dense(lhs, &fixed_rhs, "cell energy projection", || format!("cell {cell}"))?;

    let n_low = layout.n_interior;
    let mut mom_ext = DMatrix::zeros(nk, ndof);
    for j in 0..n_low {
        mom_ext[(j, layout.interior(j))] = volume;
    }
    let high = mass.rows(n_low, nk - n_low) * &pi_nabla;
    mom_ext.rows_mut(n_low, nk - n_low).copy_from(&high);

    let cond = condition_number_spd(&mass);
    if cond > MASS_CONDITION_WARN {
        log::warn!("cell {cell}: monomial mass matrix condition number {cond:.3e}");
    }
    let pi0 = solve_spd(&mass, &mom_ext, "cell mass", || format!("cell {cell}"))?;

    Ok(CellOperators {
        cell,
        layout,
        basis,
        volume,
        diameter: c.diameter,
        mass_poly: mass,
        stiffness_poly: stiff,
        dof_of_monomials: dofs_of_m,
        energy_rhs: rhs,
        pi_nabla,
        mom_ext,
        pi0,
    })
}

/// Face projectors for every face of the mesh, indexed by face id.
pub fn compute_all_face_projectors(mesh: &Mesh, k: usize) -> Result<Vec<FaceProjectors>> {
    use rayon::prelude::*;
    (0..mesh.faces.len())
        .into_par_iter()
        .map(|f| crate::face::compute_face_projectors(mesh, f, k))
        .collect()
}

/// Projectors for a single cell, computing only the faces it needs.
pub fn compute_cell_operators_standalone(mesh: &Mesh, cell: usize, k: usize) -> Result<CellOperators> {
    let faces = mesh.cells[cell]
        .faces
        .iter()
        .map(|cf| crate::face::compute_face_projectors(mesh, cf.face, k))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&FaceProjectors> = faces.iter().collect();
    compute_cell_operators(mesh, cell, k, &refs)
}

/// The cell's face projectors, in cell face order, from a per-mesh table.
pub fn cell_face_projectors<'a>(mesh: &Mesh, cell: usize, all: &'a [FaceProjectors]) -> Vec<&'a FaceProjectors> {
    mesh.cells[cell].faces.iter().map(|cf| &all[cf.face]).collect()
}
