//! The enhanced 2D virtual element space on a single planar face.
//!
//! Degrees of freedom are ordered as vertex values (face cycle order), edge
//! Gauss–Lobatto node values (cycle order; nodes ascending along the
//! canonical low-to-high vertex direction), then scaled interior moments
//! `(1/|E|) ∫_E v m_β` for `|β| <= k - 2` in graded-lex order.
//!
//! All projector matrices map a face DOF vector to coefficients in the face
//! monomial basis centred at the face centroid and scaled by the face
//! diameter, in local frame coordinates.

use nalgebra::{DMatrix, DVector};

use crate::basis::{poly_dim_signed, FaceBasis};
use crate::error::{Result, VemError};
use crate::mesh::{Mesh, Point3};
use crate::quadrature::{gauss_lobatto, gauss_lobatto_internal_nodes, polygon_quadrature, QuadratureRule};

/// Condition number of a monomial mass matrix above which a warning is logged.
pub const MASS_CONDITION_WARN: f64 = 1e12;

/// One face degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceDof {
    /// Value at cycle position `j`.
    Vertex(usize),
    /// Value at the `node`-th interior Gauss–Lobatto point of cycle edge `edge`.
    EdgeNode { edge: usize, node: usize },
    /// Scaled moment against the `index`-th face monomial.
    Moment(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceDofLayout {
    pub k: usize,
    pub n_vertices: usize,
    pub n_moments: usize,
}

impl FaceDofLayout {
    pub fn new(n_vertices: usize, k: usize) -> Self {
        assert!(k >= 1);
        Self {
            k,
            n_vertices,
            n_moments: poly_dim_signed(k as isize - 2, 2),
        }
    }

    pub fn len(&self) -> usize {
        self.n_vertices * self.k + self.n_moments
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertex(&self, j: usize) -> usize {
        j
    }

    pub fn edge_node(&self, edge: usize, node: usize) -> usize {
        self.n_vertices + edge * (self.k - 1) + node
    }

    pub fn moment(&self, m: usize) -> usize {
        self.n_vertices * self.k + m
    }

    pub fn descriptors(&self) -> Vec<FaceDof> {
        let mut d: Vec<FaceDof> = (0..self.n_vertices).map(FaceDof::Vertex).collect();
        for edge in 0..self.n_vertices {
            for node in 0..self.k - 1 {
                d.push(FaceDof::EdgeNode { edge, node });
            }
        }
        d.extend((0..self.n_moments).map(FaceDof::Moment));
        d
    }
}

/// DOF layout of `face` for degree `k`.
pub fn face_dof_layout(mesh: &Mesh, face: usize, k: usize) -> FaceDofLayout {
    FaceDofLayout::new(mesh.faces[face].vertices.len(), k)
}

/// Global positions of the pointwise face DOFs (vertices, then edge nodes),
/// in layout order.
pub fn face_nodes(mesh: &Mesh, face: usize, k: usize) -> Vec<Point3> {
    let vs = &mesh.faces[face].vertices;
    let n = vs.len();
    let t = gauss_lobatto_internal_nodes(k);
    let mut pts: Vec<Point3> = vs.iter().map(|&v| mesh.vertices[v]).collect();
    for j in 0..n {
        let (a, b) = (vs[j], vs[(j + 1) % n]);
        let (lo, hi) = (mesh.vertices[a.min(b)], mesh.vertices[a.max(b)]);
        for &s in &t {
            pts.push(lo + s * (hi - lo));
        }
    }
    pts
}

/// Projectors and auxiliary matrices of one face.
#[derive(Debug, Clone)]
pub struct FaceProjectors {
    pub face: usize,
    pub layout: FaceDofLayout,
    pub basis: FaceBasis,
    pub area: f64,
    /// `∫_E m_α m_β`.
    pub mass: DMatrix<f64>,
    /// `∫_E ∇m_α · ∇m_β` without the constant-fixing row.
    pub stiffness: DMatrix<f64>,
    /// DOFs of each monomial, `N_E × dim P_k`.
    pub dof_of_monomials: DMatrix<f64>,
    /// Right-hand side of the energy projection before row replacement.
    pub energy_rhs: DMatrix<f64>,
    pub pi_nabla: DMatrix<f64>,
    /// `∫_E v m_β` for all `|β| <= k`.
    pub mom_ext: DMatrix<f64>,
    pub pi0: DMatrix<f64>,
}

impl FaceProjectors {
    /// Face quadrature (local coordinates) exact to `2k + 2`.
    pub fn rule(&self, mesh: &Mesh) -> QuadratureRule<2> {
        polygon_quadrature(mesh, self.face, 2 * self.layout.k + 2)
    }

    /// DOF vector of a function given pointwise in global coordinates.
    pub fn interpolate(&self, mesh: &Mesh, f: impl Fn(&Point3) -> f64) -> DVector<f64> {
        let k = self.layout.k;
        let nodes = face_nodes(mesh, self.face, k);
        let mut dofs = DVector::zeros(self.layout.len());
        for (i, p) in nodes.iter().enumerate() {
            dofs[i] = f(p);
        }
        if self.layout.n_moments > 0 {
            let frame = &mesh.face_frames[self.face];
            let rule = self.rule(mesh);
            let mut m = vec![0.0; self.basis.len()];
            let mut acc = vec![0.0; self.layout.n_moments];
            for (q, w) in rule.iter() {
                let fx = f(&frame.to_global(q));
                self.basis.eval_into(q, &mut m);
                for (a, mv) in acc.iter_mut().zip(&m) {
                    *a += w * fx * mv;
                }
            }
            for (j, a) in acc.into_iter().enumerate() {
                dofs[self.layout.moment(j)] = a / self.area;
            }
        }
        dofs
    }
}

pub(crate) fn condition_number_spd(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `lhs · x = rhs` with row/column equilibration, partial pivoting and
/// one step of iterative refinement.
pub(crate) fn solve_dense(
    lhs: DMatrix<f64>,
    rhs: &DMatrix<f64>,
    what: &'static str,
    entity: impl FnOnce() -> String,
) -> Result<DMatrix<f64>> {
    let n = lhs.nrows();
    let row: Vec<f64> = (0..n).map(|i| 1.0 / lhs.row(i).amax().max(f64::MIN_POSITIVE)).collect();
    let mut scaled = lhs.clone();
    for i in 0..n {
        scaled.row_mut(i).scale_mut(row[i]);
    }
    let col: Vec<f64> = (0..n).map(|j| 1.0 / scaled.column(j).amax().max(f64::MIN_POSITIVE)).collect();
    for j in 0..n {
        scaled.column_mut(j).scale_mut(col[j]);
    }
    let lu = scaled.lu();
    let solve = |b: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let mut b = b.clone();
        for i in 0..n {
            b.row_mut(i).scale_mut(row[i]);
        }
        let mut y = lu.solve(&b)?;
        for j in 0..n {
            y.row_mut(j).scale_mut(col[j]);
        }
        Some(y)
    };
    let refined = solve(rhs).and_then(|x| {
        let dx = solve(&(rhs - &lhs * &x))?;
        Some(x + dx)
    });
    refined
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| VemError::Singular {
            what,
            entity: entity(),
        })
}

/// Solves with a symmetric positive definite matrix after Jacobi scaling,
/// with one step of iterative refinement.
pub(crate) fn solve_spd(
    lhs: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    what: &'static str,
    entity: impl FnOnce() -> String,
) -> Result<DMatrix<f64>> {
    let n = lhs.nrows();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / lhs[(i, i)].abs().sqrt().max(f64::MIN_POSITIVE)).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| lhs[(i, j)] * d[i] * d[j]);
    let Some(ch) = scaled.cholesky() else {
        return solve_dense(lhs.clone(), rhs, what, entity);
    };
    let solve = |b: &DMatrix<f64>| {
        let mut b = b.clone();
        for i in 0..n {
            b.row_mut(i).scale_mut(d[i]);
        }
        let mut y = ch.solve(&b);
        for i in 0..n {
            y.row_mut(i).scale_mut(d[i]);
        }
        y
    };
    let mut x = solve(rhs);
    let residual = rhs - lhs * &x;
    x += solve(&residual);
    Ok(x)
}

/// Builds every face matrix: monomial mass and stiffness, `Π∇_E`, the
/// moment extension, and `Π⁰_E`.
pub fn compute_face_projectors(mesh: &Mesh, face: usize, k: usize) -> Result<FaceProjectors> {
    let frame = &mesh.face_frames[face];
    let layout = face_dof_layout(mesh, face, k);
    let basis = FaceBasis::new([0.0, 0.0], frame.diameter, k);
    let nk = basis.len();
    let ndof = layout.len();
    let area = frame.area;
    let rule = polygon_quadrature(mesh, face, 2 * k + 2);

    let mut mass = DMatrix::zeros(nk, nk);
    let mut stiffness = DMatrix::zeros(nk, nk);
    let mut m = vec![0.0; nk];
    let mut g = vec![[0.0; 2]; nk];
    for (q, w) in rule.iter() {
        basis.eval_into(q, &mut m);
        basis.grad_into(q, &mut g);
        for a in 0..nk {
            for b in a..nk {
                mass[(a, b)] += w * m[a] * m[b];
                stiffness[(a, b)] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    for a in 0..nk {
        for b in 0..a {
            mass[(a, b)] = mass[(b, a)];
            stiffness[(a, b)] = stiffness[(b, a)];
        }
    }
    if let Some(w) = rule.weights.iter().find(|w| !w.is_finite()) {
        return Err(VemError::Geometry {
            cell: usize::MAX,
            face,
            message: format!("non-finite quadrature weight {w}"),
        });
    }

    let vs = &mesh.faces[face].vertices;
    let n = vs.len();
    let local_vertices: Vec<[f64; 2]> = vs.iter().map(|&v| frame.to_local(&mesh.vertices[v])).collect();
    let nodes: Vec<[f64; 2]> = face_nodes(mesh, face, k)
        .iter()
        .map(|p| frame.to_local(p))
        .collect();

    let mut dofs_of_m = DMatrix::zeros(ndof, nk);
    for (i, p) in nodes.iter().enumerate() {
        basis.eval_into(p, &mut m);
        for a in 0..nk {
            dofs_of_m[(i, a)] = m[a];
        }
    }
    for j in 0..layout.n_moments {
        for a in 0..nk {
            dofs_of_m[(layout.moment(j), a)] = mass[(j, a)] / area;
        }
    }

    // Integration by parts: B_{αi} = -∫ Δm_α φ_i + ∫_∂E ∂_n m_α φ_i.
    let mut rhs = DMatrix::zeros(nk, ndof);
    for a in 0..nk {
        for (j, c) in basis.laplacian_terms(a) {
            rhs[(a, layout.moment(j))] -= c * area;
        }
    }
    let (gl_t, gl_w) = gauss_lobatto(k);
    for j in 0..n {
        let (p, q) = (local_vertices[j], local_vertices[(j + 1) % n]);
        let t = [q[0] - p[0], q[1] - p[1]];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        let normal = [t[1] / len, -t[0] / len];
        let forward = vs[j] < vs[(j + 1) % n];
        for (i, (&s, &w)) in gl_t.iter().zip(&gl_w).enumerate() {
            let x = [p[0] + s * t[0], p[1] + s * t[1]];
            let dof = if i == 0 {
                layout.vertex(j)
            } else if i == k {
                layout.vertex((j + 1) % n)
            } else if forward {
                layout.edge_node(j, i - 1)
            } else {
                layout.edge_node(j, k - 1 - i)
            };
            basis.grad_into(&x, &mut g);
            for a in 0..nk {
                rhs[(a, dof)] += len * w * (g[a][0] * normal[0] + g[a][1] * normal[1]);
            }
        }
    }

    let mut lhs = stiffness.clone();
    let mut fixed_rhs = rhs.clone();
    fixed_rhs.row_mut(0).fill(0.0);
    if k == 1 {
        for a in 0..nk {
            lhs[(0, a)] = local_vertices
                .iter()
                .map(|v| basis.eval(v)[a])
                .sum::<f64>()
                / n as f64;
        }
        for j in 0..n {
            fixed_rhs[(0, layout.vertex(j))] = 1.0 / n as f64;
        }
    } else {
        for a in 0..nk {
            lhs[(0, a)] = mass[(0, a)] / area;
        }
        fixed_rhs[(0, layout.moment(0))] = 1.0;
    }
    let pi_nabla = solve_dense(lhs, &fixed_rhs, "face energy projection", || {
        format!("face {face}")
    })?;

    let n_low = layout.n_moments;
    let mut mom_ext = DMatrix::zeros(nk, ndof);
    for j in 0..n_low {
        mom_ext[(j, layout.moment(j))] = area;
    }
    let high = mass.rows(n_low, nk - n_low) * &pi_nabla;
    mom_ext.rows_mut(n_low, nk - n_low).copy_from(&high);

    let cond = condition_number_spd(&mass);
    if cond > MASS_CONDITION_WARN {
        log::warn!("face {face}: monomial mass matrix condition number {cond:.3e}");
    }
    let pi0 = solve_spd(&mass, &mom_ext, "face mass", || format!("face {face}"))?;

    Ok(FaceProjectors {
        face,
        layout,
        basis,
        area,
        mass,
        stiffness,
        dof_of_monomials: dofs_of_m,
        energy_rhs: rhs,
        pi_nabla,
        mom_ext,
        pi0,
    })
}

/// Convenience wrappers matching the individual construction steps.
pub fn compute_face_pi_nabla(mesh: &Mesh, face: usize, k: usize) -> Result<DMatrix<f64>> {
    compute_face_projectors(mesh, face, k).map(|p| p.pi_nabla)
}

pub fn compute_face_moment_extension(mesh: &Mesh, face: usize, k: usize) -> Result<DMatrix<f64>> {
    compute_face_projectors(mesh, face, k).map(|p| p.mom_ext)
}

pub fn compute_face_pi0(mesh: &Mesh, face: usize, k: usize) -> Result<DMatrix<f64>> {
    compute_face_projectors(mesh, face, k).map(|p| p.pi0)
}
