//! Quadrature on segments, polygons and polyhedra, and the Gauss–Lobatto
//! nodes used as edge degrees of freedom.
//!
//! Polygons are split into triangles fanned from the face centroid and
//! polyhedra into tetrahedra coned from the cell centroid over those face
//! triangles. Each simplex receives a collapsed (Duffy) tensor-product
//! Gauss–Legendre rule, which has strictly positive weights and arbitrary
//! exactness.

use crate::error::{Result, VemError};
use crate::mesh::{Mesh, Point3};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; D]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    // Derivative from the three-term relation; exact at interior points.
    let dp = if (1.0 - x * x).abs() > 0.0 {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    } else {
        // P_n'(±1) = (±1)^{n+1} n (n + 1) / 2
        let end = (n * (n + 1)) as f64 / 2.0;
        if x > 0.0 || n % 2 == 1 {
            end
        } else {
            -end
        }
    };
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Symmetric pair mapped from [-1, 1] to [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

/// Interior nodes of the `(k + 1)`-point Gauss–Lobatto rule on `[0, 1]`:
/// the roots of `P_k'` mapped from `[-1, 1]`, ascending.
pub fn gauss_lobatto_internal_nodes(k: usize) -> Vec<f64> {
    assert!(k >= 1, "Gauss-Lobatto order must be at least 1");
    let m = k - 1;
    let kk = (k * (k + 1)) as f64;
    let mut nodes = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev–Gauss–Lobatto initial guess.
        let mut x = -(std::f64::consts::PI * (i + 1) as f64 / k as f64).cos();
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, dp) = legendre(k, x);
            let d2p = (2.0 * x * dp - kk * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 + x);
        nodes[m - 1 - i] = 0.5 * (1.0 - x);
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.5;
    }
    nodes
}

/// `(k + 1)`-point Gauss–Lobatto rule on `[0, 1]` (endpoints included),
/// exact for polynomials of degree `2k - 1`.
pub fn gauss_lobatto(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0];
    nodes.extend(gauss_lobatto_internal_nodes(k));
    nodes.push(1.0);
    let kk = (k * (k + 1)) as f64;
    let weights = nodes
        .iter()
        .map(|&t| {
            let (p, _) = legendre(k, 2.0 * t - 1.0);
            // Half of 2 / (k (k + 1) P_k^2) for the [0, 1] interval.
            1.0 / (kk * p * p)
        })
        .collect();
    (nodes, weights)
}

fn points_for(exactness: usize) -> usize {
    exactness / 2 + 1
}

/// Collapsed rule on the reference triangle `(0,0), (1,0), (0,1)`.
pub fn reference_triangle_rule(degree: usize) -> QuadratureRule<2> {
    let (xu, wu) = gauss_legendre(points_for(degree + 1));
    let (xv, wv) = gauss_legendre(points_for(degree));
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(xu.len() * xv.len()),
        weights: Vec::with_capacity(xu.len() * xv.len()),
    };
    for (u, a) in xu.iter().zip(&wu) {
        for (v, b) in xv.iter().zip(&wv) {
            rule.points.push([*u, (1.0 - u) * v]);
            rule.weights.push(a * b * (1.0 - u));
        }
    }
    rule
}

/// Collapsed rule on the reference tetrahedron with vertices at the origin
/// and the unit axis points.
pub fn reference_tetrahedron_rule(degree: usize) -> QuadratureRule<3> {
    let (xu, wu) = gauss_legendre(points_for(degree + 2));
    let (xv, wv) = gauss_legendre(points_for(degree + 1));
    let (xw, ww) = gauss_legendre(points_for(degree));
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(xu.len() * xv.len() * xw.len()),
        weights: Vec::with_capacity(xu.len() * xv.len() * xw.len()),
    };
    for (u, a) in xu.iter().zip(&wu) {
        for (v, b) in xv.iter().zip(&wv) {
            for (w, c) in xw.iter().zip(&ww) {
                rule.points
                    .push([*u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * w]);
                rule.weights
                    .push(a * b * c * (1.0 - u) * (1.0 - u) * (1.0 - v));
            }
        }
    }
    rule
}

/// Rule on a planar face in its local frame coordinates, exact to `degree`.
pub fn polygon_quadrature(mesh: &Mesh, face: usize, degree: usize) -> QuadratureRule<2> {
    let frame = &mesh.face_frames[face];
    let local: Vec<[f64; 2]> = mesh.faces[face]
        .vertices
        .iter()
        .map(|&v| frame.to_local(&mesh.vertices[v]))
        .collect();
    polygon_rule_local(&local, frame.area, degree)
}

/// Fan rule over a polygon given in 2D coordinates, fanned from the origin.
pub fn polygon_rule_local(vertices: &[[f64; 2]], area: f64, degree: usize) -> QuadratureRule<2> {
    let reference = reference_triangle_rule(degree);
    let n = vertices.len();
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(n * reference.len()),
        weights: Vec::with_capacity(n * reference.len()),
    };
    for j in 0..n {
        let (a, b) = (vertices[j], vertices[(j + 1) % n]);
        let det = a[0] * b[1] - a[1] * b[0];
        if det.abs() * 0.5 < 1e-14 * area.abs() {
            log::warn!("skipping degenerate fan triangle {j} of polygon");
            continue;
        }
        for (p, w) in reference.iter() {
            rule.points.push([
                a[0] * p[0] + b[0] * p[1],
                a[1] * p[0] + b[1] * p[1],
            ]);
            rule.weights.push(w * det);
        }
    }
    rule
}

/// Rule on a polyhedral cell in global coordinates, exact to `degree`.
pub fn polyhedron_quadrature(mesh: &Mesh, cell: usize, degree: usize) -> Result<QuadratureRule<3>> {
    let reference = reference_tetrahedron_rule(degree);
    let c = &mesh.cells[cell];
    let apex = c.centroid;
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    for cf in &c.faces {
        let vs = &mesh.faces[cf.face].vertices;
        let fc = mesh.face_frames[cf.face].origin;
        let n = vs.len();
        for j in 0..n {
            let (mut a, mut b) = (mesh.vertices[vs[j]], mesh.vertices[vs[(j + 1) % n]]);
            if !cf.outward {
                std::mem::swap(&mut a, &mut b);
            }
            let (e1, e2, e3) = (fc - apex, a - apex, b - apex);
            let det = e1.dot(&e2.cross(&e3));
            let tol = 1e-14 * c.volume.abs();
            if det < -tol {
                return Err(VemError::Geometry {
                    cell,
                    face: cf.face,
                    message: "inverted tetrahedron in the centroid cone (cell is not star-shaped)"
                        .into(),
                });
            }
            if det.abs() / 6.0 <= tol {
                continue;
            }
            for (p, w) in reference.iter() {
                let x: Point3 = apex + p[0] * e1 + p[1] * e2 + p[2] * e3;
                rule.points.push(x.into());
                rule.weights.push(w * det);
            }
        }
    }
    Ok(rule)
}
