use std::f64::consts::PI;
use std::fmt;

use crate::global::{BoundaryConditions, Problem};
use crate::mesh::{Mesh, Point3, Vec3};

/// Exact solutions used by the studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    /// `sin(πx) cos(πy) cos(πz)`.
    SinCosCos,
    /// `sin(2xy) cos(z)`.
    SinXyCosZ,
    /// `(x + y + z)^k`.
    Polynomial(u32),
}

impl ExactSolution {
    pub fn value(&self, p: &Point3) -> f64 {
        match *self {
            Self::SinCosCos => (PI * p.x).sin() * (PI * p.y).cos() * (PI * p.z).cos(),
            Self::SinXyCosZ => (2.0 * p.x * p.y).sin() * p.z.cos(),
            Self::Polynomial(k) => (p.x + p.y + p.z).powi(k as i32),
        }
    }

    pub fn gradient(&self, p: &Point3) -> Vec3 {
        match *self {
            Self::SinCosCos => {
                let (sx, cx) = (PI * p.x).sin_cos();
                let (sy, cy) = (PI * p.y).sin_cos();
                let (sz, cz) = (PI * p.z).sin_cos();
                PI * Vec3::new(cx * cy * cz, -sx * sy * cz, -sx * cy * sz)
            }
            Self::SinXyCosZ => {
                let (s, c) = (2.0 * p.x * p.y).sin_cos();
                let (sz, cz) = p.z.sin_cos();
                Vec3::new(2.0 * p.y * c * cz, 2.0 * p.x * c * cz, -s * sz)
            }
            Self::Polynomial(k) => {
                let d = if k == 0 {
                    0.0
                } else {
                    k as f64 * (p.x + p.y + p.z).powi(k as i32 - 1)
                };
                Vec3::new(d, d, d)
            }
        }
    }

    /// `-Δu`.
    pub fn negative_laplacian(&self, p: &Point3) -> f64 {
        match *self {
            Self::SinCosCos => 3.0 * PI * PI * self.value(p),
            Self::SinXyCosZ => {
                (4.0 * p.x * p.x + 4.0 * p.y * p.y + 1.0) * (2.0 * p.x * p.y).sin() * p.z.cos()
            }
            Self::Polynomial(k) if k >= 2 => {
                let k = k as f64;
                -3.0 * k * (k - 1.0) * (p.x + p.y + p.z).powf(k - 2.0)
            }
            Self::Polynomial(_) => 0.0,
        }
    }
}

/// Which boundary tags carry Neumann data; all other boundary faces are Dirichlet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundarySplit {
    AllDirichlet,
    /// Neumann on the listed tags.
    Neumann(Vec<String>),
}

/// A manufactured problem `-Δu + c u = f` with data derived from an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedProblem {
    pub exact: ExactSolution,
    pub reaction: f64,
    pub boundary: BoundarySplit,
}

impl ManufacturedProblem {
    /// Test 1: sin–cos solution, Neumann data `∇u·n` on the `x` faces.
    pub fn test1() -> Self {
        Self {
            exact: ExactSolution::SinCosCos,
            reaction: 0.0,
            boundary: BoundarySplit::Neumann(vec!["x0".into(), "x1".into()]),
        }
    }

    /// Test 2: `sin(2xy) cos z` with a unit reaction term.
    pub fn test2() -> Self {
        Self {
            exact: ExactSolution::SinXyCosZ,
            reaction: 1.0,
            boundary: BoundarySplit::AllDirichlet,
        }
    }

    /// Test 3 and Test 5: sin–cos solution, Dirichlet everywhere.
    pub fn test3() -> Self {
        Self {
            exact: ExactSolution::SinCosCos,
            reaction: 0.0,
            boundary: BoundarySplit::AllDirichlet,
        }
    }

    /// Test 4 (patch test) with `u = (x + y + z)^k`.
    pub fn test4(k: u32) -> Self {
        Self {
            exact: ExactSolution::Polynomial(k),
            reaction: 0.0,
            boundary: BoundarySplit::AllDirichlet,
        }
    }

    pub fn test5() -> Self {
        Self::test3()
    }

    pub fn boundary_conditions(&self, mesh: &Mesh) -> BoundaryConditions {
        let tags = mesh.boundary_tags();
        match &self.boundary {
            BoundarySplit::AllDirichlet => BoundaryConditions {
                dirichlet: tags,
                neumann: Vec::new(),
            },
            BoundarySplit::Neumann(n) => BoundaryConditions {
                dirichlet: tags.into_iter().filter(|t| !n.contains(t)).collect(),
                neumann: n.clone(),
            },
        }
    }
}

impl Problem for ManufacturedProblem {
    fn forcing(&self, p: &Point3) -> f64 {
        self.exact.negative_laplacian(p) + self.reaction * self.exact.value(p)
    }

    fn dirichlet(&self, p: &Point3) -> f64 {
        self.exact.value(p)
    }

    fn neumann(&self, p: &Point3, n: &Vec3) -> f64 {
        self.exact.gradient(p).dot(n)
    }

    fn reaction(&self) -> f64 {
        self.reaction
    }
}

impl fmt::Display for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SinCosCos => write!(f, "sin(pi x)cos(pi y)cos(pi z)"),
            Self::SinXyCosZ => write!(f, "sin(2xy)cos(z)"),
            Self::Polynomial(k) => write!(f, "(x+y+z)^{k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(u: &ExactSolution, p: &Point3) -> Vec3 {
        let h = 1e-5;
        let mut g = Vec3::zeros();
        for d in 0..3 {
            let mut a = *p;
            let mut b = *p;
            a[d] += h;
            b[d] -= h;
            g[d] = (u.value(&a) - u.value(&b)) / (2.0 * h);
        }
        g
    }

    fn fd_neg_laplacian(u: &ExactSolution, p: &Point3) -> f64 {
        let h = 1e-4;
        let mut s = 0.0;
        for d in 0..3 {
            let mut a = *p;
            let mut b = *p;
            a[d] += h;
            b[d] -= h;
            s += (u.value(&a) - 2.0 * u.value(p) + u.value(&b)) / (h * h);
        }
        -s
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let pts = [
            Point3::new(0.1, 0.2, 0.3),
            Point3::new(0.9, 0.4, 0.75),
            Point3::new(0.5, 0.5, 0.5),
        ];
        for u in [
            ExactSolution::SinCosCos,
            ExactSolution::SinXyCosZ,
            ExactSolution::Polynomial(1),
            ExactSolution::Polynomial(3),
        ] {
            for p in &pts {
                let g = u.gradient(p);
                assert!((g - fd_gradient(&u, p)).amax() < 1e-8, "{u}");
                let l = u.negative_laplacian(p);
                assert!((l - fd_neg_laplacian(&u, p)).abs() < 1e-5 * (1.0 + l.abs()), "{u}");
            }
        }
    }

    #[test]
    fn forcing_includes_reaction() {
        let p = Point3::new(0.3, 0.6, 0.2);
        let t2 = ManufacturedProblem::test2();
        let want = (4.0 * p.x * p.x + 4.0 * p.y * p.y + 2.0) * (2.0 * p.x * p.y).sin() * p.z.cos();
        assert!((t2.forcing(&p) - want).abs() < 1e-14);
        let t1 = ManufacturedProblem::test1();
        assert!((t1.forcing(&p) - 3.0 * PI * PI * t1.exact.value(&p)).abs() < 1e-14);
    }

    #[test]
    fn neumann_is_normal_trace() {
        let t1 = ManufacturedProblem::test1();
        let p = Point3::new(0.0, 0.3, 0.8);
        let n = Vec3::new(-1.0, 0.0, 0.0);
        let want = -PI * (PI * p.y).cos() * (PI * p.z).cos();
        assert!((t1.neumann(&p, &n) - want).abs() < 1e-14);
    }
}
