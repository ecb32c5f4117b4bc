//! A user-defined problem through the `Problem` trait: a reaction-diffusion
//! equation with Dirichlet data on two faces and Neumann flux elsewhere,
//! solved with both linear solvers. The system matrix is exported in
//! MatrixMarket format.
//!
//! ```text
//! cargo run --release --example custom_problem
//! ```

use vem3d::element::StabilizationConfig;
use vem3d::global::{assemble, write_matrix_market, BoundaryConditions, Problem, SolverKind, SolverOptions};
use vem3d::mesh::{build_prismatic_voronoi_mesh, BoxDomain, Point3, PrismaticVoronoiParams, Vec3};

/// `-Δu + 2u = f` with `u = exp(x) (1 + y z)`.
struct Exponential;

impl Exponential {
    fn exact(p: &Point3) -> f64 {
        p.x.exp() * (1.0 + p.y * p.z)
    }
}

impl Problem for Exponential {
    fn forcing(&self, p: &Point3) -> f64 {
        -Self::exact(p) + 2.0 * Self::exact(p)
    }

    fn dirichlet(&self, p: &Point3) -> f64 {
        Self::exact(p)
    }

    fn neumann(&self, p: &Point3, n: &Vec3) -> f64 {
        let e = p.x.exp();
        Vec3::new(e * (1.0 + p.y * p.z), e * p.z, e * p.y).dot(n)
    }

    fn reaction(&self) -> f64 {
        2.0
    }
}

fn main() -> vem3d::Result<()> {
    let mesh = build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
        n_seeds: 36,
        n_layers: 4,
        rng_seed: 2,
        lloyd_iters: 20,
        domain: BoxDomain::new([0.0, 0.0, 0.0], [2.0, 1.0, 1.0]),
    })?;
    let bc = BoundaryConditions {
        dirichlet: vec!["x0".into(), "x1".into()],
        neumann: vec!["y0".into(), "y1".into(), "z0".into(), "z1".into()],
    };
    let k = 2;
    let assembly = assemble(&mesh, k, &Exponential, &bc, &StabilizationConfig::default())?;
    println!("{} cells, {} DOFs, {} free, {} nonzeros", mesh.num_cells(), assembly.dofmap.n_dofs, assembly.dofmap.n_free, assembly.matrix.nnz());

    let mut previous: Option<Vec<f64>> = None;
    for kind in [SolverKind::Cg, SolverKind::Direct] {
        let sol = assembly.solve(&SolverOptions { kind, ..Default::default() })?;
        let mut err: f64 = 0.0;
        for (v, p) in mesh.vertices.iter().enumerate() {
            err = err.max((sol.values[assembly.dofmap.vertex(v)] - Exponential::exact(p)).abs());
        }
        println!("{kind:?}: {} iterations, residual {:.1e}, max vertex error {err:.3e}", sol.stats.iterations, sol.stats.residual);
        let values: Vec<f64> = sol.values.iter().copied().collect();
        if let Some(prev) = &previous {
            let diff = prev.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("max difference between solvers: {diff:.1e}");
        }
        previous = Some(values);
    }

    let path = std::env::temp_dir().join("vem3d_custom_problem.mtx");
    write_matrix_market(&assembly.matrix, &path)?;
    println!("matrix written to {}", path.display());
    Ok(())
}
