//! Patch test: the discrete solution reproduces `(x + y + z)^k` on any mesh.
//!
//! ```text
//! cargo run --release --example patch_test
//! ```

use vem3d::analysis::run_single;
use vem3d::element::StabilizationConfig;
use vem3d::global::SolverOptions;
use vem3d::mesh::{build_prismatic_voronoi_mesh, build_structured_cube_mesh, BoxDomain, PrismaticVoronoiParams};

fn main() -> vem3d::Result<()> {
    let meshes = [
        ("structured 2x2x2", build_structured_cube_mesh(2, &BoxDomain::unit())?),
        (
            "voronoi 16x2",
            build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
                n_seeds: 16,
                n_layers: 2,
                rng_seed: 1,
                lloyd_iters: 0,
                domain: BoxDomain::unit(),
            })?,
        ),
    ];
    println!("{:<18} {:>2} {:>10} {:>10} {:>10} {:>6}", "mesh", "k", "e_H1", "e_L2", "e_Linf", "iters");
    for (name, mesh) in &meshes {
        for k in 1..=4 {
            let r = run_single(mesh, name, 4, k, &StabilizationConfig::default(), &SolverOptions::default(), false)?;
            println!("{name:<18} {k:>2} {:>10.2e} {:>10.2e} {:>10.2e} {:>6}", r.e_h1, r.e_l2, r.e_linf, r.solve_iters);
        }
    }
    Ok(())
}
