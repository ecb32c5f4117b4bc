//! Local stiffness and mass matrices on a single Voronoi prism, with the two
//! stabilizations.
//!
//! ```text
//! cargo run --release --example local_matrices
//! ```

use nalgebra::SymmetricEigen;
use vem3d::element::{compute_cell_operators_standalone, StabilizationConfig, StabilizationKind};
use vem3d::mesh::{build_prismatic_voronoi_mesh, BoxDomain, PrismaticVoronoiParams};

fn main() -> vem3d::Result<()> {
    let mesh = build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
        n_seeds: 12,
        n_layers: 1,
        rng_seed: 5,
        lloyd_iters: 0,
        domain: BoxDomain::unit(),
    })?;
    let cell = 0;
    println!("cell {cell}: {} faces, |P| = {:.5}, h_P = {:.5}", mesh.cells[cell].faces.len(), mesh.cells[cell].volume, mesh.cells[cell].diameter);

    for k in 1..=3 {
        let ops = compute_cell_operators_standalone(&mesh, cell, k)?;
        for kind in [StabilizationKind::DofiDofi, StabilizationKind::DiagonalRecipe] {
            let stab = StabilizationConfig::new(kind, 1.0)?;
            let (kmat, d) = ops.stiffness(&stab);
            let ev = SymmetricEigen::new(kmat.clone()).eigenvalues;
            let mut ev: Vec<f64> = ev.iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let dmax = d.iter().cloned().fold(0.0, f64::max);
            println!(
                "k = {k} {kind:>6}: N_P = {:>3}, eigenvalues {:.1e} (kernel), {:.3e} .. {:.3e}, max d_i = {dmax:.3e}, consistency defect {:.1e}",
                ops.layout.len(),
                ev[0],
                ev[1],
                ev[ev.len() - 1],
                ops.consistency_defect(&stab)
            );
        }
        let m = ops.mass();
        let ev = SymmetricEigen::new(m).eigenvalues;
        println!(
            "k = {k}   mass: smallest eigenvalue {:.3e}, consistency defect {:.1e}",
            ev.min(),
            ops.mass_consistency_defect()
        );
    }
    Ok(())
}
