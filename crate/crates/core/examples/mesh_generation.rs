//! Structured and prismatic Voronoi meshes: generation, validation and the
//! polymesh round trip.
//!
//! ```text
//! cargo run --release --example mesh_generation [output-dir]
//! ```

use std::path::PathBuf;

use vem3d::mesh::{
    build_prismatic_voronoi_mesh, build_structured_cube_mesh, load_mesh, mesh_size, validate_mesh,
    write_mesh, BoxDomain, Mesh, PrismaticVoronoiParams,
};

fn describe(name: &str, mesh: &Mesh) {
    let min_volume = mesh.cells.iter().map(|c| c.volume).fold(f64::MAX, f64::min);
    let max_faces = mesh.cells.iter().map(|c| c.faces.len()).max().unwrap_or(0);
    println!(
        "{name:<18} N_P = {:>4}  h = {:.5}  faces = {:>5}  max faces/cell = {max_faces:>2}  min |P| = {min_volume:.3e}  tags = {:?}",
        mesh.num_cells(),
        mesh_size(mesh),
        mesh.faces.len(),
        mesh.boundary_tags()
    );
}

fn main() -> vem3d::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);

    let cube = build_structured_cube_mesh(4, &BoxDomain::unit())?;
    describe("structured n=4", &cube);

    for (name, lloyd) in [("random-like", 0), ("CVT-like", 50)] {
        let mesh = build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
            n_seeds: 64,
            n_layers: 4,
            rng_seed: 7,
            lloyd_iters: lloyd,
            domain: BoxDomain::unit(),
        })?;
        describe(name, &mesh);

        let report = validate_mesh(&mesh);
        assert!(report.all_passed());
        let path = dir.join(format!("voronoi_{name}.polymesh"));
        write_mesh(&mesh, &path)?;
        let back = load_mesh(&path)?;
        assert_eq!(back.num_cells(), mesh.num_cells());
        println!("  wrote and re-read {}", path.display());
    }

    print!("{}", validate_mesh(&cube));
    Ok(())
}
