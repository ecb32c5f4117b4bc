//! Gauss–Lobatto edge nodes and the polygon/polyhedron rules on a Voronoi cell.
//!
//! ```text
//! cargo run --release --example quadrature_rules
//! ```

use vem3d::mesh::{build_prismatic_voronoi_mesh, BoxDomain, Point3, PrismaticVoronoiParams};
use vem3d::quadrature::{gauss_lobatto, gauss_lobatto_internal_nodes, polygon_quadrature, polyhedron_quadrature};

fn main() -> vem3d::Result<()> {
    for k in 1..=5 {
        println!("k = {k}: interior edge nodes {:?}", gauss_lobatto_internal_nodes(k));
    }
    let (x, w) = gauss_lobatto(4);
    let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
    println!("5-point Gauss-Lobatto on t^7: {q:.16} (exact 0.125)");

    let mesh = build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
        n_seeds: 9,
        n_layers: 1,
        rng_seed: 3,
        lloyd_iters: 10,
        domain: BoxDomain::unit(),
    })?;

    // Volumes and first moments: the centroid from quadrature must match the cached one.
    let cell = 4;
    let c = &mesh.cells[cell];
    for degree in [0, 4, 8] {
        let rule = polyhedron_quadrature(&mesh, cell, degree)?;
        let vol = rule.measure();
        let cx = rule.integrate(|p| p[0]) / vol;
        println!(
            "cell {cell}, degree {degree}: {} points, |P| = {vol:.15} (cached {:.15}), x_c = {cx:.15} (cached {:.15})",
            rule.len(),
            c.volume,
            c.centroid.x
        );
    }

    // A face rule works in the face's 2D frame; the frame maps points back to 3D.
    // On a vertical face of a unit-height prism, ∫ z² = area / 3.
    let face = c
        .faces
        .iter()
        .map(|cf| cf.face)
        .find(|&f| mesh.face_frames[f].normal.z.abs() < 1e-12)
        .unwrap();
    let frame = &mesh.face_frames[face];
    let rule = polygon_quadrature(&mesh, face, 6);
    let z2: f64 = rule.integrate(|q| {
        let p: Point3 = frame.to_global(q);
        p.z * p.z
    });
    println!("face {face}: area {:.15}, ∫ z² = {z2:.15}, area / 3 = {:.15}", rule.measure(), frame.area / 3.0);
    Ok(())
}
