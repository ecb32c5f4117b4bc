//! Face degrees of freedom and the face projectors on a hexagon of the
//! truncated octahedron.
//!
//! ```text
//! cargo run --release --example face_projectors
//! ```

use std::path::Path;

use vem3d::face::{compute_face_projectors, FaceDof};
use vem3d::mesh::load_mesh;

fn main() -> vem3d::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/truncated_octahedron.polymesh");
    let mesh = load_mesh(path)?;
    let face = (0..mesh.faces.len()).find(|&f| mesh.faces[f].vertices.len() == 6).unwrap();
    let frame = &mesh.face_frames[face];

    for k in 1..=4 {
        let fp = compute_face_projectors(&mesh, face, k)?;
        let count = |pred: fn(&FaceDof) -> bool| fp.layout.descriptors().iter().filter(|d| pred(d)).count();
        let (nv, ne, nm) = (
            count(|d| matches!(d, FaceDof::Vertex(_))),
            count(|d| matches!(d, FaceDof::EdgeNode { .. })),
            count(|d| matches!(d, FaceDof::Moment(_))),
        );

        // Project a degree-k polynomial given in 3D; both projectors must return it.
        let u = |p: &vem3d::mesh::Point3| (p.x - 2.0 * p.y + 0.5 * p.z).powi(k as i32) + 1.0;
        let dofs = fp.interpolate(&mesh, u);
        let cn: Vec<f64> = (&fp.pi_nabla * &dofs).iter().copied().collect();
        let c0: Vec<f64> = (&fp.pi0 * &dofs).iter().copied().collect();
        let mut err: f64 = 0.0;
        for (q, _) in fp.rule(&mesh).iter() {
            let exact = u(&frame.to_global(q));
            err = err.max((fp.basis.eval_poly(&cn, q) - exact).abs());
            err = err.max((fp.basis.eval_poly(&c0, q) - exact).abs());
        }
        println!(
            "k = {k}: {} DOFs ({nv} vertex, {ne} edge, {nm} moment), area {:.6}, projection error {err:.2e}",
            fp.layout.len(),
            fp.area
        );
    }
    Ok(())
}
