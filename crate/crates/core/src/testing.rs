//! Small meshes shared by unit tests.

use crate::mesh::{CellFace, Mesh, Point3, RawFace};

/// A single prism over `polygon` (counter-clockwise) between `z = 0` and `height`.
pub fn prism(polygon: &[[f64; 2]], height: f64) -> Mesh {
    let n = polygon.len();
    let mut vertices: Vec<Point3> = polygon.iter().map(|p| Point3::new(p[0], p[1], 0.0)).collect();
    vertices.extend(polygon.iter().map(|p| Point3::new(p[0], p[1], height)));
    let mut faces = vec![
        RawFace {
            vertices: (0..n).rev().collect(),
            tag: Some("bottom".into()),
        },
        RawFace {
            vertices: (n..2 * n).collect(),
            tag: Some("top".into()),
        },
    ];
    for j in 0..n {
        let b = (j + 1) % n;
        faces.push(RawFace {
            vertices: vec![j, b, b + n, j + n],
            tag: Some("side".into()),
        });
    }
    let cells = vec![(0..n + 2).map(|face| CellFace { face, outward: true }).collect()];
    Mesh::from_raw(vertices, faces, cells).unwrap()
}

/// Vertices of a regular `n`-gon of radius `r` around `c`.
pub fn regular(n: usize, r: f64, c: [f64; 2]) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.3) / n as f64;
            [c[0] + r * t.cos(), c[1] + r * t.sin()]
        })
        .collect()
}

/// Same topology with every vertex mapped through `f`.
pub fn transform(mesh: &Mesh, f: impl Fn(&Point3) -> Point3) -> Mesh {
    let vertices = mesh.vertices.iter().map(f).collect();
    let faces = mesh
        .faces
        .iter()
        .map(|f| RawFace {
            vertices: f.vertices.clone(),
            tag: f.tag.clone(),
        })
        .collect();
    let cells = mesh.cells.iter().map(|c| c.faces.clone()).collect();
    Mesh::from_raw(vertices, faces, cells).unwrap()
}
