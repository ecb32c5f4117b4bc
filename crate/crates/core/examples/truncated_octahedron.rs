//! Writes the truncated-octahedron test fixtures: one cell, and a 15-cell
//! cluster (a centre cell with its 8 hexagon and 6 square neighbours).
//!
//! ```text
//! cargo run --example truncated_octahedron [output-dir]
//! ```

use std::collections::HashMap;
use std::path::PathBuf;

use vem3d::mesh::{mesh_size, validate_mesh, write_mesh, CellFace, Mesh, Point3, RawFace};

type IPoint = [i64; 3];

/// Vertices are the permutations of `(0, ±1, ±2)`.
fn reference_vertices() -> Vec<IPoint> {
    let mut out = Vec::new();
    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        for s1 in [-1, 1] {
            for s2 in [-1, 1] {
                let vals = [0, s1, 2 * s2];
                let mut p = [0; 3];
                for (i, &slot) in perm.iter().enumerate() {
                    p[slot] = vals[i];
                }
                out.push(p);
            }
        }
    }
    out
}

/// Outward normals with the support value of the matching face.
fn face_normals() -> Vec<(IPoint, i64)> {
    let mut out = Vec::new();
    for d in 0..3 {
        for s in [-1, 1] {
            let mut n = [0; 3];
            n[d] = s;
            out.push((n, 2));
        }
    }
    for sx in [-1, 1] {
        for sy in [-1, 1] {
            for sz in [-1, 1] {
                out.push(([sx, sy, sz], 3));
            }
        }
    }
    out
}

fn dot(a: &IPoint, b: &IPoint) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Faces of one cell as counter-clockwise cycles seen from outside.
fn cell_faces(centre: IPoint) -> Vec<Vec<IPoint>> {
    let verts = reference_vertices();
    face_normals()
        .into_iter()
        .map(|(n, support)| {
            let mut face: Vec<IPoint> = verts.iter().filter(|v| dot(v, &n) == support).copied().collect();
            let nf = [n[0] as f64, n[1] as f64, n[2] as f64];
            let c: Vec<f64> = (0..3)
                .map(|d| face.iter().map(|v| v[d] as f64).sum::<f64>() / face.len() as f64)
                .collect();
            let u = {
                let v = &face[0];
                [v[0] as f64 - c[0], v[1] as f64 - c[1], v[2] as f64 - c[2]]
            };
            let w = [
                nf[1] * u[2] - nf[2] * u[1],
                nf[2] * u[0] - nf[0] * u[2],
                nf[0] * u[1] - nf[1] * u[0],
            ];
            let angle = |v: &IPoint| {
                let r: Vec<f64> = (0..3).map(|d| v[d] as f64 - c[d]).collect();
                let x: f64 = (0..3).map(|d| r[d] * u[d]).sum();
                let y: f64 = (0..3).map(|d| r[d] * w[d]).sum();
                y.atan2(x)
            };
            face.sort_by(|a, b| angle(a).partial_cmp(&angle(b)).unwrap());
            face.iter()
                .map(|v| [v[0] + centre[0], v[1] + centre[1], v[2] + centre[2]])
                .collect()
        })
        .collect()
}

fn build(centres: &[IPoint]) -> Mesh {
    let mut vertex_ids: HashMap<IPoint, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut face_ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut uses = Vec::new();
    let mut cells = Vec::new();
    for &c in centres {
        let mut cell = Vec::new();
        for cycle in cell_faces(c) {
            let ids: Vec<usize> = cycle
                .iter()
                .map(|p| {
                    *vertex_ids.entry(*p).or_insert_with(|| {
                        vertices.push(Point3::new(p[0] as f64, p[1] as f64, p[2] as f64));
                        vertices.len() - 1
                    })
                })
                .collect();
            let mut key = ids.clone();
            key.sort_unstable();
            match face_ids.get(&key) {
                Some(&f) => {
                    uses[f] += 1;
                    cell.push(CellFace { face: f, outward: false });
                }
                None => {
                    face_ids.insert(key, faces.len());
                    cell.push(CellFace { face: faces.len(), outward: true });
                    faces.push(ids);
                    uses.push(1);
                }
            }
        }
        cells.push(cell);
    }
    let raw = faces
        .into_iter()
        .zip(uses)
        .map(|(vertices, n)| RawFace {
            vertices,
            tag: (n == 1).then(|| "boundary".to_string()),
        })
        .collect();
    Mesh::from_raw(vertices, raw, cells).expect("fixture topology")
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    std::fs::create_dir_all(&dir).expect("create output directory");

    let mut cluster = vec![[0, 0, 0]];
    for sx in [-2, 2] {
        for sy in [-2, 2] {
            for sz in [-2, 2] {
                cluster.push([sx, sy, sz]);
            }
        }
    }
    for d in 0..3 {
        for s in [-4, 4] {
            let mut c = [0; 3];
            c[d] = s;
            cluster.push(c);
        }
    }

    for (name, centres) in [
        ("truncated_octahedron.polymesh", &cluster[..1]),
        ("truncated_octahedron_cluster.polymesh", &cluster[..]),
    ] {
        let mesh = build(centres);
        let report = validate_mesh(&mesh);
        assert!(report.all_passed(), "{report}");
        let path = dir.join(name);
        write_mesh(&mesh, &path).expect("write fixture");
        println!(
            "{}: {} cells, {} faces, {} vertices, h = {:.4}, volume = {}",
            path.display(),
            mesh.num_cells(),
            mesh.faces.len(),
            mesh.vertices.len(),
            mesh_size(&mesh),
            mesh.domain_volume()
        );
    }
}
