use super::{BoxDomain, CellFace, Mesh, Point3, RawFace};
use crate::error::{Result, VemError};

/// Uniform `n × n × n` hexahedral mesh of `domain`. Boundary faces are tagged
/// `x0`, `x1`, `y0`, `y1`, `z0`, `z1` after the box face they lie on.
pub fn build_structured_cube_mesh(n: usize, domain: &BoxDomain) -> Result<Mesh> {
    if n == 0 {
        return Err(VemError::Config(
            "structured mesh needs at least one cell per axis".into(),
        ));
    }
    let np = n + 1;
    let vid = |i: usize, j: usize, l: usize| i + np * (j + np * l);
    let coord = |axis: usize, i: usize| {
        let (lo, hi) = (domain.min[axis], domain.max[axis]);
        if i == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / n as f64
        }
    };

    let mut vertices = Vec::with_capacity(np * np * np);
    for l in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point3::new(coord(0, i), coord(1, j), coord(2, l)));
            }
        }
    }

    let tag = |axis: usize, plane: usize| -> Option<String> {
        let name = ["x", "y", "z"][axis];
        if plane == 0 {
            Some(format!("{name}0"))
        } else if plane == n {
            Some(format!("{name}1"))
        } else {
            None
        }
    };

    // Faces normal to axis `a` at plane index `p`, all with +a normals.
    let mut faces = Vec::with_capacity(3 * np * n * n);
    let mut x_face = vec![0usize; np * n * n];
    let mut y_face = vec![0usize; np * n * n];
    let mut z_face = vec![0usize; np * n * n];
    for i in 0..np {
        for l in 0..n {
            for j in 0..n {
                x_face[i + np * (j + n * l)] = faces.len();
                faces.push(RawFace {
                    vertices: vec![
                        vid(i, j, l),
                        vid(i, j + 1, l),
                        vid(i, j + 1, l + 1),
                        vid(i, j, l + 1),
                    ],
                    tag: tag(0, i),
                });
            }
        }
    }
    for j in 0..np {
        for l in 0..n {
            for i in 0..n {
                y_face[j + np * (i + n * l)] = faces.len();
                faces.push(RawFace {
                    vertices: vec![
                        vid(i, j, l),
                        vid(i, j, l + 1),
                        vid(i + 1, j, l + 1),
                        vid(i + 1, j, l),
                    ],
                    tag: tag(1, j),
                });
            }
        }
    }
    for l in 0..np {
        for j in 0..n {
            for i in 0..n {
                z_face[l + np * (i + n * j)] = faces.len();
                faces.push(RawFace {
                    vertices: vec![
                        vid(i, j, l),
                        vid(i + 1, j, l),
                        vid(i + 1, j + 1, l),
                        vid(i, j + 1, l),
                    ],
                    tag: tag(2, l),
                });
            }
        }
    }

    let mut cells = Vec::with_capacity(n * n * n);
    for l in 0..n {
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![
                    CellFace {
                        face: x_face[i + np * (j + n * l)],
                        outward: false,
                    },
                    CellFace {
                        face: x_face[i + 1 + np * (j + n * l)],
                        outward: true,
                    },
                    CellFace {
                        face: y_face[j + np * (i + n * l)],
                        outward: false,
                    },
                    CellFace {
                        face: y_face[j + 1 + np * (i + n * l)],
                        outward: true,
                    },
                    CellFace {
                        face: z_face[l + np * (i + n * j)],
                        outward: false,
                    },
                    CellFace {
                        face: z_face[l + 1 + np * (i + n * j)],
                        outward: true,
                    },
                ]);
            }
        }
    }
    Mesh::from_raw(vertices, faces, cells)
}
