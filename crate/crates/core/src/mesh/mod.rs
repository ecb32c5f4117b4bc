//! Conforming polyhedral meshes.
//!
//! Faces own an ordered vertex cycle whose right-hand normal points out of
//! the first incident cell. Cells reference faces together with a flag telling
//! whether the face normal is outward for that cell. Edges are derived from
//! the face cycles and always run from the lower to the higher vertex id.

mod frame;
mod io;
mod structured;
mod validate;
mod voronoi;

use std::collections::HashMap;

pub use frame::FaceFrame;
pub use io::{load_mesh, parse_mesh, parse_mesh_unchecked, write_mesh, write_mesh_to};
pub use structured::build_structured_cube_mesh;
pub use validate::{validate_mesh, CheckResult, ValidationReport};
pub use voronoi::{
    build_prismatic_voronoi_mesh, clipped_voronoi_cells, generate_prismatic_voronoi, lloyd_relax,
    polygon_area_centroid, Point2, PrismaticVoronoiParams, VoronoiMesh,
};

use crate::error::{Result, VemError};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxDomain {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn unit() -> Self {
        Self::new([0.0; 3], [1.0; 3])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.max[i] - self.min[i]).product()
    }
}

impl Default for BoxDomain {
    fn default() -> Self {
        Self::unit()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: Vec<usize>,
    pub tag: Option<String>,
    /// Incident cells; the first one sees the face normal as outward.
    pub cells: [Option<usize>; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// A face as seen from a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellFace {
    pub face: usize,
    /// True when the face's own normal points out of this cell.
    pub outward: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub faces: Vec<CellFace>,
    pub centroid: Point3,
    pub diameter: f64,
    pub volume: f64,
}

/// Raw face description used to build a [`Mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawFace {
    pub vertices: Vec<usize>,
    pub tag: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    /// Canonical edges, `[low, high]` vertex ids.
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
    /// Edge ids of each face in cycle order: entry `j` joins cycle positions `j` and `j + 1`.
    pub face_edges: Vec<Vec<usize>>,
    pub face_frames: Vec<FaceFrame>,
    /// Vertex ids of each cell, in order of first appearance.
    pub cell_vertices: Vec<Vec<usize>>,
    /// Edge ids of each cell, in order of first appearance.
    pub cell_edges: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds the mesh topology and geometric caches.
    ///
    /// Only structural errors (out-of-range indices, short faces, faces not
    /// referenced by any cell) are rejected here; the remaining invariants are
    /// checked by [`validate_mesh`].
    pub fn from_raw(
        vertices: Vec<Point3>,
        faces: Vec<RawFace>,
        cells: Vec<Vec<CellFace>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if let Some(p) = vertices
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(VemError::Validation(format!("vertex {p} is not finite")));
        }
        let mut faces: Vec<Face> = faces
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                if f.vertices.len() < 3 {
                    return Err(VemError::Validation(format!(
                        "face {i} has fewer than 3 vertices"
                    )));
                }
                if let Some(&v) = f.vertices.iter().find(|&&v| v >= nv) {
                    return Err(VemError::Validation(format!(
                        "face {i} references missing vertex {v}"
                    )));
                }
                Ok(Face {
                    vertices: f.vertices,
                    tag: f.tag,
                    cells: [None, None],
                })
            })
            .collect::<Result<_>>()?;

        let mut cells = cells;
        let mut refs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); faces.len()];
        for (c, cf) in cells.iter().enumerate() {
            if cf.len() < 4 {
                return Err(VemError::Validation(format!(
                    "cell {c} has fewer than 4 faces"
                )));
            }
            for (slot, f) in cf.iter().enumerate() {
                if f.face >= faces.len() {
                    return Err(VemError::Validation(format!(
                        "cell {c} references missing face {}",
                        f.face
                    )));
                }
                refs[f.face].push((c, slot));
            }
        }
        for (fi, r) in refs.iter().enumerate() {
            match r.len() {
                0 => {
                    return Err(VemError::Validation(format!(
                        "face {fi} is not referenced by any cell"
                    )))
                }
                1 => {
                    let (c, slot) = r[0];
                    if !cells[c][slot].outward {
                        // Normalise boundary faces so their normal leaves the domain.
                        faces[fi].vertices.reverse();
                        cells[c][slot].outward = true;
                    }
                    faces[fi].cells = [Some(c), None];
                }
                _ => {
                    // Put the cell seeing the face as outward first; more than two
                    // references is left for validation to report.
                    let mut ordered = r.clone();
                    ordered.sort_by_key(|&(c, slot)| (!cells[c][slot].outward, c));
                    faces[fi].cells = [Some(ordered[0].0), Some(ordered[1].0)];
                }
            }
        }

        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let face_edges: Vec<Vec<usize>> = faces
            .iter()
            .map(|f| {
                let n = f.vertices.len();
                (0..n)
                    .map(|j| {
                        let (a, b) = (f.vertices[j], f.vertices[(j + 1) % n]);
                        let key = [a.min(b), a.max(b)];
                        *edge_ids.entry(key).or_insert_with(|| {
                            edges.push(key);
                            edges.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();

        let face_frames: Vec<FaceFrame> = faces
            .iter()
            .map(|f| FaceFrame::new(&f.vertices, &vertices))
            .collect();

        let mut cell_vertices = Vec::with_capacity(cells.len());
        let mut cell_edges = Vec::with_capacity(cells.len());
        for cf in &cells {
            let mut vs = Vec::new();
            let mut es = Vec::new();
            for f in cf {
                for &v in &faces[f.face].vertices {
                    if !vs.contains(&v) {
                        vs.push(v);
                    }
                }
                for &e in &face_edges[f.face] {
                    if !es.contains(&e) {
                        es.push(e);
                    }
                }
            }
            cell_vertices.push(vs);
            cell_edges.push(es);
        }

        let cells = cells
            .into_iter()
            .zip(&cell_vertices)
            .map(|(cf, cv)| {
                let (centroid, volume) = cell_volume_centroid(&cf, &faces, &face_frames, &vertices);
                Cell {
                    faces: cf,
                    centroid,
                    diameter: point_set_diameter(cv.iter().map(|&v| &vertices[v])),
                    volume,
                }
            })
            .collect();

        Ok(Self {
            vertices,
            edges,
            faces,
            cells,
            face_edges,
            face_frames,
            cell_vertices,
            cell_edges,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// `|Ω|` as the sum of the cell volumes.
    pub fn domain_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Distinct boundary tags in order of first appearance.
    pub fn boundary_tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = Vec::new();
        for f in self.faces.iter().filter(|f| f.is_boundary()) {
            if let Some(t) = &f.tag {
                if !tags.contains(t) {
                    tags.push(t.clone());
                }
            }
        }
        tags
    }

    /// Unit normal of `face` pointing out of the cell that sees it as `cf`.
    pub fn outward_normal(&self, cf: &CellFace) -> Vec3 {
        let n = self.face_frames[cf.face].normal;
        if cf.outward {
            n
        } else {
            -n
        }
    }
}

/// Averaged mesh size `(|Ω| / N_P)^{1/3}`.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    (mesh.domain_volume() / mesh.num_cells() as f64).cbrt()
}

pub(crate) fn point_set_diameter<'a>(points: impl Iterator<Item = &'a Point3>) -> f64 {
    let pts: Vec<&Point3> = points.collect();
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

/// Volume and centroid from outward-oriented face fans coned to a reference
/// point.
fn cell_volume_centroid(
    cell_faces: &[CellFace],
    faces: &[Face],
    frames: &[FaceFrame],
    vertices: &[Point3],
) -> (Point3, f64) {
    let reference = vertices[faces[cell_faces[0].face].vertices[0]];
    let mut volume = 0.0;
    let mut moment = Vec3::zeros();
    for cf in cell_faces {
        let face = &faces[cf.face];
        let fc = frames[cf.face].origin;
        let n = face.vertices.len();
        for j in 0..n {
            let (mut a, mut b) = (
                vertices[face.vertices[j]],
                vertices[face.vertices[(j + 1) % n]],
            );
            if !cf.outward {
                std::mem::swap(&mut a, &mut b);
            }
            let v = (fc - reference).dot(&(a - reference).cross(&(b - reference))) / 6.0;
            volume += v;
            moment += v * ((fc.coords + a.coords + b.coords + reference.coords) / 4.0);
        }
    }
    let centroid = if volume != 0.0 {
        Point3::from(moment / volume)
    } else {
        reference
    };
    (centroid, volume)
}

/// Centroid, diameter and volume of `cell`, after checking that its surface
/// is closed and consistently oriented.
pub fn compute_cell_geometry(mesh: &Mesh, cell: usize) -> Result<(Point3, f64, f64)> {
    let mut directed: HashMap<(usize, usize), isize> = HashMap::new();
    for cf in &mesh.cells[cell].faces {
        let vs = &mesh.faces[cf.face].vertices;
        let n = vs.len();
        for j in 0..n {
            let (mut a, mut b) = (vs[j], vs[(j + 1) % n]);
            if !cf.outward {
                std::mem::swap(&mut a, &mut b);
            }
            *directed.entry((a, b)).or_default() += 1;
        }
    }
    for (&(a, b), &count) in &directed {
        let back = directed.get(&(b, a)).copied().unwrap_or(0);
        if count != 1 || back != 1 {
            return Err(VemError::Topology {
                cell,
                message: format!("edge ({a}, {b}) is not shared by exactly two oppositely oriented faces"),
            });
        }
    }
    let (centroid, volume) = cell_volume_centroid(
        &mesh.cells[cell].faces,
        &mesh.faces,
        &mesh.face_frames,
        &mesh.vertices,
    );
    let diameter = point_set_diameter(mesh.cell_vertices[cell].iter().map(|&v| &mesh.vertices[v]));
    Ok((centroid, diameter, volume))
}
