use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen};

use super::{Mesh, Vec3};

/// Relative planarity tolerance in units of the face diameter.
pub const PLANARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn first_failure(&self) -> Option<String> {
        self.checks
            .iter()
            .find(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.failures.first().cloned().unwrap_or_default()))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<14} {}",
                c.name,
                if c.passed { "ok" } else { "FAILED" }
            )?;
            for msg in c.failures.iter().take(5) {
                writeln!(f, "    {msg}")?;
            }
            if c.failures.len() > 5 {
                writeln!(f, "    ... {} more", c.failures.len() - 5)?;
            }
        }
        Ok(())
    }
}

fn check(name: &'static str, failures: Vec<String>) -> CheckResult {
    CheckResult {
        name,
        passed: failures.is_empty(),
        failures,
    }
}

/// Runs every structural and geometric check and reports them individually.
/// Star-shapedness is not checked.
pub fn validate_mesh(mesh: &Mesh) -> ValidationReport {
    ValidationReport {
        checks: vec![
            check("conformity", conformity(mesh)),
            check("planarity", planarity(mesh)),
            check("orientation", orientation(mesh)),
            check("volumes", volumes(mesh)),
            check("boundary_tags", boundary_tags(mesh)),
        ],
    }
}

fn conformity(mesh: &Mesh) -> Vec<String> {
    let mut failures = Vec::new();
    let mut refs = vec![0usize; mesh.faces.len()];
    for c in &mesh.cells {
        for cf in &c.faces {
            refs[cf.face] += 1;
        }
    }
    for (i, &r) in refs.iter().enumerate() {
        if r > 2 {
            failures.push(format!("face {i} is shared by {r} cells"));
        }
    }

    let mut by_vertex_set: HashMap<Vec<usize>, usize> = HashMap::new();
    for (i, f) in mesh.faces.iter().enumerate() {
        let mut key = f.vertices.clone();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            failures.push(format!("face {i} repeats a vertex"));
        }
        if let Some(j) = by_vertex_set.insert(key, i) {
            failures.push(format!(
                "faces {j} and {i} cover the same vertices with separate cycles"
            ));
        }
    }

    for (ci, c) in mesh.cells.iter().enumerate() {
        let mut count: HashMap<usize, usize> = HashMap::new();
        for cf in &c.faces {
            for &e in &mesh.face_edges[cf.face] {
                *count.entry(e).or_default() += 1;
            }
        }
        if let Some((&e, &n)) = count.iter().find(|(_, &n)| n != 2) {
            failures.push(format!(
                "cell {ci}: edge {:?} belongs to {n} of its faces",
                mesh.edges[e]
            ));
        }
        let (v, e, f) = (
            mesh.cell_vertices[ci].len() as isize,
            mesh.cell_edges[ci].len() as isize,
            c.faces.len() as isize,
        );
        if v - e + f != 2 {
            failures.push(format!("cell {ci}: Euler characteristic {}", v - e + f));
        }
    }

    // The boundary surface must be closed: every boundary directed edge is
    // matched by its reverse on another boundary face.
    let mut directed: BTreeMap<(usize, usize), isize> = BTreeMap::new();
    for f in mesh.faces.iter().filter(|f| f.is_boundary()) {
        let n = f.vertices.len();
        for j in 0..n {
            let (a, b) = (f.vertices[j], f.vertices[(j + 1) % n]);
            *directed.entry((a, b)).or_default() += 1;
        }
    }
    for (&(a, b), &n) in &directed {
        if n != 1 || directed.get(&(b, a)).copied().unwrap_or(0) != 1 {
            failures.push(format!("boundary surface is open or folded at edge ({a}, {b})"));
            break;
        }
    }
    failures
}

fn planarity(mesh: &Mesh) -> Vec<String> {
    let mut failures = Vec::new();
    for (i, f) in mesh.faces.iter().enumerate() {
        let pts: Vec<Vec3> = f.vertices.iter().map(|&v| mesh.vertices[v].coords).collect();
        let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
        let mut cov = Matrix3::zeros();
        for p in &pts {
            let d = p - mean;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let imin = eig.eigenvalues.imin();
        let normal = eig.eigenvectors.column(imin).into_owned();
        let dev = pts
            .iter()
            .map(|p| (p - mean).dot(&normal).abs())
            .fold(0.0, f64::max);
        let hf = mesh.face_frames[i].diameter;
        if dev > PLANARITY_TOL * hf {
            failures.push(format!(
                "face {i}: vertex deviates {dev:.3e} from its plane (limit {:.3e})",
                PLANARITY_TOL * hf
            ));
        }
    }
    failures
}

fn orientation(mesh: &Mesh) -> Vec<String> {
    let mut failures = Vec::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        if let [Some(a), Some(b)] = f.cells {
            let flag = |c: usize| {
                mesh.cells[c]
                    .faces
                    .iter()
                    .find(|cf| cf.face == fi)
                    .map(|cf| cf.outward)
            };
            if flag(a) == flag(b) {
                failures.push(format!(
                    "face {fi}: cells {a} and {b} induce the same orientation"
                ));
            }
        }
    }
    for (ci, c) in mesh.cells.iter().enumerate() {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for cf in &c.faces {
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
        if directed.values().any(|&n| n != 1) {
            failures.push(format!("cell {ci}: faces are not consistently oriented"));
        }
    }
    failures
}

fn volumes(mesh: &Mesh) -> Vec<String> {
    mesh.cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !(c.volume > 0.0))
        .map(|(i, c)| format!("cell {i}: volume {:.6e}", c.volume))
        .collect()
}

fn boundary_tags(mesh: &Mesh) -> Vec<String> {
    mesh.faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_boundary() && f.tag.is_none())
        .map(|(i, _)| {
            format!("unreferenced boundary face {i}: used by a single cell but carries no tag")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_cube_mesh, BoxDomain, CellFace, Mesh, RawFace};

    fn raw(m: &Mesh) -> (Vec<RawFace>, Vec<Vec<CellFace>>) {
        (
            m.faces
                .iter()
                .map(|f| RawFace {
                    vertices: f.vertices.clone(),
                    tag: f.tag.clone(),
                })
                .collect(),
            m.cells.iter().map(|c| c.faces.clone()).collect(),
        )
    }

    #[test]
    fn structured_mesh_passes() {
        for n in 1..4 {
            let m = build_structured_cube_mesh(n, &BoxDomain::unit()).unwrap();
            let r = validate_mesh(&m);
            assert!(r.all_passed(), "{r}");
        }
    }

    #[test]
    fn off_plane_vertex_detected() {
        let mut m = build_structured_cube_mesh(1, &BoxDomain::unit()).unwrap();
        let hf = m.face_frames[0].diameter;
        let v = m.faces[0].vertices[0];
        let n = m.face_frames[0].normal;
        m.vertices[v] += 1e-3 * hf * n;
        let (f, c) = raw(&m);
        let moved = Mesh::from_raw(m.vertices, f, c).unwrap();
        let r = validate_mesh(&moved);
        assert!(!r.check("planarity").unwrap().passed);
    }

    #[test]
    fn duplicated_shared_face_is_nonconforming() {
        // Two cubes where the shared face is listed twice with different cycles.
        let m = build_structured_cube_mesh(2, &BoxDomain::unit()).unwrap();
        let (mut faces, mut cells) = raw(&m);
        let shared = m.faces.iter().position(|f| !f.is_boundary()).unwrap();
        let [Some(_), Some(b)] = m.faces[shared].cells else {
            unreachable!()
        };
        let mut cycle = faces[shared].vertices.clone();
        cycle.rotate_left(1);
        cycle.reverse();
        faces.push(RawFace {
            vertices: cycle,
            tag: Some("dup".into()),
        });
        let new_face = faces.len() - 1;
        for cf in cells[b].iter_mut() {
            if cf.face == shared {
                *cf = CellFace {
                    face: new_face,
                    outward: true,
                };
            }
        }
        faces[shared].tag = Some("dup".into());
        let bad = Mesh::from_raw(m.vertices.clone(), faces, cells).unwrap();
        let r = validate_mesh(&bad);
        assert!(!r.check("conformity").unwrap().passed, "{r}");
    }

    #[test]
    fn untagged_boundary_face_reported() {
        let m = build_structured_cube_mesh(1, &BoxDomain::unit()).unwrap();
        let (mut f, c) = raw(&m);
        f[2].tag = None;
        let bad = Mesh::from_raw(m.vertices.clone(), f, c).unwrap();
        let r = validate_mesh(&bad);
        let failure = r.first_failure().unwrap();
        assert!(failure.contains("unreferenced boundary face"), "{failure}");
    }

    #[test]
    fn flipped_interior_orientation_reported() {
        let m = build_structured_cube_mesh(2, &BoxDomain::unit()).unwrap();
        let (f, mut c) = raw(&m);
        let shared = m.faces.iter().position(|f| !f.is_boundary()).unwrap();
        let b = m.faces[shared].cells[1].unwrap();
        for cf in c[b].iter_mut().filter(|cf| cf.face == shared) {
            cf.outward = !cf.outward;
        }
        let bad = Mesh::from_raw(m.vertices.clone(), f, c).unwrap();
        assert!(!validate_mesh(&bad).check("orientation").unwrap().passed);
    }
}
