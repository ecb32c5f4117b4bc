//! Prismatic Voronoi meshes: a clipped 2D Voronoi diagram of the box
//! cross-section, optionally Lloyd-relaxed, extruded into layers.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoxDomain, CellFace, Mesh, Point3, RawFace};
use crate::error::{Result, VemError};

const MAX_RETRIES: usize = 20;
/// Vertices closer than this fraction of the mean seed spacing are merged.
const MERGE_TOL: f64 = 1e-8;
/// Cells smaller than this fraction of the mean cell area are degenerate.
const AREA_TOL: f64 = 1e-8;

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrismaticVoronoiParams {
    pub n_seeds: usize,
    pub n_layers: usize,
    pub rng_seed: u64,
    pub lloyd_iters: usize,
    pub domain: BoxDomain,
}

impl Default for PrismaticVoronoiParams {
    fn default() -> Self {
        Self {
            n_seeds: 16,
            n_layers: 2,
            rng_seed: 0,
            lloyd_iters: 0,
            domain: BoxDomain::unit(),
        }
    }
}

/// Generated mesh together with the final generator points.
#[derive(Debug, Clone)]
pub struct VoronoiMesh {
    pub mesh: Mesh,
    pub seeds: Vec<Point2>,
    /// Number of times the seed set had to be redrawn.
    pub retries: usize,
}

/// Shoelace area and centroid of a counter-clockwise polygon.
pub fn polygon_area_centroid(poly: &[Point2]) -> (f64, Point2) {
    let n = poly.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    let o = poly[0];
    for j in 0..n {
        let p = [poly[j][0] - o[0], poly[j][1] - o[1]];
        let q = [poly[(j + 1) % n][0] - o[0], poly[(j + 1) % n][1] - o[1]];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    a *= 0.5;
    if a == 0.0 {
        return (0.0, o);
    }
    (a, [o[0] + cx / (6.0 * a), o[1] + cy / (6.0 * a)])
}

/// Keeps the part of `poly` where `normal · x <= offset`.
fn clip(poly: &[Point2], normal: Point2, offset: f64) -> Vec<Point2> {
    let side = |p: &Point2| normal[0] * p[0] + normal[1] * p[1] - offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for j in 0..poly.len() {
        let (p, q) = (poly[j], poly[(j + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Voronoi cells of `seeds` clipped to the rectangle `[lo, hi]`, each as a
/// counter-clockwise polygon.
pub fn clipped_voronoi_cells(seeds: &[Point2], lo: Point2, hi: Point2) -> Vec<Vec<Point2>> {
    let rect = vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut others: Vec<(f64, usize)> = seeds
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, t)| ((t[0] - s[0]).powi(2) + (t[1] - s[1]).powi(2), j))
                .collect();
            others.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut poly = rect.clone();
            for (d2, j) in others {
                let reach = poly
                    .iter()
                    .map(|p| (p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2))
                    .fold(0.0, f64::max);
                // Bisectors farther than the farthest vertex cannot cut.
                if d2 > 4.0 * reach {
                    break;
                }
                let t = seeds[j];
                let normal = [t[0] - s[0], t[1] - s[1]];
                let offset = 0.5 * ((t[0] * t[0] + t[1] * t[1]) - (s[0] * s[0] + s[1] * s[1]));
                poly = clip(&poly, normal, offset);
                if poly.is_empty() {
                    break;
                }
            }
            poly
        })
        .collect()
}

/// Runs `iters` Lloyd steps: every seed moves to the centroid of its cell.
pub fn lloyd_relax(seeds: &[Point2], lo: Point2, hi: Point2, iters: usize) -> Vec<Point2> {
    let mut seeds = seeds.to_vec();
    for _ in 0..iters {
        let cells = clipped_voronoi_cells(&seeds, lo, hi);
        for (s, c) in seeds.iter_mut().zip(&cells) {
            if c.len() >= 3 {
                *s = polygon_area_centroid(c).1;
            }
        }
    }
    seeds
}

struct Merger {
    tol: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point2>,
}

impl Merger {
    fn id(&mut self, p: Point2) -> usize {
        let key = ((p[0] / self.tol).floor() as i64, (p[1] / self.tol).floor() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(key.0 + dx, key.1 + dy)) {
                    for &i in ids {
                        let q = self.points[i];
                        if (q[0] - p[0]).abs() <= self.tol && (q[1] - p[1]).abs() <= self.tol {
                            return i;
                        }
                    }
                }
            }
        }
        self.points.push(p);
        self.buckets.entry(key).or_default().push(self.points.len() - 1);
        self.points.len() - 1
    }
}

/// Conforming polygonal mesh of the rectangle built from clipped cells.
struct PolygonMesh {
    points: Vec<Point2>,
    polygons: Vec<Vec<usize>>,
}

fn conforming_polygons(
    cells: &[Vec<Point2>],
    lo: Point2,
    hi: Point2,
    spacing: f64,
) -> std::result::Result<PolygonMesh, String> {
    let mean_area = (hi[0] - lo[0]) * (hi[1] - lo[1]) / cells.len() as f64;
    let mut merger = Merger {
        tol: MERGE_TOL * spacing,
        buckets: HashMap::new(),
        points: Vec::new(),
    };
    let mut polygons = Vec::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        if c.len() < 3 || polygon_area_centroid(c).0 < AREA_TOL * mean_area {
            return Err(format!("degenerate Voronoi cell {i}"));
        }
        let mut ids: Vec<usize> = Vec::with_capacity(c.len());
        for p in c {
            let id = merger.id(*p);
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() < 3 {
            return Err(format!("Voronoi cell {i} collapsed to {} vertices", ids.len()));
        }
        polygons.push(ids);
    }

    let tol = MERGE_TOL * spacing;
    let on_side = |p: &Point2| -> [bool; 4] {
        [
            (p[0] - lo[0]).abs() <= tol,
            (p[0] - hi[0]).abs() <= tol,
            (p[1] - lo[1]).abs() <= tol,
            (p[1] - hi[1]).abs() <= tol,
        ]
    };
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for poly in &polygons {
        for j in 0..poly.len() {
            *directed
                .entry((poly[j], poly[(j + 1) % poly.len()]))
                .or_default() += 1;
        }
    }
    for (&(a, b), &n) in &directed {
        if n != 1 {
            return Err(format!("edge ({a}, {b}) used twice in the same direction"));
        }
        if !directed.contains_key(&(b, a)) {
            let (sa, sb) = (on_side(&merger.points[a]), on_side(&merger.points[b]));
            if !(0..4).any(|s| sa[s] && sb[s]) {
                return Err(format!("hanging edge ({a}, {b}) in the Voronoi diagram"));
            }
        }
    }
    Ok(PolygonMesh {
        points: merger.points,
        polygons,
    })
}

fn extrude(pm: &PolygonMesh, domain: &BoxDomain, n_layers: usize) -> Result<Mesh> {
    let (lo, hi) = (domain.min, domain.max);
    let nv2 = pm.points.len();
    let z = |l: usize| {
        if l == n_layers {
            hi[2]
        } else {
            lo[2] + (hi[2] - lo[2]) * l as f64 / n_layers as f64
        }
    };
    let mut vertices = Vec::with_capacity(nv2 * (n_layers + 1));
    for l in 0..=n_layers {
        for p in &pm.points {
            vertices.push(Point3::new(p[0], p[1], z(l)));
        }
    }

    // Undirected 2D edges, oriented as in the first polygon that uses them.
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut poly_edges: Vec<Vec<(usize, bool)>> = Vec::with_capacity(pm.polygons.len());
    for poly in &pm.polygons {
        let n = poly.len();
        let mut pe = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (poly[j], poly[(j + 1) % n]);
            if let Some(&e) = edge_ids.get(&(b, a)) {
                pe.push((e, false));
            } else {
                edge_ids.insert((a, b), edges.len());
                pe.push((edges.len(), true));
                edges.push((a, b));
            }
        }
        poly_edges.push(pe);
    }
    let tol = MERGE_TOL * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let side_tag = |a: usize, b: usize| -> Option<String> {
        let (p, q) = (pm.points[a], pm.points[b]);
        let sides = [
            ("x0", 0, lo[0]),
            ("x1", 0, hi[0]),
            ("y0", 1, lo[1]),
            ("y1", 1, hi[1]),
        ];
        sides
            .iter()
            .find(|(_, axis, v)| (p[*axis] - v).abs() <= tol && (q[*axis] - v).abs() <= tol)
            .map(|(name, _, _)| name.to_string())
    };

    let mut faces = Vec::new();
    // Horizontal faces: level l, polygon p, normal +z.
    let np = pm.polygons.len();
    for l in 0..=n_layers {
        let tag = if l == 0 {
            Some("z0".to_string())
        } else if l == n_layers {
            Some("z1".to_string())
        } else {
            None
        };
        for poly in &pm.polygons {
            faces.push(RawFace {
                vertices: poly.iter().map(|&v| v + nv2 * l).collect(),
                tag: tag.clone(),
            });
        }
    }
    let vertical_base = faces.len();
    for l in 0..n_layers {
        for &(a, b) in &edges {
            faces.push(RawFace {
                vertices: vec![a + nv2 * l, b + nv2 * l, b + nv2 * (l + 1), a + nv2 * (l + 1)],
                tag: side_tag(a, b),
            });
        }
    }

    let mut cells = Vec::with_capacity(np * n_layers);
    for l in 0..n_layers {
        for (p, pe) in poly_edges.iter().enumerate() {
            let mut cf = Vec::with_capacity(pe.len() + 2);
            cf.push(CellFace {
                face: l * np + p,
                outward: false,
            });
            cf.push(CellFace {
                face: (l + 1) * np + p,
                outward: true,
            });
            for &(e, forward) in pe {
                cf.push(CellFace {
                    face: vertical_base + l * edges.len() + e,
                    outward: forward,
                });
            }
            cells.push(cf);
        }
    }
    Mesh::from_raw(vertices, faces, cells)
}

/// Generates a prismatic Voronoi mesh and returns it with its final seeds.
pub fn generate_prismatic_voronoi(params: &PrismaticVoronoiParams) -> Result<VoronoiMesh> {
    if params.n_seeds == 0 || params.n_layers == 0 {
        return Err(VemError::Config(
            "prismatic Voronoi mesh needs at least one seed and one layer".into(),
        ));
    }
    let d = &params.domain;
    let (lo, hi) = ([d.min[0], d.min[1]], [d.max[0], d.max[1]]);
    let spacing = ((hi[0] - lo[0]) * (hi[1] - lo[1]) / params.n_seeds as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut last_error = String::new();
    for retry in 0..=MAX_RETRIES {
        let initial: Vec<Point2> = (0..params.n_seeds)
            .map(|_| {
                [
                    lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(),
                    lo[1] + (hi[1] - lo[1]) * rng.random::<f64>(),
                ]
            })
            .collect();
        let seeds = lloyd_relax(&initial, lo, hi, params.lloyd_iters);
        let cells = clipped_voronoi_cells(&seeds, lo, hi);
        match conforming_polygons(&cells, lo, hi, spacing) {
            Ok(pm) => {
                if retry > 0 {
                    log::warn!("prismatic Voronoi generation needed {retry} retries ({last_error})");
                }
                return Ok(VoronoiMesh {
                    mesh: extrude(&pm, d, params.n_layers)?,
                    seeds,
                    retries: retry,
                });
            }
            Err(e) => last_error = e,
        }
    }
    Err(VemError::Generation {
        retries: MAX_RETRIES,
        message: last_error,
    })
}

pub fn build_prismatic_voronoi_mesh(params: &PrismaticVoronoiParams) -> Result<Mesh> {
    generate_prismatic_voronoi(params).map(|v| v.mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{compute_cell_geometry, mesh_size, validate_mesh, write_mesh_to};

    fn params(n_seeds: usize, n_layers: usize, lloyd: usize, seed: u64) -> PrismaticVoronoiParams {
        PrismaticVoronoiParams {
            n_seeds,
            n_layers,
            rng_seed: seed,
            lloyd_iters: lloyd,
            domain: BoxDomain::unit(),
        }
    }

    #[test]
    fn single_seed_gives_the_box() {
        let m = build_prismatic_voronoi_mesh(&params(1, 1, 0, 3)).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.faces.len(), 6);
        assert_eq!(m.vertices.len(), 8);
        assert!((m.cells[0].volume - 1.0).abs() < 1e-15);
        assert!(validate_mesh(&m).all_passed());
    }

    #[test]
    fn partition_of_the_box() {
        let m = build_prismatic_voronoi_mesh(&params(4, 2, 0, 11)).unwrap();
        assert_eq!(m.cells.len(), 8);
        assert!((m.domain_volume() - 1.0).abs() < 1e-12);
        let r = validate_mesh(&m);
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn prism_volume_is_area_times_height() {
        let d = BoxDomain::new([0.0, 0.0, 0.0], [2.0, 1.0, 0.3]);
        let vm = generate_prismatic_voronoi(&PrismaticVoronoiParams {
            n_seeds: 9,
            n_layers: 3,
            rng_seed: 5,
            lloyd_iters: 2,
            domain: d,
        })
        .unwrap();
        let cells = clipped_voronoi_cells(&vm.seeds, [0.0, 0.0], [2.0, 1.0]);
        for (p, poly) in cells.iter().enumerate() {
            let area = polygon_area_centroid(poly).0;
            for l in 0..3 {
                let (_, _, v) = compute_cell_geometry(&vm.mesh, l * 9 + p).unwrap();
                assert!((v - area * 0.1).abs() <= 1e-12 * v, "{v} vs {}", area * 0.1);
            }
        }
    }

    fn centroid_seed_gap(vm: &VoronoiMesh) -> f64 {
        let cells = clipped_voronoi_cells(&vm.seeds, [0.0, 0.0], [1.0, 1.0]);
        cells
            .iter()
            .zip(&vm.seeds)
            .map(|(c, s)| {
                let (_, g) = polygon_area_centroid(c);
                ((g[0] - s[0]).powi(2) + (g[1] - s[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn lloyd_reaches_a_centroidal_configuration() {
        // Plain Lloyd contracts slowly: 16 seeds need a few hundred sweeps to
        // reach the 1e-6 h fixed-point tolerance.
        let relaxed = generate_prismatic_voronoi(&params(16, 1, 400, 7)).unwrap();
        let h = mesh_size(&relaxed.mesh);
        let gap = centroid_seed_gap(&relaxed);
        assert!(gap < 1e-6 * h, "max centroid-seed distance {gap:e}");

        let early = generate_prismatic_voronoi(&params(16, 1, 50, 7)).unwrap();
        let random = generate_prismatic_voronoi(&params(16, 1, 0, 7)).unwrap();
        assert!(centroid_seed_gap(&early) < 0.1 * centroid_seed_gap(&random));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let render = |p| {
            let m = build_prismatic_voronoi_mesh(&p).unwrap();
            let mut buf = Vec::new();
            write_mesh_to(&m, &mut buf).unwrap();
            buf
        };
        let p = params(16, 4, 50, 7);
        assert_eq!(render(p), render(p));
        assert_ne!(render(p), render(params(16, 4, 50, 8)));
    }

    #[test]
    fn one_hundred_sixteen_cells() {
        let m = build_prismatic_voronoi_mesh(&params(58, 2, 10, 1)).unwrap();
        assert_eq!(m.cells.len(), 116);
        assert!((mesh_size(&m) - (1.0f64 / 116.0).cbrt()).abs() < 1e-14);
    }

    #[test]
    fn larger_random_meshes_validate() {
        for seed in 0..5 {
            let m = build_prismatic_voronoi_mesh(&params(200, 2, 0, seed)).unwrap();
            let r = validate_mesh(&m);
            assert!(r.all_passed(), "seed {seed}: {r}");
            assert!((m.domain_volume() - 1.0).abs() < 1e-12);
        }
    }
}
