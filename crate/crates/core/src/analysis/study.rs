use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{compute_errors, convergence_rate, ConvergenceRecord, ManufacturedProblem};
use crate::element::{StabilizationConfig, StabilizationKind};
use crate::error::{Result, VemError};
use crate::global::{assemble, Assembly, Solution, SolverOptions};
use crate::mesh::{
    build_prismatic_voronoi_mesh, build_structured_cube_mesh, load_mesh, mesh_size, BoxDomain, Mesh,
    PrismaticVoronoiParams,
};

/// Mesh family of a study. The refinement parameter `n` gives `n³` cubes for
/// structured meshes and `n²` seeds extruded over `n` layers (unless `layers`
/// is fixed) for prismatic Voronoi meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshFamily {
    Structured,
    Voronoi {
        #[serde(default)]
        lloyd: usize,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default)]
        layers: Option<usize>,
    },
    File {
        path: PathBuf,
    },
}

fn default_seed() -> u64 {
    1
}

impl MeshFamily {
    /// Label used in the CSV `mesh_family` column.
    pub fn label(&self) -> String {
        match self {
            Self::Structured => "structured".into(),
            Self::Voronoi { lloyd, .. } => format!("voronoi-lloyd{lloyd}"),
            Self::File { path } => format!(
                "file-{}",
                path.file_stem().map(|s| s.to_string_lossy().replace(',', "_")).unwrap_or_default()
            ),
        }
    }
}

pub fn build_family_mesh(family: &MeshFamily, n: usize, domain: &BoxDomain) -> Result<Mesh> {
    match family {
        MeshFamily::Structured => build_structured_cube_mesh(n, domain),
        MeshFamily::Voronoi { lloyd, seed, layers } => {
            if n == 0 {
                return Err(VemError::Config("refinement must be at least 1".into()));
            }
            build_prismatic_voronoi_mesh(&PrismaticVoronoiParams {
                n_seeds: n * n,
                n_layers: layers.unwrap_or(n),
                rng_seed: *seed,
                lloyd_iters: *lloyd,
                domain: *domain,
            })
        }
        MeshFamily::File { path } => load_mesh(path),
    }
}

/// `τ = 10^t` for `points` equally spaced `t` in `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl TauGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![10f64.powf(self.t_min)];
        }
        (0..self.points)
            .map(|i| {
                let t = self.t_min + (self.t_max - self.t_min) * i as f64 / (self.points - 1) as f64;
                10f64.powf(t)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Test case 1..=5.
    pub case: u32,
    pub family: MeshFamily,
    pub domain: BoxDomain,
    pub ks: Vec<usize>,
    /// Refinement ladder shared by all `k`; `None` uses the per-`k` default.
    pub refinements: Option<Vec<usize>>,
    pub stabilizations: Vec<StabilizationKind>,
    /// `τ` values; a single value except for `τ` sweeps.
    pub taus: Vec<f64>,
    pub solver: SolverOptions,
    /// Record wall-clock times (makes the CSV non-reproducible).
    pub timings: bool,
}

/// Default refinement ladder for degree `k` on the cube.
pub fn default_ladder(k: usize) -> Vec<usize> {
    match k {
        1 => vec![4, 8, 16],
        2 => vec![3, 6, 12],
        _ => vec![2, 4, 8],
    }
}

pub fn default_study(case: u32) -> Result<StudyConfig> {
    let base = StudyConfig {
        case,
        family: MeshFamily::Structured,
        domain: BoxDomain::unit(),
        ks: vec![1, 2, 3],
        refinements: None,
        stabilizations: vec![StabilizationKind::DofiDofi],
        taus: vec![1.0],
        solver: SolverOptions::default(),
        timings: false,
    };
    let voronoi = |lloyd| MeshFamily::Voronoi {
        lloyd,
        seed: 1,
        layers: None,
    };
    Ok(match case {
        1 => base,
        2 => StudyConfig {
            family: voronoi(50),
            ks: vec![1, 2],
            ..base
        },
        3 => StudyConfig {
            family: voronoi(50),
            ks: vec![1, 2, 3, 4],
            refinements: Some(vec![5]),
            stabilizations: vec![StabilizationKind::DofiDofi, StabilizationKind::DiagonalRecipe],
            ..base
        },
        4 => StudyConfig {
            ks: vec![1, 2, 3, 4],
            refinements: Some(vec![2]),
            ..base
        },
        5 => StudyConfig {
            family: voronoi(50),
            ks: vec![1, 2],
            refinements: Some(vec![8]),
            taus: TauGrid {
                t_min: -2.0,
                t_max: 2.0,
                points: 25,
            }
            .values(),
            ..base
        },
        _ => return Err(VemError::Config(format!("unknown test case {case} (expected 1..=5)"))),
    })
}

pub fn problem_for(case: u32, k: usize) -> Result<ManufacturedProblem> {
    Ok(match case {
        1 => ManufacturedProblem::test1(),
        2 => ManufacturedProblem::test2(),
        3 => ManufacturedProblem::test3(),
        4 => ManufacturedProblem::test4(k as u32),
        5 => ManufacturedProblem::test5(),
        _ => return Err(VemError::Config(format!("unknown test case {case} (expected 1..=5)"))),
    })
}

/// A finished solve together with the assembled system it came from.
pub struct SolveOutcome {
    pub record: ConvergenceRecord,
    pub assembly: Assembly,
    pub solution: Solution,
}

/// Assembles, solves and measures `problem` on `mesh`.
#[allow(clippy::too_many_arguments)]
pub fn solve_problem(
    mesh: &Mesh,
    family: &str,
    case: u32,
    k: usize,
    problem: &ManufacturedProblem,
    stab: &StabilizationConfig,
    solver: &SolverOptions,
    timings: bool,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let bc = problem.boundary_conditions(mesh);
    let assembly = assemble(mesh, k, problem, &bc, stab)?;
    let solution = assembly.solve(solver)?;
    let errors = compute_errors(mesh, &assembly, &solution, &problem.exact)?;
    let wall_ms = if timings {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let record = ConvergenceRecord {
        case,
        mesh_family: family.to_string(),
        n_cells: mesh.num_cells(),
        h: mesh_size(mesh),
        k,
        tau: stab.tau,
        stab: stab.kind,
        e_h1: errors.h1,
        e_l2: errors.l2,
        e_linf: errors.linf,
        n_dof: assembly.dofmap.n_free,
        solve_iters: solution.stats.iterations,
        wall_ms,
    };
    Ok(SolveOutcome {
        record,
        assembly,
        solution,
    })
}

/// Solves the manufactured problem of test `case` and measures it.
pub fn run_single(
    mesh: &Mesh,
    family: &str,
    case: u32,
    k: usize,
    stab: &StabilizationConfig,
    solver: &SolverOptions,
    timings: bool,
) -> Result<ConvergenceRecord> {
    let problem = problem_for(case, k)?;
    Ok(solve_problem(mesh, family, case, k, &problem, stab, solver, timings)?.record)
}

/// Runs every (k, refinement, stabilization, τ) combination in that order.
/// `on_record` sees each record as soon as it is available.
pub fn run_study(
    cfg: &StudyConfig,
    mut on_record: impl FnMut(&ConvergenceRecord) -> Result<()>,
) -> Result<Vec<ConvergenceRecord>> {
    if !(1..=5).contains(&cfg.case) {
        return Err(VemError::Config(format!("unknown test case {} (expected 1..=5)", cfg.case)));
    }
    if cfg.ks.contains(&0) {
        return Err(VemError::Config("polynomial degree must be at least 1".into()));
    }
    if let Some(t) = cfg.taus.iter().find(|t| !(**t > 0.0)) {
        return Err(VemError::Config(format!("tau must be positive, got {t}")));
    }
    let label = cfg.family.label();
    let mut records = Vec::new();
    let mut cache: Vec<(usize, Mesh)> = Vec::new();
    for &k in &cfg.ks {
        let ladder = cfg.refinements.clone().unwrap_or_else(|| default_ladder(k));
        for &n in &ladder {
            if !cache.iter().any(|(m, _)| *m == n) {
                cache.push((n, build_family_mesh(&cfg.family, n, &cfg.domain)?));
            }
            let mesh = &cache.iter().find(|(m, _)| *m == n).unwrap().1;
            for &kind in &cfg.stabilizations {
                for &tau in &cfg.taus {
                    let stab = StabilizationConfig::new(kind, tau)?;
                    log::info!(
                        "case {} {label} n={n} ({} cells) k={k} {kind} tau={tau:.4}",
                        cfg.case,
                        mesh.num_cells()
                    );
                    let r = run_single(mesh, &label, cfg.case, k, &stab, &cfg.solver, cfg.timings)?;
                    on_record(&r)?;
                    records.push(r);
                }
            }
        }
    }
    Ok(records)
}

/// `max / min` of each error over a `τ` range, per (k, stabilization, mesh).
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRatios {
    pub k: usize,
    pub stab: StabilizationKind,
    pub n_cells: usize,
    pub h1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn delta_ratios(records: &[ConvergenceRecord], tau_min: f64, tau_max: f64) -> Vec<DeltaRatios> {
    let mut groups: Vec<(usize, StabilizationKind, usize)> = Vec::new();
    for r in records {
        let key = (r.k, r.stab, r.n_cells);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let ratio = |v: &[f64]| {
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    groups
        .into_iter()
        .filter_map(|(k, stab, n_cells)| {
            let sel: Vec<&ConvergenceRecord> = records
                .iter()
                .filter(|r| {
                    (r.k, r.stab, r.n_cells) == (k, stab, n_cells)
                        && r.tau >= tau_min * (1.0 - 1e-12)
                        && r.tau <= tau_max * (1.0 + 1e-12)
                })
                .collect();
            (sel.len() >= 2).then(|| DeltaRatios {
                k,
                stab,
                n_cells,
                h1: ratio(&sel.iter().map(|r| r.e_h1).collect::<Vec<_>>()),
                l2: ratio(&sel.iter().map(|r| r.e_l2).collect::<Vec<_>>()),
                linf: ratio(&sel.iter().map(|r| r.e_linf).collect::<Vec<_>>()),
            })
        })
        .collect()
}

/// Human-readable rate table for a finished study.
pub fn summarize(case: u32, records: &[ConvergenceRecord]) -> String {
    let mut out = String::new();
    let mut keys: Vec<(StabilizationKind, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.stab, r.k)) {
            keys.push((r.stab, r.k));
        }
    }
    match case {
        5 => {
            writeln!(out, "{:>3} {:>7} {:>7} {:>12} {:>12} {:>12}", "k", "stab", "N_P", "d_H1", "d_L2", "d_Linf").unwrap();
            for d in delta_ratios(records, 0.1, 10.0) {
                writeln!(
                    out,
                    "{:>3} {:>7} {:>7} {:>12.4e} {:>12.4e} {:>12.4e}",
                    d.k, d.stab, d.n_cells, d.h1, d.l2, d.linf
                )
                .unwrap();
            }
        }
        4 => {
            writeln!(out, "{:>7} {:>3} {:>7} {:>12} {:>12} {:>12}", "stab", "k", "N_P", "e_H1", "e_L2", "e_Linf").unwrap();
            for r in records {
                writeln!(
                    out,
                    "{:>7} {:>3} {:>7} {:>12.4e} {:>12.4e} {:>12.4e}",
                    r.stab, r.k, r.n_cells, r.e_h1, r.e_l2, r.e_linf
                )
                .unwrap();
            }
        }
        3 => {
            writeln!(out, "slopes against N_dof^(1/3) across k").unwrap();
            let stabs: Vec<StabilizationKind> = keys.iter().map(|k| k.0).fold(Vec::new(), |mut v, s| {
                if !v.contains(&s) {
                    v.push(s);
                }
                v
            });
            for s in stabs {
                let sel: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.stab == s).collect();
                let x: Vec<f64> = sel.iter().map(|r| (r.n_dof as f64).cbrt()).collect();
                let e: Vec<f64> = sel.iter().map(|r| r.e_h1).collect();
                write!(out, "{s:>7} e_H1:").unwrap();
                for r in &sel {
                    write!(out, " {:.4e}", r.e_h1).unwrap();
                }
                match convergence_rate(&x, &e) {
                    Ok(rates) => {
                        write!(out, "  steps:").unwrap();
                        for s in rates.steps {
                            write!(out, " {s:.4}").unwrap();
                        }
                        writeln!(out).unwrap();
                    }
                    Err(e) => writeln!(out, "  ({e})").unwrap(),
                }
            }
        }
        _ => {
            writeln!(out, "{:>7} {:>3} {:>10} {:>10} {:>10}", "stab", "k", "H1 rate", "L2 rate", "Linf rate").unwrap();
            for (s, k) in keys {
                let sel: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.stab == s && r.k == k).collect();
                let h: Vec<f64> = sel.iter().map(|r| r.h).collect();
                let rate = |e: Vec<f64>| {
                    convergence_rate(&h, &e)
                        .map(|r| format!("{:.4}", r.overall))
                        .unwrap_or_else(|_| "-".into())
                };
                writeln!(
                    out,
                    "{s:>7} {k:>3} {:>10} {:>10} {:>10}",
                    rate(sel.iter().map(|r| r.e_h1).collect()),
                    rate(sel.iter().map(|r| r.e_l2).collect()),
                    rate(sel.iter().map(|r| r.e_linf).collect()),
                )
                .unwrap();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_grid() {
        let t = TauGrid {
            t_min: -1.0,
            t_max: 1.0,
            points: 9,
        }
        .values();
        assert_eq!(t.len(), 9);
        assert!((t[0] - 0.1).abs() < 1e-15);
        assert!((t[4] - 1.0).abs() < 1e-15);
        assert!((t[8] - 10.0).abs() < 1e-13);
    }

    #[test]
    fn unknown_case() {
        assert!(default_study(6).is_err());
        assert!(default_study(0).is_err());
        for c in 1..=5 {
            assert_eq!(default_study(c).unwrap().case, c);
        }
    }

    #[test]
    fn patch_test_single_cube() {
        let mesh = build_structured_cube_mesh(1, &BoxDomain::unit()).unwrap();
        for k in 1..=3 {
            let r = run_single(
                &mesh,
                "structured",
                4,
                k,
                &StabilizationConfig::default(),
                &SolverOptions::default(),
                false,
            )
            .unwrap();
            assert!(r.e_h1 < 1e-9 && r.e_l2 < 1e-9 && r.e_linf < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn test1_structured_k1_is_reasonable() {
        let mut cfg = default_study(1).unwrap();
        cfg.ks = vec![1];
        cfg.refinements = Some(vec![2, 4]);
        let recs = run_study(&cfg, |_| Ok(())).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[1].e_h1 < recs[0].e_h1);
        assert!(recs[1].e_l2 < recs[0].e_l2);
        assert!(summarize(1, &recs).contains("dofi"));
    }

    #[test]
    fn delta_ratio_grouping() {
        let mk = |tau: f64, e: f64| ConvergenceRecord {
            case: 5,
            mesh_family: "x".into(),
            n_cells: 8,
            h: 0.5,
            k: 1,
            tau,
            stab: StabilizationKind::DofiDofi,
            e_h1: e,
            e_l2: e,
            e_linf: e,
            n_dof: 1,
            solve_iters: 1,
            wall_ms: 0,
        };
        let recs = vec![mk(0.01, 100.0), mk(0.1, 2.0), mk(1.0, 1.0), mk(10.0, 3.0), mk(100.0, 50.0)];
        let d = delta_ratios(&recs, 0.1, 10.0);
        assert_eq!(d.len(), 1);
        assert!((d[0].h1 - 3.0).abs() < 1e-15);
    }
}
