//! Error norms, convergence rates and the convergence studies.

mod problems;
mod study;

use std::io::Write;

use rayon::prelude::*;

use crate::element::{StabilizationConfig, StabilizationKind};
use crate::error::{Result, VemError};
use crate::global::{Assembly, Solution};
use crate::mesh::{Mesh, Point3};
use crate::quadrature::{gauss_lobatto_internal_nodes, polyhedron_quadrature};

pub use problems::{BoundarySplit, ExactSolution, ManufacturedProblem};
pub use study::{
    build_family_mesh, default_ladder, default_study, delta_ratios, problem_for, run_single,
    run_study, solve_problem, summarize, DeltaRatios, SolveOutcome, MeshFamily, StudyConfig, TauGrid,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `(Σ_P |u - Π∇ u_h|²_{H¹(P)})^{1/2}`.
    pub h1: f64,
    /// `‖u - Π⁰ u_h‖_{L²}`.
    pub l2: f64,
    /// Max nodal error over vertices and edge nodes.
    pub linf: f64,
}

/// Computes all three error measures with cell quadrature of degree `2k + 2`.
pub fn compute_errors(
    mesh: &Mesh,
    assembly: &Assembly,
    solution: &Solution,
    exact: &ExactSolution,
) -> Result<ErrorNorms> {
    let k = assembly.dofmap.k;
    let per_cell: Vec<(f64, f64)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let proj = &assembly.cells[c];
            let v = assembly.cell_values(solution, c);
            let cn: Vec<f64> = (&proj.pi_nabla * &v).iter().copied().collect();
            let c0: Vec<f64> = (&proj.pi0 * &v).iter().copied().collect();
            let rule = polyhedron_quadrature(mesh, c, 2 * k + 2)?;
            let (mut h1, mut l2) = (0.0, 0.0);
            for (q, w) in rule.iter() {
                let p = Point3::from(*q);
                let g = exact.gradient(&p);
                let gh = proj.basis.grad_poly(&cn, q);
                h1 += w * ((g.x - gh[0]).powi(2) + (g.y - gh[1]).powi(2) + (g.z - gh[2]).powi(2));
                l2 += w * (exact.value(&p) - proj.basis.eval_poly(&c0, q)).powi(2);
            }
            Ok((h1, l2))
        })
        .collect::<Result<_>>()?;
    let (h1, l2) = per_cell
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));

    let d = &assembly.dofmap;
    let mut linf: f64 = 0.0;
    for (v, p) in mesh.vertices.iter().enumerate() {
        linf = linf.max((exact.value(p) - solution.values[d.vertex(v)]).abs());
    }
    let nodes = gauss_lobatto_internal_nodes(k);
    for (e, [a, b]) in mesh.edges.iter().enumerate() {
        let (pa, pb) = (mesh.vertices[*a], mesh.vertices[*b]);
        for (i, &t) in nodes.iter().enumerate() {
            let p = pa + t * (pb - pa);
            linf = linf.max((exact.value(&p) - solution.values[d.edge_node(e, i)]).abs());
        }
    }
    Ok(ErrorNorms {
        h1: h1.sqrt(),
        l2: l2.sqrt(),
        linf,
    })
}

/// One solve of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub case: u32,
    pub mesh_family: String,
    pub n_cells: usize,
    pub h: f64,
    pub k: usize,
    pub tau: f64,
    pub stab: StabilizationKind,
    pub e_h1: f64,
    pub e_l2: f64,
    pub e_linf: f64,
    /// Free (non-Dirichlet) DOFs.
    pub n_dof: usize,
    pub solve_iters: usize,
    /// Wall time in milliseconds; zero unless timing was requested.
    pub wall_ms: u64,
}

impl ConvergenceRecord {
    pub fn stabilization(&self) -> StabilizationConfig {
        StabilizationConfig {
            kind: self.stab,
            tau: self.tau,
        }
    }
}

pub const CSV_HEADER: &str = "case,mesh_family,N_P,h,k,tau,stab,e_h1,e_l2,e_linf,n_dof,solve_iters,wall_ms";

pub fn csv_row(r: &ConvergenceRecord) -> String {
    format!(
        "{},{},{},{:.16e},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{},{}",
        r.case,
        r.mesh_family,
        r.n_cells,
        r.h,
        r.k,
        r.tau,
        r.stab,
        r.e_h1,
        r.e_l2,
        r.e_linf,
        r.n_dof,
        r.solve_iters,
        r.wall_ms
    )
}

pub fn write_csv(records: &[ConvergenceRecord], out: &mut impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Slopes of `log e` against `log x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    /// Slope between consecutive points.
    pub steps: Vec<f64>,
    /// Least-squares slope over all points.
    pub overall: f64,
}

/// Convergence rates of `errors` against the abscissa `x` (mesh size, or
/// `N_dof^{1/3}` for DOF-based slopes, which come out negative).
pub fn convergence_rate(x: &[f64], errors: &[f64]) -> Result<Rates> {
    if x.len() != errors.len() {
        return Err(VemError::Config("abscissa and error lists differ in length".into()));
    }
    if x.len() < 2 {
        return Err(VemError::Config("a rate needs at least two records".into()));
    }
    if x.iter().chain(errors).any(|v| !(*v > 0.0)) {
        return Err(VemError::Config("rates need positive abscissae and errors".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let le: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let mut steps = Vec::with_capacity(x.len() - 1);
    for i in 1..x.len() {
        let dx = lx[i] - lx[i - 1];
        if dx == 0.0 {
            return Err(VemError::Config(format!("identical abscissa {} in records {} and {i}", x[i], i - 1)));
        }
        steps.push((le[i] - le[i - 1]) / dx);
    }
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let me = le.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxe: f64 = lx.iter().zip(&le).map(|(a, b)| (a - mx) * (b - me)).sum();
    Ok(Rates {
        steps,
        overall: sxe / sxx,
    })
}
