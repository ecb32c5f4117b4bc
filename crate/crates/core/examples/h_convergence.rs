//! h-convergence on structured cubes for the mixed Dirichlet/Neumann problem
//! with `u = sin(πx) cos(πy) cos(πz)`.
//!
//! ```text
//! cargo run --release --example h_convergence
//! ```

use vem3d::analysis::{convergence_rate, default_study, run_study, write_csv};

fn main() -> vem3d::Result<()> {
    let mut study = default_study(1)?;
    study.ks = vec![1, 2];
    study.refinements = Some(vec![2, 4, 8]);
    let records = run_study(&study, |r| {
        eprintln!("k = {} n_cells = {:>4} e_H1 = {:.4e}", r.k, r.n_cells, r.e_h1);
        Ok(())
    })?;

    for k in [1, 2] {
        let sel: Vec<_> = records.iter().filter(|r| r.k == k).collect();
        let h: Vec<f64> = sel.iter().map(|r| r.h).collect();
        let h1 = convergence_rate(&h, &sel.iter().map(|r| r.e_h1).collect::<Vec<_>>())?;
        let l2 = convergence_rate(&h, &sel.iter().map(|r| r.e_l2).collect::<Vec<_>>())?;
        println!("k = {k}: H1 steps {:.3?} overall {:.3}; L2 steps {:.3?} overall {:.3}", h1.steps, h1.overall, l2.steps, l2.overall);
    }
    write_csv(&records, &mut std::io::stdout())
}
