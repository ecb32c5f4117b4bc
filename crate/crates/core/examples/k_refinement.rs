//! Convergence in the degree `k` on a fixed mesh with the dofi-dofi and the
//! diagonal-recipe stabilizations.
//!
//! ```text
//! cargo run --release --example k_refinement
//! ```

use vem3d::analysis::{convergence_rate, default_study, run_study, summarize};
use vem3d::element::StabilizationKind;

fn main() -> vem3d::Result<()> {
    let study = default_study(3)?;
    let records = run_study(&study, |r| {
        eprintln!("{} k = {} e_H1 = {:.4e} N_dof = {}", r.stab, r.k, r.e_h1, r.n_dof);
        Ok(())
    })?;
    print!("{}", summarize(3, &records));

    for kind in [StabilizationKind::DofiDofi, StabilizationKind::DiagonalRecipe] {
        let sel: Vec<_> = records.iter().filter(|r| r.stab == kind).collect();
        let x: Vec<f64> = sel.iter().map(|r| (r.n_dof as f64).cbrt()).collect();
        let rates = convergence_rate(&x, &sel.iter().map(|r| r.e_h1).collect::<Vec<_>>())?;
        println!("{kind}: top-step slope {:.4}", rates.steps.last().unwrap());
    }
    Ok(())
}
