//! Sensitivity of the errors to the stabilization weight `τ`.
//!
//! ```text
//! cargo run --release --example tau_sweep
//! ```

use vem3d::analysis::{default_study, delta_ratios, run_study, TauGrid};

fn main() -> vem3d::Result<()> {
    let mut study = default_study(5)?;
    study.ks = vec![1];
    study.refinements = Some(vec![5]);
    study.taus = TauGrid { t_min: -2.0, t_max: 2.0, points: 13 }.values();
    let records = run_study(&study, |_| Ok(()))?;

    println!("{:>10} {:>12} {:>12}", "tau", "e_H1", "e_Linf");
    for r in &records {
        println!("{:>10.4} {:>12.4e} {:>12.4e}", r.tau, r.e_h1, r.e_linf);
    }
    for d in delta_ratios(&records, 0.1, 10.0) {
        println!("k = {}, {} cells: max/min over tau in [0.1, 10]: H1 {:.3}, L2 {:.3}, Linf {:.3}", d.k, d.n_cells, d.h1, d.l2, d.linf);
    }
    Ok(())
}
