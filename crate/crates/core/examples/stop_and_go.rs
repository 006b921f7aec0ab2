//! Congested bump with the density- and gradient-dependent relaxation rate
//! against a constant one: total variation and peak density over time.

use std::sync::Arc;

use kinetra::analysis::total_variation;
use kinetra::equilibrium::{build_maxwellian_table, TableOptions};
use kinetra::kinetic::{ModelParams, ProbLaw, VelocityGrid};
use kinetra::solver::{Boundary, EpsilonModel, KineticField, KineticSolver, Mesh1D, OvershootPolicy, SolverOptions};

fn main() -> kinetra::Result<()> {
    let params = ModelParams::new(VelocityGrid::new(5, 0.25, 0.25)?, ProbLaw::Power { gamma: 0.5 })?;
    let table = Arc::new(build_maxwellian_table(&params, &TableOptions::default())?);
    let mesh = Mesh1D::new(-1.0, 1.0, 200, Boundary::Periodic)?;
    let times: Vec<f64> = (0..=5).map(|i| 2.0 * i as f64).collect();
    for eps in [EpsilonModel::Variable { cap: 0.99 }, EpsilonModel::Constant(0.01)] {
        let field = KineticField::maxwellian(mesh, &table, |x| 0.7 + 0.2 * (-8.0 * x * x).exp())?;
        let opts = SolverOptions { eps, overshoot: OvershootPolicy::Record, ..SolverOptions::default() };
        let out = KineticSolver::new(params.clone(), table.clone(), opts)?.run(field, &times)?;
        println!("{eps:?}");
        for s in &out.snapshots {
            let max = s.rho.iter().fold(0.0f64, |a, &b| a.max(b));
            println!("  t = {:>4.1}  TV = {:.4}  max rho = {max:.4}", s.t, total_variation(&s.rho, true));
        }
        println!("  steps with rho > 1: {}", out.diagnostics.overshoot_events);
    }
    Ok(())
}
