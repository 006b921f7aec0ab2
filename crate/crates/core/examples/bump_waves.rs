//! A density bump in free flow travels forward, one in congestion travels
//! backward. Prints the peak trajectory of both.

use std::sync::Arc;

use kinetra::analysis::peak;
use kinetra::equilibrium::{build_maxwellian_table, TableOptions};
use kinetra::kinetic::{ModelParams, ProbLaw, VelocityGrid};
use kinetra::solver::{Boundary, KineticField, KineticSolver, Mesh1D, OvershootPolicy, SolverOptions};

fn main() -> kinetra::Result<()> {
    let params = ModelParams::new(VelocityGrid::new(5, 0.25, 0.25)?, ProbLaw::Power { gamma: 0.5 })?;
    let table = Arc::new(build_maxwellian_table(&params, &TableOptions::default())?);
    let mesh = Mesh1D::new(-1.0, 1.0, 200, Boundary::Periodic)?;
    let times: Vec<f64> = (0..=5).map(|i| 0.2 * i as f64).collect();
    for (label, a) in [("free", 0.2), ("congested", 0.7)] {
        let field = KineticField::maxwellian(mesh, &table, |x| a + 0.2 * (-8.0 * x * x).exp())?;
        let opts = SolverOptions { overshoot: OvershootPolicy::Record, ..SolverOptions::default() };
        let out = KineticSolver::new(params.clone(), table.clone(), opts)?.run(field, &times)?;
        println!("{label} bump (a = {a}):");
        for s in &out.snapshots {
            let (x, h) = peak(&mesh.centers(), &s.rho, true);
            println!("  t = {:.1}  peak at x = {x:+.4}, height {h:.4}", s.t);
        }
    }
    Ok(())
}
