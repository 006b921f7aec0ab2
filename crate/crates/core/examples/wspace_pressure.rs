//! BGK model in the desired-speed variable w = v + p(rho): equilibrium moments
//! and a short congested-bump run with and without pressure.

use std::sync::Arc;

use kinetra::equilibrium::{build_maxwellian_table, TableOptions};
use kinetra::kinetic::{ModelParams, ProbLaw, VelocityGrid};
use kinetra::solver::{Boundary, Mesh1D};
use kinetra::stability::PressureFn;
use kinetra::wspace::{build_mg, w_moments, GField, WGrid, WOptions, WSolver};

fn main() -> kinetra::Result<()> {
    let params = ModelParams::new(VelocityGrid::new(5, 0.25, 0.25)?, ProbLaw::Linear)?;
    let table = Arc::new(build_maxwellian_table(&params, &TableOptions::default())?);
    let p = PressureFn::power(1.5, 2.0);

    let grid = WGrid::for_table(&table, Some(&p), 2, 1)?;
    let mut g = vec![0.0; grid.len()];
    for rho in [0.2, 0.5, 0.8] {
        build_mg(&table, Some(&p), rho, &grid, &mut g)?;
        let (r, q) = w_moments(&g, &grid);
        println!("rho = {rho}: int g = {r:.12}, int w g = {q:.12}, rho (U + p) = {:.12}", rho * (table.speed(rho)? + p.eval(rho)));
    }

    let mesh = Mesh1D::new(-1.0, 1.0, 200, Boundary::Periodic)?;
    let rho0 = |x: f64| 0.7 + 0.2 * (-8.0 * x * x).exp();
    for pressure in [None, Some(p)] {
        let grid = WGrid::for_table(&table, pressure.as_ref(), 2, 1)?;
        let field = GField::equilibrium(mesh, grid, &table, pressure.as_ref(), rho0)?;
        let out = WSolver::new(table.clone(), pressure.clone(), WOptions::default())?.run(field, &[1.0])?;
        let max = out.snapshots[0].rho.iter().fold(0.0f64, |a, &b| a.max(b));
        let label = pressure.map_or("none".to_string(), |p| p.to_string());
        println!("pressure {label}: max rho at t = 1 is {max:.4}, mass drift {:.1e}", out.diagnostics.max_mass_drift);
    }
    Ok(())
}
