//! Equilibrium flux curves for a 49-speed grid and four braking jumps.

use kinetra::equilibrium::{build_maxwellian_table, fundamental_diagram, TableOptions};
use kinetra::kinetic::{ModelParams, ProbLaw, VelocityGrid};

fn main() -> kinetra::Result<()> {
    let delta_a = 0.25;
    println!("{:>3} {:>8} {:>8} {:>9}", "r", "delta_b", "rho_c", "capacity");
    for r in 1..=4 {
        let delta_b = delta_a / r as f64;
        let params = ModelParams::new(VelocityGrid::new(49, delta_a, delta_b)?, ProbLaw::Linear)?;
        let table = build_maxwellian_table(&params, &TableOptions::default())?;
        let fd = fundamental_diagram(&table);
        println!("{r:>3} {delta_b:>8.4} {:>8.4} {:>9.5}", fd.rho_c, fd.capacity);
    }
    Ok(())
}
