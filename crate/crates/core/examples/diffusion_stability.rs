//! Sign of the first-order diffusion coefficient with and without a traffic
//! pressure, and the resulting stability classification.

use kinetra::equilibrium::{build_maxwellian_table, TableOptions};
use kinetra::kinetic::{ModelParams, ProbLaw, VelocityGrid};
use kinetra::stability::{DiffusionProfile, PressureFn};

fn main() -> kinetra::Result<()> {
    let params = ModelParams::new(VelocityGrid::new(49, 0.25, 0.25)?, ProbLaw::Linear)?;
    let table = build_maxwellian_table(&params, &TableOptions::default())?;
    let bgk = DiffusionProfile::bgk(&table);
    print!("{}", bgk.interval_summary());
    for p in [PressureFn::power(1.5, 2.0), PressureFn::power(1.0, 3.0)] {
        let prof = DiffusionProfile::modified(&table, &p)?;
        println!("pressure {p}");
        print!("{}", prof.interval_summary());
    }
    Ok(())
}
