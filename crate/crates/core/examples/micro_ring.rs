//! Follow-the-leader vehicles on a ring relaxing to the equilibrium speed after
//! a kick to their desired speeds.

use kinetra::micro::{uniform_ring, Interaction, MicroParams, MicroSim};
use kinetra::stability::{PressureFn, SpeedLaw};

fn main() -> kinetra::Result<()> {
    let n = 20;
    for rho_bar in [0.3, 0.7] {
        let params = MicroParams {
            pressure: PressureFn::power(1.5, 2.0),
            u_eq: SpeedLaw::Greenshields,
            eps: 0.05,
            interaction: Interaction::PressureChain,
            vehicle_length: 1.0,
            ring_length: n as f64 / rho_bar,
            v_max: 1.0,
        };
        let target = params.u_eq.eval(rho_bar);
        let mut ring = uniform_ring(&params, n, rho_bar)?;
        ring.w.iter_mut().enumerate().for_each(|(i, w)| *w += if i % 2 == 0 { 0.08 } else { 0.02 });
        let mut sim = MicroSim::new(params, ring)?;
        println!("rho = {rho_bar}, U_eq = {target:.4}");
        for k in 0..=4 {
            sim.run_until(0.25 * k as f64)?;
            println!("  t = {:.2}  mean speed {:.6}", sim.t, sim.mean_speed()?);
        }
    }
    Ok(())
}
