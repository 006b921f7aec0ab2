use std::sync::Arc;

use kinetra::equilibrium::{build_maxwellian_table, TableOptions};
use kinetra::kinetic::{collision_operator, collision_with_probability, InteractionTables, ModelParams, ProbLaw, VelocityGrid};
use kinetra::micro::{uniform_ring, Interaction, MicroParams, MicroSim};
use kinetra::solver::{
    Boundary, CollisionModel, EpsilonModel, FluxKind, KineticField, KineticSolver, Mesh1D, OvershootPolicy, SolverOptions,
};
use kinetra::stability::{mu_bgk, mu_modified, PressureFn, SpeedLaw};
use kinetra::wspace::{GField, WGrid, WOptions, WSolver};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..10).prop_flat_map(|n| (Just(n), 1usize..n, 0usize..n))
}

fn model(n: usize, sa: usize, sb: usize, gamma: f64) -> ModelParams {
    let h = 1.0 / (n - 1) as f64;
    ModelParams::new(VelocityGrid::new(n, sa as f64 * h, sb as f64 * h).unwrap(), ProbLaw::Power { gamma }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tabulated_maxwellians_are_fixed_points((n, sa, sb) in grid_strategy(), gamma in 0.3f64..2.0) {
        let params = model(n, sa, sb, gamma);
        let t = build_maxwellian_table(&params, &TableOptions { n_rho: 21, ..TableOptions::default() }).unwrap();
        let tables = InteractionTables::new(&params.grid);
        for (rho, m) in t.rho_samples.iter().zip(&t.maxwellians) {
            prop_assert!(m.weights().iter().all(|&w| w >= 0.0));
            prop_assert!((m.density() - rho).abs() <= 1e-13);
            // P at the sample density: near rho_max with gamma < 1 it is too
            // steep to re-derive from the weight sum, which carries roundoff
            let mut q = vec![0.0; n];
            collision_with_probability(m.weights(), params.prob_accel(*rho), &tables, &mut q);
            prop_assert!(q.iter().all(|v| v.abs() <= 1e-10), "rho={rho}");
            if *rho < 0.99 {
                let q = collision_operator(m, &params, &tables).unwrap();
                prop_assert!(q.iter().all(|v| v.abs() <= 1e-9), "rho={rho}");
            }
        }
        prop_assert!(t.f_eq.iter().zip(&t.rho_samples).all(|(f, r)| *f >= 0.0 && *f <= r + 1e-15));
    }

    #[test]
    fn pressure_never_lowers_diffusion_when_speed_falls(c in 0.2f64..3.0, m in 1.0f64..4.0) {
        let params = model(5, 1, 1, 1.0);
        let t = build_maxwellian_table(&params, &TableOptions { n_rho: 41, ..TableOptions::default() }).unwrap();
        let p = PressureFn::power(c, m);
        let u = SpeedLaw::Table(Arc::new(t.clone()));
        for &rho in &t.rho_samples {
            if u.derivative(rho) <= 0.0 {
                prop_assert!(mu_modified(&t, &p, rho).unwrap() >= mu_bgk(&t, rho).unwrap() - 1e-15);
            }
        }
    }

    #[test]
    fn kinetic_runs_conserve_mass_and_stay_positive(
        a in 0.05f64..0.6,
        b in 0.0f64..0.35,
        bgk in any::<bool>(),
        local in any::<bool>(),
        eps in prop_oneof![Just(EpsilonModel::Constant(0.01)), Just(EpsilonModel::Constant(1.0)), Just(EpsilonModel::Variable { cap: 0.99 })],
    ) {
        let params = model(5, 1, 1, 1.0);
        let t = Arc::new(build_maxwellian_table(&params, &TableOptions::default()).unwrap());
        let mesh = Mesh1D::new(-1.0, 1.0, 50, Boundary::Periodic).unwrap();
        let field = KineticField::maxwellian(mesh, &t, |x| a + b * (-8.0 * x * x).exp()).unwrap();
        let opts = SolverOptions {
            collision: if bgk { CollisionModel::Bgk } else { CollisionModel::Boltzmann },
            eps,
            flux: if local { FluxKind::Local } else { FluxKind::Global },
            overshoot: OvershootPolicy::Record,
            ..SolverOptions::default()
        };
        let out = KineticSolver::new(params, t, opts).unwrap().run(field, &[0.3]).unwrap();
        let d = out.diagnostics;
        prop_assert!(d.max_mass_drift <= 1e-12, "{}", d.max_mass_drift);
        prop_assert!(d.max_collision_density_change <= 1e-13);
        prop_assert!(out.field.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn zero_pressure_wspace_matches_bgk(a in 0.05f64..0.6, b in 0.0f64..0.35, refine in 1usize..4) {
        let params = model(5, 1, 1, 1.0);
        let t = Arc::new(build_maxwellian_table(&params, &TableOptions::default()).unwrap());
        let mesh = Mesh1D::new(-1.0, 1.0, 40, Boundary::Periodic).unwrap();
        let rho0 = |x: f64| a + b * (-8.0 * x * x).exp();
        let opts = SolverOptions { collision: CollisionModel::Bgk, ..SolverOptions::default() };
        let k = KineticSolver::new(params, t.clone(), opts).unwrap()
            .run(KineticField::maxwellian(mesh, &t, rho0).unwrap(), &[0.25]).unwrap();
        let grid = WGrid::for_table(&t, None, refine, 0).unwrap();
        let w = WSolver::new(t.clone(), None, WOptions::default()).unwrap()
            .run(GField::equilibrium(mesh, grid.clone(), &t, None, rho0).unwrap(), &[0.25]).unwrap();
        for j in 0..mesh.n_cells {
            for kk in 0..5 {
                prop_assert_eq!(k.field.values[j * 5 + kk], w.field.cell(j)[grid.v_index(kk, 5)]);
            }
        }
    }

    #[test]
    fn ring_headways_sum_to_length(rho_bar in 0.1f64..0.9, amp in 0.0f64..0.1, steps in 1usize..200) {
        let n = 16;
        let params = MicroParams {
            pressure: PressureFn::power(1.5, 2.0),
            u_eq: SpeedLaw::Greenshields,
            eps: 0.1,
            interaction: Interaction::PressureChain,
            vehicle_length: 1.0,
            ring_length: n as f64 / rho_bar,
            v_max: 1.0,
        };
        let mut ring = uniform_ring(&params, n, rho_bar).unwrap();
        for (i, w) in ring.w.iter_mut().enumerate() {
            *w += amp * ((i * 7 % n) as f64 / n as f64 - 0.5);
        }
        let mut sim = MicroSim::new(params.clone(), ring).unwrap();
        for _ in 0..steps {
            let dt = sim.default_dt();
            sim.step(dt).unwrap();
        }
        let total: f64 = (0..n).map(|i| sim.state.headway(i, params.ring_length)).sum();
        prop_assert!((total - params.ring_length).abs() <= 1e-9 * params.ring_length);
        prop_assert!((0..n).all(|i| sim.state.headway(i, params.ring_length) > 0.0));
    }
}
