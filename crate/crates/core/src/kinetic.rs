//! Discrete-velocity kinetic model: speed grid, binary interaction rule with
//! over-braking, the Boltzmann gain/loss operator and velocity moments.
//!
//! Distributions are stored as Dirac weights on the speed nodes, so every
//! velocity integral is a plain sum over nodes.

use crate::error::{Error, Result};

/// Relative tolerance for deciding that a jump is an integer number of node steps.
const STEP_TOL: f64 = 1e-12;

/// Equidistant speeds `v_k = k/(n-1)` on `[0, 1]` with acceleration and braking
/// jumps expressed as whole node steps.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    nodes: Vec<f64>,
    spacing: f64,
    accel_steps: usize,
    brake_steps: usize,
}

impl VelocityGrid {
    /// Builds a grid, rejecting jumps that are not multiples of the node spacing.
    pub fn new(n_speeds: usize, delta_a: f64, delta_b: f64) -> Result<Self> {
        Self::build(n_speeds, delta_a, delta_b, false)
    }

    /// Like [`VelocityGrid::new`] but rounds each jump to the nearest node step.
    pub fn with_rounded_jumps(n_speeds: usize, delta_a: f64, delta_b: f64) -> Result<Self> {
        Self::build(n_speeds, delta_a, delta_b, true)
    }

    fn build(n_speeds: usize, delta_a: f64, delta_b: f64, round: bool) -> Result<Self> {
        if n_speeds < 2 {
            return Err(Error::config("n_speeds", format!("need at least 2 speeds, got {n_speeds}")));
        }
        if !(delta_a.is_finite() && delta_a > 0.0) {
            return Err(Error::config("delta_a", format!("must be positive, got {delta_a}")));
        }
        if !(delta_b.is_finite() && delta_b >= 0.0) {
            return Err(Error::config("delta_b", format!("must be non-negative, got {delta_b}")));
        }
        let intervals = (n_speeds - 1) as f64;
        let spacing = 1.0 / intervals;
        let accel_steps = jump_steps("delta_a", delta_a, intervals, n_speeds, round)?;
        let brake_steps = jump_steps("delta_b", delta_b, intervals, n_speeds, round)?;
        if accel_steps == 0 {
            return Err(Error::config("delta_a", "rounds to zero node steps"));
        }
        let nodes = (0..n_speeds).map(|k| k as f64 / intervals).collect();
        Ok(Self { nodes, spacing, accel_steps, brake_steps })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn v_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn accel_steps(&self) -> usize {
        self.accel_steps
    }

    pub fn brake_steps(&self) -> usize {
        self.brake_steps
    }

    pub fn delta_a(&self) -> f64 {
        self.accel_steps as f64 * self.spacing
    }

    pub fn delta_b(&self) -> f64 {
        self.brake_steps as f64 * self.spacing
    }
}

fn jump_steps(field: &str, delta: f64, intervals: f64, n_speeds: usize, round: bool) -> Result<usize> {
    let steps = delta * intervals;
    let nearest = steps.round();
    if (steps - nearest).abs() > STEP_TOL * steps.abs().max(1.0) {
        if !round {
            return Err(Error::config(
                format!("{field}, n_speeds"),
                format!(
                    "{field}={delta} is not a multiple of the node spacing 1/{} for n_speeds={n_speeds} ({steps} steps)",
                    n_speeds - 1
                ),
            ));
        }
        log::warn!("{field}={delta} rounded to {nearest} node steps (n_speeds={n_speeds})");
    }
    Ok(nearest as usize)
}

/// Probability of accelerating after an interaction, as a function of density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbLaw {
    /// `P(rho) = 1 - rho/rho_max`
    Linear,
    /// `P(rho) = (1 - rho/rho_max)^gamma`
    Power { gamma: f64 },
}

impl Default for ProbLaw {
    fn default() -> Self {
        ProbLaw::Linear
    }
}

impl ProbLaw {
    /// Evaluates the law; the density is clipped to `[0, rho_max]` first.
    pub fn eval(&self, rho: f64, rho_max: f64) -> f64 {
        let s = (1.0 - rho / rho_max).clamp(0.0, 1.0);
        match *self {
            ProbLaw::Linear => s,
            ProbLaw::Power { gamma } => s.powf(gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProbLaw::Linear => Ok(()),
            ProbLaw::Power { gamma } if gamma.is_finite() && gamma > 0.0 => Ok(()),
            ProbLaw::Power { gamma } => Err(Error::config("gamma", format!("must be positive, got {gamma}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub grid: VelocityGrid,
    pub rho_max: f64,
    pub prob_law: ProbLaw,
}

impl ModelParams {
    pub fn new(grid: VelocityGrid, prob_law: ProbLaw) -> Result<Self> {
        prob_law.validate()?;
        Ok(Self { grid, rho_max: 1.0, prob_law })
    }

    pub fn prob_accel(&self, rho: f64) -> f64 {
        self.prob_law.eval(rho, self.rho_max)
    }
}

/// Post-interaction target nodes of the interaction rule. Independent of density;
/// density only enters through the outcome weights `P` and `1 - P`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTables {
    /// `min(v_* + delta_a, V_M)` for each follower node.
    pub accel_target: Vec<usize>,
    /// `max(v_* - delta_b, 0)` for each follower node, used when `v_* <= v^*`.
    pub brake_target_slower: Vec<usize>,
    /// `max(v^* - delta_b, 0)` for each leader node, used when `v_* > v^*`.
    pub brake_target_faster: Vec<usize>,
}

impl InteractionTables {
    pub fn new(grid: &VelocityGrid) -> Self {
        let last = grid.len() - 1;
        let accel_target = (0..grid.len()).map(|k| (k + grid.accel_steps()).min(last)).collect();
        let brake: Vec<usize> = (0..grid.len()).map(|k| k.saturating_sub(grid.brake_steps())).collect();
        Self { accel_target, brake_target_slower: brake.clone(), brake_target_faster: brake }
    }

    pub fn len(&self) -> usize {
        self.accel_target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accel_target.is_empty()
    }
}

/// Distribution at one spatial point: non-negative Dirac weights per speed node.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    weights: Vec<f64>,
}

impl KineticState {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain(format!("weight {w} at node {k} is negative or non-finite")));
        }
        Ok(Self { weights })
    }

    pub fn zeros(n: usize) -> Self {
        Self { weights: vec![0.0; n] }
    }

    /// Density `rho` spread evenly over all nodes.
    pub fn uniform(n: usize, rho: f64) -> Self {
        Self { weights: vec![rho / n as f64; n] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn density(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Evaluates `Q[f,f]` for a frozen acceleration probability, writing into `out`.
///
/// The double sum over (follower, leader) pairs collapses to O(n) with suffix
/// sums: a follower at node `k` brakes from its own speed against leaders at
/// nodes `>= k`, and from the leader's speed against leaders strictly below it.
pub fn collision_with_probability(f: &[f64], p_accel: f64, tables: &InteractionTables, out: &mut [f64]) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    debug_assert_eq!(tables.len(), n);
    let rho: f64 = f.iter().sum();
    let p_brake = 1.0 - p_accel;
    out.iter_mut().for_each(|q| *q = 0.0);

    // mass on nodes strictly above k
    let mut above = rho;
    for k in 0..n {
        let at_or_above = above;
        above -= f[k];
        out[tables.accel_target[k]] += p_accel * f[k] * rho;
        out[tables.brake_target_slower[k]] += p_brake * f[k] * at_or_above;
        // f[k] as the leader, followers strictly faster
        out[tables.brake_target_faster[k]] += p_brake * f[k] * above;
    }
    for k in 0..n {
        out[k] -= f[k] * rho;
    }
}

/// The Boltzmann collision operator `Q[f,f](v_k)` with `P` evaluated at the local density.
pub fn collision_operator(state: &KineticState, params: &ModelParams, tables: &InteractionTables) -> Result<Vec<f64>> {
    let f = state.weights();
    if f.len() != tables.len() {
        return Err(Error::Domain(format!("state has {} nodes, tables have {}", f.len(), tables.len())));
    }
    let rho = state.density();
    if rho > params.rho_max * (1.0 + 1e-8) {
        return Err(Error::Domain(format!("density {rho} exceeds rho_max {}", params.rho_max)));
    }
    let mut out = vec![0.0; f.len()];
    collision_with_probability(f, params.prob_accel(rho), tables, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub density: f64,
    pub flux: f64,
    /// `flux / density`, `0` in vacuum.
    pub mean_speed: f64,
    /// Unnormalised `sum (v_k - u)^2 f_k`.
    pub variance: f64,
    pub energy: f64,
}

pub fn moments_of(weights: &[f64], nodes: &[f64]) -> Moments {
    let mut m = Moments::default();
    for (&f, &v) in weights.iter().zip(nodes) {
        m.density += f;
        m.flux += v * f;
        m.energy += v * v * f;
    }
    if m.density > 0.0 {
        m.mean_speed = m.flux / m.density;
        m.variance = weights.iter().zip(nodes).map(|(&f, &v)| (v - m.mean_speed).powi(2) * f).sum();
    }
    m
}

pub fn moments(state: &KineticState, grid: &VelocityGrid) -> Moments {
    moments_of(state.weights(), grid.nodes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct evaluation of the gain/loss double integral, one pair at a time.
    fn brute_force_q(f: &[f64], p: f64, tables: &InteractionTables) -> Vec<f64> {
        let n = f.len();
        let rho: f64 = f.iter().sum();
        let mut q = vec![0.0; n];
        for ks in 0..n {
            for kl in 0..n {
                let pair = f[ks] * f[kl];
                q[tables.accel_target[ks]] += p * pair;
                let brake = if ks <= kl { tables.brake_target_slower[ks] } else { tables.brake_target_faster[kl] };
                q[brake] += (1.0 - p) * pair;
            }
        }
        for k in 0..n {
            q[k] -= f[k] * rho;
        }
        q
    }

    fn two_speed() -> ModelParams {
        ModelParams::new(VelocityGrid::new(2, 1.0, 1.0).unwrap(), ProbLaw::Linear).unwrap()
    }

    #[test]
    fn grid_rejects_non_multiple_jump() {
        let err = VelocityGrid::new(48, 0.25, 0.25).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("delta_a") && msg.contains("n_speeds"), "{msg}");
        assert!(VelocityGrid::new(1, 1.0, 1.0).is_err());
        assert!(VelocityGrid::new(5, 0.0, 0.25).is_err());
    }

    #[test]
    fn grid_five_nodes() {
        let g = VelocityGrid::new(5, 0.25, 0.25).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!((g.accel_steps(), g.brake_steps()), (1, 1));
        let g = VelocityGrid::new(49, 0.25, 0.25 / 3.0).unwrap();
        assert_eq!((g.accel_steps(), g.brake_steps()), (12, 4));
    }

    #[test]
    fn rounding_mode_accepts_48_speeds() {
        let g = VelocityGrid::with_rounded_jumps(48, 0.25, 0.25).unwrap();
        // 47/4 = 11.75 -> 12 steps
        assert_eq!(g.accel_steps(), 12);
    }

    #[test]
    fn interaction_targets() {
        let t = InteractionTables::new(&VelocityGrid::new(2, 1.0, 1.0).unwrap());
        assert_eq!(t.accel_target, vec![1, 1]);
        assert_eq!(t.brake_target_slower, vec![0, 0]);
        assert_eq!(t.brake_target_faster, vec![0, 0]);

        let t = InteractionTables::new(&VelocityGrid::new(5, 0.25, 0.25).unwrap());
        assert_eq!(t.accel_target, vec![1, 2, 3, 4, 4]);
        assert_eq!(t.brake_target_slower[0], 0);
        assert_eq!(t.brake_target_slower, vec![0, 0, 1, 2, 3]);
    }

    #[test]
    fn vacuum_has_no_collisions() {
        let params = two_speed();
        let tables = InteractionTables::new(&params.grid);
        let q = collision_operator(&KineticState::zeros(2), &params, &tables).unwrap();
        assert_eq!(q, vec![0.0, 0.0]);
    }

    #[test]
    fn two_speed_closed_form() {
        let params = two_speed();
        let tables = InteractionTables::new(&params.grid);
        let (f0, f1) = (0.15, 0.45);
        let rho = f0 + f1;
        let p = 1.0 - rho;
        let q = collision_operator(&KineticState::new(vec![f0, f1]).unwrap(), &params, &tables).unwrap();
        assert!((q[1] - (p * rho * rho - f1 * rho)).abs() < 1e-15);
        assert!((q[0] - ((1.0 - p) * rho * rho - f0 * rho)).abs() < 1e-15);
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(KineticState::new(vec![0.1, -1e-3]).is_err());
    }

    #[test]
    fn moments_examples() {
        let g = VelocityGrid::new(2, 1.0, 1.0).unwrap();
        let m = moments(&KineticState::new(vec![0.0, 0.5]).unwrap(), &g);
        assert_eq!((m.density, m.flux, m.mean_speed, m.variance, m.energy), (0.5, 0.5, 1.0, 0.0, 0.5));
        assert_eq!(moments(&KineticState::zeros(2), &g), Moments::default());

        let rho = 0.3;
        let p = 1.0 - rho;
        let m = moments(&KineticState::new(vec![(1.0 - p) * rho, p * rho]).unwrap(), &g);
        assert!((m.flux - rho * (1.0 - rho)).abs() < 1e-15);
        assert!((m.variance - rho * rho * (1.0 - rho)).abs() < 1e-15);
    }

    #[test]
    fn embedded_two_speed_state_matches() {
        // mass only at 0 and V_M with jumps of V_M behaves like the 2-speed model
        let coarse = two_speed();
        let fine = ModelParams::new(VelocityGrid::new(5, 1.0, 1.0).unwrap(), ProbLaw::Linear).unwrap();
        let (tc, tf) = (InteractionTables::new(&coarse.grid), InteractionTables::new(&fine.grid));
        let qc = collision_operator(&KineticState::new(vec![0.2, 0.35]).unwrap(), &coarse, &tc).unwrap();
        let qf = collision_operator(&KineticState::new(vec![0.2, 0.0, 0.0, 0.0, 0.35]).unwrap(), &fine, &tf).unwrap();
        assert_eq!(qf[0], qc[0]);
        assert_eq!(qf[4], qc[1]);
        assert!(qf[1..4].iter().all(|&q| q == 0.0));
    }

    fn state_strategy() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>)> {
        (2usize..12).prop_flat_map(|n| {
            (Just(n), 1usize..n, 0usize..n, proptest::collection::vec(0.0f64..1.0, n))
        })
    }

    proptest! {
        #[test]
        fn fast_path_matches_double_sum((n, sa, sb, raw) in state_strategy(), p in 0.0f64..=1.0) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let f: Vec<f64> = raw.iter().map(|w| w / total * 0.9).collect();
            let h = 1.0 / (n - 1) as f64;
            let grid = VelocityGrid::new(n, sa as f64 * h, sb as f64 * h).unwrap();
            let tables = InteractionTables::new(&grid);
            let mut fast = vec![0.0; n];
            collision_with_probability(&f, p, &tables, &mut fast);
            let slow = brute_force_q(&f, p, &tables);
            for k in 0..n {
                prop_assert!((fast[k] - slow[k]).abs() < 1e-14, "node {k}: {} vs {}", fast[k], slow[k]);
            }
            let rho: f64 = f.iter().sum();
            prop_assert!(fast.iter().sum::<f64>().abs() <= 1e-13 * rho * rho.max(1.0));
        }

        #[test]
        fn quadratic_in_state((n, sa, sb, raw) in state_strategy(), alpha in 0.1f64..3.0) {
            let f: Vec<f64> = raw.iter().map(|w| w * 0.1).collect();
            let h = 1.0 / (n - 1) as f64;
            let tables = InteractionTables::new(&VelocityGrid::new(n, sa as f64 * h, sb as f64 * h).unwrap());
            let scaled: Vec<f64> = f.iter().map(|w| alpha * w).collect();
            let (mut q1, mut q2) = (vec![0.0; n], vec![0.0; n]);
            collision_with_probability(&f, 0.4, &tables, &mut q1);
            collision_with_probability(&scaled, 0.4, &tables, &mut q2);
            for k in 0..n {
                prop_assert!((q2[k] - alpha * alpha * q1[k]).abs() < 1e-13);
            }
        }

        #[test]
        fn explicit_euler_keeps_positivity((n, sa, sb, raw) in state_strategy()) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let mut f: Vec<f64> = raw.iter().map(|w| w / total * 0.8).collect();
            let h = 1.0 / (n - 1) as f64;
            let params = ModelParams::new(VelocityGrid::new(n, sa as f64 * h, sb as f64 * h).unwrap(), ProbLaw::Linear).unwrap();
            let tables = InteractionTables::new(&params.grid);
            let dt = 1.0 / 0.8;
            let mut q = vec![0.0; n];
            for _ in 0..20 {
                collision_with_probability(&f, params.prob_accel(0.8), &tables, &mut q);
                for k in 0..n {
                    f[k] += dt * q[k];
                }
                prop_assert!(f.iter().all(|&w| w >= -1e-15));
            }
        }
    }
}
