//! Chapman-Enskog diffusion coefficients and the stable / weakly-unstable /
//! unstable classification built on their sign pattern.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::equilibrium::{d_rho_moments, sci, MaxwellianTable};
use crate::error::{Error, Result};

/// Values with `|mu| <= SIGN_ATOL` count as zero when classifying.
pub const SIGN_ATOL: f64 = 1e-12;

/// Monotone pressure (or hesitation) law.
#[derive(Debug, Clone, PartialEq)]
pub enum PressureFn {
    /// `c * rho^m`
    Power { c: f64, m: f64 },
    /// Piecewise-linear through the given points (strictly increasing `p`).
    Table { rho: Vec<f64>, p: Vec<f64> },
}

impl PressureFn {
    pub fn power(c: f64, m: f64) -> Self {
        PressureFn::Power { c, m }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PressureFn::Power { c, m } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::config("pressure.c", format!("must be positive, got {c}")));
                }
                if !(m.is_finite() && *m >= 1.0) {
                    return Err(Error::config("pressure.m", format!("must be >= 1, got {m}")));
                }
                Ok(())
            }
            PressureFn::Table { rho, p } => {
                if rho.len() < 2 || rho.len() != p.len() {
                    return Err(Error::config("pressure", "table needs matching rho/p columns with >= 2 rows"));
                }
                let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
                if !increasing(rho) {
                    return Err(Error::config("pressure", "table densities must be strictly increasing"));
                }
                if !increasing(p) || p[0] < 0.0 {
                    return Err(Error::config("pressure", "p must be non-negative with p' > 0"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            PressureFn::Power { c, m } => c * rho.max(0.0).powf(*m),
            PressureFn::Table { rho: xs, p } => {
                let i = segment(xs, rho);
                let t = (rho - xs[i]) / (xs[i + 1] - xs[i]);
                p[i] + t * (p[i + 1] - p[i])
            }
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match self {
            PressureFn::Power { c, m } => {
                if *m == 1.0 {
                    *c
                } else {
                    c * m * rho.max(0.0).powf(m - 1.0)
                }
            }
            PressureFn::Table { rho: xs, p } => {
                let i = segment(xs, rho);
                (p[i + 1] - p[i]) / (xs[i + 1] - xs[i])
            }
        }
    }
}

impl fmt::Display for PressureFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PressureFn::Power { c, m } => write!(f, "{c}*rho^{m}"),
            PressureFn::Table { rho, .. } => write!(f, "table({} points)", rho.len()),
        }
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    match xs.iter().position(|&v| v > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => xs.len() - 2,
    }
}

/// Equilibrium speed `U_eq(rho)`.
#[derive(Debug, Clone)]
pub enum SpeedLaw {
    /// `U = 1 - rho`
    Greenshields,
    /// `U = 1 - rho^m`
    Power { m: f64 },
    /// Read off a Maxwellian table (linear interpolation, central differences).
    Table(Arc<MaxwellianTable>),
}

/// Step for central differences of tabulated closures.
const FD_STEP: f64 = 1e-6;

impl SpeedLaw {
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            SpeedLaw::Greenshields => 1.0 - rho,
            SpeedLaw::Power { m } => 1.0 - rho.powf(*m),
            SpeedLaw::Table(t) => t.speed(rho.clamp(0.0, t.rho_max())).unwrap_or(0.0),
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match self {
            SpeedLaw::Greenshields => -1.0,
            SpeedLaw::Power { m } => -m * rho.powf(m - 1.0),
            SpeedLaw::Table(t) => {
                let lo = (rho - FD_STEP).max(0.0);
                let hi = (rho + FD_STEP).min(t.rho_max());
                (self.eval(hi) - self.eval(lo)) / (hi - lo)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArzClosure {
    pub u_eq: SpeedLaw,
    pub hesitation: PressureFn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArzDiffusion {
    pub mu: f64,
    /// `0 > U'_eq > -h'`
    pub subcharacteristic: bool,
}

/// `mu_ARZ = -rho^2 U'_eq (U'_eq + h')` and the sub-characteristic flag.
pub fn mu_arz(closure: &ArzClosure, rho: f64) -> Result<ArzDiffusion> {
    closure.hesitation.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("density {rho} outside [0, 1]")));
    }
    let du = closure.u_eq.derivative(rho);
    let dh = closure.hesitation.derivative(rho);
    Ok(ArzDiffusion { mu: -rho * rho * du * (du + dh), subcharacteristic: 0.0 > du && du > -dh })
}

/// `mu_BGK = d/drho int v^2 M_f dv - F'_eq^2`.
pub fn mu_bgk(table: &MaxwellianTable, rho: f64) -> Result<f64> {
    let d = d_rho_moments(table, rho)?;
    Ok(d.d_energy - d.d_flux * d.d_flux)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstabilityCheck {
    /// `F'_eq < 0` and `d Var / d rho < 0`
    pub hypotheses_hold: bool,
    pub mu_negative: bool,
}

impl InstabilityCheck {
    /// The implication `hypotheses => mu < 0`.
    pub fn consistent(&self) -> bool {
        !self.hypotheses_hold || self.mu_negative
    }
}

/// Checks that `F'_eq < 0` together with a falling variance forces `mu_BGK < 0`.
pub fn check_instability_condition(table: &MaxwellianTable, rho: f64) -> Result<InstabilityCheck> {
    let d = d_rho_moments(table, rho)?;
    let mu = d.d_energy - d.d_flux * d.d_flux;
    Ok(InstabilityCheck { hypotheses_hold: d.d_flux < 0.0 && d.d_variance < 0.0, mu_negative: mu < 0.0 })
}

/// Pressure contribution written with the equilibrium speed: `-rho^2 p' U'_eq`.
pub fn pressure_term_speed_form(rho: f64, dp: f64, d_speed: f64) -> f64 {
    -rho * rho * dp * d_speed
}

/// The same contribution written with the flux: `-rho p' F'_eq + F_eq p'`.
pub fn pressure_term_flux_form(rho: f64, dp: f64, flux: f64, d_flux: f64) -> f64 {
    -rho * dp * d_flux + flux * dp
}

/// Diffusion of the w-space BGK model: `mu_BGK - rho^2 p' U'_eq`.
pub fn mu_modified(table: &MaxwellianTable, pressure: &PressureFn, rho: f64) -> Result<f64> {
    pressure.validate()?;
    let d = d_rho_moments(table, rho)?;
    let mu = d.d_energy - d.d_flux * d.d_flux;
    Ok(mu + pressure_term_speed_form(rho, pressure.derivative(rho), d.d_speed))
}

/// [`mu_modified`] evaluated through the flux form of the pressure term.
pub fn mu_modified_flux_form(table: &MaxwellianTable, pressure: &PressureFn, rho: f64) -> Result<f64> {
    pressure.validate()?;
    let d = d_rho_moments(table, rho)?;
    let mu = d.d_energy - d.d_flux * d.d_flux;
    Ok(mu + pressure_term_flux_form(rho, pressure.derivative(rho), table.flux(rho)?, d.d_flux))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Bgk,
    Arz,
    Modified,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Bgk => "bgk",
            ModelKind::Arz => "arz",
            ModelKind::Modified => "modified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    WeaklyUnstable,
    Unstable,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::WeaklyUnstable => "weakly_unstable",
            Classification::Unstable => "unstable",
        })
    }
}

/// Maximal density interval on which `mu < 0`. `touches_*` marks runs that
/// include the first or last sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeInterval {
    pub lo: f64,
    pub hi: f64,
    pub touches_lower: bool,
    pub touches_upper: bool,
}

fn zero_crossing(r0: f64, m0: f64, r1: f64, m1: f64) -> f64 {
    if m0 == m1 {
        0.5 * (r0 + r1)
    } else {
        r0 + (r1 - r0) * m0 / (m0 - m1)
    }
}

/// Sign-pattern classification of sampled `mu`. Interval ends are located by
/// linear interpolation between the bracketing samples.
pub fn classify(rho: &[f64], mu: &[f64], atol: f64) -> (Classification, Vec<NegativeInterval>) {
    assert_eq!(rho.len(), mu.len());
    assert!(rho.len() >= 3, "classification needs at least 3 samples");
    let clean = |m: f64| if m.abs() <= atol { 0.0 } else { m };
    let n = rho.len();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if clean(mu[i]) >= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && clean(mu[i]) < 0.0 {
            i += 1;
        }
        let end = i - 1;
        let lo = if start == 0 { rho[0] } else { zero_crossing(rho[start - 1], clean(mu[start - 1]), rho[start], mu[start]) };
        let hi = if end == n - 1 { rho[n - 1] } else { zero_crossing(rho[end], mu[end], rho[end + 1], clean(mu[end + 1])) };
        intervals.push(NegativeInterval { lo, hi, touches_lower: start == 0, touches_upper: end == n - 1 });
    }
    let class = if intervals.is_empty() {
        Classification::Stable
    } else if intervals.iter().any(|iv| iv.touches_lower || iv.touches_upper) {
        Classification::Unstable
    } else {
        Classification::WeaklyUnstable
    };
    (class, intervals)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionProfile {
    pub model_kind: ModelKind,
    pub rho_samples: Vec<f64>,
    pub mu: Vec<f64>,
    pub negative_intervals: Vec<NegativeInterval>,
    pub classification: Classification,
}

impl DiffusionProfile {
    pub fn from_samples(model_kind: ModelKind, rho_samples: Vec<f64>, mu: Vec<f64>) -> Self {
        let (classification, negative_intervals) = classify(&rho_samples, &mu, SIGN_ATOL);
        Self { model_kind, rho_samples, mu, negative_intervals, classification }
    }

    /// `mu_BGK` at every table sample.
    pub fn bgk(table: &MaxwellianTable) -> Self {
        let cols = table.derivative_columns();
        let mu = (0..table.len()).map(|i| cols.d_energy[i] - cols.d_flux[i] * cols.d_flux[i]).collect();
        Self::from_samples(ModelKind::Bgk, table.rho_samples.clone(), mu)
    }

    pub fn modified(table: &MaxwellianTable, pressure: &PressureFn) -> Result<Self> {
        pressure.validate()?;
        let cols = table.derivative_columns();
        let mu = table
            .rho_samples
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                cols.d_energy[i] - cols.d_flux[i] * cols.d_flux[i]
                    + pressure_term_speed_form(rho, pressure.derivative(rho), cols.d_speed[i])
            })
            .collect();
        Ok(Self::from_samples(ModelKind::Modified, table.rho_samples.clone(), mu))
    }

    pub fn arz(closure: &ArzClosure, rho_samples: Vec<f64>) -> Result<Self> {
        let mu = rho_samples.iter().map(|&r| mu_arz(closure, r).map(|d| d.mu)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_samples(ModelKind::Arz, rho_samples, mu))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["rho", "mu", "model", "classification"])?;
        let (model, class) = (self.model_kind.to_string(), self.classification.to_string());
        for (r, m) in self.rho_samples.iter().zip(&self.mu) {
            wtr.write_record([sci(*r), sci(*m), model.clone(), class.clone()])?;
        }
        wtr.flush().map_err(|e| Error::io("<diffusion profile>", e))?;
        Ok(())
    }

    /// Plain-text listing of the negative intervals.
    pub fn interval_summary(&self) -> String {
        let mut s = format!("model = {}\nclassification = {}\n", self.model_kind, self.classification);
        if self.negative_intervals.is_empty() {
            s.push_str("negative_intervals = none\n");
        }
        for iv in &self.negative_intervals {
            s.push_str(&format!("negative_interval = ({:.6}, {:.6})\n", iv.lo, iv.hi));
        }
        s
    }
}
