//! Finite-time realization of a posterior-matched feedback branch.
//!
//! The working bit sits in a two-level Hamiltonian with the predicted state
//! at energy 0 and the other state at the gap `lambda` (in kT). After the
//! sudden assignment `0 -> eps*` the gap is ramped back to zero in discrete
//! steps; each step is a quench (work at fixed state) followed by one
//! discrete-time Glauber update toward the instantaneous Gibbs state (heat at
//! fixed gap).

use std::f64::consts::LN_2;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::h2;
use crate::error::{Error, Result};
use crate::rng;
use crate::sig9;

/// Normalized gap profile: fraction of the initial gap at normalized time `s`.
#[derive(Clone, Default)]
pub enum GapShape {
    /// `1 - s`
    #[default]
    Linear,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl GapShape {
    pub fn at(&self, s: f64) -> f64 {
        match self {
            GapShape::Linear => 1.0 - s,
            GapShape::Custom(f) => f(s),
        }
    }
}

impl fmt::Debug for GapShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GapShape::Linear => f.write_str("Linear"),
            GapShape::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolSchedule {
    tau: f64,
    steps: usize,
    rate: f64,
    shape: GapShape,
}

/// Steps per unit of `tau * rate` in default schedules.
pub const STEPS_PER_RELAXATION: f64 = 10.0;
pub const MIN_STEPS: usize = 100;

impl ProtocolSchedule {
    pub fn new(tau: f64, steps: usize, rate: f64, shape: GapShape) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid("tau", format!("{tau} must be positive")));
        }
        if steps < 2 {
            return Err(Error::invalid(
                "steps",
                format!("need at least 2 steps, got {steps}"),
            ));
        }
        if !(rate > 0.0) {
            return Err(Error::invalid("rate", format!("{rate} must be positive")));
        }
        let end = shape.at(1.0);
        if end.abs() > 1e-12 {
            return Err(Error::invalid(
                "gap_path",
                format!("protocol must end at zero gap, ends at {end}"),
            ));
        }
        let sched = ProtocolSchedule {
            tau,
            steps,
            rate,
            shape,
        };
        if sched.rate * sched.dt() > 1.0 {
            return Err(Error::invalid(
                "steps",
                format!(
                    "rate * dt = {} exceeds 1; use more steps",
                    sched.rate * sched.dt()
                ),
            ));
        }
        Ok(sched)
    }

    /// Linear ramp with `max(100, 10 tau rate)` steps.
    pub fn linear(tau: f64, rate: f64) -> Result<Self> {
        ScheduleTemplate {
            rate,
            ..Default::default()
        }
        .at(tau)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.steps as f64
    }

    pub fn shape(&self) -> &GapShape {
        &self.shape
    }
}

/// Produces schedules of the same shape and time resolution for any `tau`.
#[derive(Debug, Clone)]
pub struct ScheduleTemplate {
    pub rate: f64,
    pub shape: GapShape,
    pub steps_per_relaxation: f64,
    pub min_steps: usize,
}

impl Default for ScheduleTemplate {
    fn default() -> Self {
        ScheduleTemplate {
            rate: 1.0,
            shape: GapShape::Linear,
            steps_per_relaxation: STEPS_PER_RELAXATION,
            min_steps: MIN_STEPS,
        }
    }
}

impl ScheduleTemplate {
    pub fn at(&self, tau: f64) -> Result<ProtocolSchedule> {
        let wanted = (self.steps_per_relaxation * tau * self.rate).ceil();
        let steps = if wanted.is_finite() && wanted > self.min_steps as f64 {
            wanted as usize
        } else {
            self.min_steps
        };
        ProtocolSchedule::new(tau, steps, self.rate, self.shape.clone())
    }
}

/// Quasistatic branch work `ln 2 (1 - h2(p))` in kT.
pub fn quasistatic_work_kt(p: f64) -> f64 {
    LN_2 * (1.0 - h2(p))
}

/// Optimal initial gap `ln(p / (1 - p))` for `p in [1/2, 1)`.
pub fn initial_gap(p: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&p) {
        return Err(Error::invalid(
            "p",
            format!("finite-time branch needs 1/2 <= p < 1 (finite gap), got {p}"),
        ));
    }
    Ok((p / (1.0 - p)).ln())
}

/// Everything the discrete protocol needs, tabulated once per `(p, schedule)`.
#[derive(Debug, Clone)]
pub struct BranchProtocol {
    p: f64,
    /// Gap after step `k`, `k = 0..=steps`; `levels[0]` is the assigned gap.
    levels: Vec<f64>,
    /// Probability of jumping up / down during the update after step `k`.
    up: Vec<f64>,
    down: Vec<f64>,
}

impl BranchProtocol {
    pub fn new(p: f64, sched: &ProtocolSchedule) -> Result<Self> {
        let eps = initial_gap(p)?;
        let n = sched.steps;
        let rdt = sched.rate * sched.dt();
        let levels: Vec<f64> = (0..=n)
            .map(|k| {
                if k == n {
                    0.0
                } else {
                    eps * sched.shape.at(k as f64 / n as f64)
                }
            })
            .collect();
        // Glauber: jump with probability rdt / (1 + e^{dE}), dE the energy change.
        let up = levels.iter().map(|&l| rdt / (1.0 + l.exp())).collect();
        let down = levels.iter().map(|&l| rdt / (1.0 + (-l).exp())).collect();
        Ok(BranchProtocol {
            p,
            levels,
            up,
            down,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn up(&self) -> &[f64] {
        &self.up
    }

    pub fn down(&self) -> &[f64] {
        &self.down
    }

    /// Mean assignment work `-(1 - p) eps*`: the posterior puts weight `1 - p` on the raised state.
    pub fn mean_assignment_kt(&self) -> f64 {
        -(1.0 - self.p) * self.levels[0]
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> BranchTrajectory {
        let mut excited = rng.gen::<f64>() >= self.p;
        let initial_excited = excited;
        let assignment = if excited { -self.levels[0] } else { 0.0 };
        let mut ret = 0.0;
        let mut heat = 0.0;
        for k in 1..self.levels.len() {
            let lam = self.levels[k];
            if excited {
                ret -= lam - self.levels[k - 1];
            }
            let u = rng.gen::<f64>();
            if excited {
                if u < self.down[k] {
                    excited = false;
                    heat -= lam;
                }
            } else if u < self.up[k] {
                excited = true;
                heat += lam;
            }
        }
        let final_energy = if excited {
            *self.levels.last().unwrap()
        } else {
            0.0
        };
        BranchTrajectory {
            initial_excited,
            assignment_kt: assignment,
            return_kt: ret,
            heat_kt: heat,
            energy_change_kt: final_energy,
        }
    }
}

/// Work and heat of one trajectory, all in kT; work is counted as extracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchTrajectory {
    pub initial_excited: bool,
    pub assignment_kt: f64,
    pub return_kt: f64,
    /// Heat absorbed from the bath.
    pub heat_kt: f64,
    /// Final minus initial energy; the initial Hamiltonian is degenerate at zero.
    pub energy_change_kt: f64,
}

impl BranchTrajectory {
    pub fn extracted_kt(&self) -> f64 {
        self.assignment_kt + self.return_kt
    }

    /// `dE = Q_in - W_ext` residual.
    pub fn first_law_residual(&self) -> f64 {
        self.energy_change_kt - (self.heat_kt - self.extracted_kt())
    }
}

/// Runs one trajectory of the branch with predicted-state probability `p`.
pub fn run_branch_trajectory(
    p: f64,
    sched: &ProtocolSchedule,
    seed: u64,
) -> Result<BranchTrajectory> {
    let proto = BranchProtocol::new(p, sched)?;
    Ok(proto.run(&mut rng::stream(seed, 0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub tau: f64,
    pub p: f64,
    /// `w_qs - mean(W_ext)`, with the assignment stroke at its exact posterior average.
    pub mean_sigma: f64,
    pub stderr: f64,
    /// Same quantity from the plain trajectory average.
    pub raw_mean_sigma: f64,
    pub raw_stderr: f64,
    pub mean_work_kt: f64,
    pub reps: u64,
    pub w_qs_kt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    raw: (f64, f64),
    cv: (f64, f64),
}

impl Moments {
    fn merge(mut self, o: Moments) -> Self {
        self.n += o.n;
        self.raw.0 += o.raw.0;
        self.raw.1 += o.raw.1;
        self.cv.0 += o.cv.0;
        self.cv.1 += o.cv.1;
        self
    }
}

fn mean_se(n: u64, (s, ss): (f64, f64)) -> (f64, f64) {
    let nf = n as f64;
    let mean = s / nf;
    let var = ((ss - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

pub const MIN_REPS: u64 = 100;
const SIGMA_STREAMS: u64 = 16;

/// Monte Carlo estimate of the finite-time loss `w_qs - E[W_ext]` (in kT).
///
/// The assignment stroke depends only on the initial microstate, whose law
/// is known exactly, so its sampled value is replaced by its mean. This
/// leaves the estimator unbiased and removes the dominant O(1) variance;
/// the plain average is reported alongside.
pub fn estimate_sigma(
    p: f64,
    sched: &ProtocolSchedule,
    reps: u64,
    seed: u64,
) -> Result<SigmaEstimate> {
    if reps < MIN_REPS {
        return Err(Error::invalid(
            "reps",
            format!("need at least {MIN_REPS} trajectories, got {reps}"),
        ));
    }
    let proto = BranchProtocol::new(p, sched)?;
    let mean_assign = proto.mean_assignment_kt();
    let chunks = rng::partition(reps, SIGMA_STREAMS);
    let m = chunks
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut r = rng::stream(seed, i as u64);
            let mut m = Moments {
                n,
                ..Default::default()
            };
            for _ in 0..n {
                let t = proto.run(&mut r);
                let raw = t.extracted_kt();
                let cv = mean_assign + t.return_kt;
                m.raw.0 += raw;
                m.raw.1 += raw * raw;
                m.cv.0 += cv;
                m.cv.1 += cv * cv;
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let w_qs = quasistatic_work_kt(p);
    let (cv_mean, cv_se) = mean_se(m.n, m.cv);
    let (raw_mean, raw_se) = mean_se(m.n, m.raw);
    Ok(SigmaEstimate {
        tau: sched.tau,
        p,
        mean_sigma: w_qs - cv_mean,
        stderr: cv_se,
        raw_mean_sigma: w_qs - raw_mean,
        raw_stderr: raw_se,
        mean_work_kt: cv_mean,
        reps: m.n,
        w_qs_kt: w_qs,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residuals (0 for two points).
    pub slope_stderr: f64,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(
            "fit needs equally many x and y values".into(),
        ));
    }
    if xs.len() < 2 {
        return Err(Error::Regime(format!(
            "log-log fit needs at least 2 points, got {}",
            xs.len()
        )));
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0)) {
        return Err(Error::Regime(format!(
            "log-log fit needs positive data, got {bad}"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Regime(
            "log-log fit needs at least two distinct x values".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub points: Vec<SigmaEstimate>,
    pub fit: LineFit,
    /// Slope standard error propagated from the per-point Monte Carlo errors.
    pub slope_stderr_mc: f64,
}

impl ScalingFit {
    /// The larger of the residual and Monte Carlo slope errors.
    pub fn slope_uncertainty(&self) -> f64 {
        self.fit.slope_stderr.max(self.slope_stderr_mc)
    }
}

/// Required significance of every `Sigma` in a scaling fit.
pub const SCALING_MIN_Z: f64 = 3.0;

/// Estimates `Sigma(tau)` on `tau_grid` and fits the log-log slope.
///
/// Grid point `i` uses master seed `seed + i`.
pub fn scaling_fit(
    p: f64,
    tau_grid: &[f64],
    template: &ScheduleTemplate,
    reps: u64,
    seed: u64,
) -> Result<ScalingFit> {
    if tau_grid.len() < 2 {
        return Err(Error::Regime(format!(
            "scaling fit needs at least 2 tau values, got {}",
            tau_grid.len()
        )));
    }
    let mut points = Vec::with_capacity(tau_grid.len());
    for (i, &tau) in tau_grid.iter().enumerate() {
        let sched = template.at(tau)?;
        points.push(estimate_sigma(
            p,
            &sched,
            reps,
            seed.wrapping_add(i as u64),
        )?);
    }
    if let Some(bad) = points
        .iter()
        .find(|e| e.mean_sigma < SCALING_MIN_Z * e.stderr || e.mean_sigma <= 0.0)
    {
        return Err(Error::Regime(format!(
            "Sigma at tau = {} is {:.3e} +/- {:.3e}, not resolved above {SCALING_MIN_Z} standard errors; \
             increase reps or use shorter tau",
            bad.tau, bad.mean_sigma, bad.stderr
        )));
    }
    let taus: Vec<f64> = points.iter().map(|e| e.tau).collect();
    let sig: Vec<f64> = points.iter().map(|e| e.mean_sigma).collect();
    let fit = fit_loglog(&taus, &sig)?;
    let lx: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let var: f64 = lx
        .iter()
        .zip(&points)
        .map(|(x, e)| (x - mx).powi(2) * (e.stderr / e.mean_sigma).powi(2))
        .sum();
    Ok(ScalingFit {
        points,
        fit,
        slope_stderr_mc: var.sqrt() / sxx,
    })
}

pub const SIGMA_CSV_HEADER: &str = "tau,sigma_mean,sigma_stderr,reps,seed";

pub fn write_sigma_csv<W: Write>(mut w: W, points: &[SigmaEstimate]) -> std::io::Result<()> {
    writeln!(w, "{SIGMA_CSV_HEADER}")?;
    for e in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            sig9(e.tau),
            sig9(e.mean_sigma),
            sig9(e.stderr),
            e.reps,
            e.seed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(ProtocolSchedule::new(0.0, 10, 1.0, GapShape::Linear).is_err());
        assert!(ProtocolSchedule::new(1.0, 1, 1.0, GapShape::Linear).is_err());
        // dt = 1 with rate 2 is too coarse.
        assert!(ProtocolSchedule::new(10.0, 10, 2.0, GapShape::Linear).is_err());
        let flat = GapShape::Custom(Arc::new(|_| 1.0));
        assert!(ProtocolSchedule::new(1.0, 10, 1.0, flat).is_err());
        let s = ProtocolSchedule::linear(50.0, 1.0).unwrap();
        assert_eq!(s.steps(), 500);
        assert_eq!(ProtocolSchedule::linear(1.0, 1.0).unwrap().steps(), 100);
    }

    #[test]
    fn gap_requires_finite_posterior() {
        assert!(initial_gap(1.0).is_err());
        assert!(initial_gap(0.4).is_err());
        assert_eq!(initial_gap(0.5).unwrap(), 0.0);
    }

    #[test]
    fn unbiased_bit_does_nothing() {
        let s = ProtocolSchedule::linear(5.0, 1.0).unwrap();
        for seed in 0..20 {
            let t = run_branch_trajectory(0.5, &s, seed).unwrap();
            assert_eq!(t.extracted_kt(), 0.0);
            assert_eq!(t.heat_kt, 0.0);
        }
    }

    #[test]
    fn first_law_holds_per_trajectory() {
        let s = ProtocolSchedule::linear(20.0, 1.0).unwrap();
        for seed in 0..200 {
            let t = run_branch_trajectory(0.85, &s, seed).unwrap();
            assert!(t.first_law_residual().abs() < 1e-10, "{t:?}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = ProtocolSchedule::linear(10.0, 1.0).unwrap();
        let a = estimate_sigma(0.8, &s, 500, 4).unwrap();
        let b = estimate_sigma(0.8, &s, 500, 4).unwrap();
        assert_eq!(a, b);
        assert!(estimate_sigma(0.8, &s, 99, 4).is_err());
    }

    #[test]
    fn synthetic_fits() {
        let taus = [1.0, 2.0, 4.0, 8.0];
        let flat = fit_loglog(&taus, &[0.3; 4]).unwrap();
        assert!(flat.slope.abs() < 1e-12);
        let inv: Vec<f64> = taus.iter().map(|t| 0.6 / t).collect();
        let fit = fit_loglog(&taus, &inv).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-9);
        assert!(fit_loglog(&[1e6], &[1.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn single_point_grid_is_a_regime_error() {
        let err = scaling_fit(0.85, &[1e6], &ScheduleTemplate::default(), 100, 1).unwrap_err();
        assert!(matches!(err, Error::Regime(_)));
    }
}
