//! Szilard feedback work extracted from a side-information channel.
//!
//! Information is measured in bits and work in units of kT (nats);
//! `bits * LN_2` converts between the two.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{apply_noise, h2, BinaryChannel, RoundRecord, RoundSampler};
use crate::error::{Error, Result};
use crate::games::{game_value, Behaviour, Bit, XorGame};
use crate::optimize::ClassValueReport;
use crate::rng;
use crate::sig9;

/// Energy gap of a posterior-matched Hamiltonian, in kT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Gap {
    Finite(f64),
    /// Perfect information: the unlikely state sits infinitely high.
    Infinite,
}

impl Gap {
    pub fn finite(self) -> Option<f64> {
        match self {
            Gap::Finite(x) => Some(x),
            Gap::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorBranch {
    pub g: Bit,
    pub q0: f64,
    pub q1: f64,
    pub gap: Gap,
    pub branch_work_bits: f64,
}

impl PosteriorBranch {
    pub fn q(&self, x: Bit) -> f64 {
        if x == 0 {
            self.q0
        } else {
            self.q1
        }
    }
}

/// Posterior `q_g` of the microstate after reading `G = g` from an oriented channel.
pub fn posterior(g: Bit, c: &BinaryChannel) -> Result<PosteriorBranch> {
    if g > 1 {
        return Err(Error::invalid("g", format!("{g} is not a bit")));
    }
    if !c.is_oriented() {
        return Err(Error::invalid(
            "channel",
            format!("p = {} < 1/2; orient the channel first", c.p()),
        ));
    }
    let p = c.p();
    let (q0, q1) = if g == 0 { (p, 1.0 - p) } else { (1.0 - p, p) };
    let gap = if p >= 1.0 {
        Gap::Infinite
    } else {
        Gap::Finite((p / (1.0 - p)).ln())
    };
    Ok(PosteriorBranch {
        g,
        q0,
        q1,
        gap,
        branch_work_bits: 1.0 - h2(p),
    })
}

fn check_posterior(q0: f64, q1: f64) -> Result<()> {
    if !(q0 >= 0.0 && q1 >= 0.0) || (q0 + q1 - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "posterior",
            format!("({q0}, {q1}) is not a distribution"),
        ));
    }
    Ok(())
}

/// Net reversible branch work `1 - H2(q) = D2(q || U2)` in bits.
pub fn branch_work(q0: f64, q1: f64) -> Result<f64> {
    check_posterior(q0, q1)?;
    Ok(1.0 - h2(q0))
}

/// The two strokes of a posterior-matched branch, in kT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchStrokes {
    /// Sudden switch `0 -> H_g` at fixed microstate: `-H_nat(q) - offset`.
    pub assignment_kt: f64,
    /// Quasistatic isothermal return `H_g -> 0`: `ln 2 + offset`.
    pub return_kt: f64,
}

impl BranchStrokes {
    pub fn total_kt(&self) -> f64 {
        self.assignment_kt + self.return_kt
    }
}

/// Stroke decomposition for `H_g(x) = -ln q(x) + offset_kt`.
pub fn branch_strokes(q0: f64, q1: f64, offset_kt: f64) -> Result<BranchStrokes> {
    check_posterior(q0, q1)?;
    let xlnx = |q: f64| if q > 0.0 { q * q.ln() } else { 0.0 };
    // Z_g = e^{-offset}, so the return stroke yields -ln Z_g + ln 2.
    Ok(BranchStrokes {
        assignment_kt: xlnx(q0) + xlnx(q1) - offset_kt,
        return_kt: offset_kt + LN_2,
    })
}

/// Work `ln(2 q(x))` in kT for one trajectory of the branch.
///
/// Fails when `q(x) = 0`: that outcome has probability zero under the
/// posterior and would carry infinite negative work.
pub fn trajectory_work(x: Bit, branch: &PosteriorBranch) -> Result<f64> {
    let q = branch.q(x);
    if q <= 0.0 {
        return Err(Error::Structural(format!(
            "microstate {x} has zero posterior weight in branch g = {}",
            branch.g
        )));
    }
    Ok((2.0 * q).ln())
}

/// Ideal feedback value `I(X:G)` in bits.
pub fn feedback_value(c: &BinaryChannel) -> f64 {
    c.mutual_information()
}

/// Same value written in terms of the XOR bias: `1 - h2((1 + bias) / 2)`.
pub fn feedback_value_from_bias(bias: f64) -> f64 {
    1.0 - h2(((1.0 + bias) / 2.0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassCeilings {
    pub local_bits: f64,
    pub quantum_bits: f64,
    pub ns_bits: f64,
}

impl ClassCeilings {
    pub fn scaled(&self, kt: f64) -> [f64; 3] {
        [self.local_bits, self.quantum_bits, self.ns_bits].map(|b| b * LN_2 * kt)
    }
}

pub fn class_ceilings(r: &ClassValueReport) -> ClassCeilings {
    let w = |omega: f64| 1.0 - h2(omega.clamp(0.0, 1.0));
    ClassCeilings {
        local_bits: w(r.omega_local),
        quantum_bits: w(r.omega_quantum),
        ns_bits: w(r.omega_ns),
    }
}

/// Feedback work, blind-reset cost and net work of one full cycle, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleLedger {
    pub p: f64,
    pub i_bits: f64,
    pub h_g_bits: f64,
    pub h_g_given_x_bits: f64,
    pub w_fb_bits: f64,
    /// Landauer lower bound, reported at its minimal value.
    pub w_reset_bits: f64,
    /// Upper bound on the net work.
    pub w_net_bits: f64,
}

pub fn cycle_ledger(c: &BinaryChannel) -> CycleLedger {
    let i_bits = c.mutual_information();
    let h_g_bits = c.h_g();
    let w_net_bits = i_bits - h_g_bits;
    CycleLedger {
        p: c.p(),
        i_bits,
        h_g_bits,
        h_g_given_x_bits: c.h_g_given_x(),
        w_fb_bits: i_bits,
        w_reset_bits: h_g_bits,
        // -0.0 would print oddly at p in {0, 1}
        w_net_bits: if w_net_bits == 0.0 { 0.0 } else { w_net_bits },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryLedger {
    pub h_g_bits: f64,
    pub h_m_bits: f64,
    pub ok: bool,
}

/// Plug-in entropies of `G` and of the full transcript may differ by rounding only.
pub const MEMORY_EPS: f64 = 1e-12;

fn entropy_of<K: std::hash::Hash + Eq>(weights: HashMap<K, f64>) -> f64 {
    let total: f64 = weights.values().sum();
    weights
        .values()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

fn memory_from_weighted<'a>(
    items: impl Iterator<Item = (&'a RoundRecord, f64)> + Clone,
) -> MemoryLedger {
    let mut hg = HashMap::new();
    let mut hm = HashMap::new();
    for (r, w) in items {
        *hg.entry(r.g).or_insert(0.0) += w;
        *hm.entry((r.g, r.u, r.v, r.r, r.a, r.b)).or_insert(0.0) += w;
    }
    let h_g_bits = entropy_of(hg);
    let h_m_bits = entropy_of(hm);
    MemoryLedger {
        h_g_bits,
        h_m_bits,
        ok: h_m_bits >= h_g_bits - MEMORY_EPS,
    }
}

/// Empirical entropies of the stored bit `G` and of the full transcript
/// `M = (G, u, v, r, a, b)`.
///
/// `G` is a function of `M`, so `H(M) >= H(G)` holds for the empirical
/// distribution of any batch; `ok` only absorbs float rounding.
pub fn memory_ledger(records: &[RoundRecord]) -> Result<MemoryLedger> {
    if records.is_empty() {
        return Err(Error::invalid(
            "records",
            "memory ledger needs a nonempty batch",
        ));
    }
    Ok(memory_from_weighted(records.iter().map(|r| (r, 1.0))))
}

/// Same ledger from the exact joint distribution of a game and behaviour.
pub fn memory_ledger_exact(g: &XorGame, b: &Behaviour) -> Result<MemoryLedger> {
    let joint = crate::channel::joint_distribution(g, b)?;
    Ok(memory_from_weighted(joint.iter().map(|(r, w)| (r, *w))))
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    pub rounds: u64,
    pub seed: u64,
    /// Success probability the controller assumes; defaults to the exact one.
    pub p_model: Option<f64>,
    /// Symmetric flip probability applied to the controller bit.
    pub controller_noise: f64,
    pub streams: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            rounds: 100_000,
            seed: rng::DEFAULT_SEED,
            p_model: None,
            controller_noise: 0.0,
            streams: 16,
        }
    }
}

/// Outcome counts for a batch of simulated rounds; merging is associative.
///
/// Trajectory work takes one value on correct predictions and another on
/// wrong ones, so the counts determine the sample mean and variance exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkAccumulator {
    pub rounds: u64,
    pub correct: u64,
}

impl WorkAccumulator {
    pub fn push(&mut self, correct: bool) {
        self.rounds += 1;
        self.correct += u64::from(correct);
    }

    pub fn merge(self, other: WorkAccumulator) -> Self {
        WorkAccumulator {
            rounds: self.rounds + other.rounds,
            correct: self.correct + other.correct,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.correct as f64 / self.rounds as f64
    }

    /// Sample mean of the work given the values on correct / wrong rounds.
    pub fn mean(&self, win: f64, lose: f64) -> f64 {
        let f = self.frequency();
        let mut m = 0.0;
        if self.correct > 0 {
            m += f * win;
        }
        if self.correct < self.rounds {
            m += (1.0 - f) * lose;
        }
        m
    }

    pub fn stderr(&self, win: f64, lose: f64) -> f64 {
        if self.rounds < 2 || self.correct == 0 || self.correct == self.rounds {
            return 0.0;
        }
        let n = self.rounds as f64;
        let f = self.frequency();
        let var = f * (1.0 - f) * (win - lose).powi(2) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationStats {
    pub rounds: u64,
    pub empirical_p: f64,
    /// Exact success probability of the (possibly noisy) controller bit.
    pub p_true: f64,
    pub p_model: f64,
    pub controller_noise: f64,
    pub mean_work_kt: f64,
    pub stderr_kt: f64,
    /// Expected trajectory work `p ln(2 p_model) + (1 - p) ln(2 (1 - p_model))`.
    pub analytic_work_kt: f64,
    pub z_p: f64,
    pub z_work: f64,
    pub seed: u64,
}

fn z_score(observed: f64, expected: f64, se: f64) -> f64 {
    let diff = observed - expected;
    if se > 0.0 {
        diff / se
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Expected work when the controller assumes `p_model` but the record is correct with probability `p_true`.
pub fn mismatched_work_kt(p_true: f64, p_model: f64) -> f64 {
    let term = |w: f64, q: f64| if w > 0.0 { w * (2.0 * q).ln() } else { 0.0 };
    term(p_true, p_model) + term(1.0 - p_true, 1.0 - p_model)
}

/// Monte Carlo of the full feedback round: thermal bit, embedded game,
/// optional controller noise, and posterior-matched trajectory work.
pub fn simulate_rounds(
    g: &XorGame,
    b: &Behaviour,
    cfg: &SimulationConfig,
) -> Result<SimulationStats> {
    if cfg.rounds == 0 {
        return Err(Error::invalid("rounds", "need at least one round"));
    }
    let omega = game_value(g, b)?.clamp(0.0, 1.0);
    let p_true = apply_noise(omega, cfg.controller_noise)?;
    let p_model = cfg.p_model.unwrap_or(p_true);
    if !(0.0..=1.0).contains(&p_model) {
        return Err(Error::invalid(
            "p_model",
            format!("{p_model} is outside [0, 1]"),
        ));
    }
    if (p_model == 1.0 && p_true < 1.0) || (p_model == 0.0 && p_true > 0.0) {
        return Err(Error::invalid(
            "p_model",
            format!(
                "p_model = {p_model} assigns zero weight to outcomes that occur (p = {p_true})"
            ),
        ));
    }
    let sampler = RoundSampler::new(g, b)?;
    let win_work = (2.0 * p_model).ln();
    let lose_work = (2.0 * (1.0 - p_model)).ln();
    let chunks = rng::partition(cfg.rounds, cfg.streams);
    let partials: Vec<Result<WorkAccumulator>> = chunks
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut r = rng::stream(cfg.seed, i as u64);
            let mut acc = WorkAccumulator::default();
            for _ in 0..n {
                let rec = sampler.sample(&mut r);
                let flip = r.gen::<f64>() < cfg.controller_noise;
                let correct = rec.won != flip;
                if !correct && p_model >= 1.0 {
                    return Err(Error::Structural(
                        "controller with p_model = 1 guessed wrong".into(),
                    ));
                }
                acc.push(correct);
            }
            Ok(acc)
        })
        .collect();
    let mut acc = WorkAccumulator::default();
    for p in partials {
        acc = acc.merge(p?);
    }
    let n = acc.rounds as f64;
    let empirical_p = acc.frequency();
    let analytic = mismatched_work_kt(p_true, p_model);
    let mean = acc.mean(win_work, lose_work);
    let se = acc.stderr(win_work, lose_work);
    Ok(SimulationStats {
        rounds: acc.rounds,
        empirical_p,
        p_true,
        p_model,
        controller_noise: cfg.controller_noise,
        mean_work_kt: mean,
        stderr_kt: se,
        analytic_work_kt: analytic,
        z_p: z_score(empirical_p, p_true, (p_true * (1.0 - p_true) / n).sqrt()),
        z_work: z_score(mean, analytic, se),
        seed: cfg.seed,
    })
}

/// `n` consecutive rounds from a single stream, for export.
pub fn sample_records(g: &XorGame, b: &Behaviour, n: usize, seed: u64) -> Result<Vec<RoundRecord>> {
    let sampler = RoundSampler::new(g, b)?;
    let mut r = rng::stream(seed, u64::MAX);
    Ok((0..n).map(|_| sampler.sample(&mut r)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionMode {
    /// Argument is the CHSH value `S`.
    Chsh,
    /// Argument is the XOR bias.
    Bias,
}

/// Small-violation expansion of the feedback work in kT:
/// `S^2/32 + S^4/3072` (CHSH) or `bias^2/2 + bias^4/12`.
/// Accurate for `|p - 1/2| <= 0.2`.
pub fn small_bias_work(x: f64, mode: ExpansionMode, order: u32) -> Result<f64> {
    let (c2, c4) = match mode {
        ExpansionMode::Chsh => (1.0 / 32.0, 1.0 / 3072.0),
        ExpansionMode::Bias => (0.5, 1.0 / 12.0),
    };
    let x2 = x * x;
    match order {
        2 => Ok(c2 * x2),
        4 => Ok(c2 * x2 + c4 * x2 * x2),
        _ => Err(Error::invalid(
            "order",
            format!("expansion order must be 2 or 4, got {order}"),
        )),
    }
}

fn check_threshold_inputs(p_resource: f64, omega_q: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&omega_q) || !(0.0..=1.0).contains(&p_resource) {
        return Err(Error::invalid(
            "threshold",
            "probabilities must satisfy 1/2 <= omega_q and p <= 1",
        ));
    }
    if p_resource <= omega_q {
        return Err(Error::NoAdvantage {
            p_resource,
            reference: omega_q,
        });
    }
    Ok(())
}

/// Largest controller noise for which the noisy resource still beats `omega_q`:
/// `(p - omega_q) / (2p - 1)`.
pub fn noise_threshold(p_resource: f64, omega_q: f64) -> Result<f64> {
    check_threshold_inputs(p_resource, omega_q)?;
    Ok((p_resource - omega_q) / (2.0 * p_resource - 1.0))
}

fn bisect_decreasing(mut above: impl FnMut(f64) -> bool, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection on `apply_noise`, as a cross-check of [`noise_threshold`].
pub fn noise_threshold_bisect(p_resource: f64, omega_q: f64, tol: f64) -> Result<f64> {
    check_threshold_inputs(p_resource, omega_q)?;
    Ok(bisect_decreasing(
        |d| {
            apply_noise(p_resource, d)
                .map(|pe| pe > omega_q)
                .unwrap_or(false)
        },
        tol,
    ))
}

/// Threshold located by bisection on simulated rounds.
///
/// Every evaluation reuses the same rounds and the same noise uniforms, so
/// the empirical success rate is monotone in the noise level.
pub fn simulated_noise_threshold(
    g: &XorGame,
    b: &Behaviour,
    omega_q: f64,
    rounds: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    let p = game_value(g, b)?;
    check_threshold_inputs(p, omega_q)?;
    let sampler = RoundSampler::new(g, b)?;
    let mut r = rng::stream(seed, 0);
    let draws: Vec<(bool, f64)> = (0..rounds)
        .map(|_| {
            let won = sampler.sample(&mut r).won;
            (won, r.gen::<f64>())
        })
        .collect();
    let n = rounds as f64;
    Ok(bisect_decreasing(
        |d| {
            let correct = draws.iter().filter(|(won, uni)| *won != (*uni < d)).count();
            correct as f64 / n > omega_q
        },
        tol,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub value_bits: f64,
    pub value_kt: f64,
}

pub const SWEEP_CSV_HEADER: &str = "param,value_bits,value_kt";

/// Feedback value `1 - h2(1/2 + S/8)` over `S in [0, 4]`, followed by
/// marker rows at the local, Tsirelson and no-signalling values of `S`.
pub fn chsh_sweep(step: f64, kt: f64) -> Result<Vec<SweepRow>> {
    if !(step > 0.0) {
        return Err(Error::invalid("step", format!("{step} must be positive")));
    }
    let row = |s: f64| {
        let bits = 1.0 - h2((0.5 + s / 8.0).clamp(0.0, 1.0));
        SweepRow {
            param: s,
            value_bits: bits,
            value_kt: bits * LN_2 * kt,
        }
    };
    let n = (4.0 / step + 1e-9).floor() as usize;
    let mut rows: Vec<SweepRow> = (0..=n).map(|i| row(i as f64 * step)).collect();
    if rows.last().is_none_or(|r| (r.param - 4.0).abs() > 1e-12) {
        rows.push(row(4.0));
    }
    for s in [2.0, 2.0 * std::f64::consts::SQRT_2, 4.0] {
        rows.push(row(s));
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            sig9(r.param),
            sig9(r.value_bits),
            sig9(r.value_kt)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{orient, BinaryChannel};
    use crate::games::{make_chsh, pr_box, quantum_optimal_chsh};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ch(p: f64) -> BinaryChannel {
        BinaryChannel::new(p).unwrap()
    }

    #[test]
    fn posterior_examples() {
        let b = posterior(0, &ch(0.75)).unwrap();
        assert_eq!((b.q0, b.q1), (0.75, 0.25));
        assert_abs_diff_eq!(b.gap.finite().unwrap(), 3f64.ln(), epsilon = 1e-15);
        let b = posterior(1, &ch(0.5)).unwrap();
        assert_eq!((b.q0, b.q1), (0.5, 0.5));
        assert_eq!(b.gap, Gap::Finite(0.0));
        assert_eq!(posterior(0, &ch(1.0)).unwrap().gap, Gap::Infinite);
        assert!(posterior(0, &ch(0.3)).is_err());
        assert!(posterior(0, &orient(0.3).unwrap()).is_ok());
    }

    #[test]
    fn branch_work_examples() {
        assert_eq!(branch_work(0.5, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(branch_work(0.75, 0.25).unwrap(), 0.188_722, epsilon = 5e-7);
        assert_eq!(branch_work(1.0, 0.0).unwrap(), 1.0);
        assert!(branch_work(0.6, 0.6).is_err());
    }

    #[test]
    fn trajectory_work_examples() {
        let b = posterior(0, &ch(0.75)).unwrap();
        let right = trajectory_work(0, &b).unwrap();
        let wrong = trajectory_work(1, &b).unwrap();
        assert_abs_diff_eq!(right, 1.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(wrong, 0.5f64.ln(), epsilon = 1e-15);
        let avg = 0.75 * right + 0.25 * wrong;
        assert_abs_diff_eq!(avg, 0.130_812, epsilon = 5e-7);
        assert_abs_diff_eq!(avg, LN_2 * b.branch_work_bits, epsilon = 1e-15);

        let perfect = posterior(1, &ch(1.0)).unwrap();
        assert_eq!(trajectory_work(1, &perfect).unwrap(), LN_2);
        assert!(matches!(
            trajectory_work(0, &perfect),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn feedback_values() {
        assert_abs_diff_eq!(feedback_value(&ch(0.75)), 0.188_722, epsilon = 5e-7);
        let pq = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert_abs_diff_eq!(feedback_value(&ch(pq)), 0.399_124, epsilon = 5e-7);
        assert_eq!(feedback_value(&ch(1.0)), 1.0);
    }

    #[test]
    fn ledger_examples() {
        assert_eq!(cycle_ledger(&ch(1.0)).w_net_bits, 0.0);
        assert_abs_diff_eq!(
            cycle_ledger(&ch(0.75)).w_net_bits,
            -0.811_278,
            epsilon = 5e-7
        );
        assert_eq!(cycle_ledger(&ch(0.5)).w_net_bits, -1.0);
        let l = cycle_ledger(&ch(0.8));
        assert_eq!(l.w_fb_bits, l.i_bits);
        assert_eq!(l.w_reset_bits, 1.0);
        assert_abs_diff_eq!(l.w_net_bits, -l.h_g_given_x_bits, epsilon = 1e-15);
    }

    #[test]
    fn memory_ledger_pr_box_exact() {
        let g = make_chsh();
        let m = memory_ledger_exact(&g, &pr_box(&g)).unwrap();
        assert_abs_diff_eq!(m.h_g_bits, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.h_m_bits, 4.0, epsilon = 1e-12);
        assert!(m.ok);
    }

    #[test]
    fn memory_ledger_deterministic_single_pair() {
        // One question pair, deterministic outputs: M = (G, r) with r = x,
        // so only the thermal bit is left: H(M) = 1.
        let g = XorGame::new("one", vec![vec![1.0]], vec![vec![0]]).unwrap();
        let b = crate::games::deterministic_behaviour(&g, &[1], &[0]).unwrap();
        let m = memory_ledger_exact(&g, &b).unwrap();
        assert_abs_diff_eq!(m.h_m_bits, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.h_g_bits, 1.0, epsilon = 1e-12);
        assert!(memory_ledger(&[]).is_err());
    }

    #[test]
    fn mismatched_expectation_by_outcomes() {
        // Two outcomes: correct w.p. 0.75 earns ln(1.8), wrong earns ln(0.2).
        let brute = 0.75 * 1.8f64.ln() + 0.25 * 0.2f64.ln();
        assert_abs_diff_eq!(mismatched_work_kt(0.75, 0.9), brute, epsilon = 1e-15);
        assert_abs_diff_eq!(brute, 0.038_480_5, epsilon = 1e-7);
        let p = 0.8;
        assert_abs_diff_eq!(
            mismatched_work_kt(p, p),
            LN_2 * (1.0 - h2(p)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn simulation_uniform_and_pr() {
        let g = make_chsh();
        let cfg = SimulationConfig {
            rounds: 20_000,
            seed: 3,
            ..Default::default()
        };
        let s = simulate_rounds(&g, &Behaviour::uniform(2, 2), &cfg).unwrap();
        assert_eq!(s.mean_work_kt, 0.0);
        let s = simulate_rounds(&g, &pr_box(&g), &cfg).unwrap();
        assert_eq!(s.empirical_p, 1.0);
        assert_eq!(s.mean_work_kt, LN_2);
        assert_eq!(s.stderr_kt, 0.0);
    }

    #[test]
    fn simulation_is_deterministic_and_mismatch_converges() {
        let g = make_chsh();
        let b = crate::games::mix_with_uniform(&pr_box(&g), 0.5).unwrap();
        let cfg = SimulationConfig {
            rounds: 400_000,
            seed: 9,
            p_model: Some(0.9),
            ..Default::default()
        };
        let a = simulate_rounds(&g, &b, &cfg).unwrap();
        let again = simulate_rounds(&g, &b, &cfg).unwrap();
        assert_eq!(a, again);
        assert!(a.z_work.abs() < 4.0, "{a:?}");
        assert_abs_diff_eq!(a.analytic_work_kt, 0.038_480_5, epsilon = 1e-7);
    }

    #[test]
    fn overconfident_controller_is_rejected() {
        let g = make_chsh();
        let cfg = SimulationConfig {
            p_model: Some(1.0),
            ..Default::default()
        };
        assert!(simulate_rounds(&g, &quantum_optimal_chsh(), &cfg).is_err());
        let cfg = SimulationConfig {
            rounds: 1000,
            p_model: Some(1.0),
            ..Default::default()
        };
        assert!(simulate_rounds(&g, &pr_box(&g), &cfg).is_ok());
    }

    #[test]
    fn expansion_examples() {
        assert_abs_diff_eq!(
            small_bias_work(0.2, ExpansionMode::Chsh, 2).unwrap(),
            0.00125,
            epsilon = 1e-18
        );
        assert_eq!(small_bias_work(0.0, ExpansionMode::Chsh, 4).unwrap(), 0.0);
        let s = 0.2;
        let exact = LN_2 * (1.0 - h2(0.5 + s / 8.0));
        let o2 = small_bias_work(s, ExpansionMode::Chsh, 2).unwrap();
        assert!((exact - o2).abs() <= 2.0 * s.powi(4) / 3072.0);
        // CHSH bias is S/4, so both modes agree.
        let ob = small_bias_work(s / 4.0, ExpansionMode::Bias, 4).unwrap();
        assert_abs_diff_eq!(
            ob,
            small_bias_work(s, ExpansionMode::Chsh, 4).unwrap(),
            epsilon = 1e-18
        );
        assert!(small_bias_work(s, ExpansionMode::Bias, 3).is_err());
    }

    #[test]
    fn threshold_examples() {
        let wq = (std::f64::consts::PI / 8.0).cos().powi(2);
        let d = noise_threshold(1.0, wq).unwrap();
        assert_abs_diff_eq!(
            d,
            (std::f64::consts::PI / 8.0).sin().powi(2),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            noise_threshold(0.95, wq).unwrap(),
            0.107_163,
            epsilon = 5e-7
        );
        assert_abs_diff_eq!(
            noise_threshold_bisect(0.95, wq, 1e-12).unwrap(),
            0.107_163,
            epsilon = 1e-6
        );
        assert!(noise_threshold(wq + 1e-9, wq).unwrap() < 1e-8);
        assert!(matches!(
            noise_threshold(0.8, wq),
            Err(Error::NoAdvantage { .. })
        ));
    }

    #[test]
    fn sweep_rows() {
        let rows = chsh_sweep(0.5, 1.0).unwrap();
        assert_eq!(rows[0].value_bits, 0.0);
        let markers = &rows[rows.len() - 3..];
        assert_abs_diff_eq!(markers[0].value_bits, 0.188_722, epsilon = 5e-7);
        assert_abs_diff_eq!(markers[1].value_bits, 0.399_124, epsilon = 5e-7);
        assert_eq!(markers[2].value_bits, 1.0);
        assert!(chsh_sweep(0.0, 1.0).is_err());
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("param,value_bits,value_kt\n0,0,0\n0.500000000,"));
    }

    proptest! {
        #[test]
        fn strokes_sum_to_branch_work(q in 0.0f64..=1.0, offset in -10.0f64..10.0) {
            let s = branch_strokes(q, 1.0 - q, offset).unwrap();
            let w = branch_work(q, 1.0 - q).unwrap();
            prop_assert!((s.total_kt() - LN_2 * w).abs() < 1e-12);
        }

        #[test]
        fn net_work_never_positive(p in 0.0f64..=1.0) {
            let l = cycle_ledger(&BinaryChannel::new(p).unwrap());
            prop_assert!(l.w_net_bits <= 0.0);
        }

        #[test]
        fn bias_form_agrees(p in 0.0f64..=1.0) {
            let direct = feedback_value(&BinaryChannel::new(p).unwrap());
            prop_assert!((direct - feedback_value_from_bias(2.0 * p - 1.0)).abs() < 1e-12);
        }
    }
}
