//! Game values over the local, quantum and nonsignalling behaviour classes.
//!
//! * local: exact enumeration of deterministic strategies;
//! * quantum: seesaw (alternating maximization) over unit vectors, which
//!   lower-bounds the Tsirelson vector value of the bias;
//! * nonsignalling: always 1 for XOR games, certified by the predicate box.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{deterministic_behaviour, game_value, pr_box, Behaviour, Bit, XorGame};
use crate::rng;

/// Largest `nu + nv` accepted by [`local_value`].
pub const LOCAL_BUDGET: usize = 40;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalStrategy {
    pub amap: Vec<Bit>,
    pub bmap: Vec<Bit>,
}

/// Exact local value and the lexicographically smallest optimal strategy.
///
/// Only Alice's assignments are enumerated (with `amap[0] = 0`, since
/// flipping every output of both parties preserves `a ^ b`); Bob's best
/// response is then chosen per question, preferring `0` on ties.
pub fn local_value(g: &XorGame) -> Result<(f64, LocalStrategy)> {
    let (nu, nv) = (g.nu(), g.nv());
    if nu + nv > LOCAL_BUDGET {
        return Err(Error::Budget(format!(
            "local enumeration needs nu + nv <= {LOCAL_BUDGET}, game `{}` has {}",
            g.name(),
            nu + nv
        )));
    }
    let w = g.signed_weights();
    let free = nu - 1;
    let mut best: Option<(f64, LocalStrategy)> = None;
    let mut amap = vec![0u8; nu];
    let mut bmap = vec![0u8; nv];
    for idx in 0u64..(1u64 << free) {
        // amap[1] is the most significant bit so that idx order is lexicographic.
        for (k, a) in amap.iter_mut().enumerate().skip(1) {
            *a = ((idx >> (free - k)) & 1) as u8;
        }
        let mut score = 0.0;
        for v in 0..nv {
            let s: f64 = (0..nu)
                .map(|u| if amap[u] == 0 { w[u][v] } else { -w[u][v] })
                .sum();
            bmap[v] = u8::from(s < -TIE_TOL);
            score += s.abs();
        }
        let improves = match &best {
            None => true,
            Some((b, _)) => score > *b + TIE_TOL,
        };
        if improves {
            best = Some((
                score,
                LocalStrategy {
                    amap: amap.clone(),
                    bmap: bmap.clone(),
                },
            ));
        }
    }
    let (_, strategy) = best.expect("at least one strategy");
    let det = deterministic_behaviour(g, &strategy.amap, &strategy.bmap)?;
    Ok((game_value(g, &det)?, strategy))
}

#[derive(Debug, Clone, Copy)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 20,
            tol: 1e-12,
            max_iter: 200_000,
            seed: rng::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeesawState {
    pub dim: usize,
    pub avecs: Vec<Vec<f64>>,
    pub bvecs: Vec<Vec<f64>>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Restart index this state came from.
    pub restart: usize,
    /// Bias after every full (Alice, Bob) sweep.
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl SeesawState {
    /// Correlators `<a_u, b_v>` of the vector strategy.
    pub fn correlators(&self) -> crate::games::CorrelatorMatrix {
        let e = self
            .avecs
            .iter()
            .map(|a| {
                self.bvecs
                    .iter()
                    .map(|b| dot(a, b).clamp(-1.0, 1.0))
                    .collect()
            })
            .collect();
        crate::games::CorrelatorMatrix { e }
    }

    /// Behaviour with uniform marginals realizing the vector correlators.
    pub fn behaviour(&self) -> Result<Behaviour> {
        Behaviour::from_correlators(&self.correlators())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_into(target: &mut [f64], src: &[f64]) {
    let n = dot(src, src).sqrt();
    if n > 1e-300 {
        target.iter_mut().zip(src).for_each(|(t, s)| *t = s / n);
    }
}

fn random_unit(rng: &mut rng::StreamRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn vector_bias(w: &[Vec<f64>], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (u, row) in w.iter().enumerate() {
        for (v, &wt) in row.iter().enumerate() {
            if wt != 0.0 {
                s += wt * dot(&a[u], &b[v]);
            }
        }
    }
    s
}

/// One seesaw run from a random start.
pub fn seesaw_run(g: &XorGame, opts: &SeesawOptions, restart: usize) -> SeesawState {
    let (nu, nv) = (g.nu(), g.nv());
    let dim = nu + nv;
    let w = g.signed_weights();
    let mut rng = rng::stream(opts.seed, restart as u64);
    let mut avecs: Vec<Vec<f64>> = (0..nu).map(|_| random_unit(&mut rng, dim)).collect();
    let mut bvecs: Vec<Vec<f64>> = (0..nv).map(|_| random_unit(&mut rng, dim)).collect();
    let mut bias = vector_bias(&w, &avecs, &bvecs);
    let mut history = vec![bias];
    let mut acc = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        for u in 0..nu {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for v in 0..nv {
                let wt = w[u][v];
                if wt != 0.0 {
                    acc.iter_mut()
                        .zip(&bvecs[v])
                        .for_each(|(x, b)| *x += wt * b);
                }
            }
            normalize_into(&mut avecs[u], &acc);
        }
        for v in 0..nv {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for u in 0..nu {
                let wt = w[u][v];
                if wt != 0.0 {
                    acc.iter_mut()
                        .zip(&avecs[u])
                        .for_each(|(x, a)| *x += wt * a);
                }
            }
            normalize_into(&mut bvecs[v], &acc);
        }
        let next = vector_bias(&w, &avecs, &bvecs);
        history.push(next);
        let gain = next - bias;
        bias = bias.max(next);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    SeesawState {
        dim,
        avecs,
        bvecs,
        bias,
        iterations,
        converged,
        restart,
        history,
    }
}

#[derive(Debug, Clone)]
pub struct QuantumEstimate {
    pub omega: f64,
    pub best: SeesawState,
    /// Sample standard deviation of the per-restart values.
    pub spread: f64,
    pub restarts: usize,
}

/// Seesaw estimate of the quantum value; best of `restarts` random starts.
pub fn quantum_value(g: &XorGame, opts: &SeesawOptions) -> Result<QuantumEstimate> {
    if opts.restarts == 0 {
        return Err(Error::invalid("restarts", "need at least one restart"));
    }
    let runs: Vec<SeesawState> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| seesaw_run(g, opts, r))
        .collect();
    let omegas: Vec<f64> = runs.iter().map(|s| (1.0 + s.bias) / 2.0).collect();
    let spread = if omegas.len() > 1 {
        let mean = omegas.iter().sum::<f64>() / omegas.len() as f64;
        (omegas.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (omegas.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    // Highest bias wins; lowest restart index on exact ties.
    let best = runs
        .into_iter()
        .reduce(|acc, s| if s.bias > acc.bias { s } else { acc })
        .expect("restarts >= 1");
    Ok(QuantumEstimate {
        omega: (1.0 + best.bias) / 2.0,
        best,
        spread,
        restarts: opts.restarts,
    })
}

/// Nonsignalling value of an XOR game with its predicate-box certificate.
pub fn ns_value(g: &XorGame) -> Result<(f64, Behaviour)> {
    let cert = pr_box(g);
    let omega = game_value(g, &cert)?;
    Ok((omega, cert))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignallingReport {
    pub nonsignalling: bool,
    pub max_violation: f64,
    /// Where the largest violation sits, e.g. "alice u=0 a=0".
    pub location: Option<String>,
}

/// Checks that each party's marginal does not depend on the other's question.
pub fn is_nonsignalling(b: &Behaviour, tol: f64) -> SignallingReport {
    let (nu, nv) = (b.nu(), b.nv());
    let mut worst = 0.0;
    let mut location = None;
    for u in 0..nu {
        for a in 0..2u8 {
            let marg: Vec<f64> = (0..nv)
                .map(|v| b.prob(u, v, a, 0) + b.prob(u, v, a, 1))
                .collect();
            let spread = spread(&marg);
            if spread > worst {
                worst = spread;
                location = Some(format!("alice u={u} a={a}"));
            }
        }
    }
    for v in 0..nv {
        for bb in 0..2u8 {
            let marg: Vec<f64> = (0..nu)
                .map(|u| b.prob(u, v, 0, bb) + b.prob(u, v, 1, bb))
                .collect();
            let spread = spread(&marg);
            if spread > worst {
                worst = spread;
                location = Some(format!("bob v={v} b={bb}"));
            }
        }
    }
    SignallingReport {
        nonsignalling: worst <= tol,
        max_violation: worst,
        location,
    }
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

#[derive(Debug, Clone)]
pub struct ClassValueReport {
    pub game: String,
    pub omega_local: f64,
    pub omega_quantum: f64,
    pub omega_ns: f64,
    pub local_strategy: LocalStrategy,
    pub ns_certificate: Behaviour,
    pub quantum_stderr: f64,
    pub quantum_state: SeesawState,
    pub converged: bool,
    pub restarts: usize,
}

#[derive(Serialize)]
struct ClassValueJson<'a> {
    game: &'a str,
    omega_local: f64,
    omega_quantum: f64,
    omega_ns: f64,
    strategy: &'a LocalStrategy,
    converged: bool,
    restarts: usize,
}

impl ClassValueReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(ClassValueJson {
            game: &self.game,
            omega_local: self.omega_local,
            omega_quantum: self.omega_quantum,
            omega_ns: self.omega_ns,
            strategy: &self.local_strategy,
            converged: self.converged,
            restarts: self.restarts,
        })
        .expect("report serializes")
    }
}

/// Local, quantum and nonsignalling values of `g`, checked for ordering.
pub fn class_report(g: &XorGame, opts: &SeesawOptions) -> Result<ClassValueReport> {
    let (omega_local, local_strategy) = local_value(g)?;
    let q = quantum_value(g, opts)?;
    let (omega_ns, ns_certificate) = ns_value(g)?;
    let ordered =
        0.5 - 1e-12 <= omega_local && omega_local <= q.omega + 1e-6 && q.omega <= omega_ns + 1e-6;
    if !ordered {
        return Err(Error::Structural(format!(
            "class values out of order for `{}`: local {omega_local}, quantum {}, ns {omega_ns}",
            g.name(),
            q.omega
        )));
    }
    Ok(ClassValueReport {
        game: g.name().to_string(),
        omega_local,
        omega_quantum: q.omega,
        omega_ns,
        local_strategy,
        ns_certificate,
        quantum_stderr: q.spread,
        converged: q.best.converged,
        quantum_state: q.best,
        restarts: q.restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_chained, make_chsh, Behaviour};

    /// Unreduced brute force over every (amap, bmap), scanned in reverse.
    fn local_oracle(g: &XorGame) -> f64 {
        let (nu, nv) = (g.nu(), g.nv());
        let total = 1u64 << (nu + nv);
        let mut best = f64::NEG_INFINITY;
        for mask in (0..total).rev() {
            let mut omega = 0.0;
            for u in 0..nu {
                for v in 0..nv {
                    let a = ((mask >> u) & 1) as u8;
                    let b = ((mask >> (nu + v)) & 1) as u8;
                    if g.wins(u, v, a, b) {
                        omega += g.mu(u, v);
                    }
                }
            }
            best = best.max(omega);
        }
        best
    }

    fn random_game(seed: u64, nu: usize, nv: usize) -> XorGame {
        let mut rng = rng::stream(seed, 99);
        let raw: Vec<Vec<f64>> = (0..nu)
            .map(|_| (0..nv).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let total: f64 = raw.iter().flatten().sum();
        let mut mu: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| r.iter().map(|x| x / total).collect())
            .collect();
        let drift: f64 = 1.0 - mu.iter().flatten().sum::<f64>();
        mu[0][0] += drift;
        let f = (0..nu)
            .map(|_| (0..nv).map(|_| rng.gen_range(0..2u8)).collect())
            .collect();
        XorGame::new(format!("random-{seed}"), mu, f).unwrap()
    }

    #[test]
    fn local_values_of_standard_games() {
        let (w, s) = local_value(&make_chsh()).unwrap();
        assert_eq!(w, 0.75);
        assert_eq!(s.amap, vec![0, 0]);
        assert_eq!(s.bmap, vec![0, 0]);
        let (w, _) = local_value(&make_chained(3).unwrap()).unwrap();
        assert!((w - 5.0 / 6.0).abs() < 1e-15);
        let single = XorGame::new("one", vec![vec![1.0]], vec![vec![0]]).unwrap();
        assert_eq!(local_value(&single).unwrap().0, 1.0);
        let chained2 = local_value(&make_chained(2).unwrap()).unwrap().0;
        assert_eq!(chained2, 0.75);
    }

    #[test]
    fn reduced_enumeration_matches_brute_force() {
        for seed in 0..40 {
            let nu = 1 + (seed as usize % 6);
            let nv = 1 + ((seed as usize / 6) % 6);
            let g = random_game(seed, nu, nv);
            let fast = local_value(&g).unwrap().0;
            let oracle = local_oracle(&g);
            assert!(
                (fast - oracle).abs() < 1e-12,
                "seed {seed}: {fast} vs {oracle}"
            );
        }
        for n in 2..=8 {
            let g = make_chained(n).unwrap();
            assert!((local_value(&g).unwrap().0 - local_oracle(&g)).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let n = 21;
        let g = make_chained(n).unwrap();
        assert!(matches!(local_value(&g), Err(Error::Budget(_))));
    }

    #[test]
    fn seesaw_is_monotone_and_normalized() {
        let g = make_chained(4).unwrap();
        let st = seesaw_run(&g, &SeesawOptions::default(), 3);
        for pair in st.history.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-13, "{} -> {}", pair[0], pair[1]);
        }
        for v in st.avecs.iter().chain(&st.bvecs) {
            assert!((dot(v, v).sqrt() - 1.0).abs() < 1e-10);
        }
        assert!(st.converged);
    }

    #[test]
    fn seesaw_reaches_tsirelson() {
        let q = quantum_value(&make_chsh(), &SeesawOptions::default()).unwrap();
        let target = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((q.omega - target).abs() < 1e-6, "{}", q.omega);
        let q = quantum_value(&make_chained(3).unwrap(), &SeesawOptions::default()).unwrap();
        let target = (std::f64::consts::PI / 12.0).cos().powi(2);
        assert!((q.omega - target).abs() < 1e-6, "{}", q.omega);
    }

    #[test]
    fn aligned_game_has_value_one() {
        let g = XorGame::new(
            "aligned",
            vec![vec![0.25, 0.25], vec![0.25, 0.25]],
            vec![vec![0, 0], vec![0, 0]],
        )
        .unwrap();
        let q = quantum_value(&g, &SeesawOptions::default()).unwrap();
        assert!((q.omega - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seesaw_dominates_local() {
        for seed in 0..10 {
            let g = random_game(seed + 100, 3, 4);
            let opts = SeesawOptions {
                restarts: 5,
                ..Default::default()
            };
            let q = quantum_value(&g, &opts).unwrap().omega;
            let l = local_value(&g).unwrap().0;
            assert!(q >= l - 1e-9, "seed {seed}: quantum {q} < local {l}");
        }
    }

    #[test]
    fn seesaw_is_reproducible() {
        let g = make_chained(3).unwrap();
        let opts = SeesawOptions {
            restarts: 4,
            ..Default::default()
        };
        let a = quantum_value(&g, &opts).unwrap();
        let b = quantum_value(&g, &opts).unwrap();
        assert_eq!(a.omega.to_bits(), b.omega.to_bits());
        assert_eq!(a.best.restart, b.best.restart);
    }

    #[test]
    fn zero_restarts_rejected() {
        let opts = SeesawOptions {
            restarts: 0,
            ..Default::default()
        };
        assert!(quantum_value(&make_chsh(), &opts).is_err());
    }

    #[test]
    fn signalling_checks() {
        let g = make_chsh();
        assert!(is_nonsignalling(&pr_box(&g), 0.0).nonsignalling);
        let det = deterministic_behaviour(&g, &[1, 0], &[0, 1]).unwrap();
        assert!(is_nonsignalling(&det, 0.0).nonsignalling);
        // Alice's marginal for u = 0 shifts by 0.2 between v = 0 and v = 1.
        let t = vec![
            [[0.5, 0.0], [0.0, 0.5]],
            [[0.3, 0.0], [0.0, 0.7]],
            [[0.25; 2]; 2],
            [[0.25; 2]; 2],
        ];
        let b = Behaviour::new(2, 2, t).unwrap();
        let rep = is_nonsignalling(&b, 1e-12);
        assert!(!rep.nonsignalling);
        assert!((rep.max_violation - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ns_certificates_verify() {
        for g in [
            make_chsh(),
            make_chained(5).unwrap(),
            XorGame::new("one", vec![vec![1.0]], vec![vec![1]]).unwrap(),
        ] {
            let (w, cert) = ns_value(&g).unwrap();
            assert_eq!(w, 1.0);
            assert!(is_nonsignalling(&cert, 0.0).nonsignalling);
        }
    }

    #[test]
    fn chained_two_matches_chsh_report() {
        let opts = SeesawOptions::default();
        let a = class_report(&make_chsh(), &opts).unwrap();
        let b = class_report(&make_chained(2).unwrap(), &opts).unwrap();
        assert_eq!(a.omega_local, b.omega_local);
        assert!((a.omega_quantum - b.omega_quantum).abs() < 1e-9);
        assert_eq!(a.omega_ns, b.omega_ns);
    }

    #[test]
    fn report_json_fields() {
        let r = class_report(&make_chsh(), &SeesawOptions::default()).unwrap();
        let v = r.to_json_value();
        for key in [
            "game",
            "omega_local",
            "omega_quantum",
            "omega_ns",
            "strategy",
            "converged",
            "restarts",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
