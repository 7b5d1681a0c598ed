//! Command-line front end.
//!
//! Every subcommand returns its primary output as text (JSON or CSV); the
//! binary decides whether that goes to stdout or a file.

use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::channel::{
    self, apply_noise, enumerate_channel, induced_channel, orient, BinaryChannel,
};
use crate::dynamics::{self, fit_loglog, scaling_fit, ScheduleTemplate};
use crate::engine::{self, class_ceilings, cycle_ledger, memory_ledger, SimulationConfig};
use crate::error::{Error, Result};
use crate::games::{self, Behaviour, XorGame};
use crate::optimize::{class_report, local_value, quantum_value, SeesawOptions};
use crate::rng::DEFAULT_SEED;
use crate::sig9;

/// Directory used for outputs when `--output` is not given.
pub const OUTPUT_DIR_ENV: &str = "XOR_SZILARD_OUT_DIR";

pub const DEFAULT_TAU_GRID: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];
pub const DEFAULT_SIGMA_REPS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "xor-szilard",
    version,
    about = "Szilard feedback value of XOR-game side information"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local, quantum and nonsignalling values of a game and their work ceilings.
    Value(RunConfig),
    /// Monte Carlo of feedback rounds for a game and behaviour.
    Simulate(RunConfig),
    /// Feedback value 1 - h2(1/2 + S/8) over S in [0, 4], as CSV.
    Sweep(RunConfig),
    /// Full-cycle ledger: feedback work, reset cost, net work.
    Cycle(RunConfig),
    /// Finite-time dissipation versus protocol duration, with log-log slope.
    FiniteTime(RunConfig),
    /// Diagnostics of the induced channel for a game and behaviour.
    Channel(RunConfig),
}

impl Command {
    pub fn config(&self) -> &RunConfig {
        match self {
            Command::Value(c)
            | Command::Simulate(c)
            | Command::Sweep(c)
            | Command::Cycle(c)
            | Command::FiniteTime(c)
            | Command::Channel(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Value(_) => "value",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Cycle(_) => "cycle",
            Command::FiniteTime(_) => "finite-time",
            Command::Channel(_) => "channel",
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            Command::Sweep(_) | Command::FiniteTime(_) => "csv",
            _ => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// `chsh`, `chained:N`, or a game JSON file.
    #[arg(long, default_value = "chsh")]
    pub game: String,
    /// `pr`, `local-opt`, `quantum-opt`, `uniform`, `mix:<spec>:<v>`,
    /// `noisy:<spec>:<delta>`, or a behaviour JSON file.
    #[arg(long, default_value = "quantum-opt")]
    pub behaviour: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub rounds: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Extra symmetric noise on the controller bit.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Comma-separated protocol durations for `finite-time`.
    #[arg(long, value_delimiter = ',')]
    pub tau_grid: Option<Vec<f64>>,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Physical energy of one kT, used for scaled outputs.
    #[arg(long = "kt", default_value_t = 1.0)]
    pub kt_scale: f64,
    /// Channel success probability (`cycle`, `finite-time`).
    #[arg(long)]
    pub p: Option<f64>,
    /// Controller's assumed success probability (`simulate`).
    #[arg(long)]
    pub p_model: Option<f64>,
    /// S grid spacing (`sweep`).
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Trajectories per tau (`finite-time`).
    #[arg(long, default_value_t = DEFAULT_SIGMA_REPS)]
    pub reps: u64,
    /// Export sampled rounds as CSV (`simulate`).
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Number of rounds written by `--records`.
    #[arg(long, default_value_t = 100_000)]
    pub records_limit: usize,
    /// Seesaw restarts for the quantum value.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Fit a synthetic c/tau series instead of simulating (`finite-time`).
    #[arg(long)]
    pub self_test: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            game: "chsh".into(),
            behaviour: "quantum-opt".into(),
            rounds: 1_000_000,
            seed: DEFAULT_SEED,
            delta: 0.0,
            tau_grid: None,
            output: None,
            kt_scale: 1.0,
            p: None,
            p_model: None,
            step: 0.05,
            reps: DEFAULT_SIGMA_REPS,
            records: None,
            records_limit: 100_000,
            restarts: 20,
            self_test: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    Chsh,
    Chained(usize),
    File(PathBuf),
}

impl GameSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "chsh" {
            return Ok(GameSpec::Chsh);
        }
        if let Some(n) = s.strip_prefix("chained:") {
            let n = n
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("`{s}`: expected chained:<N> with integer N")))?;
            return Ok(GameSpec::Chained(n));
        }
        Ok(GameSpec::File(PathBuf::from(s)))
    }

    pub fn build(&self) -> Result<XorGame> {
        match self {
            GameSpec::Chsh => Ok(games::make_chsh()),
            GameSpec::Chained(n) => games::make_chained(*n),
            GameSpec::File(p) => games::load_game(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BehaviourSpec {
    Pr,
    LocalOpt,
    QuantumOpt,
    Uniform,
    File(PathBuf),
    /// White-noise mixing of the behaviour table with visibility `v`.
    Mix(Box<BehaviourSpec>, f64),
    /// Symmetric flip noise on the compressed controller bit.
    Noisy(Box<BehaviourSpec>, f64),
}

fn split_param(s: &str, whole: &str) -> Result<(String, f64)> {
    let (inner, x) = s
        .rsplit_once(':')
        .ok_or_else(|| Error::Parse(format!("`{whole}`: expected <spec>:<number>")))?;
    let x = x
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{whole}`: `{x}` is not a number")))?;
    Ok((inner.to_string(), x))
}

impl BehaviourSpec {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pr" => BehaviourSpec::Pr,
            "local-opt" => BehaviourSpec::LocalOpt,
            "quantum-opt" => BehaviourSpec::QuantumOpt,
            "uniform" => BehaviourSpec::Uniform,
            _ => {
                if let Some(rest) = s.strip_prefix("mix:") {
                    let (inner, v) = split_param(rest, s)?;
                    BehaviourSpec::Mix(Box::new(Self::parse(&inner)?), v)
                } else if let Some(rest) = s.strip_prefix("noisy:") {
                    let (inner, d) = split_param(rest, s)?;
                    BehaviourSpec::Noisy(Box::new(Self::parse(&inner)?), d)
                } else {
                    BehaviourSpec::File(PathBuf::from(s))
                }
            }
        })
    }

    /// The behaviour table and the total controller-bit noise it carries.
    pub fn resolve(&self, g: &XorGame, opts: &SeesawOptions) -> Result<(Behaviour, f64)> {
        match self {
            BehaviourSpec::Pr => Ok((games::pr_box(g), 0.0)),
            BehaviourSpec::Uniform => Ok((Behaviour::uniform(g.nu(), g.nv()), 0.0)),
            BehaviourSpec::LocalOpt => {
                let (_, s) = local_value(g)?;
                Ok((games::deterministic_behaviour(g, &s.amap, &s.bmap)?, 0.0))
            }
            BehaviourSpec::QuantumOpt => {
                if g.predicate_matrix() == games::make_chsh().predicate_matrix()
                    && g.mu_matrix() == games::make_chsh().mu_matrix()
                {
                    Ok((games::quantum_optimal_chsh(), 0.0))
                } else {
                    Ok((quantum_value(g, opts)?.best.behaviour()?, 0.0))
                }
            }
            BehaviourSpec::File(p) => Ok((games::load_behaviour(p)?, 0.0)),
            BehaviourSpec::Mix(inner, v) => {
                let (b, d) = inner.resolve(g, opts)?;
                Ok((games::mix_with_uniform(&b, *v)?, d))
            }
            BehaviourSpec::Noisy(inner, d2) => {
                let (b, d1) = inner.resolve(g, opts)?;
                if !(0.0..=0.5).contains(d2) {
                    return Err(Error::invalid("delta", format!("{d2} is outside [0, 1/2]")));
                }
                Ok((b, d1 + d2 - 2.0 * d1 * d2))
            }
        }
    }
}

fn seesaw_opts(cfg: &RunConfig) -> SeesawOptions {
    SeesawOptions {
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..Default::default()
    }
}

fn combine_noise(d1: f64, d2: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&d2) {
        return Err(Error::invalid("delta", format!("{d2} is outside [0, 1/2]")));
    }
    Ok(d1 + d2 - 2.0 * d1 * d2)
}

/// Parsed and validated inputs shared by game-based commands.
struct Resolved {
    game: XorGame,
    behaviour: Behaviour,
    noise: f64,
}

fn resolve(cfg: &RunConfig, need_behaviour: bool) -> Result<(XorGame, Option<Resolved>)> {
    // Parse both specs before any computation.
    let gspec = GameSpec::parse(&cfg.game)?;
    let bspec = if need_behaviour {
        Some(BehaviourSpec::parse(&cfg.behaviour)?)
    } else {
        None
    };
    if !(cfg.kt_scale > 0.0) {
        return Err(Error::invalid(
            "kt",
            format!("{} must be positive", cfg.kt_scale),
        ));
    }
    let game = gspec.build()?;
    let resolved = match bspec {
        Some(spec) => {
            let (behaviour, d) = spec.resolve(&game, &seesaw_opts(cfg))?;
            let noise = combine_noise(d, cfg.delta)?;
            Some(Resolved {
                game: game.clone(),
                behaviour,
                noise,
            })
        }
        None => None,
    };
    Ok((game, resolved))
}

fn pretty(v: serde_json::Value) -> String {
    serde_json::to_string_pretty(&v).expect("json") + "\n"
}

pub fn cmd_value(cfg: &RunConfig) -> Result<String> {
    let (game, _) = resolve(cfg, false)?;
    let report = class_report(&game, &seesaw_opts(cfg))?;
    let ceil = class_ceilings(&report);
    let mut v = report.to_json_value();
    let obj = v.as_object_mut().expect("object");
    obj.insert("quantum_stderr".into(), json!(report.quantum_stderr));
    obj.insert("seed".into(), json!(cfg.seed));
    obj.insert(
        "ceilings_bits".into(),
        json!({"local": ceil.local_bits, "quantum": ceil.quantum_bits, "ns": ceil.ns_bits}),
    );
    let [l, q, n] = ceil.scaled(cfg.kt_scale);
    obj.insert("kt_scale".into(), json!(cfg.kt_scale));
    obj.insert(
        "ceilings_scaled".into(),
        json!({"local": l, "quantum": q, "ns": n}),
    );
    Ok(pretty(v))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<String> {
    let (_, r) = resolve(cfg, true)?;
    let r = r.expect("behaviour requested");
    let sim_cfg = SimulationConfig {
        rounds: cfg.rounds,
        seed: cfg.seed,
        p_model: cfg.p_model,
        controller_noise: r.noise,
        ..Default::default()
    };
    let stats = engine::simulate_rounds(&r.game, &r.behaviour, &sim_cfg)?;
    let mut v = serde_json::to_value(stats)?;
    let obj = v.as_object_mut().expect("object");
    obj.insert("game".into(), json!(r.game.name()));
    obj.insert("behaviour".into(), json!(cfg.behaviour));
    obj.insert(
        "mean_work_scaled".into(),
        json!(stats.mean_work_kt * cfg.kt_scale),
    );
    if let Some(path) = &cfg.records {
        let n = cfg.records_limit.min(cfg.rounds as usize).max(1);
        let records = engine::sample_records(&r.game, &r.behaviour, n, cfg.seed)?;
        let file = std::fs::File::create(path)?;
        channel::write_rounds_csv(std::io::BufWriter::new(file), &records)?;
        let mem = memory_ledger(&records)?;
        obj.insert(
            "records".into(),
            json!({"path": path, "count": n, "memory": mem}),
        );
    }
    Ok(pretty(v))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let rows = engine::chsh_sweep(cfg.step, cfg.kt_scale)?;
    let mut buf = Vec::new();
    engine::write_sweep_csv(&mut buf, &rows)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

fn channel_for(cfg: &RunConfig) -> Result<BinaryChannel> {
    match cfg.p {
        Some(p) => BinaryChannel::new(apply_noise(p, cfg.delta)?),
        None => {
            let (_, r) = resolve(cfg, true)?;
            let r = r.expect("behaviour requested");
            let c = induced_channel(&r.game, &r.behaviour)?;
            BinaryChannel::new(apply_noise(c.p(), r.noise)?)
        }
    }
}

pub fn cmd_cycle(cfg: &RunConfig) -> Result<String> {
    let c = channel_for(cfg)?;
    let ledger = cycle_ledger(&c);
    let mut v = serde_json::to_value(ledger)?;
    let obj = v.as_object_mut().expect("object");
    obj.insert("kt_scale".into(), json!(cfg.kt_scale));
    obj.insert(
        "w_net_scaled".into(),
        json!(ledger.w_net_bits * LN_2 * cfg.kt_scale),
    );
    Ok(pretty(v))
}

pub fn cmd_channel(cfg: &RunConfig) -> Result<String> {
    let (_, r) = resolve(cfg, true)?;
    let r = r.expect("behaviour requested");
    let raw = induced_channel(&r.game, &r.behaviour)?;
    let noisy = apply_noise(raw.p(), r.noise)?;
    let oriented = orient(noisy)?;
    let en = enumerate_channel(&r.game, &r.behaviour)?;
    let v = json!({
        "game": r.game.name(),
        "behaviour": cfg.behaviour,
        "omega": raw.p(),
        "bias": games::bias(&r.game, &r.behaviour)?,
        "controller_noise": r.noise,
        "p": noisy,
        "oriented_p": oriented.p(),
        "flipped": oriented.flipped(),
        "h_g_bits": oriented.h_g(),
        "h_g_given_x_bits": oriented.h_g_given_x(),
        "i_bits": oriented.mutual_information(),
        "feedback_work_scaled": oriented.mutual_information() * LN_2 * cfg.kt_scale,
        "enumerated": en,
        "nonsignalling": crate::optimize::is_nonsignalling(&r.behaviour, 1e-12),
    });
    Ok(pretty(v))
}

/// CSV of the scaling data; the fitted slope goes to `summary`.
pub fn cmd_finite_time(cfg: &RunConfig, summary: &mut String) -> Result<String> {
    let grid = cfg
        .tau_grid
        .clone()
        .unwrap_or_else(|| DEFAULT_TAU_GRID.to_vec());
    if cfg.self_test {
        let sig: Vec<f64> = grid.iter().map(|t| 0.6 / t).collect();
        let fit = fit_loglog(&grid, &sig)?;
        *summary = format!(
            "self-test: slope {:.9} +/- {:.3e} on synthetic 0.6/tau data\n",
            fit.slope, fit.slope_stderr
        );
        let mut out = String::from("tau,sigma\n");
        for (t, s) in grid.iter().zip(&sig) {
            out += &format!("{},{}\n", sig9(*t), sig9(*s));
        }
        return Ok(out);
    }
    let p = cfg.p.unwrap_or(0.85);
    let result = scaling_fit(p, &grid, &ScheduleTemplate::default(), cfg.reps, cfg.seed)?;
    let mut buf = Vec::new();
    dynamics::write_sigma_csv(&mut buf, &result.points)?;
    *summary = format!(
        "p {p}: slope {:.4} +/- {:.4} (95% band [{:.4}, {:.4}]), seed {}\n",
        result.fit.slope,
        result.slope_uncertainty(),
        result.fit.slope - 1.96 * result.slope_uncertainty(),
        result.fit.slope + 1.96 * result.slope_uncertainty(),
        cfg.seed
    );
    Ok(String::from_utf8(buf).expect("ascii"))
}

/// Runs a parsed command; returns the primary output and a side summary.
pub fn execute(cmd: &Command) -> Result<(String, String)> {
    let mut summary = String::new();
    let out = match cmd {
        Command::Value(c) => cmd_value(c)?,
        Command::Simulate(c) => {
            summary = format!("seed {}\n", c.seed);
            cmd_simulate(c)?
        }
        Command::Sweep(c) => cmd_sweep(c)?,
        Command::Cycle(c) => cmd_cycle(c)?,
        Command::FiniteTime(c) => cmd_finite_time(c, &mut summary)?,
        Command::Channel(c) => cmd_channel(c)?,
    };
    Ok((out, summary))
}

/// Where the primary output of `cmd` should go, if not stdout.
pub fn output_path(cmd: &Command, env_dir: Option<&Path>) -> Option<PathBuf> {
    cmd.config()
        .output
        .clone()
        .or_else(|| env_dir.map(|d| d.join(format!("{}.{}", cmd.name(), cmd.extension()))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn game_specs() {
        assert_eq!(GameSpec::parse("chsh").unwrap(), GameSpec::Chsh);
        assert_eq!(GameSpec::parse("chained:4").unwrap(), GameSpec::Chained(4));
        assert!(GameSpec::parse("chained:x").is_err());
        assert_eq!(
            GameSpec::parse("g.json").unwrap(),
            GameSpec::File("g.json".into())
        );
    }

    #[test]
    fn behaviour_specs_nest() {
        let s = BehaviourSpec::parse("noisy:mix:pr:0.7:0.1").unwrap();
        assert_eq!(
            s,
            BehaviourSpec::Noisy(
                Box::new(BehaviourSpec::Mix(Box::new(BehaviourSpec::Pr), 0.7)),
                0.1
            )
        );
        assert!(BehaviourSpec::parse("noisy:pr").is_err());
        assert!(BehaviourSpec::parse("mix:pr:abc").is_err());
    }

    #[test]
    fn noisy_pr_targets_one_minus_delta() {
        let g = games::make_chsh();
        let (b, d) = BehaviourSpec::parse("noisy:pr:0.1")
            .unwrap()
            .resolve(&g, &SeesawOptions::default())
            .unwrap();
        assert_eq!(games::game_value(&g, &b).unwrap(), 1.0);
        assert!((apply_noise(1.0, d).unwrap() - 0.9).abs() < 1e-15);
    }
}
