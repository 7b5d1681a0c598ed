//! Feedback work from the quantum-optimal CHSH channel: the posterior-matched
//! branch, the two strokes, and a Monte Carlo of many rounds.

use std::f64::consts::LN_2;

use xor_szilard::channel::induced_channel;
use xor_szilard::engine::{
    branch_strokes, feedback_value, mismatched_work_kt, posterior, simulate_rounds,
    SimulationConfig,
};
use xor_szilard::games::{make_chsh, quantum_optimal_chsh};

fn main() -> xor_szilard::Result<()> {
    let g = make_chsh();
    let b = quantum_optimal_chsh();
    let c = induced_channel(&g, &b)?;

    let branch = posterior(0, &c)?;
    let strokes = branch_strokes(branch.q0, branch.q1, 0.0)?;
    println!("p = {:.6}, gap = {:?}", c.p(), branch.gap);
    println!(
        "assignment {:.6} kT + return {:.6} kT = {:.6} kT",
        strokes.assignment_kt,
        strokes.return_kt,
        strokes.total_kt()
    );
    println!("analytic value {:.6} kT", LN_2 * feedback_value(&c));

    let stats = simulate_rounds(&g, &b, &SimulationConfig::default())?;
    println!(
        "simulated {} rounds: {:.6} +/- {:.6} kT (z = {:.2})",
        stats.rounds, stats.mean_work_kt, stats.stderr_kt, stats.z_work
    );

    // A controller that trusts the channel too much pays for it.
    for p_model in [0.75, 0.95, 0.99] {
        println!(
            "model p = {p_model}: {:+.6} kT",
            mismatched_work_kt(c.p(), p_model)
        );
    }
    Ok(())
}
