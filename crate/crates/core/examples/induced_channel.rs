//! How a behaviour playing CHSH becomes a binary symmetric channel about a
//! hidden thermal bit, checked by exhaustive enumeration and by sampling.

use xor_szilard::channel::{enumerate_channel, induced_channel, RoundSampler};
use xor_szilard::games::{self, make_chsh, Behaviour};
use xor_szilard::rng;

fn main() -> xor_szilard::Result<()> {
    let g = make_chsh();
    let behaviours: Vec<(&str, Behaviour)> = vec![
        ("uniform", Behaviour::uniform(2, 2)),
        ("quantum", games::quantum_optimal_chsh()),
        ("pr box", games::pr_box(&g)),
    ];

    for (name, b) in &behaviours {
        let c = induced_channel(&g, b)?;
        let e = enumerate_channel(&g, b)?;
        println!(
            "{name:<8} p = {:.6}  P(G=X|X=0) = {:.6}  P(G=X|X=1) = {:.6}  I = {:.6} bits",
            c.p(),
            e.correct_given_x[0],
            e.correct_given_x[1],
            c.mutual_information()
        );
    }

    // The controller sees (u, v, a, b, r) but never x; r alone is uniform.
    let b = games::quantum_optimal_chsh();
    let sampler = RoundSampler::new(&g, &b)?;
    let mut r = rng::stream(rng::DEFAULT_SEED, 0);
    let n = 200_000;
    let correct = (0..n).filter(|_| sampler.sample(&mut r).won).count();
    println!(
        "sampled success rate {:.4} over {n} rounds",
        correct as f64 / n as f64
    );
    Ok(())
}
