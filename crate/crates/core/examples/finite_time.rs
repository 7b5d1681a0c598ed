//! Dissipation of the finite-time branch protocol falls off as 1/tau.

use xor_szilard::dynamics::{
    estimate_sigma, quasistatic_work_kt, scaling_fit, ProtocolSchedule, ScheduleTemplate,
};

fn main() -> xor_szilard::Result<()> {
    let p = 0.85;
    println!(
        "quasistatic value at p = {p}: {:.6} kT",
        quasistatic_work_kt(p)
    );

    let sched = ProtocolSchedule::linear(20.0, 1.0)?;
    let e = estimate_sigma(p, &sched, 20_000, 1)?;
    println!(
        "tau = 20: W = {:.5} kT, Sigma = {:.5} +/- {:.5}",
        e.mean_work_kt, e.mean_sigma, e.stderr
    );

    let grid = [25.0, 50.0, 100.0, 200.0];
    let fit = scaling_fit(p, &grid, &ScheduleTemplate::default(), 40_000, 2)?;
    for pt in &fit.points {
        println!(
            "tau = {:>5}: Sigma = {:.3e} +/- {:.1e}",
            pt.tau, pt.mean_sigma, pt.stderr
        );
    }
    println!(
        "log-log slope {:.3} +/- {:.3}",
        fit.fit.slope,
        fit.slope_uncertainty()
    );
    Ok(())
}
