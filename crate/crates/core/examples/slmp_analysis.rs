//! The single-leaking-mode picture: mixing angle, transformed parameters,
//! the three sufficient conditions and a numerical check that the two
//! unitaries really produce the transformed Hamiltonian.
//!
//! cargo run --release --example slmp_analysis

use std::f64::consts::FRAC_PI_4;

use leaksync::model::TwoModeParams;
use leaksync::slmp::{analyze, verify_slmp_equivalence, DEFAULT_CONDITION_THRESHOLD};

fn main() -> leaksync::Result<()> {
    let spec = TwoModeParams {
        omega: [0.95, 1.01],
        omega0: 1.0,
        g: [0.2, 0.21],
        theta: [0.0, FRAC_PI_4],
        gamma: 0.1,
        n_max: 8,
    }
    .into_spec();

    let report = analyze(&spec, DEFAULT_CONDITION_THRESHOLD)?;
    let t = report.transform.expect("two modes, one two-level system");
    println!("mixing angle      {:.6}", t.gamma_angle);
    println!(
        "omega tilde       {:.6}, {:.6}",
        t.omega_tilde[0], t.omega_tilde[1]
    );
    println!("g tilde           {:.6}, {:.6}", t.g_tilde[0], t.g_tilde[1]);
    println!("xi12              {:.6}", t.xi12);
    println!("eta               {:.6}", t.eta);

    let c = report.conditions.expect("defined with the transform");
    let r = [c.ratios.r1, c.ratios.r2, c.ratios.r3];
    for (i, (ratio, ok)) in r.iter().zip(c.verdicts).enumerate() {
        println!(
            "condition {}       {ratio:.4} < {} : {ok}",
            i + 1,
            c.threshold
        );
    }

    let preserved = &report.modes.preserved[0];
    println!("preserved mode    {:.4}, {:.4}", preserved[0], preserved[1]);
    println!(
        "its frequency     {:.6}",
        report.modes.surviving_frequencies[0]
    );

    let residual = verify_slmp_equivalence(&spec, 8)?;
    println!("U H U† vs transformed H on the inner block: {residual:.2e}");
    Ok(())
}
