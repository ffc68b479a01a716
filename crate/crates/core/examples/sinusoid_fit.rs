//! Tail fitting of two noisy sinusoids sharing one frequency.
//!
//! cargo run --release --example sinusoid_fit

use leaksync::metrics::fit_signals;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> leaksync::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (omega, phi1, phi2) = (0.9785, 0.3, 0.3 + 2.356);
    let t: Vec<f64> = (0..4001).map(|i| 0.1 * i as f64).collect();
    let mut noisy = |amp: f64, phi: f64| -> Vec<f64> {
        t.iter()
            .map(|&s| amp * (omega * s - phi).cos() + rng.gen_range(-0.02..0.02))
            .collect()
    };
    let x1 = noisy(0.35, phi1);
    let x2 = noisy(0.36, phi2);

    let fit = fit_signals(&t, &x1, &x2, 0.25)?;
    println!("window       [{}, {}]", fit.window.0, fit.window.1);
    println!("frequency    {:.6} (true {omega})", fit.omega_fit);
    println!(
        "phase diff   {:.4} (true {:.4})",
        fit.phase_diff,
        phi2 - phi1
    );
    println!(
        "amplitudes   {:.4}, {:.4} (true 0.35, 0.36)",
        fit.oscillators[0].amplitude, fit.oscillators[1].amplitude
    );
    println!("rms residual {:.4}", fit.fit_residual);
    Ok(())
}
