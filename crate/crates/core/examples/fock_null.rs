//! A number state has no phase, so nothing synchronizes: ⟨x_k⟩ stays zero
//! while the excitations still flow between the oscillators and decay.
//!
//! cargo run --release --example fock_null

use leaksync::dynamics::{
    evolve, prepare_state, uniform_grid, InitialState, SolverOptions, TlsState,
};
use leaksync::model::{build_lindblad, TwoModeParams};
use leaksync::scenario::standard_observables;

fn main() -> leaksync::Result<()> {
    let spec = TwoModeParams {
        omega: [0.95, 1.01],
        omega0: 1.0,
        g: [0.2, 0.21],
        theta: [0.0, std::f64::consts::FRAC_PI_4],
        gamma: 0.1,
        n_max: 4,
    }
    .into_spec();
    let generator = build_lindblad(&spec)?;
    let rho0 = prepare_state(
        generator.layout(),
        &InitialState::fock(&[2, 0], TlsState::Minus, 1),
    )?;
    let traj = evolve(
        &generator,
        &rho0,
        &uniform_grid(200.0, 11)?,
        &standard_observables(&spec)?,
        &SolverOptions::default(),
    )?;

    let x1 = traj.real_series("x1").expect("recorded");
    let n1 = traj.real_series("n1").expect("recorded");
    let n2 = traj.real_series("n2").expect("recorded");
    println!("     t      <x1>        n1        n2");
    for (i, t) in traj.times().iter().enumerate() {
        println!("{t:6.1} {:9.2e} {:9.5} {:9.5}", x1[i], n1[i], n2[i]);
    }
    Ok(())
}
