//! Two limits with closed forms: a free coherent state rotates as
//! α e^{−iωt}, and an excited two-level system decays as e^{−Γt}.
//!
//! cargo run --release --example lindblad_limits

use leaksync::dynamics::{
    evolve, prepare_state, uniform_grid, InitialState, SolverOptions, TlsState,
};
use leaksync::fock::{embedded_annihilation, embedded_pauli, Pauli, C64};
use leaksync::model::{build_lindblad, TwoModeParams};

fn main() -> leaksync::Result<()> {
    let mut spec = TwoModeParams {
        omega: [1.0, 1.3],
        omega0: 1.0,
        g: [0.0, 0.0],
        theta: [0.0, 0.0],
        gamma: 0.25,
        n_max: 6,
    }
    .into_spec();
    let opts = SolverOptions::default();
    let grid = uniform_grid(10.0, 6)?;

    let gen = build_lindblad(&spec)?;
    let alpha = C64::new(0.7, 0.0);
    let zero = C64::new(0.0, 0.0);
    let rho = prepare_state(
        gen.layout(),
        &InitialState::coherent(&[alpha, zero], TlsState::Minus, 1),
    )?;
    let a1 = embedded_annihilation(gen.layout(), 0)?;
    let traj = evolve(&gen, &rho, &grid, &[("a1".into(), a1)], &opts)?;
    let a0 = traj.series("a1").expect("recorded")[0];
    println!("free rotation");
    for (t, z) in traj
        .times()
        .iter()
        .zip(traj.series("a1").expect("recorded"))
    {
        let exact = a0 * C64::from_polar(1.0, -t);
        println!(
            "  t = {t:4.1}  <a1> = {z:.6}  error {:.1e}",
            (z - exact).norm()
        );
    }

    spec.n_max = 1;
    let gen = build_lindblad(&spec)?;
    let rho = prepare_state(
        gen.layout(),
        &InitialState::fock(&[0, 0], TlsState::Plus, 1),
    )?;
    let pe = &embedded_pauli(Pauli::Plus, gen.layout(), 2)?
        * &embedded_pauli(Pauli::Minus, gen.layout(), 2)?;
    let traj = evolve(&gen, &rho, &grid, &[("pe".into(), pe)], &opts)?;
    println!("amplitude damping, Gamma = 0.25");
    for (t, p) in traj
        .times()
        .iter()
        .zip(traj.series("pe").expect("recorded"))
    {
        println!(
            "  t = {t:4.1}  P+ = {:.8}  exact {:.8}",
            p.re,
            (-0.25 * t).exp()
        );
    }
    Ok(())
}
