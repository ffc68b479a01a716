//! Truncated ladder operators, embedding into a composite space and
//! coherent states built with the displacement operator.
//!
//! cargo run --release --example fock_operators

use leaksync::fock::{
    annihilation, creation, displacement, embed, number, QOperator, SpaceLayout, Subsystem, C64,
};

fn main() -> leaksync::Result<()> {
    let dim = 6;
    let a = annihilation(dim)?;
    let ad = creation(dim)?;
    // [a, a†] = 1 except in the last row, where truncation bites
    let comm = a.commutator(&ad)?;
    let diag: Vec<String> = (0..dim)
        .map(|i| format!("{:.0}", comm.matrix()[(i, i)].re))
        .collect();
    println!("diag [a, a†] = [{}]", diag.join(", "));

    let d = 20;
    let alpha = C64::new(0.7, 0.3);
    let ket = displacement(d, alpha)?.matrix().column(0).into_owned();
    let a_mean = (ket.adjoint() * annihilation(d)?.matrix() * &ket)[(0, 0)];
    let n_mean = (ket.adjoint() * number(d)?.matrix() * &ket)[(0, 0)];
    println!(
        "coherent state: <a> = {a_mean:.6}, <n> = {:.6} (|alpha|^2 = {:.6})",
        n_mean.re,
        alpha.norm_sqr()
    );

    let layout = SpaceLayout::new(vec![
        Subsystem::oscillator(2),
        Subsystem::oscillator(2),
        Subsystem::Tls,
    ])?;
    let n2: QOperator = embed(&number(3)?, &layout, 1)?;
    println!(
        "layout dims {:?}, total {}",
        layout.dims(),
        layout.total_dim()
    );
    let idx = layout.index_of(&[0, 2, 1])?;
    println!("<0,2,-| n2 |0,2,-> = {}", n2.matrix()[(idx, idx)].re);
    Ok(())
}
