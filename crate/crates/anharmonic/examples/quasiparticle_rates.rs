//! Closed-form quasiparticle rates against the perturbation engine: every
//! printed rate is computed twice, once from its rational expression and once
//! as an order-n matrix element extracted from the projected problem.
//!
//! Run:
//!   cargo run --example quasiparticle_rates --release

use anharmonic::effmodels::{
    t_stack_boson, tilde_j, tilde_omega_diff, v_stack_boson, xi1_general, xi_stack_boson,
};
use anharmonic::fock::{Basis, FockState};
use anharmonic::lattice::build_chain;
use anharmonic::perturbation::build_projected;
use anharmonic::units::{mhz, to_mhz};

fn main() {
    let j = mhz(10.0);
    let u = mhz(250.0);
    eprintln!("=== Quasiparticle rates: closed form vs perturbation engine ===");
    eprintln!("J/2pi = 10 MHz, U/2pi = 250 MHz; rates in MHz\n");
    println!("rate,closed_form_MHz,engine_MHz,rel_diff");

    let row = |name: &str, form: f64, engine: f64| {
        println!(
            "{name},{:.9e},{:.9e},{:.2e}",
            to_mhz(form),
            to_mhz(engine),
            (form - engine).abs() / form.abs().max(f64::MIN_POSITIVE)
        );
    };

    for n in 2..=5u32 {
        let a = -((n as i64) * (n as i64 - 1) / 2);

        // collective hopping, order N
        let basis = Basis::enumerate(4, n).unwrap();
        let graph = build_chain(4, j, u, 0.0).unwrap();
        let p = build_projected(&basis, &graph, a).unwrap();
        let engine = p
            .extract_coupling(&FockState::stack(4, 2, n), &FockState::stack(4, 1, n), n as usize)
            .unwrap();
        row(&format!("tilde_J(N={n})"), tilde_j(n, j, u), engine);

        // boundary well, order 2
        let basis = Basis::enumerate(6, n).unwrap();
        let graph = build_chain(6, j, u, 0.0).unwrap();
        let p = build_projected(&basis, &graph, a).unwrap();
        let edge = FockState::stack(6, 0, n);
        let bulk = FockState::stack(6, 2, n);
        let engine = p.extract_coupling(&edge, &edge, 2).unwrap()
            - p.extract_coupling(&bulk, &bulk, 2).unwrap();
        row(
            &format!("omega_diff(N={n},d=1)"),
            tilde_omega_diff(n, 1, j, u),
            engine,
        );

        // stack-boson sector
        let basis = Basis::enumerate(5, n + 1).unwrap();
        let graph = build_chain(5, j, u, 0.0).unwrap();
        let p = build_projected(&basis, &graph, a).unwrap();
        let near = two_site(5, 1, n, 2, 1);
        let far = two_site(5, 1, n, 3, 1);
        let engine = p.extract_coupling(&near, &near, 2).unwrap()
            - p.extract_coupling(&far, &far, 2).unwrap();
        row(&format!("V(N={n})"), v_stack_boson(n, j, u).unwrap(), engine);

        let basis = Basis::enumerate(3, n + 1).unwrap();
        let graph = build_chain(3, j, u, 0.0).unwrap();
        let p = build_projected(&basis, &graph, a).unwrap();
        let engine = p
            .extract_coupling(&two_site(3, 1, n, 2, 1), &two_site(3, 0, 1, 1, n), 2)
            .unwrap();
        row(&format!("T(N={n})"), t_stack_boson(n, j, u).unwrap(), engine);

        let basis = Basis::enumerate(2, n + 1).unwrap();
        let graph = build_chain(2, j, u, 0.0).unwrap();
        let p = build_projected(&basis, &graph, a).unwrap();
        let engine = p
            .extract_coupling(
                &two_site(2, 0, n, 1, 1),
                &two_site(2, 0, 1, 1, n),
                (n - 1) as usize,
            )
            .unwrap();
        row(&format!("Xi(N={n})"), xi_stack_boson(n, j, u).unwrap(), engine);
    }

    // nearest-neighbor exchange of unequal stacks
    for (n, m) in [(3u32, 2u32), (4, 2), (5, 2), (4, 3)] {
        let a = -((n as i64) * (n as i64 - 1) / 2) - (m as i64) * (m as i64 - 1) / 2;
        let basis = Basis::enumerate(2, n + m).unwrap();
        let graph = build_chain(2, j, u, 0.0).unwrap();
        let p = build_projected(&basis, &graph, a).unwrap();
        let engine = p
            .extract_coupling(
                &two_site(2, 0, n, 1, m),
                &two_site(2, 0, m, 1, n),
                (n - m) as usize,
            )
            .unwrap();
        row(
            &format!("Xi1(N={n},M={m})"),
            xi1_general(n, m, j, u).unwrap(),
            engine,
        );
    }
}

fn two_site(l: usize, a: usize, na: u32, b: usize, nb: u32) -> FockState {
    let mut occ = vec![0u32; l];
    occ[a] = na;
    occ[b] = nb;
    FockState::new(occ)
}
