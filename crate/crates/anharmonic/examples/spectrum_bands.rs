//! Energy bands of a six-site chain with four bosons: the spectrum organizes
//! into well-separated bands around ħUA, one per anharmonicity manifold.
//!
//! Run:
//!   cargo run --example spectrum_bands --release

use anharmonic::scenario::spectrum_scan;
use anharmonic::units::{mhz, to_mhz};

fn main() {
    let (l, n) = (6, 4);
    let (j, u) = (mhz(20.0), mhz(250.0));
    eprintln!("=== Band structure: L = {l}, N = {n}, J/2pi = 20 MHz, U/2pi = 250 MHz ===\n");

    let scan = spectrum_scan(l, n, j, u).expect("desk-scale problem");
    eprintln!("{} eigenvalues in {} bands", scan.energies.len(), scan.manifold_sizes.len());
    for (a, size) in &scan.manifold_sizes {
        let lo = scan
            .energies
            .iter()
            .zip(&scan.nearest_band)
            .filter(|(_, b)| *b == a)
            .map(|(&e, _)| e)
            .fold(f64::INFINITY, f64::min);
        let hi = scan
            .energies
            .iter()
            .zip(&scan.nearest_band)
            .filter(|(_, b)| *b == a)
            .map(|(&e, _)| e)
            .fold(f64::NEG_INFINITY, f64::max);
        eprintln!(
            "  band A = {a:3}: {size:3} states, [{:9.2}, {:9.2}] MHz around {:9.2} MHz",
            to_mhz(lo),
            to_mhz(hi),
            to_mhz(u * *a as f64),
        );
    }

    println!("{}", scan.to_csv());
}
