//! Per-iteration ADAPT-VQE trace on the H6 fixture.
//!
//! `cargo run --release --example adapt_trace -- [sagsd|gsd]`

use std::time::Instant;

use spinadapt::adaptvqe::*;
use spinadapt::fcidump::parse_fcidump;
use spinadapt::spinadapt::{build_pool, PoolSpec, Symmetry};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "sagsd".into());
    let ham = parse_fcidump(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/h6_sto6g.fcidump")).unwrap();
    let basis = sector_basis(&ham).unwrap();
    let t = Instant::now();
    let h = build_hamiltonian(&ham, &basis);
    let mut sym = vec![Symmetry::Sz, Symmetry::PointGroup];
    if which == "sagsd" {
        sym.push(Symmetry::S2);
    }
    let pool = build_pool(&PoolSpec::new(6, Some(ham.orb_irreps.clone()), &sym)).unwrap();
    let pool = CompiledPool::new(pool, &basis).unwrap();
    eprintln!("setup {:?}, pool {}", t.elapsed(), pool.len());
    eprintln!("params energy error optimizer s2 elapsed");
    let t = Instant::now();
    let r = adapt_vqe_with(&h, &pool, ham.reference(), &AdaptOptions::default(), |s| {
        eprintln!("{:4} {:.12} {:.3e} {:?} {:.2e} {:?}", s.n_params, s.energy, s.error_vs_fci, s.optimizer, s.s2, t.elapsed())
    })
    .unwrap();
    eprintln!("{:?} fci {}", r.termination, r.fci_energy);
}
