//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! `PASS`/`FAIL` line (run with `--nocapture` to see them).

use std::f64::consts::{PI, SQRT_2};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinadapt::adaptvqe::{self, ApplyMethod, CompiledPool};
use spinadapt::expm::SpectralExp;
use spinadapt::fcidump::parse_fcidump;
use spinadapt::fermiops::{matrix_on, s_squared_operator};
use spinadapt::fock::FockBasis;
use spinadapt::pauli::jordan_wigner;
use spinadapt::spinadapt::{build_pool, PoolSpec, Symmetry};
use spinadapt::trotter::{term_split, TrotterScheme, Trotterizer};

const BIN: &str = env!("CARGO_BIN_EXE_spinadapt");
const H6: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/h6_sto6g.fcidump");

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let o = Command::new(BIN).args(args).output().expect("binary runs");
    Out {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn series(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let mut c = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (c.next().unwrap(), c.next().unwrap())
        })
        .collect()
}

fn argmax(pts: &[(f64, f64)]) -> (f64, f64) {
    pts.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap()
}

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    println!("{} {n} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

#[test]
fn c1_pool_counts() {
    let t = Instant::now();
    let out = run(&["pool-stats", "--fcidump", H6]);
    let secs = t.elapsed().as_secs_f64();
    let rows: Vec<(usize, usize)> = out
        .stdout
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1].parse().unwrap(), c[3].parse().unwrap())
        })
        .collect();
    let want = vec![(1551, 924), (870, 400), (420, 200), (312, 92)];
    let ok = out.code == 0 && rows == want && secs < 10.0;
    report(1, "pool counts", ok, &format!("(operators, dim) = {rows:?} in {secs:.2} s"));
    assert!(ok);
}

#[test]
fn c2_closed_form_equivalence() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut ok = true;
    for n in ["4", "6"] {
        for which in ["eq26", "eq30", "eq31", "eq32", "sm-s9", "sm-s10"] {
            let out = run(&[
                "closedform-verify", "--which", which, "--random-tuples", "5", "--n-spatial", n, "--n-theta", "50",
                "--seed", "11", "--tol", "1e-9", "--taylor",
            ]);
            ok &= out.code == 0;
            for l in out.stdout.lines().skip(1) {
                let err: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
                worst = worst.max(err);
                cases += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= worst <= 1e-9 && cases == 2 * 6 * 6 && secs < 300.0;
    report(2, "closed-form equivalence", ok, &format!("{cases} checks incl. Taylor, max error {worst:.2e}, {secs:.1} s"));
    assert!(ok);
}

#[test]
fn c3_trotter_closed_forms() {
    let mut worst = 0.0f64;
    let mut ok = true;
    for which in ["trot1", "trot1-st", "trot2"] {
        for extra in [&[][..], &["--random-tuples", "5"][..]] {
            let mut args = vec!["closedform-verify", "--which", which, "--n-spatial", "6", "--seed", "5", "--tol", "1e-10"];
            args.extend_from_slice(extra);
            let out = run(&args);
            ok &= out.code == 0;
            for l in out.stdout.lines().skip(1) {
                worst = worst.max(l.rsplit(',').next().unwrap().parse().unwrap());
            }
        }
    }
    ok &= worst <= 1e-10;
    report(3, "product-formula closed forms", ok, &format!("max error vs staged products {worst:.2e} over 50 random θ"));
    assert!(ok);
}

#[test]
fn c4_error_scan_maxima() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (order, lo, hi) in [("1", 3.5, 4.5), ("2", 4.5, 5.5), ("4", 4.5, 5.5)] {
        let out = run(&["trotter-error", "--order", order, "--theta", "0:10:0.01"]);
        let (t, v) = argmax(&series(&out.stdout));
        let hit = out.code == 0 && (lo..=hi).contains(&t);
        ok &= hit;
        detail.push(format!("Trot{order} argmax {t:.2} (max {v:.4}, window [{lo}, {hi}])"));
    }
    report(4, "error-scan maxima", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn c5_spin_violation() {
    let at = |order: &str, theta: f64| {
        let g = format!("{theta}:{theta}:1");
        series(&run(&["spin-violation", "--order", order, "--theta", &g]).stdout)[0].1
    };
    let identity_point = at("1", 2.0 * SQRT_2 * PI);
    let zero = at("1", 0.0);
    let two = at("1", 2.0);
    let trot4 = series(&run(&["spin-violation", "--order", "4", "--theta", "0:0.99:0.01"]).stdout);
    let (t4, v4) = argmax(&trot4);
    let ok = identity_point < 1e-8 && zero < 1e-8 && two > 1e-2 && v4 < 1e-3;
    report(
        5,
        "spin violation",
        ok,
        &format!(
            "Trot1 at 2√2π {identity_point:.1e}, at 0 {zero:.1e}, at 2 {two:.3}; Trot4 max over θ<1 {v4:.2e} at {t4:.2}"
        ),
    );
    assert!(ok);
}

#[test]
fn c6_order_scaling() {
    let mut ok = true;
    let mut detail = Vec::new();
    for order in ["1", "2", "4"] {
        let out = run(&["trotter-error", "--order", order, "--theta", "0.001:0.1:0.001", "--precise", "--slope"]);
        let slope: f64 = out
            .stderr
            .lines()
            .find_map(|l| l.strip_prefix("loglog slope "))
            .unwrap()
            .parse()
            .unwrap();
        let want = order.parse::<f64>().unwrap() + 1.0;
        ok &= out.code == 0 && (slope - want).abs() <= 0.1;
        detail.push(format!("order {order} slope {slope:.3}"));
    }
    report(6, "order scaling", ok, &detail.join(", "));
    assert!(ok);
}

#[test]
fn c7_periodicity() {
    let two_pi = format!("{}", 2.0 * PI);
    let so = run(&["periodicity", "--generator", "so-single:0,5", "--expect", "periodic", "--period", &two_pi]);
    let ppqr = run(&["periodicity", "--generator", "ppqr:1,3,5", "--expect", "not-periodic"]);
    let scan = run(&["identity-scan", "--generator", "ppqr:1,3,5", "--theta", "0.5:100:0.01", "--floor", "5.0"]);
    let min = series(&scan.stdout).iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let t1 = format!("{}", 2.0 * SQRT_2 * PI);
    let t2 = format!("{}", 4.0 * SQRT_2 * PI);
    let trot1 = run(&["periodicity", "--order", "1", "--period", &t1]);
    let trot2 = run(&["periodicity", "--order", "2", "--period", &t2]);
    let ok = [&so, &ppqr, &scan, &trot1, &trot2].iter().all(|o| o.code == 0);
    report(
        7,
        "periodicity",
        ok,
        &format!("A_p^q period 2π, A_11^35 aperiodic, identity distance on [0.5, 100] ≥ {min:.4}, Trot1/Trot2 periods 2√2π/4√2π"),
    );
    assert!(ok);
}

#[test]
fn c8_adapt_vqe() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut traj = Vec::new();
    for pool in ["sagsd", "gsd"] {
        let path = dir.path().join(format!("{pool}.csv"));
        let out = run(&["adapt", "--fcidump", H6, "--pool", pool, "--out", path.to_str().unwrap()]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let rows: Vec<(usize, f64)> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let c: Vec<&str> = l.split(',').collect();
                (c[1].parse().unwrap(), c[3].parse().unwrap())
            })
            .collect();
        traj.push(rows);
    }
    let reach = |rows: &[(usize, f64)], tol: f64| rows.iter().find(|r| r.1 <= tol).map(|r| r.0);
    let (sa, gsd) = (&traj[0], &traj[1]);
    let sa_final = sa.last().unwrap();
    let (sa_9, gsd_9) = (reach(sa, 1e-9), reach(gsd, 1e-9));
    let (sa_3, gsd_3) = (reach(sa, 1.6e-3), reach(gsd, 1.6e-3));
    let ok = sa_final.1 <= 1e-9
        && sa_9.is_some_and(|n| n <= 100)
        && gsd_9.is_none_or(|n| n >= 150)
        && matches!((sa_3, gsd_3), (Some(a), Some(b)) if 2 * a < b);
    report(
        8,
        "ADAPT-VQE",
        ok,
        &format!(
            "saGSD {} params, final error {:.1e}; 1e-9 at {sa_9:?} (saGSD) vs {gsd_9:?} (GSD); 1.6e-3 at {sa_3:?} vs {gsd_3:?}; {:.0} s",
            sa_final.0,
            sa_final.1,
            t.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn c9_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut unit = 0.0f64;
    let mut anti = 0.0f64;
    let mut spin = 0.0f64;
    let mut jw = 0.0f64;
    let mut grad = 0.0f64;

    // generators and unitaries on the full Fock space of four orbitals
    let irreps = vec![0u8, 1, 0, 1];
    let b4 = Arc::new(FockBasis::full(4).unwrap());
    let s2 = matrix_on(&s_squared_operator(4), &b4);
    let sagsd = build_pool(&PoolSpec::new(4, Some(irreps.clone()), &[Symmetry::Sz, Symmetry::S2])).unwrap();
    let gsd = build_pool(&PoolSpec::new(4, None, &[])).unwrap();
    for g in sagsd.iter().chain(&gsd) {
        let m = matrix_on(&g.body, &b4);
        anti = anti.max(m.anti_hermiticity_defect().abs());
        let u = SpectralExp::new(&m, None).unwrap().exp(rng.gen_range(-4.0 * PI..4.0 * PI));
        unit = unit.max(u.unitarity_defect());
    }
    for g in &sagsd {
        spin = spin.max(s2.commutator(&matrix_on(&g.body, &b4)).frobenius_norm());
        if let Ok(terms) = term_split(g) {
            let mats: Vec<_> = terms.iter().map(|t| matrix_on(t, &b4)).collect();
            for order in [1, 2, 4] {
                let trot = Trotterizer::new(TrotterScheme::new(order, mats.len()).unwrap(), &mats).unwrap();
                unit = unit.max(trot.product(rng.gen_range(0.0..10.0)).unitarity_defect());
            }
        }
    }

    // saGSD on six orbitals, commutator with S² on the full Fock space
    let h6 = parse_fcidump(H6).unwrap();
    let b6 = Arc::new(FockBasis::full(6).unwrap());
    let s2_6 = matrix_on(&s_squared_operator(6), &b6);
    let pool6 = build_pool(&PoolSpec::new(6, Some(h6.orb_irreps.clone()), &[Symmetry::Sz, Symmetry::PointGroup, Symmetry::S2]))
        .unwrap();
    for g in &pool6 {
        let m = matrix_on(&g.body, &b6);
        anti = anti.max(m.anti_hermiticity_defect().abs());
        spin = spin.max(s2_6.commutator(&m).frobenius_norm());
    }

    // Jordan–Wigner on up to three orbitals
    for n in 1..=3 {
        let b = FockBasis::full(n).unwrap();
        let pools = [
            build_pool(&PoolSpec::new(n, None, &[])).unwrap(),
            build_pool(&PoolSpec::new(n, None, &[Symmetry::Sz, Symmetry::S2])).unwrap(),
        ];
        for g in pools.iter().flatten() {
            jw = jw.max(jordan_wigner(&g.body, 2 * n).matrix().distance(&matrix_on(&g.body, &b)));
        }
        let h = spinadapt::fermiops::s_squared_operator(n);
        jw = jw.max(jordan_wigner(&h, 2 * n).matrix().distance(&matrix_on(&h, &b)));
    }

    // analytic against central finite differences on H6
    let basis = adaptvqe::sector_basis(&h6).unwrap();
    let h = adaptvqe::build_hamiltonian(&h6, &basis);
    let pool = CompiledPool::new(pool6.clone(), &basis).unwrap();
    // a generic state, so every parameter moves the energy
    let mut phi: Vec<spinadapt::Complex64> =
        (0..basis.len()).map(|_| spinadapt::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let nrm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    phi.iter_mut().for_each(|z| *z /= nrm);
    let ops: Vec<usize> = (0..8).map(|_| rng.gen_range(0..pool.len())).collect();
    let thetas: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let (_, g) = adaptvqe::energy_and_gradient(&pool, &h.matrix, &phi, &ops, &thetas, ApplyMethod::Spectral);
    let step = 1e-5;
    for k in 0..thetas.len() {
        let mut tp = thetas.clone();
        let mut tm = thetas.clone();
        tp[k] += step;
        tm[k] -= step;
        let ep = adaptvqe::energy_and_gradient(&pool, &h.matrix, &phi, &ops, &tp, ApplyMethod::Spectral).0;
        let em = adaptvqe::energy_and_gradient(&pool, &h.matrix, &phi, &ops, &tm, ApplyMethod::Spectral).0;
        let fd = (ep - em) / (2.0 * step);
        grad = grad.max((fd - g[k]).abs() / g[k].abs().max(1e-3));
    }
    let g_max = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let ok = unit <= 1e-11 && anti <= 1e-12 && spin <= 1e-10 && jw <= 1e-12 && grad <= 1e-6 && g_max > 1e-3;
    report(
        9,
        "property suites",
        ok,
        &format!("unitarity {unit:.1e}, anti-Hermiticity {anti:.1e}, [S², G] {spin:.1e}, JW {jw:.1e}, gradient rel. {grad:.1e} (max |g| {g_max:.2})"),
    );
    assert!(ok);
}
