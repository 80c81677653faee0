use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinadapt::adaptvqe::{self, AdaptOptions, ApplyMethod, CompiledPool};
use spinadapt::csv::{argmax, fmt_f64, write_series, Grid};
use spinadapt::expm::{self, periodicity_test, SpectralExp, Verdict};
use spinadapt::fcidump::parse_fcidump;
use spinadapt::fermiops::{matrix_on, s_squared_operator, SectorMatrix};
use spinadapt::fock::FockBasis;
use spinadapt::optimize::BfgsOptions;
use spinadapt::pauli::{jordan_wigner, lcu_decompose};
use spinadapt::spinadapt::{build_pool, parse_generator, pool_stats, PoolSpec, SpinAdaptedGenerator, Symmetry};
use spinadapt::trotter::{self, ppqr_trotterizer, product_period, term_split, TrotterScheme, Trotterizer};
use spinadapt::Error;

#[derive(Parser)]
#[command(name = "spinadapt", version, about = "Spin-adapted excitation operators: closed forms, Trotter analysis, ADAPT-VQE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pool sizes and Hilbert-space dimensions under each symmetry set.
    PoolStats {
        #[arg(long)]
        fcidump: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ||exp(θG) − Trot_n(θ)||_F over a θ grid.
    TrotterError {
        #[command(flatten)]
        trot: TrotterArgs,
        /// Evaluate in double-double arithmetic (small θ, real generators).
        #[arg(long)]
        precise: bool,
        /// Print the log-log slope of the error against θ to stderr.
        #[arg(long)]
        slope: bool,
    },
    /// ||[S², Trot_n(θ)]||_F over a θ grid.
    SpinViolation {
        #[command(flatten)]
        trot: TrotterArgs,
        /// Scan the exact unitary instead of the product formula.
        #[arg(long)]
        exact: bool,
    },
    /// Periodicity of exp(θG) (or of its product formula) from the spectrum.
    Periodicity {
        #[command(flatten)]
        target: GeneratorArgs,
        /// Analyse the product formula of this order instead of the exact unitary.
        #[arg(long, value_parser = parse_order)]
        order: Option<u8>,
        #[arg(long, default_value_t = 1_000_000)]
        d_max: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Fail unless the verdict matches.
        #[arg(long)]
        expect: Option<Expect>,
        /// Fail unless the period matches to 1e-9.
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ||I − exp(θG)||_F over a θ grid.
    IdentityScan {
        #[command(flatten)]
        target: GeneratorArgs,
        #[arg(long, default_value = "0.5:100:0.01")]
        theta: Grid,
        /// Fail if the scan drops below this value.
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed forms against exact exponentials or staged products at random θ.
    ClosedformVerify(VerifyArgs),
    /// Jordan–Wigner image of a generator, or the LCU of its unitary.
    JwDump {
        #[command(flatten)]
        target: GeneratorArgs,
        /// Pauli decomposition of exp(θG) instead of G.
        #[arg(long)]
        lcu: bool,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Check the Pauli matrix against the fermionic one.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statevector ADAPT-VQE on an FCIDUMP Hamiltonian.
    Adapt {
        #[arg(long)]
        fcidump: PathBuf,
        #[arg(long, value_enum, default_value_t = PoolKind::Sagsd)]
        pool: PoolKind,
        #[arg(long, default_value_t = 1e-9)]
        grad_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        energy_tol: f64,
        #[arg(long, default_value_t = 250)]
        max_iters: usize,
        #[arg(long, value_enum, default_value_t = Method::Spectral)]
        method: Method,
        /// Print one line per macro-iteration to stderr.
        #[arg(long)]
        verbose: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Clone)]
struct GeneratorArgs {
    /// `kind:i,j,...` with kind one of so-single, so-double, single, ppqq,
    /// ppqr, s0, s1, triplet; spatial indices count from 0.
    #[arg(long, default_value = "ppqr:1,3,5")]
    generator: String,
    #[arg(long, default_value_t = 6)]
    n_spatial: usize,
}

#[derive(clap::Args, Clone)]
struct TrotterArgs {
    #[command(flatten)]
    target: GeneratorArgs,
    #[arg(long, default_value_t = 1, value_parser = parse_order)]
    order: u8,
    #[arg(long, default_value = "0:10:0.01")]
    theta: Grid,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 6)]
    n_spatial: usize,
    /// Draw this many random index tuples instead of using --p/--q/--r/--s.
    #[arg(long)]
    random_tuples: Option<usize>,
    #[arg(long, default_value_t = 50)]
    n_theta: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 1e-9 for exponentials and 1e-10 for product formulas.
    #[arg(long)]
    tol: Option<f64>,
    /// Also compare the exact exponential with a 40-term Taylor series once.
    #[arg(long)]
    taylor: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Eq26,
    Eq30,
    Eq31,
    Eq32,
    SmS9,
    SmS10,
    Trot1,
    Trot1St,
    Trot2,
    All,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Eq26 => "eq26",
            Which::Eq30 => "eq30",
            Which::Eq31 => "eq31",
            Which::Eq32 => "eq32",
            Which::SmS9 => "sm_s9",
            Which::SmS10 => "sm_s10",
            Which::Trot1 => "trot1",
            Which::Trot1St => "trot1_st",
            Which::Trot2 => "trot2",
            Which::All => "all",
        }
    }

    fn arity(self) -> usize {
        match self {
            Which::Eq26 | Which::SmS9 | Which::SmS10 => 4,
            _ => 3,
        }
    }

    fn is_product(self) -> bool {
        matches!(self, Which::Trot1 | Which::Trot1St | Which::Trot2)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Periodic,
    NotPeriodic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PoolKind {
    Gsd,
    Sagsd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Spectral,
    ClosedForm,
}

fn parse_order(s: &str) -> Result<u8, String> {
    match s.parse::<u8>() {
        Ok(o @ (1 | 2 | 4)) => Ok(o),
        _ => Err(format!("order must be 1, 2 or 4, got '{s}'")),
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Degenerate(_) | Error::Parse(_) | Error::Fcidump { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("SPINADAPT_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SPINADAPT_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::PoolStats { fcidump, out } => {
            check_out(&out)?;
            pool_stats_cmd(&fcidump, &out)
        }
        Command::TrotterError { trot: a, precise, slope } => {
            check_out(&a.out)?;
            let grid = a.theta.points();
            let pts = if precise {
                let (g, basis) = generator_on(&a.target)?;
                let terms: Vec<_> = term_split(&g)?.iter().map(|t| matrix_on(t, &basis)).collect();
                trotter::precise_error_scan(&TrotterScheme::new(a.order, terms.len())?, &terms, &grid)?
            } else {
                let (exact, trot, _) = trotter_setup(&a)?;
                trotter::error_scan(&exact, &trot, &grid)
            };
            report_argmax(&pts);
            if slope {
                let positive: Vec<_> = pts.iter().copied().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
                eprintln!("loglog slope {}", fmt_f64(trotter::loglog_slope(&positive)));
            }
            emit(&a.out, &write_series(&pts))
        }
        Command::SpinViolation { trot: a, exact } => {
            check_out(&a.out)?;
            let (ex, trot, basis) = trotter_setup(&a)?;
            let s2 = matrix_on(&s_squared_operator(basis.n_spatial()), &basis);
            let grid = a.theta.points();
            let pts = if exact {
                trotter::exact_spin_violation_scan(&s2, &ex, &grid)
            } else {
                trotter::spin_violation_scan(&s2, &trot, &grid)
            };
            report_argmax(&pts);
            emit(&a.out, &write_series(&pts))
        }
        Command::Periodicity { target, order, d_max, tol, expect, period, out } => {
            check_out(&out)?;
            periodicity_cmd(&target, order, d_max, tol, expect, period, &out)
        }
        Command::IdentityScan { target, theta, floor, out } => {
            check_out(&out)?;
            let (g, basis) = generator_on(&target)?;
            let exact = SpectralExp::new(&matrix_on(&g.body, &basis), None)?;
            let pts = expm::identity_distance_scan(&exact, &theta.points());
            let min = pts.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1));
            emit(&out, &write_series(&pts))?;
            if let Some((t, v)) = min {
                eprintln!("min {} at theta {}", fmt_f64(v), fmt_f64(t));
                if let Some(f) = floor {
                    if v < f {
                        return Err(Failure::Verify(format!("identity distance {v:e} at theta {t} is below {f:e}")));
                    }
                }
            }
            Ok(())
        }
        Command::ClosedformVerify(a) => {
            check_out(&a.out)?;
            verify_cmd(&a)
        }
        Command::JwDump { target, lcu, theta, verify, out } => {
            check_out(&out)?;
            jw_cmd(&target, lcu, theta, verify, &out)
        }
        Command::Adapt { fcidump, pool, grad_tol, energy_tol, max_iters, method, verbose, out } => {
            check_out(&out)?;
            for (name, v) in [("grad-tol", grad_tol), ("energy-tol", energy_tol)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Failure::Usage(format!("--{name} must be a non-negative number, got {v}")));
                }
            }
            let method = match method {
                Method::Spectral => ApplyMethod::Spectral,
                Method::ClosedForm => ApplyMethod::ClosedForm,
            };
            let opts = AdaptOptions { grad_tol, energy_tol, max_iters, bfgs: BfgsOptions::default(), method };
            adapt_cmd(&fcidump, pool, &opts, verbose, &out)
        }
    }
}

/// Fails early if the output file cannot be created.
fn check_out(out: &Option<PathBuf>) -> Outcome {
    if let Some(p) = out {
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_argmax(pts: &[(f64, f64)]) {
    if let Some((t, v)) = argmax(pts) {
        eprintln!("max {} at theta {}", fmt_f64(v), fmt_f64(t));
    }
}

fn generator_on(a: &GeneratorArgs) -> Result<(SpinAdaptedGenerator, Arc<FockBasis>), Failure> {
    let g = parse_generator(&a.generator)?;
    if g.max_spatial() >= a.n_spatial {
        return Err(Failure::Usage(format!(
            "{} touches spatial orbital {} but --n-spatial is {}",
            a.generator,
            g.max_spatial(),
            a.n_spatial
        )));
    }
    if a.n_spatial > 8 {
        return Err(Failure::Usage(format!("--n-spatial {} exceeds 8 (full Fock space of 2^16)", a.n_spatial)));
    }
    Ok((g, Arc::new(FockBasis::full(a.n_spatial)?)))
}

fn trotterizer_for(g: &SpinAdaptedGenerator, order: u8, basis: &FockBasis) -> Result<Trotterizer, Failure> {
    let terms = term_split(g)?;
    let mats: Vec<_> = terms.iter().map(|t| matrix_on(t, basis)).collect();
    Ok(Trotterizer::new(TrotterScheme::new(order, mats.len())?, &mats)?)
}

fn trotter_setup(a: &TrotterArgs) -> Result<(SpectralExp, Trotterizer, Arc<FockBasis>), Failure> {
    let (g, basis) = generator_on(&a.target)?;
    let trot = trotterizer_for(&g, a.order, &basis)?;
    let exact = SpectralExp::new(&matrix_on(&g.body, &basis), None)?;
    Ok((exact, trot, basis))
}

fn read_fcidump(path: &PathBuf) -> Result<spinadapt::fcidump::MolecularHamiltonian, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("no such FCIDUMP file: {}", path.display())));
    }
    Ok(parse_fcidump(path)?)
}

fn pool_stats_cmd(path: &PathBuf, out: &Option<PathBuf>) -> Outcome {
    let ham = read_fcidump(path)?;
    let rows = pool_stats(ham.n_spatial, ham.n_up(), ham.n_down(), &ham.orb_irreps)?;
    let mut text = String::from("symmetry,operators,unique_up_to_sign,hilbert_dim\n");
    for r in rows {
        let _ = writeln!(text, "{},{},{},{}", r.label, r.operators, r.unique_up_to_sign, r.hilbert_dim);
    }
    emit(out, &text)
}

fn periodicity_cmd(
    target: &GeneratorArgs,
    order: Option<u8>,
    d_max: u64,
    tol: f64,
    expect: Option<Expect>,
    want_period: Option<f64>,
    out: &Option<PathBuf>,
) -> Outcome {
    if !(tol > 0.0 && tol.is_finite()) || d_max == 0 {
        return Err(Failure::Usage("--tol must be positive and --d-max at least 1".into()));
    }
    let (g, basis) = generator_on(target)?;
    let mut text = format!("generator {}\n", g.label());
    let period = match order {
        None => {
            let exact = SpectralExp::new(&matrix_on(&g.body, &basis), None)?;
            let rep = periodicity_test(&exact, d_max, tol);
            let mut eig = rep.eigenvalues.clone();
            eig.sort_by(f64::total_cmp);
            eig.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
            let _ = writeln!(text, "eigenvalues_imag {}", list(&eig));
            let _ = writeln!(text, "frequencies {}", list(&rep.frequencies));
            for c in &rep.certificates {
                let _ = writeln!(text, "ratio {} ~ {}/{} residual {:.3e}", fmt_f64(c.ratio), c.p, c.q, c.residual);
            }
            match rep.verdict {
                Verdict::Periodic { period } => Some(period),
                Verdict::Degenerate => Some(0.0),
                Verdict::NotPeriodic => None,
                Verdict::Inconclusive => {
                    let _ = writeln!(text, "verdict inconclusive");
                    emit(out, &text)?;
                    return Err(Failure::Verify("periodicity verdict is inconclusive".into()));
                }
            }
        }
        Some(n) => {
            let trot = trotterizer_for(&g, n, &basis)?;
            let _ = writeln!(text, "product formula order {n}");
            let period = product_period(&trot, d_max, tol);
            if let Some(t) = period.filter(|t| *t > 0.0) {
                let drift = [0.37, 1.91, 4.2]
                    .iter()
                    .map(|&th| trot.product(th).distance(&trot.product(th + t)))
                    .fold(0.0, f64::max);
                let _ = writeln!(text, "max ||U(theta + T) - U(theta)||_F {}", fmt_f64(drift));
                if drift > 1e-10 {
                    emit(out, &text)?;
                    return Err(Failure::Verify(format!("product is not periodic with T = {t}: drift {drift:e}")));
                }
            }
            period
        }
    };
    match period {
        Some(t) => {
            let _ = writeln!(text, "verdict periodic period {} ({} pi)", fmt_f64(t), fmt_f64(t / PI));
        }
        None => {
            let _ = writeln!(text, "verdict not_periodic");
        }
    }
    emit(out, &text)?;
    match (expect, period) {
        (Some(Expect::Periodic), None) => return Err(Failure::Verify("expected a periodic unitary".into())),
        (Some(Expect::NotPeriodic), Some(t)) => {
            return Err(Failure::Verify(format!("expected no period, found {t}")))
        }
        _ => {}
    }
    if let Some(w) = want_period {
        match period {
            Some(t) if (t - w).abs() <= 1e-9 => {}
            p => return Err(Failure::Verify(format!("expected period {w}, found {p:?}"))),
        }
    }
    Ok(())
}

struct Case {
    which: Which,
    name: &'static str,
    idx: Vec<usize>,
}

fn random_distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = Vec::with_capacity(k);
    while v.len() < k {
        let x = rng.gen_range(0..n);
        if !v.contains(&x) {
            v.push(x);
        }
    }
    v
}

fn verify_cases(a: &VerifyArgs, rng: &mut ChaCha8Rng) -> Result<Vec<Case>, Failure> {
    let kinds: Vec<Which> = if a.which == Which::All {
        vec![
            Which::Eq26,
            Which::Eq30,
            Which::Eq31,
            Which::Eq32,
            Which::SmS9,
            Which::SmS10,
            Which::Trot1,
            Which::Trot1St,
            Which::Trot2,
        ]
    } else {
        vec![a.which]
    };
    let n = a.n_spatial;
    let mut cases = Vec::new();
    for w in kinds {
        let k = w.arity();
        let width = if w == Which::Eq26 { 2 * n } else { n };
        if width < k {
            return Err(Failure::Usage(format!("{} needs {k} distinct orbitals, --n-spatial is {n}", w.name())));
        }
        match a.random_tuples {
            Some(m) => {
                for _ in 0..m {
                    cases.push(Case { which: w, name: w.name(), idx: random_distinct(rng, width, k) });
                }
            }
            None => {
                let given: Vec<usize> = [a.p, a.q, a.r, a.s].into_iter().flatten().collect();
                let idx = if given.is_empty() {
                    match w {
                        Which::Eq26 => vec![0, 1, 4, 5],
                        Which::SmS9 | Which::SmS10 => vec![0, 1, 2, 3],
                        _ => vec![1, 3, 5],
                    }
                } else {
                    given.into_iter().take(k).collect()
                };
                if idx.len() != k && !(w == Which::Eq26 && idx.len() == 2) {
                    return Err(Failure::Usage(format!("{} takes {k} indices", w.name())));
                }
                if idx.iter().any(|&i| i >= width) {
                    return Err(Failure::Usage(format!("index out of range for --n-spatial {n}")));
                }
                cases.push(Case { which: w, name: w.name(), idx });
            }
        }
    }
    Ok(cases)
}

fn verify_cmd(a: &VerifyArgs) -> Outcome {
    if a.n_spatial > 7 {
        return Err(Failure::Usage(format!("--n-spatial {} exceeds 7", a.n_spatial)));
    }
    if a.n_theta == 0 {
        return Err(Failure::Usage("--n-theta must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let cases = verify_cases(a, &mut rng)?;
    let thetas: Vec<f64> = (0..a.n_theta).map(|_| rng.gen_range(0.0..4.0 * PI)).collect();
    let basis = Arc::new(FockBasis::full(a.n_spatial)?);
    let mut text = String::from("form,indices,n_theta,max_error\n");
    let mut worst: Vec<String> = Vec::new();
    let mut taylor_done = !a.taylor;
    for case in &cases {
        let product = case.which.is_product();
        let tol = a.tol.unwrap_or(if product { 1e-10 } else { 1e-9 });
        let err = if product {
            let forms = trotter::trot_closed_forms(case.idx[0], case.idx[1], case.idx[2])?;
            let (spec, order) = match case.name {
                "trot1" => (forms.trot1, 1),
                "trot1_st" => (forms.trot1_st, 1),
                _ => (forms.trot2, 2),
            };
            let trot = ppqr_trotterizer(case.idx[0], case.idx[1], case.idx[2], order, &basis)?;
            let m = spec.materialize(&basis);
            max_over(&thetas, |t| m.eval(t).matrix.distance(&trot.product(t)))
        } else {
            let spec = expm::builtin(case.name, &case.idx)?;
            let g = expm::builtin_generator(case.name, &case.idx)?;
            let gm = matrix_on(&g, &basis);
            let exact = SpectralExp::new(&gm, None)?;
            if !taylor_done {
                let d = taylor_check(&gm, &exact, 1.3);
                let _ = writeln!(text, "taylor40,{},1,{}", join(&case.idx), fmt_f64(d));
                if d > tol {
                    worst.push(format!("spectral vs Taylor: {d:e}"));
                }
                taylor_done = true;
            }
            let m = spec.materialize(&basis);
            max_over(&thetas, |t| m.eval(t).matrix.distance(&exact.exp(t)))
        };
        let _ = writeln!(text, "{},{},{},{}", case.name, join(&case.idx), thetas.len(), fmt_f64(err));
        if !(err <= tol) {
            worst.push(format!("{}({}) error {err:e} > {tol:e}", case.name, join(&case.idx)));
        }
    }
    emit(&a.out, &text)?;
    if worst.is_empty() {
        eprintln!("{} case(s) verified", cases.len());
        Ok(())
    } else {
        Err(Failure::Verify(worst.join("; ")))
    }
}

fn max_over(thetas: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    thetas.par_iter().map(|&t| f(t)).collect::<Vec<_>>().into_iter().fold(0.0, f64::max)
}

fn join(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// Spectral exponential against a 40-term Taylor series on each connected
/// block of the generator; elsewhere the exponential must be the identity.
fn taylor_check(g: &spinadapt::sparse::SparseMatrix, exact: &SpectralExp, theta: f64) -> f64 {
    let u = exact.exp(theta);
    let mut block_of = vec![usize::MAX; u.nrows()];
    let mut err2 = 0.0;
    for (k, comp) in g.connected_components().iter().enumerate() {
        if comp.len() < 2 {
            continue;
        }
        comp.iter().for_each(|&i| block_of[i] = k);
        let taylor = expm::taylor_expm(&g.dense_block(comp), theta, 40);
        for (i, &r) in comp.iter().enumerate() {
            for (j, &c) in comp.iter().enumerate() {
                err2 += (u.get(r, c) - taylor[(i, j)]).norm_sqr();
            }
        }
    }
    let id = spinadapt::sparse::SparseMatrix::identity(u.nrows());
    for (r, c, v) in u.sub(&id).iter() {
        if block_of[r] == usize::MAX || block_of[r] != block_of[c] {
            err2 += v.norm_sqr();
        }
    }
    err2.sqrt()
}

fn jw_cmd(target: &GeneratorArgs, lcu: bool, theta: f64, verify: bool, out: &Option<PathBuf>) -> Outcome {
    let (g, basis) = generator_on(target)?;
    let n_qubits = basis.n_spinorbitals();
    let (paulis, fermionic) = if lcu {
        if !theta.is_finite() {
            return Err(Failure::Usage("--theta must be finite".into()));
        }
        let exact = SpectralExp::new(&matrix_on(&g.body, &basis), None)?;
        let u = SectorMatrix::new(basis.clone(), exact.exp(theta));
        (lcu_decompose(&u)?, u.matrix)
    } else {
        (jordan_wigner(&g.body, n_qubits), matrix_on(&g.body, &basis))
    };
    emit(out, &paulis.to_text())?;
    if verify {
        let d = paulis.matrix().distance(&fermionic);
        eprintln!("||pauli - fermionic||_F {}", fmt_f64(d));
        if d > 1e-12 {
            return Err(Failure::Verify(format!("Pauli matrix differs from the fermionic one by {d:e}")));
        }
    }
    Ok(())
}

fn adapt_cmd(path: &PathBuf, kind: PoolKind, opts: &AdaptOptions, verbose: bool, out: &Option<PathBuf>) -> Outcome {
    let ham = read_fcidump(path)?;
    let basis = adaptvqe::sector_basis(&ham)?;
    let h = adaptvqe::build_hamiltonian(&ham, &basis);
    let mut sym = vec![Symmetry::Sz, Symmetry::PointGroup];
    if kind == PoolKind::Sagsd {
        sym.push(Symmetry::S2);
    }
    let pool = build_pool(&PoolSpec::new(ham.n_spatial, Some(ham.orb_irreps.clone()), &sym))?;
    let pool = CompiledPool::new(pool, &basis)?;
    eprintln!("sector dimension {}, pool size {}", basis.len(), pool.len());
    let result = adaptvqe::adapt_vqe_with(&h, &pool, ham.reference(), opts, |s| {
        if verbose {
            eprintln!(
                "iter {:4} params {:4} energy {} error {:.3e} max_grad {:.3e}",
                s.iter,
                s.n_params,
                fmt_f64(s.energy),
                s.error_vs_fci,
                s.max_grad
            );
        }
    })?;
    emit(out, &result.to_csv())?;
    let last = result.final_step();
    eprintln!(
        "{:?}: {} parameters, energy {}, fci {}, error {:.3e}",
        result.termination,
        last.n_params,
        fmt_f64(last.energy),
        fmt_f64(result.fci_energy),
        last.error_vs_fci
    );
    for tol in [1.6e-3, 1e-9] {
        match result.params_to_reach(tol) {
            Some(n) => eprintln!("error <= {tol:e} reached with {n} parameters"),
            None => eprintln!("error <= {tol:e} not reached"),
        }
    }
    Ok(())
}
