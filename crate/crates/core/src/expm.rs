//! Exact exponentials of anti-Hermitian generators, closed-form unitaries and
//! periodicity analysis.
//!
//! [`SpectralExp`] diagonalizes `iG` once per connected component of the
//! generator's sparsity graph; every later `exp(θG)` is a cheap phase update.
//! Components refine the (N, Sz) blocks, so block leakage is checked first.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fermiops::{
    excitation, hole, number, numbers, OperatorSum, SectorMatrix,
};
use crate::fock::{FockBasis, Spin, SpinOrbital};
use crate::sparse::SparseMatrix;
use crate::spinadapt::{ppqr_pieces, singlet_double_cg};
use crate::trig::{ccos, csin, konst, Surd, Trig};

/// Tolerance on `||G + G^dagger||_F`.
pub const ANTI_HERMITIAN_TOL: f64 = 1e-12;
pub const DEFAULT_D_MAX: u64 = 1_000_000;
pub const DEFAULT_RATIONAL_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone)]
struct EigBlock {
    idx: Vec<usize>,
    /// Columns are eigenvectors of `iG` restricted to `idx`.
    vecs: DMatrix<Complex64>,
    vals: Vec<f64>,
}

impl EigBlock {
    fn unitary(&self, theta: f64) -> DMatrix<Complex64> {
        let mut scaled = self.vecs.clone();
        for (k, &l) in self.vals.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, -theta * l);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= ph);
        }
        scaled * self.vecs.adjoint()
    }
}

/// Cached spectral decomposition of an anti-Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralExp {
    dim: usize,
    blocks: Vec<EigBlock>,
}

impl SpectralExp {
    /// `blocks`, when given, must partition `0..dim` into sets that `g` maps
    /// into themselves.
    pub fn new(g: &SparseMatrix, blocks: Option<&[Vec<usize>]>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::Dimension(format!("generator is {}x{}", g.nrows(), g.ncols())));
        }
        let dim = g.nrows();
        let defect = g.anti_hermiticity_defect();
        if defect >= ANTI_HERMITIAN_TOL {
            return Err(Error::NotAntiHermitian(defect));
        }
        if let Some(blocks) = blocks {
            check_blocks(g, blocks)?;
        }
        let comps: Vec<Vec<usize>> = g
            .connected_components()
            .into_iter()
            .filter(|c| c.iter().any(|&i| g.row(i).next().is_some()))
            .collect();
        let blocks = comps
            .into_par_iter()
            .map(|idx| {
                let h = g.dense_block(&idx).map(|z| z * Complex64::i());
                let n = idx.len();
                let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 10_000 * n.max(1)).ok_or_else(|| {
                    Error::Eigen { what: format!("block of size {n} did not converge"), residual: f64::NAN }
                })?;
                let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
                let vecs = eig.eigenvectors;
                let lam = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l, 0.0)));
                let residual = (&h * &vecs - &vecs * lam).norm();
                if residual > 1e-11 * (1.0 + h.norm()) {
                    return Err(Error::Eigen { what: format!("block of size {n}"), residual });
                }
                Ok(EigBlock { idx, vecs, vals })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sizes of the non-trivial blocks that were diagonalized.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.idx.len()).collect()
    }

    /// Imaginary parts of the eigenvalues of `G` (one per basis state).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim - self.blocks.iter().map(|b| b.idx.len()).sum::<usize>()];
        for b in &self.blocks {
            out.extend(b.vals.iter().map(|l| -l));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn exp(&self, theta: f64) -> SparseMatrix {
        let mut covered = vec![false; self.dim];
        let mut trip = Vec::new();
        for b in &self.blocks {
            let u = b.unitary(theta);
            for (kr, &r) in b.idx.iter().enumerate() {
                covered[r] = true;
                for (kc, &c) in b.idx.iter().enumerate() {
                    let v = u[(kr, kc)];
                    if v.norm() > 1e-300 {
                        trip.push((r, c, v));
                    }
                }
            }
        }
        trip.extend((0..self.dim).filter(|&i| !covered[i]).map(|i| (i, i, ONE)));
        SparseMatrix::from_triplets(self.dim, self.dim, trip)
    }

    /// `exp(θG) x` without forming the matrix.
    pub fn apply(&self, theta: f64, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        let mut y = x.to_vec();
        for b in &self.blocks {
            // y_b = V e^{-iθΛ} V^dagger x_b
            let coeffs: Vec<Complex64> = (0..b.vals.len())
                .map(|k| {
                    let dot: Complex64 = b.idx.iter().enumerate().map(|(r, &i)| b.vecs[(r, k)].conj() * x[i]).sum();
                    dot * Complex64::from_polar(1.0, -theta * b.vals[k])
                })
                .collect();
            for (r, &i) in b.idx.iter().enumerate() {
                y[i] = coeffs.iter().enumerate().map(|(k, c)| b.vecs[(r, k)] * c).sum();
            }
        }
        y
    }

    /// `||I - exp(θG)||_F`, evaluated from the spectrum (unitary invariance).
    pub fn identity_distance(&self, theta: f64) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.vals.iter())
            .map(|&l| (ONE - Complex64::from_polar(1.0, -theta * l)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_blocks(g: &SparseMatrix, blocks: &[Vec<usize>]) -> Result<()> {
    let n = g.nrows();
    let mut owner = vec![usize::MAX; n];
    for (b, idx) in blocks.iter().enumerate() {
        for &i in idx {
            if i >= n || owner[i] != usize::MAX {
                return Err(Error::Config(format!("blocks do not partition 0..{n} (index {i})")));
            }
            owner[i] = b;
        }
    }
    if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::Config(format!("index {i} is in no block")));
    }
    if let Some((r, c, v)) = g.iter().find(|&(r, c, _)| owner[r] != owner[c]) {
        return Err(Error::Leakage(format!(
            "entry ({r}, {c}) = {v} couples block {} to block {}",
            owner[c], owner[r]
        )));
    }
    Ok(())
}

/// `exp(θG)` assembled blockwise; the blocks default to the (N, Sz) sectors of
/// the basis.
pub fn exact_expm(theta: f64, g: &SectorMatrix, blocks: Option<&[Vec<usize>]>) -> Result<SectorMatrix> {
    let default;
    let blocks = match blocks {
        Some(b) => b,
        None => {
            default = g.basis.n_sz_blocks();
            &default
        }
    };
    let sp = SpectralExp::new(&g.matrix, Some(blocks))?;
    Ok(SectorMatrix::new(g.basis.clone(), sp.exp(theta)))
}

// ---------------------------------------------------------------------------
// Closed forms.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Spinorbital,
    SpinAdapted,
    Power,
}

/// Singlet-adapted versus symmetry-breaking contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermTag {
    Singlet,
    Breaking,
}

#[derive(Debug, Clone)]
pub enum OpTerm {
    Operator(OperatorSum),
    /// `generator^k`, materialized by repeated sparse multiplication.
    Power { generator: OperatorSum, k: usize },
}

#[derive(Debug, Clone)]
pub struct ClosedFormTerm {
    pub coeff: Trig,
    pub op: OpTerm,
    pub tag: Option<TermTag>,
}

#[derive(Debug, Clone)]
pub struct ClosedFormSpec {
    pub name: String,
    pub form: Form,
    pub terms: Vec<ClosedFormTerm>,
}

impl ClosedFormSpec {
    pub fn new(name: impl Into<String>, form: Form) -> Self {
        Self { name: name.into(), form, terms: Vec::new() }
    }

    pub fn term(mut self, coeff: Trig, op: OperatorSum) -> Self {
        self.terms.push(ClosedFormTerm { coeff, op: OpTerm::Operator(op), tag: None });
        self
    }

    pub fn tagged(mut self, coeff: Trig, op: OperatorSum, tag: TermTag) -> Self {
        self.terms.push(ClosedFormTerm { coeff, op: OpTerm::Operator(op), tag: Some(tag) });
        self
    }

    pub fn power(mut self, coeff: Trig, generator: &OperatorSum, k: usize) -> Self {
        self.terms.push(ClosedFormTerm {
            coeff,
            op: OpTerm::Power { generator: generator.clone(), k },
            tag: None,
        });
        self
    }

    /// Highest generator power among the terms.
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| match t.op {
                OpTerm::Power { k, .. } => k,
                OpTerm::Operator(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms
            .iter()
            .filter_map(|t| match &t.op {
                OpTerm::Operator(o) => o.max_index(),
                OpTerm::Power { generator, .. } => generator.max_index(),
            })
            .max()
    }

    pub fn materialize(&self, basis: &Arc<FockBasis>) -> MaterializedForm {
        let mut powers: Vec<(u64, Vec<SparseMatrix>)> = Vec::new();
        let mut mats = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let m = match &t.op {
                OpTerm::Operator(o) => crate::fermiops::matrix_on(o, basis),
                OpTerm::Power { generator, k } => {
                    let fp = generator.fingerprint();
                    let pos = match powers.iter().position(|(f, _)| *f == fp) {
                        Some(p) => p,
                        None => {
                            let g = crate::fermiops::matrix_on(generator, basis);
                            powers.push((fp, vec![SparseMatrix::identity(basis.len()), g]));
                            powers.len() - 1
                        }
                    };
                    let list = &mut powers[pos].1;
                    while list.len() <= *k {
                        let next = list[list.len() - 1].mul(&list[1]);
                        list.push(next);
                    }
                    list[*k].clone()
                }
            };
            mats.push((t.coeff.clone(), m, t.tag));
        }
        MaterializedForm { basis: basis.clone(), terms: mats }
    }
}

/// A closed form with its operator terms already turned into matrices.
#[derive(Debug, Clone)]
pub struct MaterializedForm {
    basis: Arc<FockBasis>,
    terms: Vec<(Trig, SparseMatrix, Option<TermTag>)>,
}

impl MaterializedForm {
    pub fn eval(&self, theta: f64) -> SectorMatrix {
        self.eval_filtered(theta, |_| true)
    }

    /// Sum over the terms carrying `tag` only.
    pub fn eval_tag(&self, theta: f64, tag: TermTag) -> SectorMatrix {
        self.eval_filtered(theta, |t| t == Some(tag))
    }

    fn eval_filtered(&self, theta: f64, keep: impl Fn(Option<TermTag>) -> bool) -> SectorMatrix {
        let n = self.basis.len();
        let mut acc = SparseMatrix::zeros(n, n);
        for (c, m, tag) in &self.terms {
            if keep(*tag) {
                acc = acc.add_scaled(m, Complex64::new(c.eval(theta), 0.0));
            }
        }
        SectorMatrix::new(self.basis.clone(), acc)
    }

    /// `Σ_k f_k(θ) M_k x` without forming the sum.
    pub fn apply(&self, theta: f64, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; x.len()];
        for (c, m, _) in &self.terms {
            let f = c.eval(theta);
            if f != 0.0 {
                for (yi, v) in y.iter_mut().zip(m.matvec(x)) {
                    *yi += v * f;
                }
            }
        }
        y
    }
}

pub fn closed_form_eval(spec: &ClosedFormSpec, theta: f64, basis: &Arc<FockBasis>) -> SectorMatrix {
    spec.materialize(basis).eval(theta)
}

/// Power-series evaluation `Σ_k f_k(θ) G^k x` by repeated matvecs; `terms`
/// must be a power form whose generator matrix is `g`.
pub fn apply_power_form(spec: &ClosedFormSpec, g: &SparseMatrix, theta: f64, x: &[Complex64]) -> Vec<Complex64> {
    let deg = spec.degree();
    let mut coeff = vec![0.0; deg + 1];
    for t in &spec.terms {
        let k = match t.op {
            OpTerm::Power { k, .. } => k,
            OpTerm::Operator(_) => 0,
        };
        coeff[k] += t.coeff.eval(theta);
    }
    let mut y: Vec<Complex64> = x.iter().map(|v| v * coeff[0]).collect();
    let mut v = x.to_vec();
    for c in coeff.iter().skip(1) {
        v = g.matvec(&v);
        for (yi, vi) in y.iter_mut().zip(&v) {
            *yi += vi * c;
        }
    }
    y
}

// --- operator shorthands over spatial orbitals -----------------------------

fn up(p: usize) -> usize {
    SpinOrbital::new(p, Spin::Up).flat()
}

fn dn(p: usize) -> usize {
    SpinOrbital::new(p, Spin::Down).flat()
}

/// `n̄_{p1} n̄_{p2} ...`.
fn holes_of(indices: &[usize]) -> OperatorSum {
    indices.iter().fold(OperatorSum::identity(), |acc, &p| &acc * &hole(p))
}

fn s(num: i64, den: i64) -> Surd {
    Surd::rat(num, den)
}

fn one() -> Trig {
    Trig::one()
}

/// Operator pieces shared by the `A_{PP}^{QR}` closed forms.
pub(crate) struct PpqrParts {
    pub a1: OperatorSum,
    pub a2: OperatorSum,
    pub n_pp: OperatorSum,
    pub nb_pp: OperatorSum,
    pub n_qu_rd: OperatorSum,
    pub n_qd_ru: OperatorSum,
    pub nb_qu_rd: OperatorSum,
    pub nb_qd_ru: OperatorSum,
    pub n_qqrr: OperatorSum,
    pub nb_qqrr: OperatorSum,
    /// `a_{Q↑R↓}^{Q↓R↑}`
    pub flip: OperatorSum,
    /// `a_{Q↓R↑}^{Q↑R↓}`
    pub flop: OperatorSum,
}

impl PpqrParts {
    pub fn new(p: usize, q: usize, r: usize) -> Self {
        let (a1, a2) = ppqr_pieces(p, q, r);
        Self {
            a1,
            a2,
            n_pp: numbers(&[up(p), dn(p)]),
            nb_pp: holes_of(&[up(p), dn(p)]),
            n_qu_rd: numbers(&[up(q), dn(r)]),
            n_qd_ru: numbers(&[dn(q), up(r)]),
            nb_qu_rd: holes_of(&[up(q), dn(r)]),
            nb_qd_ru: holes_of(&[dn(q), up(r)]),
            n_qqrr: numbers(&[up(q), dn(q), up(r), dn(r)]),
            nb_qqrr: holes_of(&[up(q), dn(q), up(r), dn(r)]),
            flip: excitation(&[up(q), dn(r)], &[dn(q), up(r)]),
            flop: excitation(&[dn(q), up(r)], &[up(q), dn(r)]),
        }
    }
}

fn check_ppqr(p: usize, q: usize, r: usize) -> Result<()> {
    if q == r || p == q || p == r {
        return Err(Error::Config(format!("A_PP^QR closed forms need distinct P, Q, R; got ({p},{q},{r})")));
    }
    Ok(())
}

/// `e^{θA} = I + sin θ A + (1 − cos θ) A²` for `A = F − F†` with `F` a single
/// product of ladder and number operators.
pub fn eq26(a: &OperatorSum) -> ClosedFormSpec {
    ClosedFormSpec::new("eq26", Form::Power)
        .term(one(), OperatorSum::identity())
        .power(Trig::sin(Surd::ONE), a, 1)
        .power(one() - Trig::cos(Surd::ONE), a, 2)
}

/// `A_{PP}^{QR}` unitary in spinorbital operators.
pub fn eq30(p: usize, q: usize, r: usize) -> Result<ClosedFormSpec> {
    check_ppqr(p, q, r)?;
    let x = PpqrParts::new(p, q, r);
    let k = Surd::over_r2(1, 1);
    let d = &x.a1 - &x.a2;
    let ff = &x.flip + &x.flop;
    let t3 = &(&(&(&x.nb_qu_rd + &x.nb_qd_ru) - &ff) * &x.n_pp) + &(&(&(&x.n_qu_rd + &x.n_qd_ru) - &ff) * &x.nb_pp);
    let paired = &(&x.nb_qd_ru + &x.n_qd_ru) * &(&x.nb_qu_rd + &x.n_qu_rd);
    let t4 = &d * &paired;
    let mixed = &(&(&(&x.nb_qu_rd * &x.n_qd_ru) + &(&x.nb_qd_ru * &x.n_qu_rd)) - &ff);
    let t5 = &(&(&x.nb_pp * &x.n_qqrr) + &(&x.nb_qqrr * &x.n_pp)) + &(&(&x.nb_pp + &x.n_pp) * mixed).scale(0.5);
    Ok(ClosedFormSpec::new("eq30", Form::Spinorbital)
        .term(one(), OperatorSum::identity())
        .term(Trig::sin(k), d)
        .term(Trig::cos(k) - one(), t3)
        .term(csin(k, Surd::ONE) - Trig::sin(k), t4)
        .term(Trig::cos(Surd::ONE) - ccos(s(2, 1), k) + one(), t5))
}

/// `A_{PP}^{QR}` unitary in singlet spin-adapted operators.
///
/// The spatial double `^{[0]}a^{QR}_{QR}` enters with a factor 1/2 relative
/// to the plain sum of its four spinorbital strings; without it the form does
/// not reproduce the exponential.
pub fn eq31(p: usize, q: usize, r: usize) -> Result<ClosedFormSpec> {
    check_ppqr(p, q, r)?;
    let x = PpqrParts::new(p, q, r);
    let k = Surd::over_r2(1, 1);
    let r2 = std::f64::consts::SQRT_2;
    let sa = (&x.a1 - &x.a2).scale(1.0 / r2);
    let a_qq = (&number(dn(q)) + &number(up(q))).scale(1.0 / r2);
    let a_rr = (&number(dn(r)) + &number(up(r))).scale(1.0 / r2);
    let a0 = (&(&(&x.n_qu_rd - &x.flip) - &x.flop) + &x.n_qd_ru).scale(0.5);
    let id = OperatorSum::identity();
    let inner = &(&(&id.scale(2.0) - &a_qq.scale(r2)) - &a_rr.scale(r2)) + &a0.scale(2.0);
    let m = &(&inner * &x.n_pp) + &(&a0.scale(2.0) * &x.nb_pp);
    let n_qq = numbers(&[up(q), dn(q)]);
    let n_rr = numbers(&[up(r), dn(r)]);
    let last_inner = &(&(&x.n_qqrr.scale(2.0) - &(&n_qq * &a_rr).scale(r2)) - &(&n_rr * &a_qq).scale(r2))
        + &a0.scale(2.0);
    let t5 = &(&(&x.nb_pp * &x.n_qqrr) + &(&x.nb_qqrr * &x.n_pp)) + &(&(&x.nb_pp + &x.n_pp) * &last_inner).scale(0.5);
    let t4 = &sa * &(&m - &id);
    Ok(ClosedFormSpec::new("eq31", Form::SpinAdapted)
        .term(one(), id.clone())
        .term(csin(Surd::r2(1, 1), k), sa.clone())
        .term(Trig::cos(k) - one(), m)
        .term(Trig::sin(Surd::ONE) - csin(Surd::r2(1, 1), k), t4)
        .term(Trig::cos(Surd::ONE) - ccos(s(2, 1), k) + one(), t5))
}

/// `A_{PP}^{QR}` unitary as a quartic in the generator.
pub fn eq32(p: usize, q: usize, r: usize) -> Result<ClosedFormSpec> {
    check_ppqr(p, q, r)?;
    let (a1, a2) = ppqr_pieces(p, q, r);
    let g = (&a1 - &a2).scale(std::f64::consts::FRAC_1_SQRT_2);
    Ok(power_form_ppqr(&g))
}

/// Quartic form valid for any generator with the spectrum of `A_{PP}^{QR}`.
pub fn power_form_ppqr(g: &OperatorSum) -> ClosedFormSpec {
    let k = Surd::over_r2(1, 1);
    let cos1 = Trig::cos(Surd::ONE);
    let sin1 = Trig::sin(Surd::ONE);
    ClosedFormSpec::new("eq32", Form::Power)
        .term(one(), OperatorSum::identity())
        .power(csin(Surd::r2(2, 1), k) - sin1.clone(), g, 1)
        .power(cos1.clone() - ccos(s(4, 1), k) + konst(s(3, 1)), g, 2)
        .power((sin1 - csin(Surd::r2(1, 1), k)).scaled(s(-2, 1)), g, 3)
        .power((cos1 - ccos(s(2, 1), k) + one()).scaled(s(2, 1)), g, 4)
}

fn poly(g: &OperatorSum, name: &str, coeffs: Vec<Trig>) -> ClosedFormSpec {
    let mut spec = ClosedFormSpec::new(name, Form::Power).term(one(), OperatorSum::identity());
    for (k, c) in coeffs.into_iter().enumerate() {
        spec = spec.power(c, g, k + 1);
    }
    spec
}

fn sum(v: Vec<Trig>) -> Trig {
    Trig::Sum(v)
}

/// `exp(θ ^{[0]}A_{PQ}^{RS})` as a degree-8 polynomial in the generator.
pub fn sm_s9(p: usize, q: usize, r: usize, s_: usize) -> Result<ClosedFormSpec> {
    let g = singlet_double_cg(p, q, r, s_, 0)?.body;
    let half = s(1, 2);
    let ir2 = Surd::over_r2(1, 1);
    let r2 = Surd::r2(1, 1);
    let one_ = Surd::ONE;
    let sn = |c: Surd, k: Surd| csin(c, k);
    let cs = |c: Surd, k: Surd| ccos(c, k);
    let coeffs = vec![
        sum(vec![sn(s(128, 21), half), sn(Surd::r2(-8, 3), ir2), sn(s(2, 3), one_), sn(Surd::r2(-1, 42), r2)]),
        sum(vec![cs(s(-256, 21), half), cs(s(16, 3), ir2), cs(s(-2, 3), one_), cs(s(1, 42), r2), konst(s(15, 2))]),
        sum(vec![sn(s(64, 3), half), sn(Surd::r2(-44, 3), ir2), sn(s(13, 3), one_), sn(Surd::r2(-1, 6), r2)]),
        sum(vec![cs(s(-128, 3), half), cs(s(88, 3), ir2), cs(s(-13, 3), one_), cs(s(1, 6), r2), konst(s(35, 2))]),
        sum(vec![sn(s(64, 3), half), sn(Surd::r2(-52, 3), ir2), sn(s(22, 3), one_), sn(Surd::r2(-1, 3), r2)]),
        sum(vec![cs(s(-128, 3), half), cs(s(104, 3), ir2), cs(s(-22, 3), one_), cs(s(1, 3), r2), konst(s(15, 1))]),
        sum(vec![sn(s(128, 21), half), sn(Surd::r2(-16, 3), ir2), sn(s(8, 3), one_), sn(Surd::r2(-4, 21), r2)]),
        sum(vec![cs(s(-256, 21), half), cs(s(32, 3), ir2), cs(s(-8, 3), one_), cs(s(4, 21), r2), konst(s(4, 1))]),
    ];
    Ok(poly(&g, "sm_s9", coeffs))
}

/// `exp(θ ^{[1]}A_{PQ}^{RS})` as a degree-10 polynomial in the generator.
pub fn sm_s10(p: usize, q: usize, r: usize, s_: usize) -> Result<ClosedFormSpec> {
    let g = singlet_double_cg(p, q, r, s_, 1)?.body;
    // frequencies
    let w1 = Surd::r3(1, 2); // √3/2
    let w2 = Surd::over_r3(1, 1); // 1/√3
    let w3 = Surd::over_r2(1, 1); // 1/√2
    let w4 = Surd::over_r3(1, 2); // 1/(2√3)
    let w5 = Surd::r2(1, 1); // √2
    let sn = |c: Surd, k: Surd| csin(c, k);
    let cs = |c: Surd, k: Surd| ccos(c, k);
    let coeffs = vec![
        sum(vec![
            sn(Surd::over_r3(-16, 25), w1),
            sn(Surd::r3(-54, 25), w2),
            sn(Surd::r2(8, 5), w3),
            sn(Surd::r3(432, 115), w4),
            sn(Surd::over_r2(1, 575), w5),
        ]),
        sum(vec![
            cs(s(32, 75), w1),
            cs(s(-16, 5), w3),
            cs(s(162, 25), w2),
            cs(s(-2592, 115), w4),
            cs(s(-1, 1150), w5),
            konst(s(113, 6)),
        ]),
        sum(vec![
            sn(Surd::over_r3(-56, 5), w1),
            sn(Surd::r3(-171, 5), w2),
            sn(Surd::r2(404, 15), w3),
            sn(Surd::r3(2952, 115), w4),
            sn(Surd::over_r2(11, 345), w5),
        ]),
        sum(vec![
            cs(s(112, 15), w1),
            cs(s(-11, 690), w5),
            cs(s(-808, 15), w3),
            cs(s(513, 5), w2),
            cs(s(-17712, 115), w4),
            konst(s(587, 6)),
        ]),
        sum(vec![
            sn(Surd::over_r3(-1192, 25), w1),
            sn(Surd::r3(-2718, 25), w2),
            sn(Surd::r2(133, 1725), w5),
            sn(Surd::r2(308, 3), w3),
            sn(Surd::r3(1368, 23), w4),
        ]),
        sum(vec![
            cs(s(2384, 75), w1),
            cs(s(-616, 3), w3),
            cs(s(8154, 25), w2),
            cs(s(-8208, 23), w4),
            cs(s(-133, 1725), w5),
            konst(s(613, 3)),
        ]),
        sum(vec![
            sn(Surd::r2(16, 115), w5),
            sn(Surd::r2(608, 5), w3),
            sn(Surd::r3(-112, 5), w1),
            sn(Surd::r3(-576, 5), w2),
            sn(Surd::r3(6192, 115), w4),
        ]),
        sum(vec![
            cs(s(224, 5), w1),
            cs(s(-16, 115), w5),
            cs(s(-1216, 5), w3),
            cs(s(1728, 5), w2),
            cs(s(-37152, 115), w4),
            konst(s(176, 1)),
        ]),
        sum(vec![
            sn(Surd::r2(48, 575), w5),
            sn(Surd::r2(192, 5), w3),
            sn(Surd::r3(-192, 25), w1),
            sn(Surd::r3(-864, 25), w2),
            sn(Surd::r3(1728, 115), w4),
        ]),
        sum(vec![
            cs(s(384, 25), w1),
            cs(s(-48, 575), w5),
            cs(s(-384, 5), w3),
            cs(s(2592, 25), w2),
            cs(s(-10368, 115), w4),
            konst(s(48, 1)),
        ]),
    ];
    Ok(poly(&g, "sm_s10", coeffs))
}

pub const BUILTIN_NAMES: [&str; 6] = ["eq26", "eq30", "eq31", "eq32", "sm_s9", "sm_s10"];

/// Looks up a built-in closed form.
///
/// `eq26` takes two or four flat spinorbital indices (`A_p^q` or
/// `A_{pq}^{rs}`); `eq30`/`eq31`/`eq32` take spatial `P, Q, R`; `sm_s9` and
/// `sm_s10` take spatial `P, Q, R, S`.
pub fn builtin(name: &str, idx: &[usize]) -> Result<ClosedFormSpec> {
    let want = |n: usize| -> Result<()> {
        if idx.len() != n {
            return Err(Error::Config(format!("{name} takes {n} indices, got {}", idx.len())));
        }
        Ok(())
    };
    match name {
        "eq26" => match idx.len() {
            2 => {
                if idx[0] == idx[1] {
                    return Err(Error::Degenerate("A_p^p is zero".into()));
                }
                Ok(eq26(&crate::fermiops::single(idx[0], idx[1])))
            }
            4 => {
                let a = crate::fermiops::double(idx[0], idx[1], idx[2], idx[3]);
                if a.is_zero() {
                    return Err(Error::Degenerate(format!("A_({},{})^({},{}) is zero", idx[0], idx[1], idx[2], idx[3])));
                }
                Ok(eq26(&a))
            }
            n => Err(Error::Config(format!("eq26 takes 2 or 4 indices, got {n}"))),
        },
        "eq30" => {
            want(3)?;
            eq30(idx[0], idx[1], idx[2])
        }
        "eq31" => {
            want(3)?;
            eq31(idx[0], idx[1], idx[2])
        }
        "eq32" => {
            want(3)?;
            eq32(idx[0], idx[1], idx[2])
        }
        "sm_s9" => {
            want(4)?;
            sm_s9(idx[0], idx[1], idx[2], idx[3])
        }
        "sm_s10" => {
            want(4)?;
            sm_s10(idx[0], idx[1], idx[2], idx[3])
        }
        _ => Err(Error::Config(format!("unknown closed form '{name}'"))),
    }
}

/// Generator whose exponential the built-in closed form represents.
pub fn builtin_generator(name: &str, idx: &[usize]) -> Result<OperatorSum> {
    let spec = builtin(name, idx)?;
    spec.terms
        .iter()
        .find_map(|t| match &t.op {
            OpTerm::Power { generator, .. } => Some(generator.clone()),
            _ => None,
        })
        .map(Ok)
        .unwrap_or_else(|| {
            let (a1, a2) = ppqr_pieces(idx[0], idx[1], idx[2]);
            Ok((&a1 - &a2).scale(std::f64::consts::FRAC_1_SQRT_2))
        })
}

// ---------------------------------------------------------------------------
// Periodicity.

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Periodic { period: f64 },
    NotPeriodic,
    /// Zero generator: every θ is a period.
    Degenerate,
    /// A ratio sits just outside the tolerance of a rational with an allowed
    /// denominator; no verdict is given.
    Inconclusive,
}

/// Best rational approximation `p/q` of a ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub ratio: f64,
    pub p: i64,
    pub q: u64,
    /// `|q·ratio − p|`
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct PeriodicityReport {
    /// Distinct positive frequencies `|λ|`, ascending.
    pub frequencies: Vec<f64>,
    /// Imaginary parts of all eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub certificates: Vec<Certificate>,
    pub verdict: Verdict,
}

/// Continued-fraction convergents of `x` with denominators up to `d_max`;
/// returns the one with the smallest `|q x − p|`.
pub fn best_rational(x: f64, d_max: u64) -> Certificate {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut frac = x;
    let mut best = Certificate { ratio: x, p: x.round() as i64, q: 1, residual: (x - x.round()).abs() };
    for _ in 0..64 {
        let a = frac.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > d_max as i128 || k2 <= 0 {
            break;
        }
        let residual = (k2 as f64 * x - h2 as f64).abs();
        if residual < best.residual || (residual == best.residual && (k2 as u64) < best.q) {
            best = Certificate { ratio: x, p: h2 as i64, q: k2 as u64, residual };
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let rem = frac - a;
        if rem < 1e-15 {
            break;
        }
        frac = 1.0 / rem;
    }
    best
}

pub(crate) fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Decides whether `exp(θG)` is periodic in θ from the ratios of the nonzero
/// eigenvalue moduli.
///
/// A ratio counts as rational when some convergent `p/q` with `q <= d_max`
/// gives `|q·r − p| <= tol`; a best residual within `(tol, 10·tol]` makes the
/// verdict inconclusive.
pub fn periodicity_test(spec: &SpectralExp, d_max: u64, tol: f64) -> PeriodicityReport {
    let eigenvalues = spec.eigenvalues();
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut freqs: Vec<f64> = eigenvalues.iter().map(|v| v.abs()).filter(|&v| v > 1e-9 * scale.max(1.0)).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.max(1.0));
    if freqs.is_empty() {
        return PeriodicityReport { frequencies: freqs, eigenvalues, certificates: Vec::new(), verdict: Verdict::Degenerate };
    }
    let base = freqs[0];
    let certificates: Vec<Certificate> = freqs.iter().map(|&f| best_rational(f / base, d_max)).collect();
    let worst = certificates.iter().map(|c| c.residual).fold(0.0, f64::max);
    let verdict = if worst <= tol {
        // ω_k = base·p_k/q_k; with L = lcm(q_k) the fundamental is base·gcd(p_k·L/q_k)/L
        let l = certificates.iter().fold(1u128, |acc, c| acc / gcd(acc, c.q as u128) * c.q as u128);
        let g = certificates.iter().fold(0u128, |acc, c| gcd(acc, c.p.unsigned_abs() as u128 * (l / c.q as u128)));
        let fundamental = base * g as f64 / l as f64;
        Verdict::Periodic { period: 2.0 * PI / fundamental }
    } else if worst <= 10.0 * tol {
        Verdict::Inconclusive
    } else {
        Verdict::NotPeriodic
    };
    PeriodicityReport { frequencies: freqs, eigenvalues, certificates, verdict }
}

/// `(θ, ||I − exp(θG)||_F)` for each grid point.
pub fn identity_distance_scan(spec: &SpectralExp, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.par_iter().map(|&t| (t, spec.identity_distance(t))).collect()
}

/// `Σ_{k<=order} (θG)^k / k!`, dense; a check on the spectral exponential.
pub fn taylor_expm(g: &DMatrix<Complex64>, theta: f64, order: usize) -> DMatrix<Complex64> {
    let n = g.nrows();
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut acc = term.clone();
    let tg = g.map(|z| z * theta);
    for k in 1..=order {
        term = &term * &tg / Complex64::new(k as f64, 0.0);
        acc += &term;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermiops::{single, to_matrix};

    #[test]
    fn rational_detection() {
        let c = best_rational(std::f64::consts::SQRT_2, DEFAULT_D_MAX);
        assert!(c.residual > 1e-7);
        let c = best_rational(1.5, DEFAULT_D_MAX);
        assert_eq!((c.p, c.q), (3, 2));
        assert!(c.residual < 1e-15);
        let c = best_rational(7.0 / 13.0, DEFAULT_D_MAX);
        assert_eq!((c.p, c.q), (7, 13));
    }

    #[test]
    fn spinorbital_single_period() {
        let b = Arc::new(FockBasis::full(2).unwrap());
        let g = to_matrix(&single(0, 2), &b);
        let sp = SpectralExp::new(&g.matrix, None).unwrap();
        let rep = periodicity_test(&sp, DEFAULT_D_MAX, DEFAULT_RATIONAL_TOL);
        match rep.verdict {
            Verdict::Periodic { period } => assert!((period - 2.0 * PI).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
        assert!(sp.identity_distance(2.0 * PI) < 1e-12);
    }

    #[test]
    fn zero_generator_is_degenerate() {
        let sp = SpectralExp::new(&SparseMatrix::zeros(4, 4), None).unwrap();
        assert_eq!(periodicity_test(&sp, 100, 1e-9).verdict, Verdict::Degenerate);
        assert_eq!(sp.exp(1.3), SparseMatrix::identity(4));
    }

    #[test]
    fn rejects_hermitian_input() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, ONE), (1, 0, ONE)]);
        assert!(matches!(SpectralExp::new(&m, None), Err(Error::NotAntiHermitian(_))));
    }

    #[test]
    fn detects_block_leakage() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 1, ONE), (1, 0, -ONE)]);
        let blocks = vec![vec![0], vec![1]];
        assert!(matches!(SpectralExp::new(&m, Some(&blocks)), Err(Error::Leakage(_))));
    }

    #[test]
    fn mixed_periods() {
        // frequencies 2 and 3 → fundamental 1 → period 2π
        let t = [(0, 1, Complex64::new(2.0, 0.0)), (1, 0, Complex64::new(-2.0, 0.0)), (2, 3, Complex64::new(3.0, 0.0)), (3, 2, Complex64::new(-3.0, 0.0))];
        let sp = SpectralExp::new(&SparseMatrix::from_triplets(4, 4, t), None).unwrap();
        match periodicity_test(&sp, DEFAULT_D_MAX, DEFAULT_RATIONAL_TOL).verdict {
            Verdict::Periodic { period } => assert!((period - 2.0 * PI).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn closed_forms_are_identity_at_zero() {
        let b = Arc::new(FockBasis::full(4).unwrap());
        for name in BUILTIN_NAMES {
            let idx: Vec<usize> = match name {
                "eq26" => vec![1, 5],
                "eq30" | "eq31" | "eq32" => vec![0, 1, 3],
                _ => vec![0, 1, 2, 3],
            };
            let m = closed_form_eval(&builtin(name, &idx).unwrap(), 0.0, &b);
            assert!(m.matrix.distance(&SparseMatrix::identity(b.len())) < 1e-12, "{name}");
        }
    }

    #[test]
    fn degrees() {
        assert_eq!(eq32(0, 1, 2).unwrap().degree(), 4);
        assert_eq!(sm_s9(0, 1, 2, 3).unwrap().degree(), 8);
        assert_eq!(sm_s10(0, 1, 2, 3).unwrap().degree(), 10);
    }
}
