//! First-, second- and fourth-order Trotter–Suzuki product formulas for two-
//! and three-term generators, with error and spin-violation scans.
//!
//! Every stage is an exact exponential of one commuting group, so a
//! Trotterized unitary is exactly unitary; only the splitting is approximate.

use std::sync::Arc;

use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::expm::{best_rational, gcd, periodicity_test, ClosedFormSpec, Form, PpqrParts, SpectralExp, TermTag, Verdict};
use crate::fermiops::{double, OperatorSum, SectorMatrix};
use crate::fock::{FockBasis, Spin, SpinOrbital};
use crate::sparse::SparseMatrix;
use crate::spinadapt::{GeneratorKind, SpinAdaptedGenerator};
use crate::trig::{Surd, Trig};

/// `s = 1 / (2 − 2^{1/3})`.
pub fn suzuki_s() -> f64 {
    1.0 / (2.0 - 2f64.cbrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrotterScheme {
    pub order: u8,
    pub arity: usize,
    /// `(term index, coefficient of θ)` in product order, left to right.
    pub stages: Vec<(usize, f64)>,
}

impl TrotterScheme {
    pub fn new(order: u8, arity: usize) -> Result<Self> {
        let s = suzuki_s();
        let stages = match (order, arity) {
            (1, 2) => vec![(0, 1.0), (1, 1.0)],
            (2, 2) => vec![(0, 0.5), (1, 1.0), (0, 0.5)],
            (4, 2) => vec![
                (0, s / 2.0),
                (1, s),
                (0, (1.0 - s) / 2.0),
                (1, 1.0 - 2.0 * s),
                (0, (1.0 - s) / 2.0),
                (1, s),
                (0, s / 2.0),
            ],
            (1, 3) => vec![(0, 1.0), (1, 1.0), (2, 1.0)],
            (2, 3) => vec![(0, 0.5), (1, 0.5), (2, 1.0), (1, 0.5), (0, 0.5)],
            (4, 3) => vec![
                (0, s / 2.0),
                (1, s / 2.0),
                (2, s),
                (1, s / 2.0),
                (0, (1.0 - s) / 2.0),
                (1, (1.0 - 2.0 * s) / 2.0),
                (2, 1.0 - 2.0 * s),
                (1, (1.0 - 2.0 * s) / 2.0),
                (0, (1.0 - s) / 2.0),
                (1, s / 2.0),
                (2, s),
                (1, s / 2.0),
                (0, s / 2.0),
            ],
            _ => {
                return Err(Error::Config(format!(
                    "no Trotter scheme of order {order} for {arity} terms (orders 1, 2, 4; arity 2, 3)"
                )))
            }
        };
        Ok(Self { order, arity, stages })
    }

    /// Sum of stage coefficients per term; all ones for a consistent scheme.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.arity];
        for &(t, c) in &self.stages {
            w[t] += c;
        }
        w
    }
}

/// A scheme bound to spectral decompositions of its terms.
#[derive(Debug, Clone)]
pub struct Trotterizer {
    scheme: TrotterScheme,
    exps: Vec<SpectralExp>,
    dim: usize,
}

impl Trotterizer {
    pub fn new(scheme: TrotterScheme, terms: &[SparseMatrix]) -> Result<Self> {
        if terms.len() != scheme.arity {
            return Err(Error::Arity { expected: scheme.arity, got: terms.len() });
        }
        let dim = terms[0].nrows();
        if terms.iter().any(|t| t.nrows() != dim || t.ncols() != dim) {
            return Err(Error::Dimension("Trotter terms have different shapes".into()));
        }
        let exps = terms.iter().map(|t| SpectralExp::new(t, None)).collect::<Result<Vec<_>>>()?;
        Ok(Self { scheme, exps, dim })
    }

    pub fn scheme(&self) -> &TrotterScheme {
        &self.scheme
    }

    pub fn product(&self, theta: f64) -> SparseMatrix {
        self.scheme
            .stages
            .iter()
            .fold(SparseMatrix::identity(self.dim), |acc, &(t, c)| acc.mul(&self.exps[t].exp(c * theta)))
    }

    /// `Trot(θ) x`, applying the rightmost stage first.
    pub fn apply(&self, theta: f64, x: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        self.scheme
            .stages
            .iter()
            .rev()
            .fold(x.to_vec(), |v, &(t, c)| self.exps[t].apply(c * theta, &v))
    }
}

/// Smallest common period of all stage exponentials, if the stages are
/// periodic with commensurate periods.
pub fn product_period(trot: &Trotterizer, d_max: u64, tol: f64) -> Option<f64> {
    let mut periods = Vec::new();
    for &(t, c) in &trot.scheme.stages {
        match periodicity_test(&trot.exps[t], d_max, tol).verdict {
            Verdict::Periodic { period } => periods.push(period / c.abs()),
            Verdict::Degenerate => {}
            _ => return None,
        }
    }
    let Some(&base) = periods.first() else {
        return Some(0.0);
    };
    let mut num = 1u128;
    let mut den = 0u128;
    for &t in &periods {
        let c = best_rational(t / base, d_max);
        if c.residual > tol || c.p <= 0 {
            return None;
        }
        let (p, q) = (c.p as u128, c.q as u128);
        num = num / gcd(num, p) * p;
        den = gcd(den, q);
    }
    Some(base * num as f64 / den as f64)
}

/// `(θ, ||exp(θ Σ T_k) − Trot(θ)||_F)` in double-double arithmetic.
///
/// For small θ the fourth-order error drops below double-precision
/// round-off of the matrices themselves; here every block the terms touch is
/// exponentiated by a scaled Taylor series in ~32-digit arithmetic. Terms
/// must be real.
pub fn precise_error_scan(scheme: &TrotterScheme, terms: &[SparseMatrix], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if terms.len() != scheme.arity {
        return Err(Error::Arity { expected: scheme.arity, got: terms.len() });
    }
    let dim = terms[0].nrows();
    if terms.iter().any(|t| t.iter().any(|(_, _, v)| v.im != 0.0)) {
        return Err(Error::Config("double-double error scan needs real Trotter terms".into()));
    }
    let pattern = SparseMatrix::from_triplets(
        dim,
        dim,
        terms.iter().flat_map(|t| t.iter().map(|(r, c, _)| (r, c, num_complex::Complex64::new(1.0, 0.0)))),
    );
    let blocks: Vec<(usize, Vec<DdMat>)> = pattern
        .connected_components()
        .into_iter()
        .filter(|b| b.len() > 1)
        .map(|b| (b.len(), terms.iter().map(|t| DdMat::from_block(t, &b)).collect()))
        .collect();
    Ok(grid
        .par_iter()
        .map(|&theta| {
            let err2: f64 = blocks
                .iter()
                .map(|(n, ts)| {
                    let total = ts.iter().fold(DdMat::zeros(*n), |a, t| a.add(t));
                    let exact = total.expm(theta);
                    let trot = scheme
                        .stages
                        .iter()
                        .fold(DdMat::identity(*n), |acc, &(k, c)| acc.mul(&ts[k].expm(c * theta)));
                    exact.sub(&trot).frobenius_sq()
                })
                .sum();
            (theta, err2.sqrt())
        })
        .collect())
}

/// Dense real matrix in double-double precision.
#[derive(Clone)]
struct DdMat {
    n: usize,
    a: Vec<TwoFloat>,
}

impl DdMat {
    fn zeros(n: usize) -> Self {
        Self { n, a: vec![TwoFloat::from(0.0); n * n] }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = TwoFloat::from(1.0);
        }
        m
    }

    fn from_block(t: &SparseMatrix, idx: &[usize]) -> Self {
        let d = t.dense_block(idx);
        let n = idx.len();
        Self { n, a: (0..n * n).map(|k| TwoFloat::from(d[(k / n, k % n)].re)).collect() }
    }

    fn add(&self, o: &Self) -> Self {
        Self { n: self.n, a: self.a.iter().zip(&o.a).map(|(x, y)| *x + *y).collect() }
    }

    fn sub(&self, o: &Self) -> Self {
        Self { n: self.n, a: self.a.iter().zip(&o.a).map(|(x, y)| *x - *y).collect() }
    }

    fn scale(&self, c: f64) -> Self {
        Self { n: self.n, a: self.a.iter().map(|x| *x * c).collect() }
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if f64::from(x) == 0.0 && x.lo() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        out
    }

    fn norm_1(&self) -> f64 {
        (0..self.n).map(|j| (0..self.n).map(|i| f64::from(self.a[i * self.n + j]).abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn frobenius_sq(&self) -> f64 {
        self.a.iter().map(|x| f64::from(*x).powi(2)).sum()
    }

    /// `exp(θ M)` by scaling and squaring around a Taylor series; only
    /// division by plain `f64` is used, which is exact to double-double.
    fn expm(&self, theta: f64) -> Self {
        let norm = self.norm_1() * theta.abs();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let x = self.scale(theta / 2f64.powi(squarings));
        let mut term = Self::identity(self.n);
        let mut acc = term.clone();
        for k in 1..60 {
            term = term.mul(&x);
            term.a.iter_mut().for_each(|v| *v /= k as f64);
            acc = acc.add(&term);
            if term.frobenius_sq() < 1e-70 {
                break;
            }
        }
        for _ in 0..squarings {
            acc = acc.mul(&acc);
        }
        acc
    }
}

pub fn trotterize(scheme: &TrotterScheme, theta: f64, terms: &[SectorMatrix]) -> Result<SectorMatrix> {
    let basis = terms.first().map(|t| t.basis.clone()).ok_or(Error::Arity { expected: scheme.arity, got: 0 })?;
    let mats: Vec<SparseMatrix> = terms.iter().map(|t| t.matrix.clone()).collect();
    let tr = Trotterizer::new(scheme.clone(), &mats)?;
    Ok(SectorMatrix::new(basis, tr.product(theta)))
}

fn up(p: usize) -> usize {
    SpinOrbital::new(p, Spin::Up).flat()
}

fn dn(p: usize) -> usize {
    SpinOrbital::new(p, Spin::Down).flat()
}

fn all_commute(pieces: &[OperatorSum]) -> bool {
    pieces.iter().enumerate().all(|(i, a)| pieces[i + 1..].iter().all(|b| a.commutator(b).max_coeff() < 1e-12))
}

/// Splits a spin-adapted double into the groups of mutually commuting
/// spinorbital pieces used as Trotter terms: two groups for `A_{PP}^{QR}` and
/// `^{[0]}A`, three for `^{[1]}A`.
pub fn term_split(g: &SpinAdaptedGenerator) -> Result<Vec<OperatorSum>> {
    let (p, q, r, s) = match g.indices[..] {
        [p, q, r, s] => (p, q, r, s),
        _ => return Err(Error::Config(format!("{} is not a double", g.label()))),
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = |a: (usize, Spin), b: (usize, Spin), c: (usize, Spin), d: (usize, Spin)| {
        let f = |(i, sp): (usize, Spin)| SpinOrbital::new(i, sp).flat();
        double(f(a), f(b), f(c), f(d))
    };
    let (u, d) = (Spin::Up, Spin::Down);
    let groups: Vec<Vec<OperatorSum>> = match g.kind {
        GeneratorKind::DoublePPQR if p == q => vec![
            vec![x((p, u), (p, d), (r, u), (s, d)).scale(h)],
            vec![x((p, u), (p, d), (r, d), (s, u)).scale(-h)],
        ],
        GeneratorKind::DoublePPQR => vec![
            vec![x((p, u), (q, d), (r, u), (r, d)).scale(h)],
            vec![x((p, d), (q, u), (r, u), (r, d)).scale(-h)],
        ],
        GeneratorKind::DoubleS0 => vec![
            vec![x((p, u), (q, d), (r, u), (s, d)).scale(0.5), x((p, d), (q, u), (r, d), (s, u)).scale(0.5)],
            vec![x((p, u), (q, d), (r, d), (s, u)).scale(-0.5), x((p, d), (q, u), (r, u), (s, d)).scale(-0.5)],
        ],
        GeneratorKind::DoubleS1 => {
            let c = 1.0 / 3f64.sqrt();
            let c2 = c / 2.0;
            vec![
                vec![x((p, u), (q, u), (r, u), (s, u)).scale(c), x((p, d), (q, d), (r, d), (s, d)).scale(c)],
                vec![x((p, u), (q, d), (r, u), (s, d)).scale(c2), x((p, d), (q, u), (r, d), (s, u)).scale(c2)],
                vec![x((p, u), (q, d), (r, d), (s, u)).scale(c2), x((p, d), (q, u), (r, u), (s, d)).scale(c2)],
            ]
        }
        GeneratorKind::DoublePPQQ => {
            return Err(Error::Config("perfect-pairing doubles need no split (single commuting exponential)".into()))
        }
        k => return Err(Error::Config(format!("no Trotter split for generator kind {k}"))),
    };
    for (i, grp) in groups.iter().enumerate() {
        if !all_commute(grp) {
            return Err(Error::NonCommuting(format!("group {i} of {}", g.label())));
        }
    }
    let terms: Vec<OperatorSum> =
        groups.into_iter().map(|grp| grp.iter().fold(OperatorSum::zero(), |a, b| &a + b)).collect();
    let total = terms.iter().fold(OperatorSum::zero(), |a, b| &a + b);
    let diff = (&total - &g.body).max_coeff();
    if diff > 1e-12 {
        return Err(Error::Config(format!("split of {} does not sum to the generator ({diff:e})", g.label())));
    }
    Ok(terms)
}

/// `(θ, ||exp(θG) − Trot(θ)||_F)` over the grid.
pub fn error_scan(exact: &SpectralExp, trot: &Trotterizer, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.par_iter().map(|&t| (t, exact.exp(t).distance(&trot.product(t)))).collect()
}

/// `(θ, ||[S², Trot(θ)]||_F)` over the grid.
pub fn spin_violation_scan(s2: &SparseMatrix, trot: &Trotterizer, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.par_iter().map(|&t| (t, s2.commutator(&trot.product(t)).frobenius_norm())).collect()
}

/// `(θ, ||[S², exp(θG)]||_F)`; the exact baseline for spin violation.
pub fn exact_spin_violation_scan(s2: &SparseMatrix, exact: &SpectralExp, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.par_iter().map(|&t| (t, s2.commutator(&exact.exp(t)).frobenius_norm())).collect()
}

/// Least-squares slope of `log(err)` against `log(θ)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// The two Trotter terms of `A_{PP}^{QR}`: `X = A_{P↑P↓}^{Q↑R↓}/√2`,
/// `Y = −A_{P↑P↓}^{Q↓R↑}/√2`.
pub fn ppqr_terms(p: usize, q: usize, r: usize) -> [OperatorSum; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [double(up(p), dn(p), up(q), dn(r)).scale(h), double(up(p), dn(p), dn(q), up(r)).scale(-h)]
}

/// Closed forms of the first- and second-order products of `A_{PP}^{QR}`.
#[derive(Debug, Clone)]
pub struct TrotClosedForms {
    /// Spinorbital form of the first-order product, terms tagged singlet or
    /// symmetry-breaking.
    pub trot1: ClosedFormSpec,
    /// The same product written with `S = A_{PP}^{QR}` and its triplet
    /// partner `T`.
    pub trot1_st: ClosedFormSpec,
    pub trot2: ClosedFormSpec,
}

pub fn trot_closed_forms(p: usize, q: usize, r: usize) -> Result<TrotClosedForms> {
    if q == r || p == q || p == r {
        return Err(Error::Config(format!("need distinct P, Q, R; got ({p},{q},{r})")));
    }
    let x = PpqrParts::new(p, q, r);
    let k = Surd::over_r2(1, 1);
    let hk = Surd::over_r2(1, 2);
    let one = Trig::one;
    let (sn, cs) = (Trig::sin(k), Trig::cos(k));
    let id = OperatorSum::identity();

    let d = &x.a1 - &x.a2;
    let t_plus = &x.a1 + &x.a2;
    let even_qd_ru = &x.nb_qd_ru + &x.n_qd_ru;
    let even_qu_rd = &x.nb_qu_rd + &x.n_qu_rd;
    let odd_qd_ru = &x.nb_qd_ru - &x.n_qd_ru;
    let odd_qu_rd = &x.nb_qu_rd - &x.n_qu_rd;
    let pp_swap = &(&x.nb_pp * &x.n_qqrr) + &(&x.nb_qqrr * &x.n_pp);
    let singles_occ = &(&x.nb_pp * &(&x.n_qd_ru + &x.n_qu_rd)) + &(&(&x.nb_qd_ru + &x.nb_qu_rd) * &x.n_pp);
    let half_sin_cm1 = (sn.clone() * (cs.clone() - one())).scaled(Surd::rat(1, 2));

    let trot1 = ClosedFormSpec::new("eq27", Form::Spinorbital)
        .tagged(one(), id.clone(), TermTag::Singlet)
        .tagged(sn.clone(), d.clone(), TermTag::Singlet)
        .tagged(half_sin_cm1.clone(), &(&d * &even_qd_ru) * &even_qu_rd, TermTag::Singlet)
        .tagged((cs.clone() - one()).pow(2), pp_swap.clone(), TermTag::Singlet)
        .tagged(
            sn.clone().pow(2),
            &(&x.flip * &x.n_pp) + &(&x.flop * &x.nb_pp),
            TermTag::Breaking,
        )
        .tagged(cs.clone() - one(), singles_occ.clone(), TermTag::Breaking)
        .tagged(half_sin_cm1, &(&t_plus * &odd_qd_ru) * &odd_qu_rd, TermTag::Breaking);

    // S/T representation, from A1 = (S + T)/√2 and A2 = (T − S)/√2
    let r2 = std::f64::consts::SQRT_2;
    let s_op = d.scale(1.0 / r2);
    let t_op = t_plus.scale(1.0 / r2);
    let prod = |ops: &[&OperatorSum]| ops.iter().fold(id.clone(), |a, b| &a * *b);
    let (s1, t1) = (&s_op, &t_op);
    let omc = one() - cs.clone();
    let half = Surd::rat(1, 2);
    let spt = s1 + t1;
    let tms = t1 - s1;
    let cubic = prod(&[&spt, s1, &tms]);
    let trot1_st = ClosedFormSpec::new("trot1_st", Form::SpinAdapted)
        .term(one(), id.clone())
        .term(sn.clone().scaled(Surd::r2(1, 1)), s_op.clone())
        .term(omc.clone() + sn.clone().pow(2).scaled(half), prod(&[s1, s1]))
        .term(omc.clone() - sn.clone().pow(2).scaled(half), prod(&[t1, t1]))
        .term(sn.clone().pow(2).scaled(half), &prod(&[t1, s1]) - &prod(&[s1, t1]))
        .term((sn.clone() * omc.clone()).scaled(Surd::over_r2(-1, 1)), cubic)
        .term(omc.clone().pow(2).scaled(Surd::rat(1, 4)), prod(&[&spt, &spt, &tms, &tms]));

    // second order
    let (shk, chk) = (Trig::sin(hk), Trig::cos(hk));
    let sin2h_omc = shk.clone().pow(2) * omc.clone();
    let mixed_even = &(&x.nb_qu_rd * &x.n_qd_ru) + &(&x.nb_qd_ru * &x.n_qu_rd);
    let mixed_odd = &(&x.nb_qu_rd * &x.n_qd_ru) - &(&x.nb_qd_ru * &x.n_qu_rd);
    let flipper = s5_spin_flip(&x);
    let trot2 = ClosedFormSpec::new("sm_s5", Form::Spinorbital)
        .term(one(), id)
        .term(sn.clone(), d)
        .term(cs.clone() - one(), singles_occ)
        .term(sin2h_omc.clone(), pp_swap)
        .term(shk.clone() * sn.clone(), &flipper * &(&x.nb_pp + &x.n_pp))
        .term(sin2h_omc.clone().scaled(half), &(&x.nb_pp + &x.n_pp) * &mixed_even)
        .term(sn * (one() - chk.clone()), &x.a2 * &even_qu_rd)
        .term(-(shk * chk * omc), &x.a1 * &even_qd_ru)
        .term(-sin2h_omc.scaled(half), &(&x.nb_pp - &x.n_pp) * &mixed_odd);

    Ok(TrotClosedForms { trot1, trot1_st, trot2 })
}

/// The Hermitian spin-flip `H^{Q↓R↑}_{Q↑R↓}` of the second-order form:
/// `a^{Q↓R↑}_{Q↑R↓} + a^{Q↑R↓}_{Q↓R↑}`.
fn s5_spin_flip(x: &PpqrParts) -> OperatorSum {
    &x.flip + &x.flop
}

/// Staged product matrices for `A_{PP}^{QR}` on `basis`.
pub fn ppqr_trotterizer(p: usize, q: usize, r: usize, order: u8, basis: &Arc<FockBasis>) -> Result<Trotterizer> {
    let terms: Vec<SparseMatrix> =
        ppqr_terms(p, q, r).iter().map(|t| crate::fermiops::matrix_on(t, basis)).collect();
    Trotterizer::new(TrotterScheme::new(order, 2)?, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermiops::matrix_on;
    use crate::spinadapt::{double_cases, singlet_double_cg};

    #[test]
    fn scheme_weights_sum_to_one() {
        for arity in [2, 3] {
            for order in [1, 2, 4] {
                let s = TrotterScheme::new(order, arity).unwrap();
                for w in s.weights() {
                    assert!((w - 1.0).abs() < 1e-14);
                }
            }
        }
        assert!(TrotterScheme::new(3, 2).is_err());
    }

    #[test]
    fn arity_mismatch() {
        let s = TrotterScheme::new(1, 3).unwrap();
        let m = SparseMatrix::zeros(2, 2);
        assert!(matches!(Trotterizer::new(s, &[m.clone(), m]), Err(Error::Arity { expected: 3, got: 2 })));
    }

    #[test]
    fn split_group_counts() {
        let g = singlet_double_cg(0, 0, 1, 2, 0).unwrap();
        assert_eq!(term_split(&g).unwrap().len(), 2);
        let g = singlet_double_cg(0, 1, 2, 2, 0).unwrap();
        assert_eq!(term_split(&g).unwrap().len(), 2);
        let cases = double_cases(0, 1, 2, 3);
        assert_eq!(term_split(&cases[0]).unwrap().len(), 2);
        assert_eq!(term_split(&cases[1]).unwrap().len(), 3);
        assert!(term_split(&singlet_double_cg(0, 0, 1, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn split_overlapping_indices() {
        // shared orbitals between the lower and upper pairs can spoil intra-group commutation
        for (p, q, r, s) in [(0, 1, 0, 2), (0, 1, 1, 2), (0, 2, 1, 2)] {
            for g in double_cases(p, q, r, s) {
                match term_split(&g) {
                    Ok(t) => assert!(t.len() >= 2),
                    Err(e) => assert!(matches!(e, Error::NonCommuting(_)), "{e}"),
                }
            }
        }
    }

    #[test]
    fn printed_st_coefficients_are_off() {
        // √2(1 − c) in place of (1 − c) on S², T² and TS − ST, and a different cubic group
        let b = Arc::new(FockBasis::full(4).unwrap());
        let x = PpqrParts::new(0, 1, 3);
        let r2 = std::f64::consts::SQRT_2;
        let s = (&x.a1 - &x.a2).scale(1.0 / r2);
        let t = (&x.a1 + &x.a2).scale(1.0 / r2);
        let m = |o: &OperatorSum| matrix_on(o, &b);
        let (sm, tm) = (m(&s), m(&t));
        let w = |ops: &str| {
            ops.chars().fold(SparseMatrix::identity(b.len()), |a, ch| a.mul(if ch == 'S' { &sm } else { &tm }))
        };
        let th = 0.9;
        let (sn, c) = ((th / r2).sin(), (th / r2).cos());
        let mut lit = SparseMatrix::identity(b.len())
            .add_scaled(&w("S"), (r2 * sn).into())
            .add_scaled(&w("SS"), (r2 * (1.0 - c) + 0.5 * sn * sn).into())
            .add_scaled(&w("SSS"), (sn * (1.0 - c)).into())
            .add_scaled(&w("SSSS"), (0.5 * (1.0 - c).powi(2)).into())
            .add_scaled(&w("TT"), (r2 * (1.0 - c) - 0.5 * sn * sn).into())
            .add_scaled(&w("TS"), (r2 * (1.0 - c)).into())
            .add_scaled(&w("ST"), (-r2 * (1.0 - c)).into());
        for (k, sg) in [("TSS", 1.0), ("TST", -1.0), ("SST", -1.0)] {
            lit = lit.add_scaled(&w(k), (sg * sn * (1.0 - c)).into());
        }
        for (k, sg) in [
            ("STSS", 1.0), ("STTS", -1.0), ("STTT", 1.0), ("SSTS", -1.0), ("SSST", -1.0), ("TSTT", 1.0),
            ("TSST", -1.0), ("TSSS", 1.0), ("TTST", -1.0), ("TTTS", -1.0), ("TTTT", 1.0),
        ] {
            lit = lit.add_scaled(&w(k), (sg * 0.5 * (1.0 - c).powi(2)).into());
        }
        let prod = ppqr_trotterizer(0, 1, 3, 1, &b).unwrap().product(th);
        let derived = trot_closed_forms(0, 1, 3).unwrap().trot1_st.materialize(&b).eval(th).matrix;
        assert!(derived.distance(&prod) < 1e-10);
        eprintln!("printed S/T form off by {:.3e}", lit.distance(&prod));
        assert!(lit.distance(&prod) > 1e-2, "printed form now agrees: {}", lit.distance(&prod));
    }

    #[test]
    fn spin_flip_term_is_sign_sensitive() {
        // the opposite sign of H would change the product by 2 sin sin H(...) ≠ 0
        let b = Arc::new(FockBasis::full(4).unwrap());
        let x = PpqrParts::new(0, 1, 3);
        let h = &s5_spin_flip(&x) * &(&x.nb_pp + &x.n_pp);
        assert!(matrix_on(&h, &b).frobenius_norm() > 1.0);
        assert!(h.adjoint().fingerprint() == h.fingerprint());
    }

    #[test]
    fn closed_forms_match_products() {
        let b = Arc::new(FockBasis::full(4).unwrap());
        let cf = trot_closed_forms(0, 1, 3).unwrap();
        let t1 = ppqr_trotterizer(0, 1, 3, 1, &b).unwrap();
        let t2 = ppqr_trotterizer(0, 1, 3, 2, &b).unwrap();
        let (m1, mst, m2) = (cf.trot1.materialize(&b), cf.trot1_st.materialize(&b), cf.trot2.materialize(&b));
        for th in [0.4, 1.7, 5.9] {
            let p1 = t1.product(th);
            assert!(m1.eval(th).matrix.distance(&p1) < 1e-10, "eq27 θ={th}");
            assert!(mst.eval(th).matrix.distance(&p1) < 1e-10, "S/T θ={th}");
            assert!(m2.eval(th).matrix.distance(&t2.product(th)) < 1e-10, "S5 θ={th}");
        }
        let _ = matrix_on(&OperatorSum::identity(), &b);
    }

    #[test]
    fn product_periods() {
        let basis = Arc::new(FockBasis::full(4).unwrap());
        let r2pi = std::f64::consts::SQRT_2 * std::f64::consts::PI;
        for (order, want) in [(1, Some(2.0 * r2pi)), (2, Some(4.0 * r2pi)), (4, None)] {
            let trot = ppqr_trotterizer(0, 1, 3, order, &basis).unwrap();
            let got = product_period(&trot, 1_000_000, 1e-9);
            match (got, want) {
                (Some(g), Some(w)) => {
                    assert!((g - w).abs() < 1e-9, "order {order}: {g} vs {w}");
                    for t in [0.3, 1.9] {
                        assert!(trot.product(t).distance(&trot.product(t + g)) < 1e-10);
                    }
                }
                (None, None) => {}
                _ => panic!("order {order}: {got:?}"),
            }
        }
    }

    #[test]
    fn precise_scan_recovers_fifth_power() {
        let basis = Arc::new(FockBasis::full(4).unwrap());
        let terms: Vec<SparseMatrix> = ppqr_terms(0, 1, 3).iter().map(|t| matrix_on(t, &basis)).collect();
        let grid: Vec<f64> = (0..=10).map(|i| 10f64.powf(-3.0 + 0.2 * i as f64)).collect();
        for order in [1u8, 2, 4] {
            let scheme = TrotterScheme::new(order, 2).unwrap();
            let pts = precise_error_scan(&scheme, &terms, &grid).unwrap();
            let slope = loglog_slope(&pts);
            assert!((slope - f64::from(order + 1)).abs() < 0.05, "order {order}: {slope}");
            let plain = error_scan(
                &SpectralExp::new(&terms[0].add(&terms[1]), None).unwrap(),
                &Trotterizer::new(scheme, &terms).unwrap(),
                &[0.1],
            );
            assert!((plain[0].1 - pts[10].1).abs() < 1e-12 * plain[0].1.max(1e-3));
        }
    }
}
