//! Second-quantized fermionic operators.
//!
//! A [`FermionString`] is a coefficient times an ordered product of ladder
//! operators; factors act right to left, so `[a^1, a_0]` moves an electron from
//! spinorbital 0 to 1. [`OperatorSum`] keeps its strings normal ordered
//! (creations left of annihilations, descending indices within each block) so
//! that identical operators always have identical term lists.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{Determinant, FockBasis, SpinOrbital};
use crate::sparse::SparseMatrix;

/// Terms with smaller coefficient modulus are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub index: usize,
    pub action: Action,
}

impl Ladder {
    pub fn create(index: usize) -> Self {
        Self { index, action: Action::Create }
    }

    pub fn annihilate(index: usize) -> Self {
        Self { index, action: Action::Annihilate }
    }

    pub fn adjoint(self) -> Self {
        let action = match self.action {
            Action::Create => Action::Annihilate,
            Action::Annihilate => Action::Create,
        };
        Self { index: self.index, action }
    }
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let so = SpinOrbital::from_flat(self.index);
        match self.action {
            Action::Create => write!(f, "a+({so})"),
            Action::Annihilate => write!(f, "a({so})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionString {
    pub coeff: Complex64,
    pub factors: Vec<Ladder>,
}

/// Result of acting with a string on a determinant.
pub type Image = (Complex64, Determinant);

impl FermionString {
    pub fn new(coeff: impl Into<Complex64>, factors: Vec<Ladder>) -> Self {
        Self { coeff: coeff.into(), factors }
    }

    pub fn identity() -> Self {
        Self::new(1.0, Vec::new())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            factors: self.factors.iter().rev().map(|f| f.adjoint()).collect(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.factors.iter().map(|f| f.index).max()
    }

    /// Expands the string into normal-ordered strings using the canonical
    /// anticommutation relations.
    pub fn normal_ordered(&self) -> Vec<FermionString> {
        let mut out = Vec::new();
        let mut work = vec![self.clone()];
        'next: while let Some(mut s) = work.pop() {
            if s.coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            loop {
                let mut swapped = false;
                for i in 0..s.factors.len().saturating_sub(1) {
                    let (l, r) = (s.factors[i], s.factors[i + 1]);
                    match (l.action, r.action) {
                        (Action::Annihilate, Action::Create) => {
                            if l.index == r.index {
                                let mut contracted = s.factors.clone();
                                contracted.drain(i..i + 2);
                                work.push(FermionString::new(s.coeff, contracted));
                            }
                            s.factors.swap(i, i + 1);
                            s.coeff = -s.coeff;
                            swapped = true;
                        }
                        (a, b) if a == b => {
                            if l.index == r.index {
                                continue 'next;
                            }
                            if l.index < r.index {
                                s.factors.swap(i, i + 1);
                                s.coeff = -s.coeff;
                                swapped = true;
                            }
                        }
                        _ => {}
                    }
                }
                if !swapped {
                    break;
                }
            }
            out.push(s);
        }
        out
    }
}

/// Acts with `s` on `det`; `None` when the image vanishes.
///
/// Each ladder factor contributes `(-1)^k` where `k` is the number of
/// occupied spinorbitals with a lower flat index at the time it acts.
pub fn apply_string(s: &FermionString, det: Determinant) -> Option<Image> {
    let mut occ = det.0;
    let mut odd = false;
    for f in s.factors.iter().rev() {
        let bit = 1u64 << f.index;
        let filled = occ & bit != 0;
        match f.action {
            Action::Annihilate if !filled => return None,
            Action::Create if filled => return None,
            _ => {}
        }
        odd ^= (occ & (bit - 1)).count_ones() % 2 == 1;
        occ ^= bit;
    }
    let sign = if odd { -1.0 } else { 1.0 };
    Some((s.coeff * sign, Determinant(occ)))
}

/// Linear combination of normal-ordered fermion strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorSum {
    terms: BTreeMap<Vec<Ladder>, Complex64>,
}

impl OperatorSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::from_string(FermionString::identity())
    }

    pub fn scalar(c: impl Into<Complex64>) -> Self {
        Self::identity().scale(c.into())
    }

    pub fn from_string(s: FermionString) -> Self {
        let mut out = Self::zero();
        out.push(s);
        out.pruned()
    }

    pub fn from_strings(strings: impl IntoIterator<Item = FermionString>) -> Self {
        let mut out = Self::zero();
        for s in strings {
            out.push(s);
        }
        out.pruned()
    }

    fn push(&mut self, s: FermionString) {
        for t in s.normal_ordered() {
            *self.terms.entry(t.factors).or_insert(Complex64::new(0.0, 0.0)) += t.coeff;
        }
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() >= PRUNE_TOL);
        self
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every coefficient is below the pruning threshold.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn strings(&self) -> impl Iterator<Item = FermionString> + '_ {
        self.terms.iter().map(|(f, &c)| FermionString::new(c, f.clone()))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.keys().flat_map(|f| f.iter().map(|l| l.index)).max()
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self { terms: self.terms.iter().map(|(f, &v)| (f.clone(), v * c)).collect() }.pruned()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_strings(self.strings().map(|s| s.adjoint()))
    }

    /// `X - X^dagger`.
    pub fn anti_hermitian_part(&self) -> Self {
        self - &self.adjoint()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest coefficient modulus among the terms.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(), |acc, _| &acc * self)
    }

    /// Stable fingerprint of the normalized term list.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for (f, c) in &self.terms {
            f.hash(&mut h);
            (c.re + 0.0).to_bits().hash(&mut h);
            (c.im + 0.0).to_bits().hash(&mut h);
        }
        h.finish()
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (fs, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:+.6}{:+.6}i)", c.re, c.im)?;
            for l in fs {
                write!(f, " {l}")?;
            }
        }
        Ok(())
    }
}

impl Add for &OperatorSum {
    type Output = OperatorSum;
    fn add(self, rhs: &OperatorSum) -> OperatorSum {
        let mut out = self.clone();
        for (f, &c) in &rhs.terms {
            *out.terms.entry(f.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out.pruned()
    }
}

impl Sub for &OperatorSum {
    type Output = OperatorSum;
    fn sub(self, rhs: &OperatorSum) -> OperatorSum {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &OperatorSum {
    type Output = OperatorSum;
    fn neg(self) -> OperatorSum {
        self.scale(-1.0)
    }
}

impl Mul for &OperatorSum {
    type Output = OperatorSum;
    fn mul(self, rhs: &OperatorSum) -> OperatorSum {
        let mut out = OperatorSum::zero();
        for (fa, &ca) in &self.terms {
            for (fb, &cb) in &rhs.terms {
                let mut factors = fa.clone();
                factors.extend_from_slice(fb);
                out.push(FermionString::new(ca * cb, factors));
            }
        }
        out.pruned()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for OperatorSum {
            type Output = OperatorSum;
            fn $m(self, rhs: OperatorSum) -> OperatorSum {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

// ---------------------------------------------------------------------------
// Operator constructors over flat spinorbital indices.

/// `n_p = a^p a_p`.
pub fn number(p: usize) -> OperatorSum {
    OperatorSum::from_string(FermionString::new(1.0, vec![Ladder::create(p), Ladder::annihilate(p)]))
}

/// `1 - n_p`.
pub fn hole(p: usize) -> OperatorSum {
    &OperatorSum::identity() - &number(p)
}

/// `n_{p1} n_{p2} ...`.
pub fn numbers(indices: &[usize]) -> OperatorSum {
    indices.iter().fold(OperatorSum::identity(), |acc, &p| &acc * &number(p))
}

/// `(1 - n_{p1})(1 - n_{p2}) ...`.
pub fn holes(indices: &[usize]) -> OperatorSum {
    indices.iter().fold(OperatorSum::identity(), |acc, &p| &acc * &hole(p))
}

/// `a_{lower}^{upper}`: for lower `[p, q]` and upper `[r, s]` this is
/// `a^r a^s a_q a_p`.
pub fn excitation(lower: &[usize], upper: &[usize]) -> OperatorSum {
    let mut factors: Vec<Ladder> = upper.iter().map(|&i| Ladder::create(i)).collect();
    factors.extend(lower.iter().rev().map(|&i| Ladder::annihilate(i)));
    OperatorSum::from_string(FermionString::new(1.0, factors))
}

/// Anti-Hermitian excitation `A_{lower}^{upper} = a_{lower}^{upper} - a^{lower}_{upper}`.
pub fn anti_hermitian_excitation(lower: &[usize], upper: &[usize]) -> OperatorSum {
    excitation(lower, upper).anti_hermitian_part()
}

/// `A_p^q = a^q a_p - a^p a_q`.
pub fn single(p: usize, q: usize) -> OperatorSum {
    anti_hermitian_excitation(&[p], &[q])
}

/// `A_{pq}^{rs} = a^r a^s a_q a_p - a^p a^q a_s a_r`.
pub fn double(p: usize, q: usize, r: usize, s: usize) -> OperatorSum {
    anti_hermitian_excitation(&[p, q], &[r, s])
}

/// Total particle number.
pub fn number_operator(n_spatial: usize) -> OperatorSum {
    (0..2 * n_spatial).fold(OperatorSum::zero(), |acc, p| &acc + &number(p))
}

/// `S_z = (N_up - N_down) / 2`.
pub fn sz_operator(n_spatial: usize) -> OperatorSum {
    (0..n_spatial).fold(OperatorSum::zero(), |acc, p| {
        let up = SpinOrbital::up(p).flat();
        let dn = SpinOrbital::down(p).flat();
        &acc + &(&number(up) - &number(dn)).scale(0.5)
    })
}

/// `S_+ = sum_P a^{P up} a_{P down}`.
pub fn s_plus(n_spatial: usize) -> OperatorSum {
    OperatorSum::from_strings((0..n_spatial).map(|p| {
        FermionString::new(
            1.0,
            vec![
                Ladder::create(SpinOrbital::up(p).flat()),
                Ladder::annihilate(SpinOrbital::down(p).flat()),
            ],
        )
    }))
}

/// `S^2 = S_- S_+ + S_z (S_z + 1)` in units of hbar^2.
pub fn s_squared_operator(n_spatial: usize) -> OperatorSum {
    let sp = s_plus(n_spatial);
    let sm = sp.adjoint();
    let sz = sz_operator(n_spatial);
    let shifted = &sz + &OperatorSum::identity();
    &(&sm * &sp) + &(&sz * &shifted)
}

// ---------------------------------------------------------------------------
// Sector matrices.

/// Sparse matrix of an operator on a fixed basis.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    pub basis: Arc<FockBasis>,
    pub matrix: SparseMatrix,
}

impl SectorMatrix {
    pub fn new(basis: Arc<FockBasis>, matrix: SparseMatrix) -> Self {
        assert_eq!(matrix.nrows(), basis.len());
        assert_eq!(matrix.ncols(), basis.len());
        Self { basis, matrix }
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Self {
        Self::new(basis.clone(), SparseMatrix::identity(basis.len()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        self.matrix.to_dense()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.matrix.distance(&other.matrix)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.basis.clone(), self.matrix.adjoint())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.basis.clone(), self.matrix.mul(&other.matrix))
    }

    pub fn add_scaled(&self, other: &Self, alpha: Complex64) -> Self {
        Self::new(self.basis.clone(), self.matrix.add_scaled(&other.matrix, alpha))
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self::new(self.basis.clone(), self.matrix.scale(alpha))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self::new(self.basis.clone(), self.matrix.commutator(&other.matrix))
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.matvec(x)
    }

    pub fn anti_hermiticity_defect(&self) -> f64 {
        self.matrix.anti_hermiticity_defect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.matrix.unitarity_defect()
    }

    /// `M^k` by repeated multiplication.
    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::identity(&self.basis), |acc, _| acc.mul(self))
    }
}

fn column_images(op: &OperatorSum, basis: &FockBasis, col: usize) -> (Vec<(usize, usize, Complex64)>, f64) {
    let det = basis.det(col);
    let mut out = Vec::new();
    let mut leaked: HashMap<u64, Complex64> = HashMap::new();
    for s in op.strings() {
        if let Some((amp, img)) = apply_string(&s, det) {
            match basis.index_of(img) {
                Some(row) => out.push((row, col, amp)),
                None => *leaked.entry(img.0).or_insert(Complex64::new(0.0, 0.0)) += amp,
            }
        }
    }
    let leak = leaked.values().map(|a| a.norm()).fold(0.0, f64::max);
    (out, leak)
}

fn materialize(op: &OperatorSum, basis: &FockBasis) -> (SparseMatrix, f64) {
    if let Some(m) = op.max_index() {
        assert!(m < basis.n_spinorbitals(), "operator index {m} exceeds basis width");
    }
    let cols: Vec<_> = (0..basis.len())
        .into_par_iter()
        .map(|c| column_images(op, basis, c))
        .collect();
    let leak = cols.iter().map(|c| c.1).fold(0.0, f64::max);
    let trip = cols.into_iter().flat_map(|c| c.0);
    (SparseMatrix::from_triplets(basis.len(), basis.len(), trip), leak)
}

/// Raw sparse matrix of `op` on `basis`; images outside the basis are dropped.
pub fn matrix_on(op: &OperatorSum, basis: &FockBasis) -> SparseMatrix {
    let (m, leak) = materialize(op, basis);
    debug_assert!(leak < 1e-12, "operator maps out of the basis (amplitude {leak:e})");
    m
}

/// Sector matrix of `op`; `matrix[j, i]` collects the amplitude of
/// `dets[i] -> dets[j]`.
pub fn to_matrix(op: &OperatorSum, basis: &Arc<FockBasis>) -> SectorMatrix {
    SectorMatrix::new(basis.clone(), matrix_on(op, basis))
}

/// Like [`to_matrix`] but reports sector leakage as an error in every build.
pub fn try_to_matrix(op: &OperatorSum, basis: &Arc<FockBasis>) -> Result<SectorMatrix> {
    let (m, leak) = materialize(op, basis);
    if leak >= 1e-12 {
        return Err(Error::Leakage(format!(
            "operator maps basis states outside the basis with amplitude {leak:e}"
        )));
    }
    Ok(SectorMatrix::new(basis.clone(), m))
}

/// Memoizes sector matrices keyed by operator fingerprint and basis id.
#[derive(Debug, Default)]
pub struct MatrixCache {
    entries: Mutex<HashMap<(u64, u64), Arc<SectorMatrix>>>,
}

impl MatrixCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, op: &OperatorSum, basis: &Arc<FockBasis>) -> Arc<SectorMatrix> {
        let key = (op.fingerprint(), basis.id());
        if let Some(m) = self.entries.lock().unwrap().get(&key) {
            return m.clone();
        }
        let m = Arc::new(to_matrix(op, basis));
        self.entries.lock().unwrap().insert(key, m.clone());
        m
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_basis, SymmetrySector};
    use proptest::prelude::*;

    fn full(n: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::full(n).unwrap())
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn double_creation_vanishes() {
        let s = FermionString::new(1.0, vec![Ladder::create(0)]);
        assert!(apply_string(&s, Determinant::from_occupied(&[0])).is_none());
    }

    #[test]
    fn hop_without_crossings() {
        let s = FermionString::new(1.0, vec![Ladder::create(1), Ladder::annihilate(0)]);
        let (amp, img) = apply_string(&s, Determinant::from_occupied(&[0])).unwrap();
        assert_eq!(amp, c(1.0));
        assert_eq!(img, Determinant::from_occupied(&[1]));
    }

    /// Antisymmetrized wedge products over a small orbital set: a determinant
    /// is the ordered tuple of its occupied indices, and ladder operators act
    /// by inserting/removing an index and re-sorting, counting transpositions.
    fn wedge_apply(factors: &[Ladder], occupied: &[usize]) -> Option<(f64, Vec<usize>)> {
        let mut tuple: Vec<usize> = occupied.to_vec();
        let mut sign = 1.0;
        for f in factors.iter().rev() {
            match f.action {
                Action::Create => {
                    if tuple.contains(&f.index) {
                        return None;
                    }
                    // a^p |i1 i2 ...> = |p i1 i2 ...>; bubble p into place
                    tuple.insert(0, f.index);
                    let mut k = 0;
                    while k + 1 < tuple.len() && tuple[k] > tuple[k + 1] {
                        tuple.swap(k, k + 1);
                        sign = -sign;
                        k += 1;
                    }
                }
                Action::Annihilate => {
                    let pos = tuple.iter().position(|&x| x == f.index)?;
                    // move to front then remove
                    for k in (0..pos).rev() {
                        tuple.swap(k, k + 1);
                        sign = -sign;
                    }
                    tuple.remove(0);
                }
            }
        }
        Some((sign, tuple))
    }

    #[test]
    fn sign_matches_wedge_oracle() {
        let s = FermionString::new(1.0, vec![Ladder::create(0), Ladder::annihilate(3)]);
        let det = Determinant::from_occupied(&[1, 2, 3]);
        let (amp, img) = apply_string(&s, det).unwrap();
        let (sign, tuple) = wedge_apply(&s.factors, &[1, 2, 3]).unwrap();
        assert_eq!(img, Determinant::from_occupied(&tuple));
        assert_eq!(amp.re, sign);
        assert_eq!(sign, 1.0);
    }

    #[test]
    fn wedge_oracle_exhaustive_pairs() {
        for p in 0..4 {
            for q in 0..4 {
                for r in 0..4 {
                    let fs = vec![Ladder::create(p), Ladder::create(q), Ladder::annihilate(r)];
                    let s = FermionString::new(1.0, fs.clone());
                    for mask in 0u64..16 {
                        let det = Determinant(mask);
                        let occ: Vec<usize> = det.occupied().collect();
                        let got = apply_string(&s, det);
                        let want = wedge_apply(&fs, &occ);
                        match (got, want) {
                            (None, None) => {}
                            (Some((a, d)), Some((sg, t))) => {
                                assert_eq!(d, Determinant::from_occupied(&t));
                                assert_eq!(a.re, sg);
                            }
                            other => panic!("mismatch {other:?}"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn number_operator_is_diagonal() {
        let b = full(2);
        let m = to_matrix(&number(2), &b);
        for (r, col, v) in m.matrix.iter() {
            assert_eq!(r, col);
            assert_eq!(v, c(1.0));
        }
        assert_eq!(m.matrix.nnz(), 8);
    }

    #[test]
    fn single_on_same_index_is_zero() {
        assert!(single(2, 2).is_zero());
    }

    #[test]
    fn spinorbital_single_is_anti_hermitian() {
        let b = full(2);
        let m = to_matrix(&single(0, 2), &b);
        assert!(m.frobenius_norm() > 1.0);
        assert_eq!(m.anti_hermiticity_defect(), 0.0);
    }

    #[test]
    fn anticommutators_as_matrices() {
        let b = full(3);
        let id = SparseMatrix::identity(b.len());
        for p in 0..6 {
            for q in 0..6 {
                let ap = OperatorSum::from_string(FermionString::new(1.0, vec![Ladder::annihilate(p)]));
                let cq = OperatorSum::from_string(FermionString::new(1.0, vec![Ladder::create(q)]));
                let a = matrix_on(&ap, &b);
                let cr = matrix_on(&cq, &b);
                let anti = a.mul(&cr).add(&cr.mul(&a));
                let want = if p == q { id.clone() } else { SparseMatrix::zeros(b.len(), b.len()) };
                assert!(anti.distance(&want) < 1e-14, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn s2_examples() {
        let s2 = s_squared_operator(3);
        let b = full(3);
        let m = to_matrix(&s2, &b);
        let closed = Determinant::aufbau(1, 1);
        let i = b.index_of(closed).unwrap();
        assert!(m.matrix.get(i, i).norm() < 1e-14);
        let one_up = b.index_of(Determinant::from_occupied(&[2])).unwrap();
        assert!((m.matrix.get(one_up, one_up).re - 0.75).abs() < 1e-14);
        let two_up = b.index_of(Determinant::from_occupied(&[0, 4])).unwrap();
        assert!((m.matrix.get(two_up, two_up).re - 2.0).abs() < 1e-14);
        assert!(m.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn leakage_is_reported() {
        let sector = Arc::new(enumerate_basis(2, &SymmetrySector::particles(1), None).unwrap());
        let raising = OperatorSum::from_string(FermionString::new(1.0, vec![Ladder::create(0)]));
        assert!(matches!(try_to_matrix(&raising, &sector), Err(Error::Leakage(_))));
        assert!(try_to_matrix(&single(0, 2), &sector).is_ok());
    }

    #[test]
    fn cache_reuses_matrices() {
        let cache = MatrixCache::new();
        let b = full(2);
        let a = cache.get(&single(0, 2), &b);
        let again = cache.get(&single(0, 2), &b);
        assert!(Arc::ptr_eq(&a, &again));
        assert_eq!(cache.len(), 1);
    }

    fn arb_string(width: usize) -> impl Strategy<Value = FermionString> {
        (
            -2.0f64..2.0,
            proptest::collection::vec((0..width, any::<bool>()), 0..5),
        )
            .prop_map(|(c, fs)| {
                let factors = fs
                    .into_iter()
                    .map(|(i, cr)| if cr { Ladder::create(i) } else { Ladder::annihilate(i) })
                    .collect();
                FermionString::new(c, factors)
            })
    }

    fn arb_sum(width: usize) -> impl Strategy<Value = Vec<FermionString>> {
        proptest::collection::vec(arb_string(width), 1..4)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn normal_ordering_preserves_action(strings in arb_sum(6)) {
            let b = FockBasis::full(3).unwrap();
            let op = OperatorSum::from_strings(strings.clone());
            let m = matrix_on(&op, &b);
            // per-string action summed over every basis column
            let mut trip = Vec::new();
            for (col, &d) in b.dets().iter().enumerate() {
                for s in &strings {
                    if let Some((a, img)) = apply_string(s, d) {
                        trip.push((b.index_of(img).unwrap(), col, a));
                    }
                }
            }
            let direct = SparseMatrix::from_triplets(b.len(), b.len(), trip);
            prop_assert!(m.distance(&direct) < 1e-12);
        }

        #[test]
        fn normalization_is_idempotent(strings in arb_sum(6)) {
            let op = OperatorSum::from_strings(strings);
            let again = OperatorSum::from_strings(op.strings());
            prop_assert_eq!(op, again);
        }

        #[test]
        fn adjoint_commutes_with_materialization(strings in arb_sum(6)) {
            let b = FockBasis::full(3).unwrap();
            let op = OperatorSum::from_strings(strings);
            let lhs = matrix_on(&op.adjoint(), &b);
            let rhs = matrix_on(&op, &b).adjoint();
            prop_assert!(lhs.distance(&rhs) < 1e-12);
        }

        #[test]
        fn products_match_matrix_products(a in arb_sum(6), bb in arb_sum(6)) {
            let basis = FockBasis::full(3).unwrap();
            let x = OperatorSum::from_strings(a);
            let y = OperatorSum::from_strings(bb);
            let lhs = matrix_on(&(&x * &y), &basis);
            let rhs = matrix_on(&x, &basis).mul(&matrix_on(&y, &basis));
            prop_assert!(lhs.distance(&rhs) < 1e-12);
        }
    }
}
