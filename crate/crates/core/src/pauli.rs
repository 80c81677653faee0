//! Jordan–Wigner encoding and Pauli-basis (LCU) decomposition.
//!
//! Qubit `q` is spinorbital `q` (flat index `2P + σ`). A string is stored as
//! two bitmasks: qubit `q` carries `X` if only bit `q` of `x` is set, `Z` if
//! only bit `q` of `z` is, `Y` if both. With `Y = iXZ` a string acts as
//! `|m⟩ ↦ i^{|x∧z|} (−1)^{|z∧m|} |m ⊕ x⟩`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::ClosedFormSpec;
use crate::fermiops::{Action, OperatorSum, SectorMatrix, PRUNE_TOL};
use crate::fock::FockBasis;
use crate::sparse::SparseMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn ipow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliString {
    pub coeff: Complex64,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        Self { coeff: Complex64::new(1.0, 0.0), x: 0, z: 0 }
    }

    pub fn letter(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }

    pub fn letters(&self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn parse_letters(s: &str) -> Result<(u64, u64)> {
        if s.len() > 64 {
            return Err(Error::Parse(format!("Pauli string wider than 64 qubits: {s}")));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, ch) in s.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => x |= 1 << q,
                'Z' => z |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                c => return Err(Error::Parse(format!("bad Pauli letter '{c}' in {s}"))),
            }
        }
        Ok((x, z))
    }

    /// Image and phase of a computational basis state (coefficient excluded).
    pub fn act(x: u64, z: u64, m: u64) -> (u64, Complex64) {
        let mut ph = ipow((x & z).count_ones() as i64);
        if (z & m).count_ones() % 2 == 1 {
            ph = -ph;
        }
        (m ^ x, ph)
    }

    pub fn commutes_with(&self, o: &PauliString) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()).is_multiple_of(2)
    }
}

/// `(x1,z1)(x2,z2) = phase · (x1⊕x2, z1⊕z2)`.
fn string_product(x1: u64, z1: u64, x2: u64, z2: u64) -> (u64, u64, Complex64) {
    let (x, z) = (x1 ^ x2, z1 ^ z2);
    let k = (x1 & z1).count_ones() as i64 + (x2 & z2).count_ones() as i64 - (x & z).count_ones() as i64
        + 2 * (z1 & x2).count_ones() as i64;
    (x, z, ipow(k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub n_qubits: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_strings(n_qubits, [PauliString::identity()])
    }

    pub fn from_strings(n_qubits: usize, strings: impl IntoIterator<Item = PauliString>) -> Self {
        let mut s = Self::zero(n_qubits);
        for p in strings {
            *s.terms.entry((p.x, p.z)).or_default() += p.coeff;
        }
        s.prune();
        s
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE_TOL);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn strings(&self) -> impl Iterator<Item = PauliString> + '_ {
        self.terms.iter().map(|(&(x, z), &coeff)| PauliString { coeff, x, z })
    }

    pub fn coeff(&self, letters: &str) -> Result<Complex64> {
        let k = PauliString::parse_letters(letters)?;
        Ok(self.terms.get(&k).copied().unwrap_or_default())
    }

    /// Sum of coefficient moduli, the LCU normalization.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut s = Self { n_qubits: self.n_qubits, terms: self.terms.iter().map(|(k, c)| (*k, c * a)).collect() };
        s.prune();
        s
    }

    pub fn add(&self, o: &PauliSum) -> Self {
        let mut s = self.clone();
        s.n_qubits = s.n_qubits.max(o.n_qubits);
        for (k, c) in &o.terms {
            *s.terms.entry(*k).or_default() += c;
        }
        s.prune();
        s
    }

    pub fn sub(&self, o: &PauliSum) -> Self {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, o: &PauliSum) -> Self {
        let mut s = Self::zero(self.n_qubits.max(o.n_qubits));
        for (&(x1, z1), c1) in &self.terms {
            for (&(x2, z2), c2) in &o.terms {
                let (x, z, ph) = string_product(x1, z1, x2, z2);
                *s.terms.entry((x, z)).or_default() += c1 * c2 * ph;
            }
        }
        s.prune();
        s
    }

    pub fn adjoint(&self) -> Self {
        Self { n_qubits: self.n_qubits, terms: self.terms.iter().map(|(k, c)| (*k, c.conj())).collect() }
    }

    pub fn max_diff(&self, o: &PauliSum) -> f64 {
        self.sub(o).terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn pairwise_commute(&self) -> bool {
        let v: Vec<PauliString> = self.strings().collect();
        v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    /// Matrix on the computational basis, row/column index = occupation mask.
    pub fn matrix(&self) -> SparseMatrix {
        let dim = 1usize << self.n_qubits;
        let mut trip = Vec::with_capacity(dim * self.len());
        for m in 0..dim as u64 {
            for (&(x, z), c) in &self.terms {
                let (img, ph) = PauliString::act(x, z, m);
                trip.push((img as usize, m as usize, c * ph));
            }
        }
        SparseMatrix::from_triplets(dim, dim, trip)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in self.strings() {
            out.push_str(&format!("{:?} {:?} {}\n", p.coeff.re, p.coeff.im, p.letters(self.n_qubits)));
        }
        out
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut strings = Vec::new();
        for (ln, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `<re> <im> <letters>`", ln + 1)));
            }
            let num = |t: &str| t.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)));
            let (re, im) = (num(f[0])?, num(f[1])?);
            let width = f[2].chars().count();
            if *n.get_or_insert(width) != width {
                return Err(Error::Parse(format!("line {}: width {width} differs from earlier lines", ln + 1)));
            }
            let (x, z) = PauliString::parse_letters(f[2])?;
            strings.push(PauliString { coeff: Complex64::new(re, im), x, z });
        }
        Ok(PauliSum::from_strings(n.unwrap_or(0), strings))
    }
}

/// Jordan–Wigner image of a single ladder operator:
/// `a^p = (X_p − iY_p)/2 · Z_{<p}`, `a_p = (X_p + iY_p)/2 · Z_{<p}`.
pub fn jw_ladder(index: usize, action: Action, n_qubits: usize) -> PauliSum {
    let chain = (1u64 << index) - 1;
    let bit = 1u64 << index;
    let sign = match action {
        Action::Create => -1.0,
        Action::Annihilate => 1.0,
    };
    PauliSum::from_strings(
        n_qubits,
        [
            PauliString { coeff: Complex64::new(0.5, 0.0), x: bit, z: chain },
            PauliString { coeff: Complex64::new(0.0, 0.5 * sign), x: bit, z: chain | bit },
        ],
    )
}

pub fn jordan_wigner(op: &OperatorSum, n_qubits: usize) -> PauliSum {
    op.strings()
        .map(|s| {
            s.factors
                .iter()
                .fold(PauliSum::identity(n_qubits), |acc, l| acc.mul(&jw_ladder(l.index, l.action, n_qubits)))
                .scale(s.coeff)
        })
        .fold(PauliSum::zero(n_qubits), |a, b| a.add(&b))
}

/// Pauli coefficients `Tr(P† U)/2^n` of a matrix on the full Fock space.
pub fn lcu_decompose(u: &SectorMatrix) -> Result<PauliSum> {
    let n = u.basis.n_spinorbitals();
    let dim = u.basis.len();
    if dim != 1usize << n {
        return Err(Error::Dimension(format!(
            "LCU needs the full 2^{n} = {} dimensional Fock space, got {dim}",
            1usize << n
        )));
    }
    // full basis is ordered by mask, so local index = mask
    let mut by_x: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
    for (r, c, v) in u.matrix.iter() {
        let m = u.basis.det(c).0;
        let img = u.basis.det(r).0;
        by_x.entry(img ^ m).or_insert_with(|| vec![Complex64::default(); dim])[m as usize] = v;
    }
    let norm = 1.0 / dim as f64;
    let strings: Vec<PauliString> = by_x
        .into_par_iter()
        .flat_map_iter(|(x, mut f)| {
            walsh_hadamard(&mut f);
            f.into_iter().enumerate().map(move |(z, s)| {
                let z = z as u64;
                PauliString { coeff: ipow(-((x & z).count_ones() as i64)) * s * norm, x, z }
            })
        })
        .filter(|p| p.coeff.norm() >= PRUNE_TOL)
        .collect();
    Ok(PauliSum::from_strings(n, strings))
}

/// LCU of a closed form evaluated at θ on the full Fock space of `n_spatial` orbitals.
pub fn lcu_closed_form(spec: &ClosedFormSpec, theta: f64, n_spatial: usize) -> Result<PauliSum> {
    let basis = Arc::new(FockBasis::full(n_spatial)?);
    lcu_decompose(&spec.materialize(&basis).eval(theta))
}

/// In-place `f(z) ← Σ_m (−1)^{z·m} f(m)`.
fn walsh_hadamard(f: &mut [Complex64]) {
    let mut h = 1;
    while h < f.len() {
        for i in (0..f.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
}
