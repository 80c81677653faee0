//! Occupation-number bases over spatial orbitals and their symmetry sectors.
//!
//! Spinorbitals are interleaved: spatial orbital `P` owns flat indices `2P`
//! (spin up) and `2P + 1` (spin down). A [`Determinant`] is a bitmask over
//! these flat indices.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fermiops::{matrix_on, s_squared_operator};

/// Default cap on the number of spatial orbitals a basis may span.
pub const DEFAULT_MAX_SPATIAL: usize = 14;

/// Tolerance used when classifying eigenvalues of S².
pub const TOL_EIG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital {
    pub spatial: usize,
    pub spin: Spin,
}

impl SpinOrbital {
    pub fn new(spatial: usize, spin: Spin) -> Self {
        Self { spatial, spin }
    }

    pub fn up(spatial: usize) -> Self {
        Self::new(spatial, Spin::Up)
    }

    pub fn down(spatial: usize) -> Self {
        Self::new(spatial, Spin::Down)
    }

    pub fn flat(self) -> usize {
        2 * self.spatial + usize::from(self.spin == Spin::Down)
    }

    pub fn from_flat(index: usize) -> Self {
        let spin = if index.is_multiple_of(2) { Spin::Up } else { Spin::Down };
        Self::new(index / 2, spin)
    }
}

impl fmt::Display for SpinOrbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.spin {
            Spin::Up => "↑",
            Spin::Down => "↓",
        };
        write!(f, "{}{}", self.spatial, arrow)
    }
}

/// Even bits of a mask: the spin-up spinorbitals.
const UP_MASK: u64 = 0x5555_5555_5555_5555;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Determinant(pub u64);

impl Determinant {
    pub fn from_occupied(flat: &[usize]) -> Self {
        Self(flat.iter().fold(0u64, |m, &i| m | (1u64 << i)))
    }

    /// Aufbau filling of the lowest `n_up` up and `n_down` down spinorbitals.
    pub fn aufbau(n_up: usize, n_down: usize) -> Self {
        let mut m = 0u64;
        for p in 0..n_up {
            m |= 1 << (2 * p);
        }
        for p in 0..n_down {
            m |= 1 << (2 * p + 1);
        }
        Self(m)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn is_occupied(self, flat: usize) -> bool {
        self.0 >> flat & 1 == 1
    }

    pub fn n_electrons(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn n_up(self) -> usize {
        (self.0 & UP_MASK).count_ones() as usize
    }

    pub fn n_down(self) -> usize {
        (self.0 & !UP_MASK).count_ones() as usize
    }

    /// Twice the spin projection, `n_up - n_down`.
    pub fn two_sz(self) -> i32 {
        self.n_up() as i32 - self.n_down() as i32
    }

    pub fn sz(self) -> f64 {
        0.5 * f64::from(self.two_sz())
    }

    pub fn occupied(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }
}

/// Symmetry constraints; any subset may be active.
///
/// `two_sz` stores twice the spin projection so that half-integer values stay
/// exact. `s2` is the eigenvalue S(S+1) and only applies to
/// [`s2_sector_dimension`], never to determinant filtering.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymmetrySector {
    pub n: Option<usize>,
    pub two_sz: Option<i32>,
    pub irrep: Option<u8>,
    pub s2: Option<f64>,
}

impl SymmetrySector {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn particles(n: usize) -> Self {
        Self { n: Some(n), ..Self::default() }
    }

    pub fn with_sz(mut self, sz: f64) -> Self {
        self.two_sz = Some((2.0 * sz).round() as i32);
        self
    }

    pub fn with_two_sz(mut self, two_sz: i32) -> Self {
        self.two_sz = Some(two_sz);
        self
    }

    pub fn with_irrep(mut self, irrep: u8) -> Self {
        self.irrep = Some(irrep);
        self
    }

    pub fn with_s2(mut self, s2: f64) -> Self {
        self.s2 = Some(s2);
        self
    }

    pub fn admits(&self, det: Determinant, orb_irreps: Option<&[u8]>) -> bool {
        if let Some(n) = self.n {
            if det.n_electrons() != n {
                return false;
            }
        }
        if let Some(tsz) = self.two_sz {
            if det.two_sz() != tsz {
                return false;
            }
        }
        if let (Some(target), Some(irreps)) = (self.irrep, orb_irreps) {
            if determinant_irrep(det, irreps) != target {
                return false;
            }
        }
        true
    }
}

static NEXT_BASIS_ID: AtomicU64 = AtomicU64::new(1);

/// Ordered list of determinants with a reverse lookup.
#[derive(Debug, Clone)]
pub struct FockBasis {
    id: u64,
    n_spatial: usize,
    dets: Vec<Determinant>,
    index_of: HashMap<u64, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_spatial == other.n_spatial && self.dets == other.dets
    }
}

impl FockBasis {
    /// Builds a basis from arbitrary determinants; they are sorted and
    /// deduplicated.
    pub fn from_determinants(n_spatial: usize, mut dets: Vec<Determinant>) -> Result<Self> {
        check_width(n_spatial)?;
        let width = 2 * n_spatial;
        if let Some(d) = dets.iter().find(|d| width < 64 && d.0 >> width != 0) {
            return Err(Error::Config(format!(
                "determinant {:#b} exceeds {width} spinorbitals",
                d.0
            )));
        }
        dets.sort_unstable();
        dets.dedup();
        let index_of = dets.iter().enumerate().map(|(i, d)| (d.0, i)).collect();
        Ok(Self {
            id: NEXT_BASIS_ID.fetch_add(1, Ordering::Relaxed),
            n_spatial,
            dets,
            index_of,
        })
    }

    /// All 4^n_spatial determinants.
    pub fn full(n_spatial: usize) -> Result<Self> {
        enumerate_basis(n_spatial, &SymmetrySector::all(), None)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_spinorbitals(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn dets(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn det(&self, i: usize) -> Determinant {
        self.dets[i]
    }

    pub fn index_of(&self, det: Determinant) -> Option<usize> {
        self.index_of.get(&det.0).copied()
    }

    /// Index lists grouping the basis by (N, 2Sz), in ascending (N, 2Sz) order.
    pub fn n_sz_blocks(&self) -> Vec<Vec<usize>> {
        let mut groups: std::collections::BTreeMap<(usize, i32), Vec<usize>> = Default::default();
        for (i, d) in self.dets.iter().enumerate() {
            groups.entry((d.n_electrons(), d.two_sz())).or_default().push(i);
        }
        groups.into_values().collect()
    }
}

fn check_width(n_spatial: usize) -> Result<()> {
    if n_spatial == 0 {
        return Err(Error::Config("n_spatial must be at least 1".into()));
    }
    if n_spatial > 31 {
        return Err(Error::Config(format!(
            "n_spatial = {n_spatial} exceeds the 64-bit determinant width"
        )));
    }
    Ok(())
}

/// Spreads the low bits of `m` onto even bit positions.
fn spread_even(m: u64) -> u64 {
    let mut out = 0u64;
    let mut rest = m;
    while rest != 0 {
        let p = rest.trailing_zeros();
        out |= 1 << (2 * p);
        rest &= rest - 1;
    }
    out
}

fn strings_with_popcount(n_spatial: usize, count: usize) -> impl Iterator<Item = u64> {
    (0u64..1 << n_spatial).filter(move |m| m.count_ones() as usize == count)
}

/// Enumerates all determinants over `n_spatial` spatial orbitals satisfying the
/// active N / Sz / irrep constraints, in ascending mask order.
pub fn enumerate_basis(
    n_spatial: usize,
    filter: &SymmetrySector,
    orb_irreps: Option<&[u8]>,
) -> Result<FockBasis> {
    enumerate_basis_capped(n_spatial, filter, orb_irreps, DEFAULT_MAX_SPATIAL)
}

pub fn enumerate_basis_capped(
    n_spatial: usize,
    filter: &SymmetrySector,
    orb_irreps: Option<&[u8]>,
    max_spatial: usize,
) -> Result<FockBasis> {
    check_width(n_spatial)?;
    if n_spatial > max_spatial {
        return Err(Error::Config(format!(
            "n_spatial = {n_spatial} exceeds the configured cap of {max_spatial}"
        )));
    }
    if filter.s2.is_some() {
        return Err(Error::Config(
            "S^2 is not a determinant filter; use s2_sector_dimension".into(),
        ));
    }
    if filter.irrep.is_some() {
        match orb_irreps {
            None => {
                return Err(Error::Config(
                    "irrep filter requested without an orbital irrep table".into(),
                ))
            }
            Some(t) if t.len() < n_spatial => {
                return Err(Error::Config(format!(
                    "orbital irrep table covers {} of {n_spatial} orbitals",
                    t.len()
                )))
            }
            _ => {}
        }
    }

    let mut dets = Vec::new();
    for n_up in 0..=n_spatial {
        for n_down in 0..=n_spatial {
            if let Some(n) = filter.n {
                if n_up + n_down != n {
                    continue;
                }
            }
            if let Some(tsz) = filter.two_sz {
                if n_up as i32 - n_down as i32 != tsz {
                    continue;
                }
            }
            for a in strings_with_popcount(n_spatial, n_up) {
                let up = spread_even(a);
                for b in strings_with_popcount(n_spatial, n_down) {
                    let det = Determinant(up | spread_even(b) << 1);
                    if filter.admits(det, orb_irreps) {
                        dets.push(det);
                    }
                }
            }
        }
    }
    FockBasis::from_determinants(n_spatial, dets)
}

/// Irrep label of a determinant: XOR of the labels of the spatial orbitals of
/// its occupied spinorbitals.
pub fn determinant_irrep(det: Determinant, orb_irreps: &[u8]) -> u8 {
    det.occupied().fold(0u8, |acc, i| acc ^ orb_irreps[i / 2])
}

/// Multiplicity of the S² eigenvalue S(S+1) on `basis`.
pub fn s2_sector_dimension(basis: &FockBasis, total_spin: f64) -> Result<usize> {
    if basis.is_empty() {
        return Ok(0);
    }
    let target = total_spin * (total_spin + 1.0);
    let s2 = matrix_on(&s_squared_operator(basis.n_spatial()), basis);
    let dense: DMatrix<f64> = s2.to_dense().map(|z| z.re);
    let dim = dense.nrows();
    let eig = SymmetricEigen::try_new(dense.clone(), 1e-15, 10_000 * dim.max(1)).ok_or_else(|| {
        Error::Eigen { what: "S^2 eigensolve did not converge".into(), residual: f64::NAN }
    })?;
    let recon = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues)
        * eig.eigenvectors.transpose();
    let residual = (recon - &dense).norm();
    if residual > 1e-8 * (1.0 + dense.norm()) {
        return Err(Error::Eigen { what: "S^2 eigendecomposition".into(), residual });
    }
    Ok(eig.eigenvalues.iter().filter(|&&l| (l - target).abs() < TOL_EIG).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_is_interleaved() {
        assert_eq!(SpinOrbital::up(3).flat(), 6);
        assert_eq!(SpinOrbital::down(3).flat(), 7);
        for i in 0..24 {
            assert_eq!(SpinOrbital::from_flat(i).flat(), i);
        }
    }

    #[test]
    fn six_orbital_sector_dimensions() {
        let h6 = [0u8, 4, 0, 4, 0, 4];
        assert_eq!(FockBasis::full(6).unwrap().len(), 4096);
        let n6 = enumerate_basis(6, &SymmetrySector::particles(6), None).unwrap();
        assert_eq!(n6.len(), 924);
        let sz0 = SymmetrySector::particles(6).with_sz(0.0);
        assert_eq!(enumerate_basis(6, &sz0, None).unwrap().len(), 400);
        let ag = enumerate_basis(6, &sz0.with_irrep(0), Some(&h6)).unwrap();
        assert_eq!(ag.len(), 200);
    }

    #[test]
    fn irrep_filter_needs_table() {
        let f = SymmetrySector::particles(2).with_irrep(0);
        assert!(matches!(enumerate_basis(2, &f, None), Err(Error::Config(_))));
    }

    #[test]
    fn s2_filter_is_rejected() {
        let f = SymmetrySector::particles(2).with_s2(0.0);
        assert!(enumerate_basis(2, &f, None).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(enumerate_basis_capped(5, &SymmetrySector::all(), None, 4).is_err());
    }

    #[test]
    fn irrep_examples() {
        assert_eq!(determinant_irrep(Determinant(0), &[3, 5]), 0);
        // both spins of one orbital
        assert_eq!(determinant_irrep(Determinant::from_occupied(&[0, 1]), &[3, 5]), 0);
        assert_eq!(determinant_irrep(Determinant::from_occupied(&[0, 2]), &[3, 5]), 6);
    }

    #[test]
    fn basis_order_and_lookup() {
        let b = FockBasis::full(3).unwrap();
        assert!(b.dets().windows(2).all(|w| w[0] < w[1]));
        for (i, d) in b.dets().iter().enumerate() {
            assert_eq!(b.index_of(*d), Some(i));
        }
    }

    #[test]
    fn s2_small_sectors() {
        let closed = FockBasis::from_determinants(2, vec![Determinant::aufbau(1, 1)]).unwrap();
        assert_eq!(s2_sector_dimension(&closed, 0.0).unwrap(), 1);
        let triplet = enumerate_basis(2, &SymmetrySector::particles(2).with_sz(1.0), None).unwrap();
        assert_eq!(s2_sector_dimension(&triplet, 0.0).unwrap(), 0);
        assert_eq!(s2_sector_dimension(&triplet, 1.0).unwrap(), 1);
    }
}
