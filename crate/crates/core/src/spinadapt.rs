//! Singlet spin-adapted excitation generators and GSD / saGSD operator pools.
//!
//! Spatial orbitals are upper-case `P, Q, R, S`; a spin-adapted double
//! `^{[S_i]}A_{PQ}^{RS}` couples the lower pair and the upper pair to a common
//! intermediate spin `S_i` and then to a total singlet.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fermiops::{double, single, OperatorSum};
use crate::fock::{Spin, SpinOrbital};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    Single,
    DoublePPQQ,
    DoublePPQR,
    DoubleS0,
    DoubleS1,
    TripletT,
    SpinorbitalSingle,
    SpinorbitalDouble,
}

impl GeneratorKind {
    pub fn label(self) -> &'static str {
        match self {
            GeneratorKind::Single => "single",
            GeneratorKind::DoublePPQQ => "double_pp_qq",
            GeneratorKind::DoublePPQR => "double_pp_qr",
            GeneratorKind::DoubleS0 => "double_s0",
            GeneratorKind::DoubleS1 => "double_s1",
            GeneratorKind::TripletT => "triplet_t",
            GeneratorKind::SpinorbitalSingle => "so_single",
            GeneratorKind::SpinorbitalDouble => "so_double",
        }
    }

    /// Kinds built from spinorbital (not spatial) indices.
    pub fn is_spinorbital(self) -> bool {
        matches!(self, GeneratorKind::SpinorbitalSingle | GeneratorKind::SpinorbitalDouble)
    }

    pub fn is_singlet(self) -> bool {
        !matches!(self, GeneratorKind::TripletT) && !self.is_spinorbital()
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An anti-Hermitian pool generator.
///
/// `indices` are spatial orbitals `[P, Q]` or `[P, Q, R, S]` for spin-adapted
/// kinds and flat spinorbital indices for the spinorbital kinds.
#[derive(Debug, Clone)]
pub struct SpinAdaptedGenerator {
    pub kind: GeneratorKind,
    pub indices: Vec<usize>,
    pub s_i: Option<u8>,
    pub body: OperatorSum,
}

impl SpinAdaptedGenerator {
    /// XOR of the orbital irreps over the generator's indices.
    pub fn irrep(&self, orb_irreps: &[u8]) -> u8 {
        let spatial = |i: usize| if self.kind.is_spinorbital() { i / 2 } else { i };
        self.indices.iter().fold(0, |acc, &i| acc ^ orb_irreps[spatial(i)])
    }

    pub fn label(&self) -> String {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        match self.s_i {
            Some(s) => format!("{}[{}]({})", self.kind, s, idx.join(",")),
            None => format!("{}({})", self.kind, idx.join(",")),
        }
    }

    /// Largest spatial orbital index touched.
    pub fn max_spatial(&self) -> usize {
        self.body.max_index().map(|i| i / 2).unwrap_or(0)
    }
}

fn so(p: usize, s: Spin) -> usize {
    SpinOrbital::new(p, s).flat()
}

fn up(p: usize) -> usize {
    so(p, Spin::Up)
}

fn dn(p: usize) -> usize {
    so(p, Spin::Down)
}

/// `A_{P↑ Q↓}^{R↑ S↓}`-style spinorbital double with explicit spins.
fn sdouble(p: (usize, Spin), q: (usize, Spin), r: (usize, Spin), s: (usize, Spin)) -> OperatorSum {
    double(so(p.0, p.1), so(q.0, q.1), so(r.0, r.1), so(s.0, s.1))
}

/// `(A_{P↓}^{Q↓} + A_{P↑}^{Q↑}) / √2`.
pub fn singlet_single(p: usize, q: usize) -> Result<SpinAdaptedGenerator> {
    if p == q {
        return Err(Error::Degenerate(format!("A_{p}^{q} vanishes for equal spatial indices")));
    }
    let body = (&single(dn(p), dn(q)) + &single(up(p), up(q))).scale(FRAC_1_SQRT_2);
    Ok(SpinAdaptedGenerator { kind: GeneratorKind::Single, indices: vec![p, q], s_i: None, body })
}

/// `<1/2 m1 1/2 m2 | S M>` with `m = ±1/2` encoded as spin labels.
pub fn clebsch_gordan(m1: Spin, m2: Spin, s: u8, two_m: i32) -> f64 {
    let mz = |x: Spin| if x == Spin::Up { 1 } else { -1 };
    if mz(m1) + mz(m2) != two_m {
        return 0.0;
    }
    match (s, two_m) {
        (0, 0) => {
            if m1 == Spin::Up {
                FRAC_1_SQRT_2
            } else {
                -FRAC_1_SQRT_2
            }
        }
        (1, 2) | (1, -2) => 1.0,
        (1, 0) => FRAC_1_SQRT_2,
        _ => 0.0,
    }
}

fn classify(p: usize, q: usize, r: usize, s: usize, s_i: u8) -> GeneratorKind {
    match (s_i, p == q, r == s) {
        (1, _, _) => GeneratorKind::DoubleS1,
        (_, true, true) => GeneratorKind::DoublePPQQ,
        (_, true, false) | (_, false, true) => GeneratorKind::DoublePPQR,
        _ => GeneratorKind::DoubleS0,
    }
}

/// Clebsch–Gordan coupled singlet double `^{[S_i]}A_{PQ}^{RS}`.
pub fn singlet_double_cg(p: usize, q: usize, r: usize, s: usize, s_i: u8) -> Result<SpinAdaptedGenerator> {
    if s_i > 1 {
        return Err(Error::Config(format!("intermediate spin must be 0 or 1, got {s_i}")));
    }
    if s_i == 1 && (p == q || r == s) {
        return Err(Error::Degenerate(format!(
            "intermediate triplet needs distinct lower and upper indices, got ({p},{q})->({r},{s})"
        )));
    }
    let norm = 1.0 / (((1 + (p == q) as u8) * (1 + (r == s) as u8)) as f64).sqrt();
    let mult = 1.0 / f64::from(2 * s_i + 1).sqrt();
    let spins = [Spin::Up, Spin::Down];
    let mut body = OperatorSum::zero();
    for &sp in &spins {
        for &sq in &spins {
            for &sr in &spins {
                for &ss in &spins {
                    let mut c = 0.0;
                    for two_m in (-2 * i32::from(s_i)..=2 * i32::from(s_i)).step_by(2) {
                        c += clebsch_gordan(sp, sq, s_i, two_m) * clebsch_gordan(sr, ss, s_i, two_m);
                    }
                    if c != 0.0 {
                        let t = sdouble((p, sp), (q, sq), (r, sr), (s, ss));
                        body = &body + &t.scale(c);
                    }
                }
            }
        }
    }
    let body = body.scale(norm * mult);
    if body.is_zero() {
        return Err(Error::Degenerate(format!(
            "^[{s_i}]A_({p},{q})^({r},{s}) is the zero operator"
        )));
    }
    let kind = classify(p, q, r, s, s_i);
    Ok(SpinAdaptedGenerator { kind, indices: vec![p, q, r, s], s_i: Some(s_i), body })
}

/// Applicable spin-adapted doubles for an index pattern: the `S_i = 0`
/// generator (perfect pairing, one repeated pair, or generic) and, when both
/// pairs are distinct, the `S_i = 1` generator.
pub fn double_cases(p: usize, q: usize, r: usize, s: usize) -> Vec<SpinAdaptedGenerator> {
    let mut out = Vec::new();
    if let Ok(g) = singlet_double_cg(p, q, r, s, 0) {
        out.push(g);
    }
    if p != q && r != s {
        if let Ok(g) = singlet_double_cg(p, q, r, s, 1) {
            out.push(g);
        }
    }
    out
}

/// `T = (A_{P↑P↓}^{Q↑R↓} + A_{P↑P↓}^{Q↓R↑}) / √2`, the triplet partner of
/// `A_{PP}^{QR}`.
pub fn triplet_double_ppqr(p: usize, q: usize, r: usize) -> Result<SpinAdaptedGenerator> {
    if q == r {
        return Err(Error::Degenerate(format!("triplet T needs Q != R, got Q = R = {q}")));
    }
    let a = double(up(p), dn(p), up(q), dn(r));
    let b = double(up(p), dn(p), dn(q), up(r));
    let body = (&a + &b).scale(FRAC_1_SQRT_2);
    Ok(SpinAdaptedGenerator { kind: GeneratorKind::TripletT, indices: vec![p, p, q, r], s_i: None, body })
}

/// The two spinorbital pieces of `A_{PP}^{QR}`: `(A_{P↑P↓}^{Q↑R↓}, A_{P↑P↓}^{Q↓R↑})`.
pub fn ppqr_pieces(p: usize, q: usize, r: usize) -> (OperatorSum, OperatorSum) {
    (double(up(p), dn(p), up(q), dn(r)), double(up(p), dn(p), dn(q), up(r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symmetry {
    N,
    Sz,
    PointGroup,
    S2,
}

#[derive(Debug, Clone)]
pub struct PoolSpec {
    pub n_spatial: usize,
    pub orb_irreps: Option<Vec<u8>>,
    pub enforce: BTreeSet<Symmetry>,
}

impl PoolSpec {
    pub fn new(n_spatial: usize, orb_irreps: Option<Vec<u8>>, enforce: &[Symmetry]) -> Self {
        let mut set: BTreeSet<Symmetry> = enforce.iter().copied().collect();
        set.insert(Symmetry::N);
        Self { n_spatial, orb_irreps, enforce: set }
    }

    pub fn enforces(&self, s: Symmetry) -> bool {
        self.enforce.contains(&s)
    }

    fn irreps(&self) -> Result<Option<&[u8]>> {
        if !self.enforces(Symmetry::PointGroup) {
            return Ok(None);
        }
        let irr = self
            .orb_irreps
            .as_deref()
            .ok_or_else(|| Error::Config("point-group enforcement needs orbital irreps".into()))?;
        if irr.len() < self.n_spatial {
            return Err(Error::Config(format!(
                "{} orbital irreps given for {} spatial orbitals",
                irr.len(),
                self.n_spatial
            )));
        }
        Ok(Some(irr))
    }
}

fn symmetric(irr: Option<&[u8]>, spatial: &[usize]) -> bool {
    irr.is_none_or(|t| spatial.iter().fold(0, |a, &i| a ^ t[i]) == 0)
}

/// Builds a GSD pool (spinorbital generators) or, when S² is enforced, a
/// saGSD pool.
///
/// * N only: singles `p<q` and doubles over four distinct spinorbitals (three
///   pairings per quadruple).
/// * with Sz: same-spin singles and every unordered pair of distinct
///   spinorbital pairs with matching total Sz; the pairs may share an index.
/// * with S²: spatial singles `P<Q` and spin-adapted doubles over every
///   ordered (lower, upper) pair of distinct spatial pairs `P<=Q`, `R<=S`.
pub fn build_pool(spec: &PoolSpec) -> Result<Vec<SpinAdaptedGenerator>> {
    let irr = spec.irreps()?;
    if spec.enforces(Symmetry::S2) {
        return Ok(sagsd_pool(spec.n_spatial, irr));
    }
    let n_so = 2 * spec.n_spatial;
    let spin = |i: usize| i % 2;
    let sz_ok = |lower: &[usize], upper: &[usize]| {
        !spec.enforces(Symmetry::Sz)
            || lower.iter().map(|&i| spin(i)).sum::<usize>() == upper.iter().map(|&i| spin(i)).sum::<usize>()
    };
    let sym_ok = |idx: &[usize]| symmetric(irr, &idx.iter().map(|i| i / 2).collect::<Vec<_>>());

    let mut pool = Vec::new();
    for p in 0..n_so {
        for q in p + 1..n_so {
            if sz_ok(&[p], &[q]) && sym_ok(&[p, q]) {
                pool.push(SpinAdaptedGenerator {
                    kind: GeneratorKind::SpinorbitalSingle,
                    indices: vec![p, q],
                    s_i: None,
                    body: single(p, q),
                });
            }
        }
    }

    let mut quads: Vec<[usize; 4]> = Vec::new();
    if spec.enforces(Symmetry::Sz) {
        let pairs: Vec<(usize, usize)> =
            (0..n_so).flat_map(|p| (p + 1..n_so).map(move |q| (p, q))).collect();
        for (i, &(p, q)) in pairs.iter().enumerate() {
            for &(r, s) in &pairs[i + 1..] {
                quads.push([p, q, r, s]);
            }
        }
    } else {
        for a in 0..n_so {
            for b in a + 1..n_so {
                for c in b + 1..n_so {
                    for d in c + 1..n_so {
                        quads.extend([[a, b, c, d], [a, c, b, d], [a, d, b, c]]);
                    }
                }
            }
        }
    }
    let doubles: Vec<SpinAdaptedGenerator> = quads
        .into_par_iter()
        .filter(|&[p, q, r, s]| sz_ok(&[p, q], &[r, s]) && sym_ok(&[p, q, r, s]))
        .map(|[p, q, r, s]| SpinAdaptedGenerator {
            kind: GeneratorKind::SpinorbitalDouble,
            indices: vec![p, q, r, s],
            s_i: None,
            body: double(p, q, r, s),
        })
        .collect();
    pool.extend(doubles);
    Ok(pool)
}

fn sagsd_pool(n: usize, irr: Option<&[u8]>) -> Vec<SpinAdaptedGenerator> {
    let mut pool = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if symmetric(irr, &[p, q]) {
                pool.push(singlet_single(p, q).expect("distinct indices"));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
    let mut quads = Vec::new();
    for &(p, q) in &pairs {
        for &(r, s) in &pairs {
            if (p, q) != (r, s) && symmetric(irr, &[p, q, r, s]) {
                quads.push((p, q, r, s));
            }
        }
    }
    let doubles: Vec<Vec<SpinAdaptedGenerator>> =
        quads.into_par_iter().map(|(p, q, r, s)| double_cases(p, q, r, s)).collect();
    pool.extend(doubles.into_iter().flatten());
    pool
}

/// Number of pool members that are distinct up to an overall sign.
pub fn unique_up_to_sign(pool: &[SpinAdaptedGenerator]) -> usize {
    let mut seen = std::collections::HashSet::new();
    for g in pool {
        let a = g.body.fingerprint();
        let b = g.body.scale(-1.0).fingerprint();
        seen.insert(a.min(b));
    }
    seen.len()
}

/// CSV dump with columns `kind,P,Q,R,S,S_i,irrep`.
pub fn pool_csv(pool: &[SpinAdaptedGenerator], orb_irreps: Option<&[u8]>) -> String {
    let mut out = String::from("kind,P,Q,R,S,S_i,irrep\n");
    for g in pool {
        let mut cols: Vec<String> = g.indices.iter().map(|i| i.to_string()).collect();
        cols.resize(4, String::new());
        let s_i = g.s_i.map(|s| s.to_string()).unwrap_or_default();
        let irrep = orb_irreps.map(|t| g.irrep(t).to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", g.kind, cols.join(","), s_i, irrep).unwrap();
    }
    out
}

/// One row of the pool/Hilbert-space census.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolStats {
    pub label: String,
    pub operators: usize,
    pub unique_up_to_sign: usize,
    pub hilbert_dim: usize,
}

/// Pool sizes and sector dimensions for the (N), (N, Sz), (N, Sz, point
/// group) and (N, Sz, point group, S²) symmetry sets. The irrep and spin of
/// the target sector are those of the aufbau determinant.
pub fn pool_stats(n_spatial: usize, n_up: usize, n_down: usize, orb_irreps: &[u8]) -> Result<Vec<PoolStats>> {
    use crate::fock::{determinant_irrep, enumerate_basis, s2_sector_dimension, Determinant, SymmetrySector};
    let reference = Determinant::aufbau(n_up, n_down);
    let irrep = determinant_irrep(reference, orb_irreps);
    let n = n_up + n_down;
    let two_sz = n_up as i32 - n_down as i32;
    let sets: [(&str, &[Symmetry]); 4] = [
        ("N", &[]),
        ("N+Sz", &[Symmetry::Sz]),
        ("N+Sz+PG", &[Symmetry::Sz, Symmetry::PointGroup]),
        ("N+Sz+PG+S2", &[Symmetry::Sz, Symmetry::PointGroup, Symmetry::S2]),
    ];
    let pg_basis = enumerate_basis(
        n_spatial,
        &SymmetrySector::particles(n).with_two_sz(two_sz).with_irrep(irrep),
        Some(orb_irreps),
    )?;
    let mut rows = Vec::new();
    for (label, sym) in sets {
        let pool = build_pool(&PoolSpec::new(n_spatial, Some(orb_irreps.to_vec()), sym))?;
        let hilbert_dim = match label {
            "N" => enumerate_basis(n_spatial, &SymmetrySector::particles(n), None)?.len(),
            "N+Sz" => enumerate_basis(n_spatial, &SymmetrySector::particles(n).with_two_sz(two_sz), None)?.len(),
            "N+Sz+PG" => pg_basis.len(),
            _ => s2_sector_dimension(&pg_basis, f64::from(two_sz.abs()) / 2.0)?,
        };
        rows.push(PoolStats {
            label: label.to_string(),
            operators: pool.len(),
            unique_up_to_sign: unique_up_to_sign(&pool),
            hilbert_dim,
        });
    }
    Ok(rows)
}

/// Parses `kind:i,j,...` into a generator.
///
/// | kind | indices |
/// |---|---|
/// | `so-single` | flat `p,q` |
/// | `so-double` | flat `p,q,r,s` |
/// | `single` | spatial `P,Q` |
/// | `ppqq` | `P,Q` |
/// | `ppqr` | `P,Q,R` |
/// | `s0`, `s1` | `P,Q,R,S` |
/// | `triplet` | `P,Q,R` |
pub fn parse_generator(spec: &str) -> Result<SpinAdaptedGenerator> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("generator '{spec}' is not kind:i,j,...")))?;
    let idx: Vec<usize> = rest
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad index '{t}' in '{spec}'"))))
        .collect::<Result<_>>()?;
    let want = |n: usize| {
        if idx.len() == n {
            Ok(())
        } else {
            Err(Error::Config(format!("{kind} takes {n} indices, got {}", idx.len())))
        }
    };
    let g = match kind.trim() {
        "so-single" => {
            want(2)?;
            if idx[0] == idx[1] {
                return Err(Error::Degenerate(format!("A_{0}^{0} is zero", idx[0])));
            }
            SpinAdaptedGenerator {
                kind: GeneratorKind::SpinorbitalSingle,
                indices: idx.clone(),
                s_i: None,
                body: single(idx[0], idx[1]),
            }
        }
        "so-double" => {
            want(4)?;
            let body = double(idx[0], idx[1], idx[2], idx[3]);
            if body.is_zero() {
                return Err(Error::Degenerate(format!("A_({},{})^({},{}) is zero", idx[0], idx[1], idx[2], idx[3])));
            }
            SpinAdaptedGenerator { kind: GeneratorKind::SpinorbitalDouble, indices: idx.clone(), s_i: None, body }
        }
        "single" => {
            want(2)?;
            singlet_single(idx[0], idx[1])?
        }
        "ppqq" => {
            want(2)?;
            singlet_double_cg(idx[0], idx[0], idx[1], idx[1], 0)?
        }
        "ppqr" => {
            want(3)?;
            if idx[1] == idx[2] {
                return Err(Error::Degenerate("ppqr needs Q != R; use ppqq".into()));
            }
            singlet_double_cg(idx[0], idx[0], idx[1], idx[2], 0)?
        }
        "s0" | "s1" => {
            want(4)?;
            singlet_double_cg(idx[0], idx[1], idx[2], idx[3], (kind == "s1") as u8)?
        }
        "triplet" => {
            want(3)?;
            triplet_double_ppqr(idx[0], idx[1], idx[2])?
        }
        k => return Err(Error::Parse(format!("unknown generator kind '{k}'"))),
    };
    if g.body.is_zero() {
        return Err(Error::Degenerate(format!("{spec} is the zero operator")));
    }
    Ok(g)
}
