//! FCIDUMP reader and the second-quantized molecular Hamiltonian.
//!
//! Integrals are real and stored in chemists' notation, `h2[(pq|rs)]`, with
//! the eightfold permutational symmetry restored on load. ORBSYM labels are
//! 1-based Molpro irrep numbers; they are shifted to 0-based so that the
//! direct product of two irreps is the XOR of their labels.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fermiops::{FermionString, Ladder, OperatorSum};
use crate::fock::{Determinant, Spin, SpinOrbital};

#[derive(Debug, Clone)]
pub struct MolecularHamiltonian {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    pub e_core: f64,
    pub h1: DMatrix<f64>,
    /// `(pq|rs)` at `((p·n + q)·n + r)·n + s`.
    pub h2: Vec<f64>,
    pub orb_irreps: Vec<u8>,
}

impl MolecularHamiltonian {
    pub fn new(n_spatial: usize) -> Self {
        Self {
            n_spatial,
            n_electrons: 0,
            ms2: 0,
            e_core: 0.0,
            h1: DMatrix::zeros(n_spatial, n_spatial),
            h2: vec![0.0; n_spatial.pow(4)],
            orb_irreps: vec![0; n_spatial],
        }
    }

    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let n = self.n_spatial;
        ((p * n + q) * n + r) * n + s
    }

    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.h2[self.idx(p, q, r, s)]
    }

    /// Writes `(pq|rs)` and its seven permutational partners.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let i = self.idx(a, b, c, d);
            self.h2[i] = v;
        }
    }

    pub fn set_h1(&mut self, p: usize, q: usize, v: f64) {
        self.h1[(p, q)] = v;
        self.h1[(q, p)] = v;
    }

    pub fn n_up(&self) -> usize {
        ((self.n_electrons as i32 + self.ms2) / 2) as usize
    }

    pub fn n_down(&self) -> usize {
        ((self.n_electrons as i32 - self.ms2) / 2) as usize
    }

    /// Lowest-index filling: the first `n_up` up and `n_down` down spinorbitals.
    pub fn reference(&self) -> Determinant {
        Determinant::aufbau(self.n_up(), self.n_down())
    }

    /// `e_core + Σ h_pq a^{pσ} a_{qσ} + ½ Σ (pq|rs) a^{pσ} a^{rτ} a_{sτ} a_{qσ}`.
    pub fn to_operator(&self) -> OperatorSum {
        let n = self.n_spatial;
        let so = |p: usize, s: Spin| SpinOrbital::new(p, s).flat();
        let spins = [Spin::Up, Spin::Down];
        let mut strings = vec![FermionString::new(self.e_core, vec![])];
        for p in 0..n {
            for q in 0..n {
                let h = self.h1[(p, q)];
                if h == 0.0 {
                    continue;
                }
                for &s in &spins {
                    strings.push(FermionString::new(h, vec![Ladder::create(so(p, s)), Ladder::annihilate(so(q, s))]));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        for &a in &spins {
                            for &b in &spins {
                                if so(p, a) == so(r, b) || so(q, a) == so(s, b) {
                                    continue;
                                }
                                strings.push(FermionString::new(
                                    0.5 * v,
                                    vec![
                                        Ladder::create(so(p, a)),
                                        Ladder::create(so(r, b)),
                                        Ladder::annihilate(so(s, b)),
                                        Ladder::annihilate(so(q, a)),
                                    ],
                                ));
                            }
                        }
                    }
                }
            }
        }
        OperatorSum::from_strings(strings)
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Fcidump { line, msg: msg.into() }
}

fn parse_float(tok: &str, line: usize) -> Result<f64> {
    tok.replace(['D', 'd'], "E").parse::<f64>().map_err(|_| err(line, format!("cannot parse number '{tok}'")))
}

pub fn parse_fcidump(path: impl AsRef<Path>) -> Result<MolecularHamiltonian> {
    let text = std::fs::read_to_string(path)?;
    parse_fcidump_str(&text)
}

pub fn parse_fcidump_str(text: &str) -> Result<MolecularHamiltonian> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.trim_start().to_ascii_uppercase().starts_with("&FCI"))
        .ok_or_else(|| err(1, "missing &FCI header"))?;
    let mut header = String::new();
    let mut body_start = None;
    for (i, l) in lines.iter().enumerate().skip(start) {
        let t = l.trim();
        let up = t.to_ascii_uppercase();
        let (content, done) = if let Some(pos) = up.find("&END") {
            (&t[..pos], true)
        } else if t == "/" || t.ends_with('/') {
            (t.trim_end_matches('/'), true)
        } else {
            (t, false)
        };
        header.push_str(content);
        header.push(' ');
        if done {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start = body_start.ok_or_else(|| err(start + 1, "header is not terminated by &END or /"))?;
    let header_line = start + 1;
    let header = header.trim_start();
    let header = header[4.min(header.len())..].to_string();

    // key=value lists, values may span commas
    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    for tok in header.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            let mut vals = Vec::new();
            if !v.is_empty() {
                vals.push(v.to_string());
            }
            fields.push((k.trim().to_ascii_uppercase(), vals));
        } else if let Some(last) = fields.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(err(header_line, format!("unexpected token '{tok}' in header")));
        }
    }
    let get = |k: &str| fields.iter().find(|f| f.0 == k).map(|f| &f.1);
    let int = |k: &str, v: &str| {
        v.parse::<i64>().map_err(|_| err(header_line, format!("{k} must be an integer, got '{v}'")))
    };
    let norb = match get("NORB") {
        Some(v) if v.len() == 1 => int("NORB", &v[0])?,
        _ => return Err(err(header_line, "NORB missing or malformed")),
    };
    if norb <= 0 || norb > 32 {
        return Err(err(header_line, format!("NORB = {norb} out of range 1..=32")));
    }
    let n = norb as usize;
    let mut ham = MolecularHamiltonian::new(n);
    if let Some(v) = get("NELEC") {
        let ne = int("NELEC", v.first().ok_or_else(|| err(header_line, "NELEC has no value"))?)?;
        if ne < 0 || ne as usize > 2 * n {
            return Err(err(header_line, format!("NELEC = {ne} does not fit {n} orbitals")));
        }
        ham.n_electrons = ne as usize;
    }
    if let Some(v) = get("MS2") {
        ham.ms2 = int("MS2", v.first().ok_or_else(|| err(header_line, "MS2 has no value"))?)? as i32;
    }
    if (ham.n_electrons as i32 + ham.ms2) % 2 != 0 || ham.ms2.unsigned_abs() as usize > ham.n_electrons {
        return Err(err(header_line, format!("MS2 = {} inconsistent with NELEC = {}", ham.ms2, ham.n_electrons)));
    }
    if let Some(v) = get("ORBSYM") {
        if v.len() != n {
            return Err(err(header_line, format!("ORBSYM has {} entries for NORB = {n}", v.len())));
        }
        for (i, s) in v.iter().enumerate() {
            let k = int("ORBSYM", s)?;
            if !(1..=8).contains(&k) {
                return Err(err(header_line, format!("ORBSYM entry {k} outside 1..=8")));
            }
            ham.orb_irreps[i] = (k - 1) as u8;
        }
    }

    for (li, l) in lines.iter().enumerate().skip(body_start) {
        let ln = li + 1;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(err(ln, format!("expected `value i j k l`, got {} fields", toks.len())));
        }
        let v = parse_float(toks[0], ln)?;
        let mut ix = [0usize; 4];
        for (slot, t) in ix.iter_mut().zip(&toks[1..]) {
            let k: i64 = t.parse().map_err(|_| err(ln, format!("index '{t}' is not an integer")))?;
            if k < 0 || k > norb {
                return Err(err(ln, format!("index {k} out of range 0..={norb}")));
            }
            *slot = k as usize;
        }
        match ix {
            [0, 0, 0, 0] => ham.e_core = v,
            [i, 0, 0, 0] if i > 0 => {} // orbital energy, unused
            [i, j, 0, 0] if i > 0 && j > 0 => ham.set_h1(i - 1, j - 1, v),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => ham.set_eri(i - 1, j - 1, k - 1, l - 1, v),
            _ => return Err(err(ln, format!("invalid index pattern {ix:?}"))),
        }
    }
    Ok(ham)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_only() {
        let h = parse_fcidump_str("&FCI NORB=1,NELEC=0,MS2=0,\n ORBSYM=1,\n ISYM=1,\n&END\n 1.5 0 0 0 0\n").unwrap();
        assert_eq!(h.e_core, 1.5);
        let op = h.to_operator();
        assert_eq!(op.len(), 1);
    }

    #[test]
    fn diagnostics_carry_lines() {
        let bad = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.1 1 1 1 1\n 0.2 3 1 0 0\n";
        match parse_fcidump_str(bad) {
            Err(Error::Fcidump { line: 4, .. }) => {}
            r => panic!("{r:?}"),
        }
        assert!(matches!(parse_fcidump_str("&FCI NORB=x,\n&END\n"), Err(Error::Fcidump { line: 1, .. })));
        assert!(matches!(parse_fcidump_str("&FCI NORB=2,\n"), Err(Error::Fcidump { .. })));
        assert!(matches!(parse_fcidump_str("&FCI NORB=2,\n&END\n 1.0 1 1\n"), Err(Error::Fcidump { line: 3, .. })));
    }

    #[test]
    fn eightfold() {
        let h = parse_fcidump_str("&FCI NORB=3,NELEC=2,MS2=0,\n/\n 0.7 3 1 2 1\n 1.0D-01 2 1 0 0\n").unwrap();
        for (p, q, r, s) in [(2, 0, 1, 0), (0, 2, 1, 0), (2, 0, 0, 1), (1, 0, 2, 0), (0, 1, 0, 2)] {
            assert_eq!(h.eri(p, q, r, s), 0.7);
        }
        assert_eq!(h.h1[(0, 1)], 0.1);
    }
}
