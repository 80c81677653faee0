//! Statevector ADAPT-VQE.
//!
//! The state lives in one (N, Sz) sector. Pool generators are compiled once to
//! sector matrices with their spectral exponentials; ansatz parameters are
//! re-optimized with BFGS after every operator is appended, using analytic
//! gradients from a single reverse sweep.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::{apply_power_form, eq26, power_form_ppqr, sm_s10, sm_s9, ClosedFormSpec, SpectralExp};
use crate::fcidump::MolecularHamiltonian;
use crate::fermiops::{matrix_on, s_squared_operator, single, try_to_matrix, SectorMatrix};
use crate::fock::{enumerate_basis, Determinant, FockBasis, Spin, SpinOrbital, SymmetrySector};
use crate::optimize::{minimize_bfgs, BfgsOptions, Exit};
use crate::sparse::SparseMatrix;
use crate::spinadapt::{GeneratorKind, SpinAdaptedGenerator};

/// Largest sector handled by the dense eigensolver.
pub const DENSE_CAP: usize = 5000;

/// The (N, Sz) sector of a Hamiltonian's electron count and spin.
pub fn sector_basis(h: &MolecularHamiltonian) -> Result<Arc<FockBasis>> {
    let filter = SymmetrySector::particles(h.n_electrons).with_two_sz(h.ms2);
    Ok(Arc::new(enumerate_basis(h.n_spatial, &filter, None)?))
}

pub fn build_hamiltonian(h: &MolecularHamiltonian, basis: &Arc<FockBasis>) -> SectorMatrix {
    SectorMatrix::new(basis.clone(), matrix_on(&h.to_operator(), basis))
}

/// Lowest eigenpair of a Hermitian sector matrix.
pub fn fci_ground(h: &SectorMatrix) -> Result<(f64, Vec<Complex64>)> {
    fci_ground_capped(h, DENSE_CAP)
}

pub fn fci_ground_capped(h: &SectorMatrix, cap: usize) -> Result<(f64, Vec<Complex64>)> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::Dimension("empty sector".into()));
    }
    if n > cap {
        return Err(Error::Config(format!("sector dimension {n} exceeds the dense cap {cap}")));
    }
    let dense = h.matrix.to_dense();
    let herm = h.matrix.hermiticity_defect();
    if herm > 1e-10 {
        return Err(Error::Eigen { what: "Hamiltonian is not Hermitian".into(), residual: herm });
    }
    let imag = dense.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let (e, v) = if imag < 1e-14 {
        let re: DMatrix<f64> = dense.map(|z| z.re);
        let eig = SymmetricEigen::try_new(re, 1e-15, 10_000 * n)
            .ok_or_else(|| Error::Eigen { what: "dense eigensolve did not converge".into(), residual: f64::NAN })?;
        let k = eig.eigenvalues.imin();
        (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
    } else {
        let eig = SymmetricEigen::try_new(dense, 1e-15, 10_000 * n)
            .ok_or_else(|| Error::Eigen { what: "dense eigensolve did not converge".into(), residual: f64::NAN })?;
        let k = eig.eigenvalues.imin();
        (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
    };
    let hv = h.matrix.matvec(&v);
    let residual = hv.iter().zip(&v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
    if residual > 1e-10 {
        return Err(Error::Eigen { what: "ground-state residual too large".into(), residual });
    }
    Ok((e, v))
}

pub fn expectation(m: &SparseMatrix, psi: &[Complex64]) -> f64 {
    dot(psi, &m.matvec(psi)).re
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApplyMethod {
    /// Sector eigendecomposition of the generator.
    #[default]
    Spectral,
    /// Closed-form polynomials in the generator where one applies, falling
    /// back to the spectral route otherwise.
    ClosedForm,
}

#[derive(Debug, Clone)]
enum FastForm {
    /// `exp(θG) = Σ f_k(θ) G^k`.
    Power(ClosedFormSpec),
    /// Product of commuting `exp(c θ A_i)` with `A_i³ = −A_i`.
    Product(Vec<(SparseMatrix, f64)>),
}

#[derive(Debug, Clone)]
pub struct CompiledOperator {
    pub generator: SpinAdaptedGenerator,
    pub matrix: SparseMatrix,
    exp: SpectralExp,
    fast: Option<FastForm>,
}

impl CompiledOperator {
    pub fn new(generator: SpinAdaptedGenerator, basis: &Arc<FockBasis>) -> Result<Self> {
        let matrix = try_to_matrix(&generator.body, basis)?.matrix;
        let exp = SpectralExp::new(&matrix, None)?;
        let fast = fast_form(&generator, basis);
        Ok(Self { generator, matrix, exp, fast })
    }

    pub fn has_closed_form(&self) -> bool {
        self.fast.is_some()
    }

    pub fn apply(&self, theta: f64, x: &[Complex64], method: ApplyMethod) -> Vec<Complex64> {
        match (method, &self.fast) {
            (ApplyMethod::ClosedForm, Some(FastForm::Power(spec))) => apply_power_form(spec, &self.matrix, theta, x),
            (ApplyMethod::ClosedForm, Some(FastForm::Product(parts))) => {
                parts.iter().fold(x.to_vec(), |v, (a, c)| apply_single_string(a, c * theta, &v))
            }
            _ => self.exp.apply(theta, x),
        }
    }
}

/// `(I + sin θ A + (1 − cos θ) A²) x`.
fn apply_single_string(a: &SparseMatrix, theta: f64, x: &[Complex64]) -> Vec<Complex64> {
    let ax = a.matvec(x);
    let aax = a.matvec(&ax);
    let (s, c) = theta.sin_cos();
    x.iter().zip(&ax).zip(&aax).map(|((v, a1), a2)| v + a1 * s + a2 * (1.0 - c)).collect()
}

fn distinct(v: &[usize]) -> bool {
    v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| a != b))
}

fn fast_form(g: &SpinAdaptedGenerator, basis: &Arc<FockBasis>) -> Option<FastForm> {
    let ix = &g.indices;
    match g.kind {
        GeneratorKind::SpinorbitalSingle | GeneratorKind::SpinorbitalDouble | GeneratorKind::DoublePPQQ => {
            (g.body.len() == 2 && (g.body.max_coeff() - 1.0).abs() < 1e-12).then(|| FastForm::Power(eq26(&g.body)))
        }
        GeneratorKind::Single => {
            let f = |p: usize, s: Spin| SpinOrbital::new(p, s).flat();
            let c = std::f64::consts::FRAC_1_SQRT_2;
            let parts = [Spin::Up, Spin::Down]
                .iter()
                .map(|&s| (matrix_on(&single(f(ix[0], s), f(ix[1], s)), basis), c))
                .collect();
            Some(FastForm::Product(parts))
        }
        GeneratorKind::DoublePPQR => {
            let distinct_three = if ix[0] == ix[1] { distinct(&[ix[0], ix[2], ix[3]]) } else { distinct(&[ix[0], ix[1], ix[2]]) };
            distinct_three.then(|| FastForm::Power(power_form_ppqr(&g.body)))
        }
        GeneratorKind::DoubleS0 if distinct(ix) => sm_s9(ix[0], ix[1], ix[2], ix[3]).ok().map(FastForm::Power),
        GeneratorKind::DoubleS1 if distinct(ix) => sm_s10(ix[0], ix[1], ix[2], ix[3]).ok().map(FastForm::Power),
        _ => None,
    }
}

/// A pool compiled to one sector.
#[derive(Debug, Clone)]
pub struct CompiledPool {
    pub basis: Arc<FockBasis>,
    pub ops: Vec<CompiledOperator>,
}

impl CompiledPool {
    pub fn new(pool: Vec<SpinAdaptedGenerator>, basis: &Arc<FockBasis>) -> Result<Self> {
        let ops = pool.into_par_iter().map(|g| CompiledOperator::new(g, basis)).collect::<Result<Vec<_>>>()?;
        Ok(Self { basis: basis.clone(), ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `g_i = ⟨ψ|[H, A_i]|ψ⟩ = 2 Re⟨Hψ|A_i ψ⟩` for every pool member.
    pub fn gradients(&self, h_psi: &[Complex64], psi: &[Complex64]) -> Vec<f64> {
        self.ops.par_iter().map(|op| 2.0 * dot(h_psi, &op.matrix.matvec(psi)).re).collect()
    }
}

/// Ordered product `U_n ... U_1 |reference⟩` over pool members.
#[derive(Debug, Clone)]
pub struct AnsatzState {
    pub reference: Determinant,
    pub ops: Vec<usize>,
    pub thetas: Vec<f64>,
    pub state: Vec<Complex64>,
}

pub fn reference_state(basis: &FockBasis, reference: Determinant) -> Result<Vec<Complex64>> {
    let i = basis
        .index_of(reference)
        .ok_or_else(|| Error::Config(format!("reference {:#b} is not in the sector", reference.0)))?;
    let mut v = vec![Complex64::default(); basis.len()];
    v[i] = Complex64::new(1.0, 0.0);
    Ok(v)
}

/// `ψ(θ)` for the given operator sequence.
pub fn prepare(pool: &CompiledPool, phi: &[Complex64], ops: &[usize], thetas: &[f64], method: ApplyMethod) -> Vec<Complex64> {
    ops.iter().zip(thetas).fold(phi.to_vec(), |v, (&k, &t)| pool.ops[k].apply(t, &v, method))
}

/// Energy and its gradient with respect to every parameter.
pub fn energy_and_gradient(
    pool: &CompiledPool,
    h: &SparseMatrix,
    phi: &[Complex64],
    ops: &[usize],
    thetas: &[f64],
    method: ApplyMethod,
) -> (f64, Vec<f64>) {
    let psi = prepare(pool, phi, ops, thetas, method);
    let mut sigma = h.matvec(&psi);
    let e = dot(&psi, &sigma).re;
    let mut chi = psi;
    let mut grad = vec![0.0; ops.len()];
    for k in (0..ops.len()).rev() {
        let op = &pool.ops[ops[k]];
        grad[k] = 2.0 * dot(&sigma, &op.matrix.matvec(&chi)).re;
        if k > 0 {
            chi = op.apply(-thetas[k], &chi, method);
            sigma = op.apply(-thetas[k], &sigma, method);
        }
    }
    (e, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientConverged,
    EnergyConverged,
    MaxIters,
    /// A macro-iteration failed to lower the energy.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct AdaptOptions {
    pub grad_tol: f64,
    pub energy_tol: f64,
    pub max_iters: usize,
    pub bfgs: BfgsOptions,
    pub method: ApplyMethod,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-9, energy_tol: 1e-12, max_iters: 250, bfgs: BfgsOptions::default(), method: ApplyMethod::Spectral }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptStep {
    pub iter: usize,
    pub n_params: usize,
    pub energy: f64,
    pub error_vs_fci: f64,
    /// Largest pool gradient before this step's operator was added.
    pub max_grad: f64,
    pub s2: f64,
    pub selected: Option<usize>,
    pub optimizer: Option<Exit>,
}

#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub fci_energy: f64,
    pub trajectory: Vec<AdaptStep>,
    pub ansatz: AnsatzState,
    pub termination: Termination,
}

impl AdaptResult {
    pub fn final_step(&self) -> &AdaptStep {
        self.trajectory.last().expect("trajectory has the reference step")
    }

    /// Fewest parameters at which the error dropped to `tol`.
    pub fn params_to_reach(&self, tol: f64) -> Option<usize> {
        self.trajectory.iter().find(|s| s.error_vs_fci <= tol).map(|s| s.n_params)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,n_params,energy,error_vs_fci,max_grad,s2_expval\n");
        for s in &self.trajectory {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.iter, s.n_params, s.energy, s.error_vs_fci, s.max_grad, s.s2
            ));
        }
        out
    }
}

fn argmax_abs(v: &[f64]) -> Option<(usize, f64)> {
    v.iter().enumerate().fold(None, |best, (i, &g)| match best {
        Some((_, b)) if g.abs() <= b => best,
        _ => Some((i, g.abs())),
    })
}

/// Runs ADAPT-VQE from `reference` over `pool` for the Hamiltonian matrix `h`.
pub fn adapt_vqe(h: &SectorMatrix, pool: &CompiledPool, reference: Determinant, opts: &AdaptOptions) -> Result<AdaptResult> {
    adapt_vqe_with(h, pool, reference, opts, |_| {})
}

/// As [`adapt_vqe`], calling `progress` after every macro-iteration.
pub fn adapt_vqe_with(
    h: &SectorMatrix,
    pool: &CompiledPool,
    reference: Determinant,
    opts: &AdaptOptions,
    mut progress: impl FnMut(&AdaptStep),
) -> Result<AdaptResult> {
    if !Arc::ptr_eq(&h.basis, &pool.basis) && h.basis.dets() != pool.basis.dets() {
        return Err(Error::Dimension("Hamiltonian and pool live on different sectors".into()));
    }
    let basis = &pool.basis;
    let (e_fci, _) = fci_ground(h)?;
    let s2 = matrix_on(&s_squared_operator(basis.n_spatial()), basis);
    let phi = reference_state(basis, reference)?;
    let hm = &h.matrix;

    let mut ops: Vec<usize> = Vec::new();
    let mut thetas: Vec<f64> = Vec::new();
    let mut psi = phi.clone();
    let mut energy = expectation(hm, &psi);
    let mut trajectory = vec![AdaptStep {
        iter: 0,
        n_params: 0,
        energy,
        error_vs_fci: energy - e_fci,
        max_grad: f64::NAN,
        s2: expectation(&s2, &psi),
        selected: None,
        optimizer: None,
    }];
    progress(&trajectory[0]);

    let termination = loop {
        let h_psi = hm.matvec(&psi);
        let grads = pool.gradients(&h_psi, &psi);
        let Some((sel, gmax)) = argmax_abs(&grads) else {
            break Termination::GradientConverged;
        };
        if let Some(last) = trajectory.last_mut() {
            last.max_grad = gmax;
        }
        if gmax < opts.grad_tol {
            break Termination::GradientConverged;
        }
        if ops.len() >= opts.max_iters {
            break Termination::MaxIters;
        }
        ops.push(sel);
        thetas.push(0.0);
        let fg = |x: &[f64]| energy_and_gradient(pool, hm, &phi, &ops, x, opts.method);
        let min = minimize_bfgs(&fg, &thetas, &opts.bfgs);
        let previous = energy;
        thetas = min.x;
        psi = prepare(pool, &phi, &ops, &thetas, opts.method);
        energy = expectation(hm, &psi);
        let step = AdaptStep {
            iter: ops.len(),
            n_params: ops.len(),
            energy,
            error_vs_fci: energy - e_fci,
            max_grad: f64::NAN,
            s2: expectation(&s2, &psi),
            selected: Some(sel),
            optimizer: Some(min.exit),
        };
        progress(&step);
        trajectory.push(step);
        let de = energy - previous;
        if de > 1e-12 {
            break Termination::Stagnated;
        }
        if de.abs() < opts.energy_tol {
            break Termination::EnergyConverged;
        }
    };
    Ok(AdaptResult {
        fci_energy: e_fci,
        trajectory,
        ansatz: AnsatzState { reference, ops, thetas, state: psi },
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcidump::parse_fcidump_str;
    use crate::spinadapt::{build_pool, PoolSpec, Symmetry};

    fn toy() -> MolecularHamiltonian {
        // two orbitals, two electrons, made-up integrals
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,5,\n&END\n\
            0.68 1 1 1 1\n0.66 2 2 1 1\n0.70 2 2 2 2\n0.18 2 1 2 1\n\
            -1.25 1 1 0 0\n-0.47 2 2 0 0\n0.71 0 0 0 0\n";
        parse_fcidump_str(text).unwrap()
    }

    #[test]
    fn one_dimensional_sector() {
        let b = Arc::new(FockBasis::from_determinants(1, vec![Determinant(0b11)]).unwrap());
        let h = SectorMatrix::new(b, SparseMatrix::from_diagonal(&[Complex64::new(-0.5, 0.0)]));
        assert_eq!(fci_ground(&h).unwrap().0, -0.5);
    }

    #[test]
    fn toy_converges_quickly() {
        let ham = toy();
        let basis = sector_basis(&ham).unwrap();
        let h = build_hamiltonian(&ham, &basis);
        let pool = build_pool(&PoolSpec::new(2, Some(ham.orb_irreps.clone()), &[Symmetry::Sz, Symmetry::PointGroup, Symmetry::S2]))
            .unwrap();
        let pool = CompiledPool::new(pool, &basis).unwrap();
        let r = adapt_vqe(&h, &pool, ham.reference(), &AdaptOptions::default()).unwrap();
        assert!(r.trajectory.len() <= 4);
        assert!(r.final_step().error_vs_fci.abs() < 1e-10, "{:?}", r.trajectory);
    }

    #[test]
    fn reverse_sweep_matches_finite_differences() {
        let ham = toy();
        let basis = sector_basis(&ham).unwrap();
        let h = build_hamiltonian(&ham, &basis);
        let pool = CompiledPool::new(build_pool(&PoolSpec::new(2, None, &[Symmetry::Sz])).unwrap(), &basis).unwrap();
        let phi = reference_state(&basis, ham.reference()).unwrap();
        let ops: Vec<usize> = (0..pool.len()).collect();
        let th: Vec<f64> = (0..ops.len()).map(|i| 0.3 + 0.17 * i as f64).collect();
        let (_, g) = energy_and_gradient(&pool, &h.matrix, &phi, &ops, &th, ApplyMethod::Spectral);
        for k in 0..ops.len() {
            let mut p = th.clone();
            let mut m = th.clone();
            p[k] += 1e-6;
            m[k] -= 1e-6;
            let fd = (energy_and_gradient(&pool, &h.matrix, &phi, &ops, &p, ApplyMethod::Spectral).0
                - energy_and_gradient(&pool, &h.matrix, &phi, &ops, &m, ApplyMethod::Spectral).0)
                / 2e-6;
            assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-3), "k={k} fd={fd} an={}", g[k]);
        }
    }
}
