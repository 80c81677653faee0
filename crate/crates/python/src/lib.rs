//! Python bindings: pool census, generators and their unitaries, Trotter
//! scans, periodicity, Jordan–Wigner and ADAPT-VQE.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::spinadapt::adaptvqe::{self, AdaptOptions, ApplyMethod, CompiledPool};
use ::spinadapt::expm::{self, periodicity_test, SpectralExp, Verdict};
use ::spinadapt::fcidump::{parse_fcidump, MolecularHamiltonian};
use ::spinadapt::fermiops::{matrix_on, s_squared_operator};
use ::spinadapt::fock::FockBasis;
use ::spinadapt::pauli::jordan_wigner;
use ::spinadapt::sparse::SparseMatrix;
use ::spinadapt::spinadapt::{self as sa, PoolSpec, SpinAdaptedGenerator, Symmetry};
use ::spinadapt::trotter::{self, term_split, TrotterScheme, Trotterizer};
use ::spinadapt::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Fcidump { .. } | Error::Degenerate(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn dense(m: &SparseMatrix) -> Vec<Vec<Complex64>> {
    let d = m.to_dense();
    (0..d.nrows()).map(|i| (0..d.ncols()).map(|j| d[(i, j)]).collect()).collect()
}

/// Anti-Hermitian excitation generator, e.g. `Generator("ppqr:1,3,5")`.
#[pyclass(name = "Generator", module = "spinadapt", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGenerator {
    inner: SpinAdaptedGenerator,
}

impl PyGenerator {
    fn basis(&self, n_spatial: Option<usize>) -> PyResult<Arc<FockBasis>> {
        let n = n_spatial.unwrap_or(self.inner.max_spatial() + 1);
        if n <= self.inner.max_spatial() {
            return Err(PyValueError::new_err(format!("generator needs at least {} spatial orbitals", self.inner.max_spatial() + 1)));
        }
        Ok(Arc::new(FockBasis::full(n).map_err(py_err)?))
    }

    fn spectral(&self, n_spatial: Option<usize>) -> PyResult<SpectralExp> {
        let b = self.basis(n_spatial)?;
        SpectralExp::new(&matrix_on(&self.inner.body, &b), None).map_err(py_err)
    }

    fn trotterizer(&self, order: u8, basis: &FockBasis) -> PyResult<Trotterizer> {
        let mats: Vec<_> = term_split(&self.inner).map_err(py_err)?.iter().map(|t| matrix_on(t, basis)).collect();
        Trotterizer::new(TrotterScheme::new(order, mats.len()).map_err(py_err)?, &mats).map_err(py_err)
    }
}

#[pymethods]
impl PyGenerator {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: sa::parse_generator(spec).map_err(py_err)? })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.label()
    }

    #[getter]
    fn indices(&self) -> Vec<usize> {
        self.inner.indices.clone()
    }

    /// Dense matrix on the full Fock space of `n_spatial` orbitals.
    #[pyo3(signature = (n_spatial=None))]
    fn matrix(&self, n_spatial: Option<usize>) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(dense(&matrix_on(&self.inner.body, &*self.basis(n_spatial)?)))
    }

    /// Imaginary parts of the eigenvalues, ascending.
    #[pyo3(signature = (n_spatial=None))]
    fn eigenvalues(&self, n_spatial: Option<usize>) -> PyResult<Vec<f64>> {
        let mut ev = self.spectral(n_spatial)?.eigenvalues();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Dense `exp(θ G)`.
    #[pyo3(signature = (theta, n_spatial=None))]
    fn expm(&self, theta: f64, n_spatial: Option<usize>) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(dense(&self.spectral(n_spatial)?.exp(theta)))
    }

    /// Dense product formula of the given order.
    #[pyo3(signature = (theta, order, n_spatial=None))]
    fn trotter(&self, theta: f64, order: u8, n_spatial: Option<usize>) -> PyResult<Vec<Vec<Complex64>>> {
        let b = self.basis(n_spatial)?;
        Ok(dense(&self.trotterizer(order, &b)?.product(theta)))
    }

    /// `‖exp(θG) − Trot_order(θ)‖_F` at each θ.
    #[pyo3(signature = (thetas, order, n_spatial=None, precise=false))]
    fn trotter_error(&self, py: Python<'_>, thetas: Vec<f64>, order: u8, n_spatial: Option<usize>, precise: bool) -> PyResult<Vec<f64>> {
        let b = self.basis(n_spatial)?;
        let pts = if precise {
            let mats: Vec<_> = term_split(&self.inner).map_err(py_err)?.iter().map(|t| matrix_on(t, &b)).collect();
            let scheme = TrotterScheme::new(order, mats.len()).map_err(py_err)?;
            py.detach(|| trotter::precise_error_scan(&scheme, &mats, &thetas)).map_err(py_err)?
        } else {
            let exact = self.spectral(n_spatial)?;
            let trot = self.trotterizer(order, &b)?;
            py.detach(|| trotter::error_scan(&exact, &trot, &thetas))
        };
        Ok(pts.into_iter().map(|p| p.1).collect())
    }

    /// `‖[Trot_order(θ), S²]‖_F` at each θ.
    #[pyo3(signature = (thetas, order, n_spatial=None))]
    fn spin_violation(&self, py: Python<'_>, thetas: Vec<f64>, order: u8, n_spatial: Option<usize>) -> PyResult<Vec<f64>> {
        let b = self.basis(n_spatial)?;
        let trot = self.trotterizer(order, &b)?;
        let s2 = matrix_on(&s_squared_operator(b.n_spatial()), &b);
        Ok(py.detach(|| trotter::spin_violation_scan(&s2, &trot, &thetas)).into_iter().map(|p| p.1).collect())
    }

    /// `(verdict, period)` where verdict is `periodic`, `not-periodic`,
    /// `degenerate` or `inconclusive`.
    #[pyo3(signature = (n_spatial=None, d_max=1_000_000, tol=1e-9))]
    fn periodicity(&self, n_spatial: Option<usize>, d_max: u64, tol: f64) -> PyResult<(&'static str, Option<f64>)> {
        let r = periodicity_test(&self.spectral(n_spatial)?, d_max, tol);
        Ok(match r.verdict {
            Verdict::Periodic { period } => ("periodic", Some(period)),
            Verdict::NotPeriodic => ("not-periodic", None),
            Verdict::Degenerate => ("degenerate", None),
            Verdict::Inconclusive => ("inconclusive", None),
        })
    }

    /// Jordan–Wigner image as `{pauli letters: coefficient}`.
    #[pyo3(signature = (n_spatial=None))]
    fn jordan_wigner(&self, n_spatial: Option<usize>) -> PyResult<Vec<(String, Complex64)>> {
        let n = self.basis(n_spatial)?.n_spatial();
        let ps = jordan_wigner(&self.inner.body, 2 * n);
        Ok(ps.strings().map(|s| (s.letters(2 * n), s.coeff)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Generator({})", self.inner.label())
    }
}

/// Builds a pool. `enforce` takes any of `"sz"`, `"pg"`, `"s2"`.
#[pyfunction]
#[pyo3(signature = (n_spatial, enforce=vec![], orb_irreps=None))]
fn build_pool(n_spatial: usize, enforce: Vec<String>, orb_irreps: Option<Vec<u8>>) -> PyResult<Vec<PyGenerator>> {
    let sym = enforce
        .iter()
        .map(|s| match s.to_ascii_lowercase().as_str() {
            "sz" => Ok(Symmetry::Sz),
            "pg" => Ok(Symmetry::PointGroup),
            "s2" => Ok(Symmetry::S2),
            _ => Err(PyValueError::new_err(format!("unknown symmetry '{s}'"))),
        })
        .collect::<PyResult<Vec<_>>>()?;
    let pool = sa::build_pool(&PoolSpec::new(n_spatial, orb_irreps, &sym)).map_err(py_err)?;
    Ok(pool.into_iter().map(|inner| PyGenerator { inner }).collect())
}

/// Closed-form `exp(θG)` against the exact exponential, maximum Frobenius
/// error over `thetas`. `which` is one of the builtin form names.
#[pyfunction]
#[pyo3(signature = (which, indices, thetas, n_spatial=None))]
fn closed_form_error(py: Python<'_>, which: &str, indices: Vec<usize>, thetas: Vec<f64>, n_spatial: Option<usize>) -> PyResult<f64> {
    let spec = expm::builtin(which, &indices).map_err(py_err)?;
    let g = expm::builtin_generator(which, &indices).map_err(py_err)?;
    let need = spec.max_index().map_or(1, |m| m / 2 + 1);
    let n = n_spatial.unwrap_or(need);
    if n < need {
        return Err(PyValueError::new_err(format!("form needs at least {need} spatial orbitals")));
    }
    let basis = Arc::new(FockBasis::full(n).map_err(py_err)?);
    let exact = SpectralExp::new(&matrix_on(&g, &basis), None).map_err(py_err)?;
    let form = spec.materialize(&basis);
    Ok(py.detach(|| thetas.iter().map(|&t| form.eval(t).matrix.distance(&exact.exp(t))).fold(0.0, f64::max)))
}

/// Molecular Hamiltonian read from an FCIDUMP file.
#[pyclass(name = "Hamiltonian", module = "spinadapt", frozen)]
struct PyHamiltonian {
    inner: MolecularHamiltonian,
}

#[pymethods]
impl PyHamiltonian {
    #[staticmethod]
    fn from_fcidump(path: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_fcidump(path).map_err(py_err)? })
    }

    #[getter]
    fn n_spatial(&self) -> usize {
        self.inner.n_spatial
    }

    #[getter]
    fn n_electrons(&self) -> (usize, usize) {
        (self.inner.n_up(), self.inner.n_down())
    }

    #[getter]
    fn orb_irreps(&self) -> Vec<u8> {
        self.inner.orb_irreps.clone()
    }

    /// Rows of `(symmetry, operators, unique_up_to_sign, hilbert_dim)`.
    fn pool_stats(&self) -> PyResult<Vec<(String, usize, usize, usize)>> {
        let rows = sa::pool_stats(self.inner.n_spatial, self.inner.n_up(), self.inner.n_down(), &self.inner.orb_irreps)
            .map_err(py_err)?;
        Ok(rows.into_iter().map(|r| (r.label, r.operators, r.unique_up_to_sign, r.hilbert_dim)).collect())
    }

    fn fci_energy(&self, py: Python<'_>) -> PyResult<f64> {
        let basis = adaptvqe::sector_basis(&self.inner).map_err(py_err)?;
        let h = adaptvqe::build_hamiltonian(&self.inner, &basis);
        py.detach(|| adaptvqe::fci_ground(&h)).map(|r| r.0).map_err(py_err)
    }

    /// Runs ADAPT-VQE with the `sagsd` or `gsd` pool. Returns a dict with
    /// `fci_energy`, `termination` and `trajectory` (list of per-iteration
    /// dicts).
    #[pyo3(signature = (pool="sagsd", grad_tol=1e-9, energy_tol=1e-12, max_iters=250))]
    fn adapt<'py>(&self, py: Python<'py>, pool: &str, grad_tol: f64, energy_tol: f64, max_iters: usize) -> PyResult<Bound<'py, PyDict>> {
        let mut sym = vec![Symmetry::Sz, Symmetry::PointGroup];
        match pool {
            "sagsd" => sym.push(Symmetry::S2),
            "gsd" => {}
            _ => return Err(PyValueError::new_err(format!("unknown pool '{pool}'"))),
        }
        let ham = &self.inner;
        let basis = adaptvqe::sector_basis(ham).map_err(py_err)?;
        let h = adaptvqe::build_hamiltonian(ham, &basis);
        let gens = sa::build_pool(&PoolSpec::new(ham.n_spatial, Some(ham.orb_irreps.clone()), &sym)).map_err(py_err)?;
        let compiled = CompiledPool::new(gens, &basis).map_err(py_err)?;
        let opts = AdaptOptions { grad_tol, energy_tol, max_iters, method: ApplyMethod::Spectral, ..Default::default() };
        let r = py.detach(|| adaptvqe::adapt_vqe(&h, &compiled, ham.reference(), &opts)).map_err(py_err)?;

        let out = PyDict::new(py);
        out.set_item("fci_energy", r.fci_energy)?;
        out.set_item("termination", format!("{:?}", r.termination))?;
        let traj = r
            .trajectory
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("iter", s.iter)?;
                d.set_item("n_params", s.n_params)?;
                d.set_item("energy", s.energy)?;
                d.set_item("error", s.error_vs_fci)?;
                d.set_item("max_grad", s.max_grad)?;
                d.set_item("s2", s.s2)?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        out.set_item("trajectory", traj)?;
        Ok(out)
    }
}

#[pymodule(name = "spinadapt")]
fn spinadapt_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_function(wrap_pyfunction!(build_pool, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_error, m)?)?;
    Ok(())
}
