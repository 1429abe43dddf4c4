use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use pinchmap::channel::avg_snr;
use pinchmap::coverage::{coverage_count, CoverageMethod};
use pinchmap::export::{export_map, MapFormat};
use pinchmap::minmax::worst_grid_snr;
use pinchmap::sweep::{self, Prepared};
use pinchmap::units::db_to_linear;
use pinchmap::{Activation, Error};

create_exception!(pinchmap_py, BudgetExceeded, pyo3::exceptions::PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Budget { .. } => BudgetExceeded::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn activation(taps: Vec<usize>) -> PyResult<Activation> {
    Activation::from_one_based(&taps).map_err(to_py)
}

/// A validated deployment scenario.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: pinchmap::Scenario,
}

#[pymethods]
impl PyScenario {
    /// The bundled default scenario.
    #[staticmethod]
    fn table1() -> Self {
        PyScenario {
            inner: pinchmap::Scenario::table1(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = pinchmap::Scenario::load(path).map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = pinchmap::Scenario::from_json_str(text, "<string>").map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn with_grid_scale(&self, factor: f64) -> PyResult<Self> {
        let inner = self.inner.with_grid_scale(factor).map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    fn with_power_dbm(&self, p_tx_dbm: f64) -> PyResult<Self> {
        let inner = self.inner.with_power_dbm(p_tx_dbm).map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    fn with_mu_sq_db(&self, mu_sq_db: f64) -> PyResult<Self> {
        let inner = self.inner.with_mu_sq_db(mu_sq_db).map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    fn with_seed(&self, seed: u64) -> PyResult<Self> {
        let inner = self.inner.with_seed(seed).map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    #[getter]
    fn n_waveguides(&self) -> usize {
        self.inner.geometry().n_waveguides()
    }

    #[getter]
    fn n_candidates(&self) -> usize {
        self.inner.geometry().n_candidates()
    }

    /// `(nh, nv)`.
    #[getter]
    fn grid(&self) -> (usize, usize) {
        let g = self.inner.geometry().grid;
        (g.nh, g.nv)
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    /// Computes visibility and gain tables.
    fn prepare(&self) -> PyResult<PyWorkspace> {
        let inner = Prepared::new(self.inner.clone()).map_err(to_py)?;
        Ok(PyWorkspace { inner })
    }

    fn __repr__(&self) -> String {
        let (nh, nv) = self.grid();
        format!(
            "Scenario(N={}, M={}, grid={}x{}, digest={})",
            self.n_waveguides(),
            self.n_candidates(),
            nh,
            nv,
            &self.inner.digest()[..12]
        )
    }
}

#[pyclass(name = "CoverageResult", frozen, get_all)]
struct PyCoverageResult {
    activation: Vec<usize>,
    covered_count: usize,
    coverage_fraction: f64,
    snr_field: Vec<f64>,
    gamma_th: f64,
    sweeps_used: usize,
    method: String,
    trace: Vec<usize>,
}

#[pyclass(name = "MinMaxResult", frozen, get_all)]
struct PyMinMaxResult {
    activation: Vec<usize>,
    t_star: f64,
    bisection_iters: usize,
    feasibility_evals: usize,
    exact: bool,
    snr_field: Vec<f64>,
}

#[pyclass(name = "ThresholdRow", frozen, get_all)]
struct PyThresholdRow {
    gamma_th_db: f64,
    optimized: f64,
    optimized_activation: Vec<usize>,
    random_mean: f64,
    random_std: f64,
    fixed_array: f64,
}

#[pyclass(name = "PowerRow", frozen, get_all)]
struct PyPowerRow {
    p_tx_dbm: f64,
    optimized_db: f64,
    random_mean_db: f64,
    random_std_db: f64,
    fixed_array_db: f64,
}

/// A scenario with its precomputed gain tables. Activations are lists of
/// 1-based tap indices, one per waveguide.
#[pyclass(name = "Workspace", frozen)]
struct PyWorkspace {
    inner: Prepared,
}

#[pymethods]
impl PyWorkspace {
    #[getter]
    fn n_valid(&self) -> usize {
        self.inner.gain_map.n_valid()
    }

    #[getter]
    fn valid_mask(&self) -> Vec<bool> {
        self.inner.gain_map.valid().to_vec()
    }

    /// Per-candidate average gains over the flat grid, `u` outer.
    fn gains(&self, waveguide: usize, candidate: usize) -> PyResult<Vec<f64>> {
        let gm = &self.inner.gain_map;
        if waveguide == 0 || waveguide > gm.n_waveguides() || candidate == 0 || candidate > gm.n_candidates() {
            return Err(PyValueError::new_err("waveguide or candidate index out of range"));
        }
        Ok(gm.gains(waveguide - 1, candidate - 1).to_vec())
    }

    fn avg_snr(&self, activation_: Vec<usize>) -> PyResult<Vec<f64>> {
        let a = activation(activation_)?;
        avg_snr(&a, &self.inner.gain_map, self.inner.rho()).map_err(to_py)
    }

    fn coverage_count(&self, activation_: Vec<usize>, gamma_th_db: f64) -> PyResult<usize> {
        let a = activation(activation_)?;
        coverage_count(&a, &self.inner.gain_map, self.inner.rho(), db_to_linear(gamma_th_db)).map_err(to_py)
    }

    fn worst_grid_snr(&self, activation_: Vec<usize>) -> PyResult<f64> {
        let a = activation(activation_)?;
        worst_grid_snr(&a, &self.inner.gain_map, self.inner.rho()).map_err(to_py)
    }

    #[pyo3(signature = (gamma_th_db, exact = false))]
    fn coverage(&self, py: Python<'_>, gamma_th_db: f64, exact: bool) -> PyResult<PyCoverageResult> {
        let r = py
            .detach(|| self.inner.solve_coverage(db_to_linear(gamma_th_db), exact))
            .map_err(to_py)?;
        Ok(PyCoverageResult {
            activation: r.activation.to_one_based(),
            covered_count: r.covered_count,
            coverage_fraction: r.coverage_fraction,
            snr_field: r.snr_field,
            gamma_th: r.gamma_th,
            sweeps_used: r.sweeps_used,
            method: match r.method {
                CoverageMethod::Exact => "exact".into(),
                CoverageMethod::CoordinateAscent => "coordinate_ascent".into(),
            },
            trace: r.trace,
        })
    }

    #[pyo3(signature = (exact = false))]
    fn maxmin(&self, py: Python<'_>, exact: bool) -> PyResult<PyMinMaxResult> {
        let r = py
            .detach(|| self.inner.solve_maxmin(self.inner.rho(), exact))
            .map_err(to_py)?;
        Ok(PyMinMaxResult {
            activation: r.activation.to_one_based(),
            t_star: r.t_star,
            bisection_iters: r.bisection_iters,
            feasibility_evals: r.feasibility_evals,
            exact: r.exact,
            snr_field: r.snr_field,
        })
    }

    #[pyo3(signature = (gammas_db, exact = false))]
    fn threshold_sweep(&self, py: Python<'_>, gammas_db: Vec<f64>, exact: bool) -> PyResult<Vec<PyThresholdRow>> {
        let rows = py
            .detach(|| sweep::threshold_sweep(&self.inner, &gammas_db, exact))
            .map_err(to_py)?;
        Ok(rows
            .into_iter()
            .map(|r| PyThresholdRow {
                gamma_th_db: r.gamma_th_db,
                optimized: r.optimized,
                optimized_activation: r.optimized_activation,
                random_mean: r.random_mean,
                random_std: r.random_std,
                fixed_array: r.fixed_array,
            })
            .collect())
    }

    #[pyo3(signature = (powers_dbm, exact = false))]
    fn power_sweep(&self, py: Python<'_>, powers_dbm: Vec<f64>, exact: bool) -> PyResult<Vec<PyPowerRow>> {
        let s = py
            .detach(|| sweep::power_sweep(&self.inner, &powers_dbm, exact))
            .map_err(to_py)?;
        Ok(s.rows
            .into_iter()
            .map(|r| PyPowerRow {
                p_tx_dbm: r.p_tx_dbm,
                optimized_db: r.optimized_db,
                random_mean_db: r.random_mean_db,
                random_std_db: r.random_std_db,
                fixed_array_db: r.fixed_array_db,
            })
            .collect())
    }

    /// Writes the SNR map of `activation` as `csv` or `pgm`.
    #[pyo3(signature = (activation_, path, format = "csv"))]
    fn export_map(&self, activation_: Vec<usize>, path: &str, format: &str) -> PyResult<()> {
        let format = match format {
            "csv" => MapFormat::Csv,
            "pgm" => MapFormat::Pgm,
            other => return Err(PyValueError::new_err(format!("unknown map format `{other}`"))),
        };
        let a = activation(activation_)?;
        let gm = &self.inner.gain_map;
        let field = avg_snr(&a, gm, self.inner.rho()).map_err(to_py)?;
        let g = self.inner.scenario.geometry();
        export_map(&field, gm.valid(), g.grid, &g.region, path, format).map_err(to_py)
    }
}

/// Uniform random 1-based taps, deterministic per seed.
#[pyfunction]
fn random_activation(scenario: &PyScenario, seed: u64) -> Vec<usize> {
    sweep::random_activation(&scenario.inner, seed).to_one_based()
}

#[pymodule]
fn pinchmap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyWorkspace>()?;
    m.add_class::<PyCoverageResult>()?;
    m.add_class::<PyMinMaxResult>()?;
    m.add_class::<PyThresholdRow>()?;
    m.add_class::<PyPowerRow>()?;
    m.add_function(wrap_pyfunction!(random_activation, m)?)?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    Ok(())
}
