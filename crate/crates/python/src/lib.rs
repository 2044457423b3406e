//! Python bindings: exact reals, continued fractions, unimodular matrices,
//! the constructions, certificates and the exponent pipeline.
//!
//! Points are passed as strings in the real-input grammar (`"1,2"`,
//! `"surd:(-1+1*sqrt(5))/2"`). Structured results come back as plain
//! dictionaries built from the same JSON the CLI prints.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use orbit_approx::analysis::{geometric_grid, target_kind, TargetKind, DEFAULT_ORACLE_CAP};
use orbit_approx::sl2::count_norm_bounded;
use orbit_approx::{
    approx_irrational_slope, approx_origin, approx_rational_slope, approx_signed, enumerate_norm_bounded,
    estimate_exponents, normalize, select_indices_small_omega, staircase, verify_lemma1, verify_theorem4,
    ContinuedFraction, Error, NormalizedPair, Omega, PlanePoint, RealValue, StaircaseSource, UnimodularMatrix,
    Window,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde_json::Value;

const GOLDEN: &str = "surd:(-1+1*sqrt(5))/2";

create_exception!(orbit_approx, OrbitApproxError, PyValueError);
create_exception!(orbit_approx, PrecisionExhaustedError, OrbitApproxError);
create_exception!(orbit_approx, CapExceededError, OrbitApproxError);
create_exception!(orbit_approx, InsufficientDataError, OrbitApproxError);

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::PrecisionExhausted { .. } => PrecisionExhaustedError::new_err(msg),
        Error::CapExceeded { .. } => CapExceededError::new_err(msg),
        Error::InsufficientData(_) => InsufficientDataError::new_err(msg),
        _ => OrbitApproxError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let json = PyModule::import(py, "json")?;
    Ok(json.call_method1("loads", (v.to_string(),))?.unbind())
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().py()
}

fn pair(xi: &str, y: &str) -> PyResult<NormalizedPair> {
    let x = PlanePoint::from_slope(parse(xi)?);
    normalize(&x, &parse(y)?).py()
}

/// A real number given exactly or by certified enclosures.
#[pyclass(name = "Real", module = "orbit_approx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyReal(RealValue);

#[pymethods]
impl PyReal {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyReal(parse(text)?))
    }

    fn is_exact(&self) -> bool {
        self.0.is_exact()
    }

    fn is_rational(&self) -> bool {
        self.0.is_rational()
    }

    /// Rational endpoints `(lo, hi)` of an enclosure of width at most `2^-bits`.
    fn enclose(&self, bits: u32) -> PyResult<(String, String)> {
        let e = self
            .0
            .enclose(bits)
            .ok_or_else(|| py_err(Error::PrecisionExhausted { context: "enclosure".into(), bits }))?;
        Ok((e.lower().to_string(), e.upper().to_string()))
    }

    /// Exact three-way comparison: −1, 0 or 1.
    fn compare(&self, other: &PyReal) -> PyResult<i8> {
        Ok(match self.0.cmp_value(&other.0).py()? {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        })
    }

    fn __float__(&self) -> f64 {
        self.0.to_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Real({})", self.0)
    }
}

/// `[[v1, u1], [v2, u2]]` of determinant one.
#[pyclass(name = "Matrix", module = "orbit_approx", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyMatrix(UnimodularMatrix);

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(v1: BigInt, u1: BigInt, v2: BigInt, u2: BigInt) -> PyResult<Self> {
        Ok(PyMatrix(UnimodularMatrix::new(v1, u1, v2, u2).py()?))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyMatrix(parse(text)?))
    }

    fn entries(&self) -> [[BigInt; 2]; 2] {
        let [v1, u1, v2, u2] = self.0.entries().map(Clone::clone);
        [[v1, u1], [v2, u2]]
    }

    /// Largest absolute entry.
    fn norm(&self) -> BigInt {
        self.0.norm()
    }

    fn inverse(&self) -> Self {
        PyMatrix(self.0.inverse())
    }

    /// `γ·(x1, x2)` for coordinates in the real-input grammar.
    fn apply(&self, point: &str) -> PyResult<(PyReal, PyReal)> {
        let p = self.0.apply(&parse(point)?);
        Ok((PyReal(p.x1), PyReal(p.x2)))
    }

    fn __mul__(&self, other: &PyMatrix) -> Self {
        PyMatrix(self.0.clone() * other.0.clone())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Matrix({})", self.0)
    }
}

/// Convergents `p_k/q_k` of an irrational slope.
#[pyclass(name = "ContinuedFraction", module = "orbit_approx", frozen, skip_from_py_object)]
struct PyContinuedFraction(ContinuedFraction);

#[pymethods]
impl PyContinuedFraction {
    #[new]
    #[pyo3(signature = (xi = GOLDEN))]
    fn new(xi: &str) -> PyResult<Self> {
        Ok(PyContinuedFraction(ContinuedFraction::new(parse(xi)?).py()?))
    }

    fn partial_quotients(&self, n: usize) -> PyResult<Vec<BigInt>> {
        self.0.partial_quotients(n).py()
    }

    fn q(&self, k: usize) -> PyResult<BigInt> {
        self.0.q(k).py()
    }

    /// `(p_k, q_k)`.
    fn convergent(&self, k: usize) -> PyResult<(BigInt, BigInt)> {
        let c = self.0.convergent(k).py()?;
        Ok((c.p, c.q))
    }

    fn matrix(&self, k: usize) -> PyResult<PyMatrix> {
        Ok(PyMatrix(self.0.matrix(k).py()?.matrix))
    }

    /// `|ε_k| = |q_k ξ − p_k|`.
    fn abs_epsilon(&self, k: isize) -> PyResult<PyReal> {
        Ok(PyReal(self.0.abs_epsilon(k).py()?))
    }

    /// Raises unless `1/(2q_{k+1}) ≤ |ε_k| ≤ 1/q_{k+1}` is certified.
    fn certify_epsilon_bounds(&self, k: usize) -> PyResult<()> {
        self.0.certify_epsilon_bounds(k).py()
    }
}

fn result_json(py: Python<'_>, r: Result<orbit_approx::ApproxResult, Error>) -> PyResult<Py<PyAny>> {
    to_py(py, &r.py()?.to_json())
}

#[pyfunction(name = "approx_origin")]
#[pyo3(signature = (k, xi = GOLDEN))]
fn approx_origin_py(py: Python<'_>, k: usize, xi: &str) -> PyResult<Py<PyAny>> {
    result_json(py, approx_origin(&pair(xi, "0,0")?, k))
}

#[pyfunction(name = "approx_rational_slope")]
#[pyo3(signature = (y, k, xi = GOLDEN))]
fn approx_rational_slope_py(py: Python<'_>, y: &str, k: usize, xi: &str) -> PyResult<Py<PyAny>> {
    result_json(py, approx_rational_slope(&pair(xi, y)?, k))
}

#[pyfunction(name = "approx_irrational_slope")]
#[pyo3(signature = (y, j, k, xi = GOLDEN))]
fn approx_irrational_slope_py(py: Python<'_>, y: &str, j: usize, k: usize, xi: &str) -> PyResult<Py<PyAny>> {
    result_json(py, approx_irrational_slope(&pair(xi, y)?, j, k))
}

/// `(j, k)` for the bounded-growth selection starting at `j0`.
#[pyfunction(name = "select_indices_small_omega")]
#[pyo3(signature = (y, j0, xi = GOLDEN))]
fn select_indices_small_omega_py(y: &str, j0: usize, xi: &str) -> PyResult<(usize, usize)> {
    select_indices_small_omega(&pair(xi, y)?, j0).py()
}

#[pyfunction(name = "approx_signed")]
#[pyo3(signature = (y, k, mu = "3/10", xi = GOLDEN))]
fn approx_signed_py(py: Python<'_>, y: &str, k: usize, mu: &str, xi: &str) -> PyResult<Py<PyAny>> {
    let mu: BigRational = mu.parse().map_err(|_| PyValueError::new_err(format!("cannot parse μ = {mu:?}")))?;
    let x = PlanePoint::from_slope(parse(xi)?);
    result_json(py, approx_signed(&x, &parse(y)?, k, &mu))
}

#[pyfunction(name = "verify_lemma1")]
#[pyo3(signature = (k, xi = GOLDEN, cap = DEFAULT_ORACLE_CAP))]
fn verify_lemma1_py(py: Python<'_>, k: usize, xi: &str, cap: u64) -> PyResult<Py<PyAny>> {
    let cf = ContinuedFraction::new(parse(xi)?).py()?;
    to_py(py, &verify_lemma1(&cf, k, cap).py()?.to_json())
}

#[pyfunction(name = "verify_theorem4")]
#[pyo3(signature = (y, k, xi = GOLDEN, cap = DEFAULT_ORACLE_CAP))]
fn verify_theorem4_py(py: Python<'_>, y: &str, k: usize, xi: &str, cap: u64) -> PyResult<Py<PyAny>> {
    let cf = ContinuedFraction::new(parse(xi)?).py()?;
    to_py(py, &verify_theorem4(&cf, &parse(y)?, k, cap).py()?.to_json())
}

fn source(name: &str) -> PyResult<StaircaseSource> {
    match name {
        "oracle" => Ok(StaircaseSource::Oracle),
        "constructions" => Ok(StaircaseSource::Constructions),
        _ => Err(PyValueError::new_err(format!("source must be 'oracle' or 'constructions', not {name:?}"))),
    }
}

/// Records of `D(T)` on the grid `1, 2, 4, …, t_max`.
#[pyfunction(name = "staircase")]
#[pyo3(signature = (y, t_max, xi = GOLDEN, source = "oracle", cap = DEFAULT_ORACLE_CAP))]
fn staircase_py(py: Python<'_>, y: &str, t_max: u64, xi: &str, source: &str, cap: u64) -> PyResult<Py<PyAny>> {
    let x = PlanePoint::from_slope(parse(xi)?);
    let rs = staircase(&x, &parse(y)?, &geometric_grid(t_max), self::source(source)?, cap).py()?;
    to_py(py, &rs.to_json())
}

fn omega(given: Option<&str>, slope: impl FnOnce() -> Result<RealValue, Error>) -> PyResult<Option<Omega>> {
    if let Some(w) = given {
        return Ok(Some(parse(w)?));
    }
    let s = slope().py()?;
    Ok((s.is_exact() && !s.is_rational()).then(Omega::one))
}

/// Empirical `(μ, μ̂)` over `[window_min, t_max]`, next to the predicted values.
///
/// The window defaults to `[⌈√t_max⌉, t_max]`; ω defaults to 1 for quadratic
/// irrationals.
#[pyfunction(name = "estimate_exponents")]
#[pyo3(signature = (y, t_max, xi = GOLDEN, window_min = None, omega_xi = None, omega_y = None, source = "oracle", cap = DEFAULT_ORACLE_CAP))]
#[allow(clippy::too_many_arguments)]
fn estimate_exponents_py(
    py: Python<'_>,
    y: &str,
    t_max: u64,
    xi: &str,
    window_min: Option<u64>,
    omega_xi: Option<&str>,
    omega_y: Option<&str>,
    source: &str,
    cap: u64,
) -> PyResult<Py<PyAny>> {
    let x = PlanePoint::from_slope(parse(xi)?);
    let y: PlanePoint = parse(y)?;
    let window = match window_min {
        Some(m) => Window::new(m, t_max).py()?,
        None => Window::tail(t_max),
    };
    let w_xi = omega(omega_xi, || x.slope())?;
    let w_y = match target_kind(&y).py()? {
        TargetKind::Irrational => omega(omega_y, || y.slope())?,
        _ => omega_y.map(parse).transpose()?,
    };
    let rs = staircase(&x, &y, &geometric_grid(t_max), self::source(source)?, cap).py()?;
    let est = estimate_exponents(&rs, &window, w_xi.as_ref(), w_y.as_ref()).py()?;
    to_py(py, &est.to_json())
}

/// Number of matrices in SL(2,Z) with all entries in `[−t, t]`.
#[pyfunction]
fn count_matrices(t: u64) -> u64 {
    count_norm_bounded(t)
}

/// All matrices with entries in `[−t, t]`, in enumeration order.
#[pyfunction]
#[pyo3(signature = (t, cap = DEFAULT_ORACLE_CAP))]
fn enumerate_matrices(t: u64, cap: u64) -> PyResult<Vec<PyMatrix>> {
    if t > cap {
        return Err(py_err(Error::CapExceeded { requested: t, cap }));
    }
    Ok(enumerate_norm_bounded(t).map(PyMatrix).collect())
}

#[pymodule]
#[pyo3(name = "orbit_approx")]
fn orbit_approx_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyReal>()?;
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyContinuedFraction>()?;
    m.add("OrbitApproxError", py.get_type::<OrbitApproxError>())?;
    m.add("PrecisionExhaustedError", py.get_type::<PrecisionExhaustedError>())?;
    m.add("CapExceededError", py.get_type::<CapExceededError>())?;
    m.add("InsufficientDataError", py.get_type::<InsufficientDataError>())?;
    m.add("GOLDEN", GOLDEN)?;
    m.add("DEFAULT_ORACLE_CAP", DEFAULT_ORACLE_CAP)?;
    m.add_function(wrap_pyfunction!(approx_origin_py, m)?)?;
    m.add_function(wrap_pyfunction!(approx_rational_slope_py, m)?)?;
    m.add_function(wrap_pyfunction!(approx_irrational_slope_py, m)?)?;
    m.add_function(wrap_pyfunction!(select_indices_small_omega_py, m)?)?;
    m.add_function(wrap_pyfunction!(approx_signed_py, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma1_py, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem4_py, m)?)?;
    m.add_function(wrap_pyfunction!(staircase_py, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_exponents_py, m)?)?;
    m.add_function(wrap_pyfunction!(count_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_matrices, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    fn with_module(f: impl FnOnce(&Bound<'_, PyModule>)) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "orbit_approx").unwrap();
            orbit_approx_module(&m).unwrap();
            f(&m);
        });
    }

    #[test]
    fn certificates_round_trip_as_dicts() {
        with_module(|m| {
            let cert = m.getattr("verify_lemma1").unwrap().call1((6,)).unwrap();
            let cert = cert.cast::<PyDict>().unwrap();
            assert!(cert.get_item("passed").unwrap().unwrap().extract::<bool>().unwrap());
            assert_eq!(cert.get_item("T").unwrap().unwrap().extract::<u64>().unwrap(), 10);
        });
    }

    #[test]
    fn errors_map_to_exception_classes() {
        with_module(|m| {
            let py = m.py();
            let e = m.getattr("verify_theorem4").unwrap().call1(("1,2", 4)).unwrap_err();
            assert!(e.is_instance_of::<OrbitApproxError>(py));
            let e = m.getattr("enumerate_matrices").unwrap().call1((20_000,)).unwrap_err();
            assert!(e.is_instance_of::<CapExceededError>(py));
            let e = m.getattr("ContinuedFraction").unwrap().call1(("rat:22/7",)).unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn matrices_and_convergents() {
        with_module(|m| {
            let cf = m.getattr("ContinuedFraction").unwrap().call0().unwrap();
            let q: u64 = cf.call_method1("q", (6,)).unwrap().extract().unwrap();
            assert_eq!(q, 13);
            let g = cf.call_method1("matrix", (6,)).unwrap();
            let inv = g.call_method0("inverse").unwrap();
            let id = g.mul(&inv).unwrap();
            assert_eq!(id.str().unwrap().to_string(), UnimodularMatrix::identity().to_string());
            assert_eq!(count_matrices(1), 20);
        });
    }
}
