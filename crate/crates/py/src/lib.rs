//! Python bindings. Graphs travel as the same JSON files the command line
//! tool reads, so reports from either side can be re-checked by the other.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use qgraph::cli::{self, GraphFile, Input, Options, Report};
use qgraph::connectivity::{self, Method};
use qgraph::graph::QuantumGraph;
use qgraph::linalg::CMatrix;
use qgraph::space::{QuantumSpace, DEFAULT_TOL};
use qgraph::spectral;

create_exception!(qgraph_py, QGraphError, PyException, "Invalid graph or numerical failure.");

fn err(e: impl std::fmt::Display) -> PyErr {
    QGraphError::new_err(e.to_string())
}

fn parse_method(name: &str) -> Result<Method, String> {
    serde_json::from_value(serde_json::Value::String(name.to_owned())).map_err(|_| format!("unknown method {name:?}"))
}

fn to_matrix(rows: &[Vec<Complex64>]) -> Result<CMatrix, String> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err("density blocks must be square".into());
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn make_space(blocks: &[usize], rho: Option<Vec<Vec<Vec<Complex64>>>>, normalize: bool) -> Result<Arc<QuantumSpace>, String> {
    let rho = rho
        .map(|bs| bs.iter().map(|b| to_matrix(b)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    QuantumSpace::new(blocks, rho, normalize).map_err(|e| e.to_string())
}

/// A validated quantum graph.
#[pyclass(name = "Graph", module = "qgraph_py", frozen)]
struct Graph {
    file: GraphFile,
    inner: QuantumGraph,
}

impl Graph {
    fn from_file(file: GraphFile, tol: Option<f64>) -> PyResult<Self> {
        let inner = file.to_graph(tol).map_err(err)?;
        Ok(Graph { file, inner })
    }

    fn from_graph(g: QuantumGraph) -> Self {
        Graph {
            file: GraphFile::from_graph(&g),
            inner: g,
        }
    }
}

#[pymethods]
impl Graph {
    #[staticmethod]
    #[pyo3(signature = (text, tol=None))]
    fn from_json(text: &str, tol: Option<f64>) -> PyResult<Self> {
        let file: GraphFile = serde_json::from_str(text).map_err(err)?;
        Self::from_file(file, tol)
    }

    /// Classical graph from a 0/1 adjacency matrix.
    #[staticmethod]
    fn classical(adjacency: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = adjacency.len();
        if adjacency.iter().any(|r| r.len() != n) {
            return Err(err("adjacency matrix must be square"));
        }
        let adj = DMatrix::from_fn(n, n, |i, j| adjacency[i][j]);
        Self::from_file(GraphFile::from_classical(&adj), None)
    }

    #[staticmethod]
    #[pyo3(signature = (blocks, rho=None, normalize=false))]
    fn complete(blocks: Vec<usize>, rho: Option<Vec<Vec<Vec<Complex64>>>>, normalize: bool) -> PyResult<Self> {
        let space = make_space(&blocks, rho, normalize).map_err(err)?;
        Ok(Self::from_graph(QuantumGraph::complete(space, DEFAULT_TOL).map_err(err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (blocks, rho=None, normalize=false))]
    fn trivial(blocks: Vec<usize>, rho: Option<Vec<Vec<Vec<Complex64>>>>, normalize: bool) -> PyResult<Self> {
        let space = make_space(&blocks, rho, normalize).map_err(err)?;
        Ok(Self::from_graph(QuantumGraph::trivial(space, DEFAULT_TOL).map_err(err)?))
    }

    /// Sample from `QG(n, d)`.
    #[staticmethod]
    #[pyo3(signature = (n, d, seed=0))]
    fn random(n: usize, d: usize, seed: u64) -> PyResult<Self> {
        Self::from_file(cli::random_file(n, d, seed).map_err(err)?, None)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("graph files serialize")
    }

    #[getter]
    fn blocks(&self) -> Vec<usize> {
        self.inner.space().blocks().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.space().dim()
    }

    #[getter]
    fn tol(&self) -> f64 {
        self.inner.tol()
    }

    #[getter]
    fn flags(&self) -> BTreeMap<String, bool> {
        let value = serde_json::to_value(self.inner.flags()).expect("flags serialize");
        value
            .as_object()
            .map(|m| m.iter().filter_map(|(k, v)| Some((k.clone(), v.as_bool()?))).collect())
            .unwrap_or_default()
    }

    /// Adjacency matrix in the canonical basis of `M`.
    fn adjacency(&self) -> Vec<Vec<Complex64>> {
        let a = self.inner.adjacency().matrix();
        (0..a.nrows()).map(|i| a.row(i).iter().cloned().collect()).collect()
    }

    #[pyo3(signature = (method="auto", cross_check=false))]
    fn is_connected(&self, method: &str, cross_check: bool) -> PyResult<bool> {
        let method = parse_method(method).map_err(err)?;
        let report = connectivity::connected(&self.inner, method, cross_check).map_err(err)?;
        Ok(report.connected)
    }

    fn laplacian_nullity(&self) -> PyResult<usize> {
        connectivity::laplacian_nullity(&self.inner).map_err(err)
    }

    fn burnside_dimension(&self) -> PyResult<usize> {
        let system = self.inner.operator_system().map_err(err)?;
        Ok(connectivity::burnside_generates(self.inner.space(), &system).1)
    }

    /// Number of connected components.
    fn components(&self) -> PyResult<usize> {
        Ok(connectivity::connected_components(&self.inner).map_err(err)?.len())
    }

    /// Eigenvalues, sorted by descending real part.
    fn spectrum(&self) -> PyResult<Vec<Complex64>> {
        Ok(spectral::spectrum(&self.inner).map_err(err)?.eigenvalues)
    }

    /// `(r, simple, strictly_positive)` for the Perron-Frobenius eigenvalue.
    fn perron_frobenius(&self) -> PyResult<(f64, bool, bool)> {
        let pf = spectral::spectrum(&self.inner).map_err(err)?.perron_frobenius;
        Ok((pf.r, pf.simple, pf.strictly_positive))
    }

    fn is_bipartite(&self) -> PyResult<bool> {
        Ok(spectral::is_bipartite(&self.inner).map_err(err)?.bipartite)
    }

    fn operator_norm(&self) -> PyResult<f64> {
        spectral::operator_norm_gns(&self.inner).map_err(err)
    }

    fn regularity(&self) -> Option<f64> {
        spectral::regularity(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Graph(blocks={:?}, undirected={})", self.inner.space().blocks(), self.inner.flags().undirected)
    }
}

/// Run a command-line subcommand on a graph file given as JSON; returns the
/// report JSON and the exit code.
#[pyfunction]
#[pyo3(signature = (command, graph_json, tol=None, method="auto", cross_check=false))]
fn run(command: &str, graph_json: &str, tol: Option<f64>, method: &str, cross_check: bool) -> PyResult<(String, i32)> {
    let input = Input::from_bytes(graph_json.as_bytes()).map_err(err)?;
    let opts = Options {
        tol,
        method: parse_method(method).map_err(err)?,
        cross_check,
    };
    let f = match command {
        "validate" => cli::validate,
        "connectivity" => cli::connectivity,
        "bipartite" => cli::bipartite,
        "spectrum" => cli::spectrum,
        "components" => cli::components,
        other => return Err(err(format!("unknown command {other:?}"))),
    };
    let outcome = f(&input, &opts);
    Ok((outcome.report.to_json(), outcome.exit_code))
}

/// Re-validate a report against its graph; returns the names of failed checks.
#[pyfunction]
fn recheck(report_json: &str, graph_json: &str) -> PyResult<Vec<String>> {
    let report: Report = serde_json::from_str(report_json).map_err(err)?;
    let file: GraphFile = serde_json::from_str(graph_json).map_err(err)?;
    let g = file.to_graph(report.tolerance).map_err(err)?;
    let rc = cli::recheck(&report, &g).map_err(err)?;
    Ok(rc.failures().into_iter().map(|c| c.name.clone()).collect())
}

#[pymodule]
fn qgraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(recheck, m)?)?;
    m.add("QGraphError", m.py().get_type::<QGraphError>())?;
    Ok(())
}
