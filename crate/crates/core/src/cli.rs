//! File front end: graph files in, JSON reports out.
//!
//! Complex numbers are written as `[re, im]` pairs and matrices as lists of
//! rows. Every certificate in a report can be checked again with [`recheck`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::connectivity::{self, LemmaResiduals, Method, MethodVerdict};
use crate::error::Error;
use crate::graph::{self, GraphFlags, GraphResiduals, OperatorSystem, QuantumGraph};
use crate::linalg::{self, c64, CMatrix};
use crate::space::{projection_residual, Element, QuantumSpace, DEFAULT_TOL};
use crate::spectral::{self, BipartiteResiduals, PerronFrobenius};
use crate::superop::SuperOperator;

pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISCONNECTED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DISAGREEMENT: i32 = 3;

pub type Complex = [f64; 2];
pub type MatrixData = Vec<Vec<Complex>>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid graph file: {0}")]
    Format(String),
    #[error(transparent)]
    Graph(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Graph(Error::MethodDisagreement { .. }) => EXIT_DISAGREEMENT,
            _ => EXIT_INVALID,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Format(_) => "format",
            CliError::Graph(e) => match e {
                Error::InvalidBlocks(_) => "invalid-blocks",
                Error::NonPositiveDensity { .. } => "non-positive-density",
                Error::OneFormViolation { .. } => "one-form-violation",
                Error::ShapeMismatch { .. } => "shape-mismatch",
                Error::SpaceMismatch => "space-mismatch",
                Error::NotSchurIdempotent { .. } => "not-schur-idempotent",
                Error::NonBinaryEntries { .. } => "non-binary-entries",
                Error::BasisNotOrthonormal { .. } => "basis-not-orthonormal",
                Error::DimensionOutOfRange { .. } => "dimension-out-of-range",
                Error::NotCompletelyPositive { .. } => "not-completely-positive",
                Error::NotUndirected { .. } => "not-undirected",
                Error::NotGnsSymmetric { .. } => "not-gns-symmetric",
                Error::NotConnected => "not-connected",
                Error::MethodDisagreement { .. } => "method-disagreement",
                Error::NotAHomomorphismOfAlgebras { .. } => "not-a-homomorphism",
                Error::NotAProjection { .. } => "not-a-projection",
                Error::Numerical(_) => "numerical",
            },
        }
    }

    fn residual(&self) -> Option<f64> {
        match self {
            CliError::Graph(e) => match *e {
                Error::NotSchurIdempotent { residual }
                | Error::BasisNotOrthonormal { residual, .. }
                | Error::NotUndirected { residual }
                | Error::NotGnsSymmetric { residual }
                | Error::NotAHomomorphismOfAlgebras { residual, .. }
                | Error::NotAProjection { residual } => Some(residual),
                Error::OneFormViolation { trace_inverse, .. } => Some((trace_inverse - 1.0).abs()),
                Error::NotCompletelyPositive { min_eigenvalue, .. } => Some(min_eigenvalue),
                _ => None,
            },
            _ => None,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausEntry {
    pub from: usize,
    pub to: usize,
    pub operators: Vec<MatrixData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

/// On-disk description of a quantum graph. Exactly one of `adjacency`,
/// `kraus` and `classical` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub version: u32,
    #[serde(default)]
    pub blocks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<MatrixData>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<KrausEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
}

pub fn matrix_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn parse_matrix(data: &MatrixData, what: &str) -> CliResult<CMatrix> {
    let rows = data.len();
    let cols = data.first().map_or(0, Vec::len);
    if let Some(i) = data.iter().position(|r| r.len() != cols) {
        return Err(CliError::Format(format!(
            "{what}: row {i} has {} entries, expected {cols}",
            data[i].len()
        )));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| c64(data[i][j][0], data[i][j][1])))
}

pub fn element_data(x: &Element) -> Vec<MatrixData> {
    x.blocks().iter().map(matrix_data).collect()
}

pub fn parse_element(space: &QuantumSpace, data: &[MatrixData], what: &str) -> CliResult<Element> {
    let blocks = data
        .iter()
        .enumerate()
        .map(|(a, m)| parse_matrix(m, &format!("{what} block {a}")))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Element::new(space, blocks)?)
}

impl GraphFile {
    /// Adjacency-matrix file for an in-memory graph.
    pub fn from_graph(g: &QuantumGraph) -> Self {
        let space = g.space();
        Self {
            version: FORMAT_VERSION,
            blocks: space.blocks().to_vec(),
            rho: (!space.is_tracial()).then(|| space.rho().iter().map(matrix_data).collect()),
            normalize: false,
            adjacency: Some(matrix_data(g.adjacency().matrix())),
            kraus: None,
            classical: None,
            tolerance: Some(g.tol()),
            source: None,
        }
    }

    pub fn from_classical(adj: &DMatrix<f64>) -> Self {
        Self {
            version: FORMAT_VERSION,
            blocks: vec![1; adj.nrows()],
            rho: None,
            normalize: false,
            adjacency: None,
            kraus: None,
            classical: Some((0..adj.nrows()).map(|i| adj.row(i).iter().cloned().collect()).collect()),
            tolerance: None,
            source: None,
        }
    }

    pub fn space(&self) -> CliResult<std::sync::Arc<QuantumSpace>> {
        let rho = match &self.rho {
            None => None,
            Some(r) => Some(
                r.iter()
                    .enumerate()
                    .map(|(a, m)| parse_matrix(m, &format!("rho block {a}")))
                    .collect::<CliResult<Vec<_>>>()?,
            ),
        };
        Ok(QuantumSpace::new(&self.blocks, rho, self.normalize)?)
    }

    /// Build and validate the graph. `tol` overrides the file tolerance.
    pub fn to_graph(&self, tol: Option<f64>) -> CliResult<QuantumGraph> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Format(format!("unsupported version {}", self.version)));
        }
        let tol = tol.or(self.tolerance).unwrap_or(DEFAULT_TOL);
        let given = [self.adjacency.is_some(), self.kraus.is_some(), self.classical.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(CliError::Format(format!(
                "exactly one of adjacency, kraus, classical is required, found {given}"
            )));
        }
        if let Some(rows) = &self.classical {
            let n = rows.len();
            if self.rho.is_some() || !(self.blocks.is_empty() || self.blocks == vec![1; n]) {
                return Err(CliError::Format(
                    "classical graphs live on the diagonal algebra; omit rho and use unit blocks".into(),
                ));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != n) {
                return Err(CliError::Format(format!("classical: row {i} has {} entries, expected {n}", rows[i].len())));
            }
            let adj = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            return Ok(QuantumGraph::from_classical(&adj, tol)?);
        }
        let space = self.space()?;
        if let Some(m) = &self.adjacency {
            let mat = parse_matrix(m, "adjacency")?;
            return Ok(QuantumGraph::validate(SuperOperator::new(space, mat)?, tol)?);
        }
        let mut system = OperatorSystem::empty(space.blocks());
        for (k, entry) in self.kraus.as_ref().into_iter().flatten().enumerate() {
            let ops = entry
                .operators
                .iter()
                .enumerate()
                .map(|(i, m)| parse_matrix(m, &format!("kraus entry {k} operator {i}")))
                .collect::<CliResult<Vec<_>>>()?;
            let mut all = system.get(entry.from, entry.to).to_vec();
            all.extend(ops);
            system.set(entry.from, entry.to, all)?;
        }
        Ok(QuantumGraph::from_bimodule(space, &system, tol)?)
    }
}

/// A parsed input together with the digest of its bytes.
#[derive(Debug, Clone)]
pub struct Input {
    pub digest: String,
    pub file: GraphFile,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Input {
    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let file: GraphFile = serde_json::from_slice(bytes).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok(Self {
            digest: sha256_hex(bytes),
            file,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn from_file(file: GraphFile) -> Self {
        let bytes = serde_json::to_vec(&file).expect("graph files serialize");
        Self {
            digest: sha256_hex(&bytes),
            file,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tol: Option<f64>,
    pub method: Method,
    pub cross_check: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: None,
            method: Method::Auto,
            cross_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificatePayload {
    /// Reducing projection in the frame of `Ã`.
    pub kms_projection: Vec<MatrixData>,
    /// Reducing projection of `A`.
    pub projection: Vec<MatrixData>,
    pub rank: usize,
    pub lemma: LemmaResiduals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronFrobeniusPayload {
    pub r: f64,
    pub eigenvector: Vec<MatrixData>,
    pub simple: bool,
    pub multiplicity: usize,
    pub strictly_positive: bool,
    pub residual: f64,
}

impl From<&PerronFrobenius> for PerronFrobeniusPayload {
    fn from(pf: &PerronFrobenius) -> Self {
        Self {
            r: pf.r,
            eigenvector: element_data(&pf.eigenvector),
            simple: pf.simple,
            multiplicity: pf.multiplicity,
            strictly_positive: pf.strictly_positive,
            residual: pf.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiSupportPayload {
    pub ranks: Vec<usize>,
    pub sup_rank: usize,
    pub full_rank: usize,
    pub full: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityPayload {
    pub connected: bool,
    pub method: Method,
    pub cross_check: bool,
    pub verdicts: Vec<MethodVerdict>,
    pub agreement: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificatePayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laplacian_nullity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burnside_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choi_support: Option<ChoiSupportPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perron_frobenius: Option<PerronFrobeniusPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartitePayload {
    pub bipartite: bool,
    pub lambda: f64,
    pub lambda_min: f64,
    /// `(p₁, p₂)` in the frame of `Ã`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<[Vec<MatrixData>; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<BipartiteResiduals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPayload {
    pub eigenvalues: Vec<Complex>,
    pub hermitian: bool,
    pub perron_frobenius: PerronFrobeniusPayload,
    pub operator_norm_gns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentsPayload {
    pub count: usize,
    /// Minimal central projections of the kernel algebra, frame of `Ã`.
    pub projections: Vec<Vec<MatrixData>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub command: String,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<GraphFlags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<GraphResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<ConnectivityPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bipartite: Option<BipartitePayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<ComponentsPayload>,
    pub timing_ms: f64,
}

impl Report {
    fn new(command: &str, digest: &str) -> Self {
        Self {
            version: FORMAT_VERSION,
            command: command.into(),
            input_sha256: digest.into(),
            tolerance: None,
            valid: false,
            error: None,
            flags: None,
            residuals: None,
            connectivity: None,
            bipartite: None,
            spectrum: None,
            components: None,
            timing_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

fn failed(mut report: Report, err: CliError) -> Outcome {
    report.error = Some(ErrorPayload {
        kind: err.kind().into(),
        message: err.to_string(),
        residual: err.residual(),
    });
    Outcome {
        exit_code: err.exit_code(),
        report,
    }
}

/// Parse the graph, fill the common fields and run `body`.
fn run(
    command: &str,
    input: &Input,
    opts: &Options,
    body: impl FnOnce(&QuantumGraph, &mut Report) -> CliResult<i32>,
) -> Outcome {
    let start = Instant::now();
    let mut report = Report::new(command, &input.digest);
    let result = input.file.to_graph(opts.tol).and_then(|g| {
        report.valid = true;
        report.tolerance = Some(g.tol());
        report.flags = Some(*g.flags());
        report.residuals = Some(*g.residuals());
        body(&g, &mut report)
    });
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(exit_code) => Outcome { report, exit_code },
        Err(e) => failed(report, e),
    }
}

pub fn validate(input: &Input, opts: &Options) -> Outcome {
    run("validate", input, opts, |_, _| Ok(EXIT_OK))
}

pub fn connectivity(input: &Input, opts: &Options) -> Outcome {
    run("connectivity", input, opts, |g, report| {
        let r = connectivity::connected(g, opts.method, opts.cross_check)?;
        let hdim = g.space().hdim();
        report.connectivity = Some(ConnectivityPayload {
            connected: r.connected,
            method: opts.method,
            cross_check: opts.cross_check,
            verdicts: r.verdicts.clone(),
            agreement: r.agreement,
            certificate: r.certificate.as_ref().map(|c| CertificatePayload {
                kms_projection: element_data(c.kms_projection.element()),
                projection: element_data(c.projection.element()),
                rank: c.projection.rank(),
                lemma: c.lemma,
                commutation: c.commutation,
            }),
            kernel_dimension: r.kernel_dimension,
            laplacian_nullity: r.laplacian_nullity,
            burnside_dimension: r.burnside_dimension,
            choi_support: r.choi_support.as_ref().map(|s| ChoiSupportPayload {
                ranks: s.ranks.clone(),
                sup_rank: s.sup_rank,
                full_rank: hdim * hdim,
                full: s.full,
            }),
            perron_frobenius: r.perron_frobenius.as_ref().map(Into::into),
        });
        Ok(if r.connected { EXIT_OK } else { EXIT_DISCONNECTED })
    })
}

pub fn bipartite(input: &Input, opts: &Options) -> Outcome {
    run("bipartite", input, opts, |g, report| {
        let b = spectral::is_bipartite(g)?;
        report.bipartite = Some(BipartitePayload {
            bipartite: b.bipartite,
            lambda: b.lambda,
            lambda_min: b.lambda_min,
            partition: b
                .partition
                .as_ref()
                .map(|(p1, p2)| [element_data(p1.element()), element_data(p2.element())]),
            residuals: b.residuals,
        });
        Ok(EXIT_OK)
    })
}

pub fn spectrum(input: &Input, opts: &Options) -> Outcome {
    run("spectrum", input, opts, |g, report| {
        let s = spectral::spectrum(g)?;
        report.spectrum = Some(SpectrumPayload {
            eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            hermitian: s.hermitian,
            perron_frobenius: (&s.perron_frobenius).into(),
            operator_norm_gns: spectral::operator_norm_gns(g)?,
            regularity: spectral::regularity(g),
        });
        Ok(EXIT_OK)
    })
}

pub fn components(input: &Input, opts: &Options) -> Outcome {
    run("components", input, opts, |g, report| {
        let parts = connectivity::connected_components(g)?;
        report.components = Some(ComponentsPayload {
            count: parts.len(),
            projections: parts.iter().map(|p| element_data(p.element())).collect(),
        });
        Ok(EXIT_OK)
    })
}

/// A `QG(n, d)` sample as a replayable Kraus-form graph file.
pub fn random_file(n: usize, d: usize, seed: u64) -> CliResult<GraphFile> {
    let system = graph::random_operator_system(n, d, seed)?;
    Ok(GraphFile {
        version: FORMAT_VERSION,
        blocks: vec![n],
        rho: None,
        normalize: false,
        adjacency: None,
        kraus: Some(
            system
                .pairs()
                .map(|(&(from, to), ops)| KrausEntry {
                    from,
                    to,
                    operators: ops.iter().map(matrix_data).collect(),
                })
                .collect(),
        ),
        classical: None,
        tolerance: None,
        source: Some(Source {
            model: "QG".into(),
            n,
            d,
            seed,
        }),
    })
}

fn write_text(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_path(command: &str, path: &Path, opts: &Options, out: Option<&Path>, f: fn(&Input, &Options) -> Outcome) -> Outcome {
    let outcome = match Input::read(path) {
        Ok(input) => f(&input, opts),
        Err(e) => failed(Report::new(command, ""), e),
    };
    if let Err(e) = write_text(&outcome.report.to_json(), out) {
        eprintln!("{e}");
        return Outcome {
            exit_code: EXIT_INVALID,
            ..outcome
        };
    }
    outcome
}

pub fn cmd_validate(path: &Path, opts: &Options, out: Option<&Path>) -> Outcome {
    run_path("validate", path, opts, out, validate)
}

pub fn cmd_connectivity(path: &Path, opts: &Options, out: Option<&Path>) -> Outcome {
    run_path("connectivity", path, opts, out, connectivity)
}

pub fn cmd_bipartite(path: &Path, opts: &Options, out: Option<&Path>) -> Outcome {
    run_path("bipartite", path, opts, out, bipartite)
}

pub fn cmd_spectrum(path: &Path, opts: &Options, out: Option<&Path>) -> Outcome {
    run_path("spectrum", path, opts, out, spectrum)
}

pub fn cmd_components(path: &Path, opts: &Options, out: Option<&Path>) -> Outcome {
    run_path("components", path, opts, out, components)
}

pub fn cmd_random(n: usize, d: usize, seed: u64, out: Option<&Path>) -> CliResult<GraphFile> {
    let file = random_file(n, d, seed)?;
    write_text(&(serde_json::to_string_pretty(&file).expect("graph files serialize") + "\n"), out)?;
    Ok(file)
}

/// One re-validated identity of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Recheck {
    pub checks: Vec<Check>,
}

impl Recheck {
    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    }

    fn require(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Tolerance used when re-checking certificates against `g`.
pub fn recheck_tolerance(g: &QuantumGraph) -> f64 {
    (1e2 * g.tol()).max(1e-8) * g.adjacency().norm().max(1.0)
}

fn check_projection(rc: &mut Recheck, name: &str, p: &Element, tol: f64) {
    rc.push(format!("{name}: p = p* = p²"), projection_residual(p), tol);
    let t = p.norm2();
    let rank_ok = p.hermitian_eigenvalues().iter().any(|&v| v > 0.5) && p.hermitian_eigenvalues().iter().any(|&v| v < 0.5);
    rc.require(format!("{name}: non-trivial"), t > 0.0 && rank_ok);
}

fn check_perron_frobenius(rc: &mut Recheck, g: &QuantumGraph, pf: &PerronFrobeniusPayload, tol: f64) -> CliResult<()> {
    let space = g.space();
    let x = parse_element(space, &pf.eigenvector, "perron-frobenius eigenvector")?;
    let rx = x.scale(c64(pf.r, 0.0));
    let scale = x.norm2().max(1e-300);
    rc.push("perron-frobenius: A(x) = r x", (&g.adjacency().apply(&x) - &rx).norm2() / scale, tol * pf.r.abs().max(1.0));
    rc.push("perron-frobenius: x = x*", (&x - &x.adjoint()).norm(), tol);
    let values = x.hermitian_eigenvalues();
    let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    rc.push("perron-frobenius: x ≥ 0", (-values[0]).max(0.0), tol * norm.max(1.0));
    if pf.strictly_positive {
        rc.require("perron-frobenius: x invertible", values[0] > spectral::POSITIVE_REL_TOL * norm);
    }
    Ok(())
}

/// Re-validate every certificate in `report` against `g`.
pub fn recheck(report: &Report, g: &QuantumGraph) -> CliResult<Recheck> {
    let mut rc = Recheck::default();
    let space = g.space();
    let tol = recheck_tolerance(g);
    if let Some(flags) = &report.flags {
        rc.require("flags reproduce", flags == g.flags());
    }
    if let Some(c) = &report.connectivity {
        rc.require("disconnected verdicts carry a certificate", c.connected || c.certificate.is_some());
        if let Some(cert) = &c.certificate {
            let q = parse_element(space, &cert.projection, "reducing projection")?;
            let p = parse_element(space, &cert.kms_projection, "kms projection")?;
            check_projection(&mut rc, "reducing projection", &q, tol);
            check_projection(&mut rc, "kms projection", &p, tol);
            rc.push("reducing projection: lemma", connectivity::lemma_residuals(g.adjacency(), &q).max(), tol);
            let kms = g.kms_adjacency();
            rc.push("kms projection: lemma", connectivity::lemma_residuals(&kms, &p).max(), tol);
            if g.flags().undirected {
                rc.push("kms projection: Ã R_p = R_p Ã", connectivity::commutation_residual(&kms, &p), tol);
            }
        }
        if let Some(pf) = &c.perron_frobenius {
            check_perron_frobenius(&mut rc, g, pf, tol)?;
        }
    }
    if let Some(b) = &report.bipartite {
        if let Some([p1, p2]) = &b.partition {
            let p1 = parse_element(space, p1, "bipartition p1")?;
            let p2 = parse_element(space, p2, "bipartition p2")?;
            check_projection(&mut rc, "bipartition p1", &p1, tol);
            check_projection(&mut rc, "bipartition p2", &p2, tol);
            rc.push("bipartition: p1 + p2 = 1", (&(&p1 + &p2) - &Element::identity(space)).norm(), tol);
            rc.push("bipartition: lemma", spectral::bipartite_residuals(g, &p1)?.max(), tol);
        }
        rc.require("bipartite verdicts carry a partition", !b.bipartite || b.partition.is_some());
    }
    if let Some(s) = &report.spectrum {
        let fresh = spectral::spectrum(g)?;
        let claimed: Vec<_> = s.eigenvalues.iter().map(|z| c64(z[0], z[1])).collect();
        rc.push("spectrum reproduces", linalg::multiset_distance(&claimed, &fresh.eigenvalues), tol);
        check_perron_frobenius(&mut rc, g, &s.perron_frobenius, tol)?;
        rc.push(
            "operator norm reproduces",
            (spectral::operator_norm_gns(g)? - s.operator_norm_gns).abs(),
            tol,
        );
    }
    if let Some(c) = &report.components {
        let kms = g.kms_adjacency();
        let mut total = Element::zero(space);
        let parts = c
            .projections
            .iter()
            .enumerate()
            .map(|(i, p)| parse_element(space, p, &format!("component {i}")))
            .collect::<CliResult<Vec<_>>>()?;
        rc.require("component count", parts.len() == c.count);
        for (i, p) in parts.iter().enumerate() {
            rc.push(format!("component {i}: p = p* = p²"), projection_residual(p), tol);
            rc.push(format!("component {i}: Ã R_p = R_p Ã"), connectivity::commutation_residual(&kms, p), tol);
            for q in &parts[i + 1..] {
                rc.push(format!("component {i}: orthogonal"), (p * q).norm(), tol);
            }
            total = &total + p;
        }
        rc.push("components sum to 1", (&total - &Element::identity(space)).norm(), tol);
    }
    Ok(rc)
}
