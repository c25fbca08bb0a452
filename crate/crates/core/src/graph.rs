//! Quantum graphs `(M, ψ, A)`: validation of the Schur idempotent, canonical
//! constructions, and the correspondence with `M'`-bimodules (operator
//! systems) on `H = ⊕ₐ ℂ^{nₐ}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix};
use crate::space::{Element, QuantumSpace, DEFAULT_TOL};
use crate::superop::SuperOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFlags {
    pub real: bool,
    pub completely_positive: bool,
    /// KMS-symmetric adjacency.
    pub undirected: bool,
    pub gns_symmetric: bool,
    pub reflexive: bool,
    pub irreflexive: bool,
    pub tracial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphResiduals {
    pub schur_idempotence: f64,
    pub star: f64,
    pub choi_min_eigenvalue: f64,
    pub kms_symmetry: f64,
    pub gns_symmetry: f64,
    pub reflexive: f64,
    pub irreflexive: f64,
}

/// A validated quantum graph. Flags are computed once, at construction.
#[derive(Debug, Clone)]
pub struct QuantumGraph {
    adjacency: SuperOperator,
    flags: GraphFlags,
    residuals: GraphResiduals,
    tol: f64,
}

impl QuantumGraph {
    /// Check `m(A ⊗ A)m* = A` and compute all flags.
    pub fn validate(adjacency: SuperOperator, tol: f64) -> Result<Self> {
        let square = adjacency.schur_product(&adjacency)?;
        let schur_idempotence = square.distance(&adjacency);
        if schur_idempotence > tol {
            return Err(Error::NotSchurIdempotent {
                residual: schur_idempotence,
            });
        }
        let space = adjacency.space().clone();
        let id = SuperOperator::identity(space.clone());
        let with_id = adjacency.schur_product(&id)?;
        let choi = adjacency.choi();
        let residuals = GraphResiduals {
            schur_idempotence,
            star: choi.hermitian_residual(),
            choi_min_eigenvalue: choi.min_eigenvalue(),
            kms_symmetry: adjacency.kms_symmetry_residual(),
            gns_symmetry: adjacency.gns_symmetry_residual(),
            reflexive: with_id.distance(&id),
            irreflexive: with_id.norm(),
        };
        let real = residuals.star <= tol;
        let flags = GraphFlags {
            real,
            completely_positive: real && residuals.choi_min_eigenvalue >= -tol,
            undirected: residuals.kms_symmetry <= tol,
            gns_symmetric: residuals.gns_symmetry <= tol,
            reflexive: residuals.reflexive <= tol,
            irreflexive: residuals.irreflexive <= tol,
            tracial: space.is_tracial(),
        };
        Ok(Self {
            adjacency,
            flags,
            residuals,
            tol,
        })
    }

    /// Import a classical directed graph on `D_n` from a 0/1 adjacency matrix.
    pub fn from_classical(adj: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = adj.nrows();
        if adj.ncols() != n || n == 0 {
            return Err(Error::ShapeMismatch {
                expected: "non-empty square adjacency matrix".into(),
                found: format!("{}x{}", adj.nrows(), adj.ncols()),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = adj[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinaryEntries { row: i, col: j, value: v });
                }
            }
        }
        let space = QuantumSpace::diagonal(n);
        let mat = adj.map(|v| c64(v, 0.0));
        Self::validate(SuperOperator::new(space, mat)?, tol)
    }

    /// Undirected classical graph from an edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], tol: f64) -> Result<Self> {
        let mut adj = DMatrix::<f64>::zeros(n, n);
        for &(i, j) in edges {
            adj[(i, j)] = 1.0;
            adj[(j, i)] = 1.0;
        }
        Self::from_classical(&adj, tol)
    }

    /// `K(x) = ψ(x)1`.
    pub fn complete(space: Arc<QuantumSpace>, tol: f64) -> Result<Self> {
        Self::validate(SuperOperator::complete(space), tol)
    }

    /// `A = id`, the totally disconnected reflexive graph.
    pub fn trivial(space: Arc<QuantumSpace>, tol: f64) -> Result<Self> {
        Self::validate(SuperOperator::identity(space), tol)
    }

    pub fn from_bimodule(space: Arc<QuantumSpace>, system: &OperatorSystem, tol: f64) -> Result<Self> {
        Self::validate(adjacency_from_bimodule(&space, system, tol)?, tol)
    }

    pub fn space(&self) -> &Arc<QuantumSpace> {
        self.adjacency.space()
    }

    pub fn adjacency(&self) -> &SuperOperator {
        &self.adjacency
    }

    /// KMS implementation `Ã` of the adjacency matrix.
    pub fn kms_adjacency(&self) -> SuperOperator {
        self.adjacency.kms_implementation()
    }

    pub fn flags(&self) -> &GraphFlags {
        &self.flags
    }

    pub fn residuals(&self) -> &GraphResiduals {
        &self.residuals
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// The quantum relation `S` recovered from the Choi matrix.
    pub fn operator_system(&self) -> Result<OperatorSystem> {
        self.adjacency.kraus_from_choi()
    }

    pub fn require_undirected(&self) -> Result<()> {
        if self.flags.undirected {
            Ok(())
        } else {
            Err(Error::NotUndirected {
                residual: self.residuals.kms_symmetry,
            })
        }
    }
}

/// An `M'`-bimodule on `H = ⊕ₐ ℂ^{nₐ}`: for each block pair `a → b` a list
/// of `n_b × nₐ` operators spanning `S_ab ⊂ B(ℂ^{nₐ}, ℂ^{n_b})`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSystem {
    blocks: Vec<usize>,
    parts: BTreeMap<(usize, usize), Vec<CMatrix>>,
}

impl OperatorSystem {
    pub fn empty(blocks: &[usize]) -> Self {
        Self {
            blocks: blocks.to_vec(),
            parts: BTreeMap::new(),
        }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Replace the operators for the pair `from → to`.
    pub fn set(&mut self, from: usize, to: usize, ops: Vec<CMatrix>) -> Result<()> {
        let nb = self.blocks.len();
        if from >= nb || to >= nb {
            return Err(Error::ShapeMismatch {
                expected: format!("block indices below {nb}"),
                found: format!("({from}, {to})"),
            });
        }
        let shape = (self.blocks[to], self.blocks[from]);
        if let Some(bad) = ops.iter().find(|m| m.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} operators for pair ({from} -> {to})", shape.0, shape.1),
                found: format!("{}x{}", bad.nrows(), bad.ncols()),
            });
        }
        if ops.is_empty() {
            self.parts.remove(&(from, to));
        } else {
            self.parts.insert((from, to), ops);
        }
        Ok(())
    }

    pub fn get(&self, from: usize, to: usize) -> &[CMatrix] {
        self.parts.get(&(from, to)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Non-empty pairs `((from, to), operators)` in order.
    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<CMatrix>)> {
        self.parts.iter()
    }

    /// Total number of stored operators.
    pub fn dim(&self) -> usize {
        self.parts.values().map(Vec::len).sum()
    }

    fn h_offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n;
                Some(o)
            })
            .collect()
    }

    /// All operators placed on `H`.
    pub fn on_h(&self) -> Vec<CMatrix> {
        let offs = self.h_offsets();
        let h: usize = self.blocks.iter().sum();
        let mut out = Vec::with_capacity(self.dim());
        for (&(from, to), ops) in &self.parts {
            for op in ops {
                let mut m = CMatrix::zeros(h, h);
                m.view_mut((offs[to], offs[from]), op.shape()).copy_from(op);
                out.push(m);
            }
        }
        out
    }

    /// `S*`: each `S_ab` becomes the adjoints in `S_ba`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::empty(&self.blocks);
        for (&(from, to), ops) in &self.parts {
            out.parts.insert((to, from), ops.iter().map(|m| m.adjoint()).collect());
        }
        out
    }

    /// Gram–Schmidt per block pair for `⟨S, T⟩ = Tr(ρₐ^{-1/2} S* ρ_b^{-1/2} T)`,
    /// keeping the order of the spanning vectors and dropping dependent ones.
    pub fn orthonormalized(&self, space: &QuantumSpace) -> Result<Self> {
        self.check_space(space)?;
        let mut out = Self::empty(&self.blocks);
        for (&(from, to), ops) in &self.parts {
            let left = space.rho_power(to, -0.25);
            let right = space.rho_power(from, -0.25);
            let left_inv = space.rho_power(to, 0.25);
            let right_inv = space.rho_power(from, 0.25);
            let flat: Vec<CMatrix> = ops.iter().map(|s| &left * s * &right).collect();
            let basis = gram_schmidt(&flat);
            let back = basis.into_iter().map(|v| &left_inv * v * &right_inv).collect();
            out.set(from, to, back)?;
        }
        Ok(out)
    }

    /// Largest deviation of the per-pair Gram matrices from the identity.
    pub fn gram_residuals(&self, space: &QuantumSpace) -> Vec<((usize, usize), f64)> {
        self.parts
            .iter()
            .map(|(&(from, to), ops)| {
                let left = space.rho_power(to, -0.5);
                let right = space.rho_power(from, -0.5);
                let k = ops.len();
                let gram = CMatrix::from_fn(k, k, |i, j| (&right * ops[i].adjoint() * &left * &ops[j]).trace());
                ((from, to), linalg::spectral_norm(&(gram - linalg::identity(k))))
            })
            .collect()
    }

    /// Orthogonal projector (Frobenius) onto `span S_ab`, indexed by row-major
    /// vectorization; independent of the chosen spanning set.
    pub fn span_projector(&self, from: usize, to: usize) -> CMatrix {
        let d = self.blocks[from] * self.blocks[to];
        let ops = self.get(from, to);
        if ops.is_empty() {
            return CMatrix::zeros(d, d);
        }
        let mut cols = CMatrix::zeros(d, ops.len());
        for (c, op) in ops.iter().enumerate() {
            cols.set_column(c, &linalg::vec_row_major(op));
        }
        linalg::projector(&linalg::range_basis(&cols, 0.0))
    }

    /// Largest distance between span projectors over all block pairs.
    pub fn span_distance(&self, other: &Self) -> f64 {
        let nb = self.blocks.len();
        let mut worst: f64 = 0.0;
        for a in 0..nb {
            for b in 0..nb {
                let d = linalg::spectral_norm(&(self.span_projector(a, b) - other.span_projector(a, b)));
                worst = worst.max(d);
            }
        }
        worst
    }

    fn check_space(&self, space: &QuantumSpace) -> Result<()> {
        if self.blocks != space.blocks() {
            return Err(Error::ShapeMismatch {
                expected: format!("operator system over blocks {:?}", space.blocks()),
                found: format!("{:?}", self.blocks),
            });
        }
        Ok(())
    }
}

fn gram_schmidt(vectors: &[CMatrix]) -> Vec<CMatrix> {
    let inner = |x: &CMatrix, y: &CMatrix| -> Complex64 { x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum() };
    let mut basis: Vec<CMatrix> = Vec::new();
    for v in vectors {
        let scale = inner(v, v).re.sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w -= q * c;
            }
        }
        let norm = inner(&w, &w).re.sqrt();
        if norm > 1e-10 * scale {
            basis.push(w.unscale(norm));
        }
    }
    basis
}

/// `A_ab(x) = Σᵢ ρ_b^{-1/4} Sⁱ ρₐ^{1/4} x ρₐ^{1/4} (Sⁱ)* ρ_b^{-1/4}`, assembled
/// into a superoperator. The operators must be orthonormal for
/// `⟨S, T⟩ = Tr(ρₐ^{-1/2} S* ρ_b^{-1/2} T)`.
pub fn adjacency_from_bimodule(space: &Arc<QuantumSpace>, system: &OperatorSystem, tol: f64) -> Result<SuperOperator> {
    system.check_space(space)?;
    for ((from, to), residual) in system.gram_residuals(space) {
        if residual > tol {
            return Err(Error::BasisNotOrthonormal { from, to, residual });
        }
    }
    let n = space.dim();
    let mut mat = CMatrix::zeros(n, n);
    for (&(from, to), ops) in system.pairs() {
        let (na, nb) = (space.blocks()[from], space.blocks()[to]);
        let left = space.rho_power(to, -0.25);
        let right = space.rho_power(from, 0.25);
        let mut block = CMatrix::zeros(nb * nb, na * na);
        for s in ops {
            let k = &left * s * &right;
            // vec(K x K*) = (K ⊗ conj K) vec(x) in row-major order
            block += k.kronecker(&k.map(|z| z.conj()));
        }
        let mut view = mat.view_mut((space.offset(to), space.offset(from)), (nb * nb, na * na));
        view += block;
    }
    SuperOperator::new(space.clone(), mat)
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

/// A GUE sample `(G + G†)/2` with i.i.d. standard complex Gaussian entries.
pub fn sample_gue(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| gaussian(rng));
    linalg::hermitian_part(&g)
}

/// Operator system `span{1, H₁, …, H_d} ⊂ M_n` with GUE samples `Hᵢ`,
/// orthonormalized (identity first) for `⟨S, T⟩ = (1/n) Tr(S*T)`.
pub fn random_operator_system(n: usize, d: usize, seed: u64) -> Result<OperatorSystem> {
    if n < 2 || d > n * n - 1 {
        return Err(Error::DimensionOutOfRange { n, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spanning = vec![linalg::identity(n)];
    spanning.extend((0..d).map(|_| sample_gue(n, &mut rng)));
    let space = QuantumSpace::tracial(&[n]);
    let mut raw = OperatorSystem::empty(&[n]);
    raw.set(0, 0, spanning)?;
    let system = raw.orthonormalized(&space)?;
    if system.dim() != d + 1 {
        return Err(Error::Numerical(format!(
            "GUE samples spanned only {} dimensions, expected {}",
            system.dim(),
            d + 1
        )));
    }
    Ok(system)
}

/// A sample of the random quantum graph model `QG(n, d)` on `(M_n, n Tr)`.
pub fn random_qg(n: usize, d: usize, seed: u64) -> Result<QuantumGraph> {
    let system = random_operator_system(n, d, seed)?;
    QuantumGraph::from_bimodule(QuantumSpace::tracial(&[n]), &system, DEFAULT_TOL)
}

/// Random bimodule on an arbitrary space: each block pair receives a random
/// subspace whose dimension is drawn from `0..=nₐn_b` with inclusion
/// probability `density` per dimension. With `symmetric` the result is
/// closed under adjoints, hence yields an undirected graph; with `reflexive`
/// every diagonal block contains its identity.
pub fn random_bimodule(
    space: &QuantumSpace,
    seed: u64,
    density: f64,
    symmetric: bool,
    reflexive: bool,
) -> Result<OperatorSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = space.blocks().to_vec();
    let mut raw = OperatorSystem::empty(&blocks);
    for a in 0..blocks.len() {
        for b in 0..blocks.len() {
            if symmetric && b < a {
                continue;
            }
            let (na, nb) = (blocks[a], blocks[b]);
            let k = (0..na * nb).filter(|_| rng.random::<f64>() < density).count();
            let mut ops: Vec<CMatrix> = Vec::new();
            if a == b && reflexive {
                ops.push(linalg::identity(na));
            }
            for _ in 0..k {
                let g = CMatrix::from_fn(nb, na, |_, _| gaussian(&mut rng));
                ops.push(if symmetric && a == b { linalg::hermitian_part(&g) } else { g });
            }
            if ops.is_empty() {
                continue;
            }
            if symmetric && a != b {
                raw.set(b, a, ops.iter().map(|m| m.adjoint()).collect())?;
            }
            raw.set(a, b, ops)?;
        }
    }
    raw.orthonormalized(space)
}

/// Random (undirected when `symmetric`) quantum graph on `space`.
pub fn random_graph(
    space: Arc<QuantumSpace>,
    seed: u64,
    density: f64,
    symmetric: bool,
    reflexive: bool,
) -> Result<QuantumGraph> {
    let system = random_bimodule(&space, seed, density, symmetric, reflexive)?;
    QuantumGraph::from_bimodule(space, &system, DEFAULT_TOL)
}

/// `Element` helper: the projection onto the vertices in `set` of `D_n`.
pub fn vertex_indicator(space: &QuantumSpace, set: &[usize]) -> Element {
    let mut blocks: Vec<CMatrix> = space.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect();
    for &v in set {
        blocks[v][(0, 0)] = c64(1.0, 0.0);
    }
    Element::new(space, blocks).expect("vertex indicator shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVector;

    fn classical(rows: &[&[f64]]) -> DMatrix<f64> {
        let n = rows.len();
        DMatrix::from_fn(n, n, |i, j| rows[i][j])
    }

    #[test]
    fn single_edge_flags() {
        let g = QuantumGraph::from_classical(&classical(&[&[0.0, 1.0], &[1.0, 0.0]]), DEFAULT_TOL).unwrap();
        let f = g.flags();
        assert!(f.real && f.undirected && f.irreflexive && f.tracial && !f.reflexive);
    }

    #[test]
    fn complete_graph_on_matrix_block() {
        let g = QuantumGraph::complete(QuantumSpace::tracial(&[2]), DEFAULT_TOL).unwrap();
        let f = g.flags();
        assert!(f.real && f.undirected && f.reflexive && f.completely_positive);
        let one = Element::identity(g.space());
        let k1 = g.adjacency().apply(&one);
        assert!((&k1 - &one.scale(c64(4.0, 0.0))).norm() < 1e-12);
    }

    #[test]
    fn scaled_complete_graph_rejected() {
        let k = SuperOperator::complete(QuantumSpace::tracial(&[2])).scale(2.0);
        match QuantumGraph::validate(k, DEFAULT_TOL) {
            Err(Error::NotSchurIdempotent { residual }) => assert!(residual > 1.0),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn complete_graph_on_points_is_all_ones() {
        let g = QuantumGraph::complete(QuantumSpace::diagonal(3), DEFAULT_TOL).unwrap();
        assert!(g.adjacency().matrix().iter().all(|z| (z - c64(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn trivial_graph_flags() {
        let g = QuantumGraph::trivial(QuantumSpace::tracial(&[2, 1]), DEFAULT_TOL).unwrap();
        assert!(g.flags().reflexive && g.flags().undirected);
    }

    #[test]
    fn classical_import_checks_entries() {
        let bad = classical(&[&[0.0, 2.0], &[1.0, 0.0]]);
        assert!(matches!(
            QuantumGraph::from_classical(&bad, DEFAULT_TOL),
            Err(Error::NonBinaryEntries { row: 0, col: 1, .. })
        ));
        let directed = QuantumGraph::from_classical(&classical(&[&[0.0, 1.0], &[0.0, 0.0]]), DEFAULT_TOL).unwrap();
        assert!(!directed.flags().undirected);
    }

    #[test]
    fn bimodule_examples() {
        let m2 = QuantumSpace::tracial(&[2]);
        let mut s = OperatorSystem::empty(&[2]);
        s.set(0, 0, vec![linalg::identity(2)]).unwrap();
        let a = adjacency_from_bimodule(&m2, &s, DEFAULT_TOL).unwrap();
        assert!(a.distance(&SuperOperator::identity(m2.clone())) < 1e-13);

        let d2 = QuantumSpace::diagonal(2);
        let one = CMatrix::from_element(1, 1, c64(1.0, 0.0));
        let mut s = OperatorSystem::empty(&[1, 1]);
        s.set(1, 0, vec![one.clone()]).unwrap();
        s.set(0, 1, vec![one]).unwrap();
        let a = adjacency_from_bimodule(&d2, &s, DEFAULT_TOL).unwrap();
        let swap = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!(linalg::spectral_norm(&(a.matrix() - swap)) < 1e-14);

        // matrix units scaled to Tr(S*S) = 2 span M₂
        let units: Vec<CMatrix> = (0..4)
            .map(|k| {
                let mut m = CMatrix::zeros(2, 2);
                m[(k / 2, k % 2)] = c64(2f64.sqrt(), 0.0);
                m
            })
            .collect();
        let mut s = OperatorSystem::empty(&[2]);
        s.set(0, 0, units).unwrap();
        let a = adjacency_from_bimodule(&m2, &s, DEFAULT_TOL).unwrap();
        assert!(a.distance(&SuperOperator::complete(m2)) < 1e-12);
    }

    #[test]
    fn bimodule_requires_orthonormal_basis() {
        let m2 = QuantumSpace::tracial(&[2]);
        let mut s = OperatorSystem::empty(&[2]);
        s.set(0, 0, vec![linalg::identity(2).scale(3.0)]).unwrap();
        assert!(matches!(
            adjacency_from_bimodule(&m2, &s, DEFAULT_TOL),
            Err(Error::BasisNotOrthonormal { .. })
        ));
    }

    #[test]
    fn random_model_extremes() {
        let triv = random_qg(3, 0, 11).unwrap();
        assert!(triv.adjacency().distance(&SuperOperator::identity(triv.space().clone())) < 1e-12);
        let full = random_qg(3, 8, 11).unwrap();
        assert!(full.adjacency().distance(&SuperOperator::complete(full.space().clone())) < 1e-10);
        assert!(matches!(random_qg(3, 9, 0), Err(Error::DimensionOutOfRange { .. })));
        assert!(matches!(random_qg(1, 0, 0), Err(Error::DimensionOutOfRange { .. })));
    }

    #[test]
    fn random_model_flags() {
        for seed in 0..5 {
            let g = random_qg(3, 2, seed).unwrap();
            let f = g.flags();
            assert!(f.real && f.undirected && f.reflexive, "seed {seed}: {f:?}");
            assert!(g.residuals().schur_idempotence < 1e-8);
        }
    }

    #[test]
    fn bimodule_round_trip_through_choi() {
        let rho = CMatrix::from_row_slice(2, 2, &[c64(3.0, 0.0), c64(0.4, 0.2), c64(0.4, -0.2), c64(1.0, 0.0)]);
        let space = QuantumSpace::new(
            &[2, 1],
            Some(vec![rho, CMatrix::from_diagonal(&CVector::from_element(1, c64(1.0, 0.0)))]),
            true,
        )
        .unwrap();
        for seed in 0..4 {
            let s = random_bimodule(&space, seed, 0.5, seed % 2 == 0, seed % 3 == 0).unwrap();
            let g = QuantumGraph::from_bimodule(space.clone(), &s, DEFAULT_TOL).unwrap();
            let back = g.operator_system().unwrap();
            assert!(s.span_distance(&back) < 1e-8, "seed {seed}");
            let a2 = adjacency_from_bimodule(&space, &back, 1e-8).unwrap();
            assert!(a2.distance(g.adjacency()) < 1e-8);
            if seed % 2 == 0 {
                assert!(g.flags().undirected);
            }
        }
    }
}
