//! Connectivity of quantum graphs by several independent methods, with
//! certificates that can be checked against their defining identities.
//!
//! Reducing projections are found in the frame of the KMS implementation
//! `Ã`, where the adjacency acts on a tracial `L²` space. A projection `p̃`
//! with `Ã(x p̃) = Ã(x) p̃` is the projection of the non-tracial definition of
//! disconnectedness; the corresponding reducing projection of `A` itself is
//! the support of `ρ^{-1/4} p̃ ρ^{-1/4}`.

use std::fmt;

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{gaussian, OperatorSystem, QuantumGraph};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::space::{Element, Projection, QuantumSpace};
use crate::spectral;
use crate::superop::SuperOperator;

/// Relative gap separating eigenvalue clusters in spectral projections.
pub const CLUSTER_REL_GAP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Irreducibility,
    Laplacian,
    Burnside,
    ChoiSupport,
    Spectral,
}

impl Method {
    pub const CONCRETE: [Method; 5] = [
        Method::Irreducibility,
        Method::Laplacian,
        Method::Burnside,
        Method::ChoiSupport,
        Method::Spectral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Irreducibility => "irreducibility",
            Method::Laplacian => "laplacian",
            Method::Burnside => "burnside",
            Method::ChoiSupport => "choi-support",
            Method::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Connected,
    Disconnected,
    Inapplicable,
}

impl Verdict {
    fn from_flag(connected: bool) -> Self {
        if connected {
            Verdict::Connected
        } else {
            Verdict::Disconnected
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Connected => "connected",
            Verdict::Disconnected => "disconnected",
            Verdict::Inapplicable => "inapplicable",
        })
    }
}

/// Residuals of the five equivalent conditions of the irreducibility lemma
/// for a CP map `Φ` and a projection `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaResiduals {
    /// `‖(1−p)Φ(p)(1−p)‖`, i.e. `Φ(p) ≤ Cp`.
    pub dominated: f64,
    /// `‖(I − L_pR_p) Φ L_pR_p‖`, i.e. `Φ(pMp) ⊂ pMp`.
    pub corner: f64,
    /// `‖Φ R_p − R_p Φ R_p‖`, i.e. `Φ(xp) = Φ(xp)p`.
    pub right: f64,
    /// `‖Φ L_p − L_p Φ L_p‖`, i.e. `Φ(px) = pΦ(px)`.
    pub left: f64,
    /// `‖Φ(p)(1−p)‖`.
    pub support: f64,
}

impl LemmaResiduals {
    pub fn max(&self) -> f64 {
        [self.dominated, self.corner, self.right, self.left, self.support]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn lemma_residuals(phi: &SuperOperator, p: &Element) -> LemmaResiduals {
    let space = phi.space();
    let one = Element::identity(space);
    let q = &one - p;
    let image = phi.apply(p);
    let a = phi.matrix();
    let lp = space.left_mult(p);
    let rp = space.right_mult(p);
    let corner = &lp * &rp;
    let id = linalg::identity(space.dim());
    LemmaResiduals {
        dominated: (&(&q * &image) * &q).norm(),
        corner: linalg::spectral_norm(&((&id - &corner) * a * &corner)),
        right: linalg::spectral_norm(&(a * &rp - &rp * a * &rp)),
        left: linalg::spectral_norm(&(a * &lp - &lp * a * &lp)),
        support: (&image * &q).norm(),
    }
}

/// `‖Ã R_p − R_p Ã‖`: failure of `Ã(xp) = Ã(x)p`.
pub fn commutation_residual(kms: &SuperOperator, p: &Element) -> f64 {
    let rp = kms.space().right_mult(p);
    linalg::spectral_norm(&(kms.matrix() * &rp - &rp * kms.matrix()))
}

/// A reducing projection together with the checks it passed.
#[derive(Debug, Clone)]
pub struct ReducingCertificate {
    /// `p̃` in the frame of `Ã`; for undirected graphs `Ã(xp̃) = Ã(x)p̃`.
    pub kms_projection: Projection,
    /// Reducing projection `q` of the map itself.
    pub projection: Projection,
    pub lemma: LemmaResiduals,
    /// `‖Ã R_p̃ − R_p̃ Ã‖`, reported for KMS-symmetric maps.
    pub commutation: Option<f64>,
}

fn check_tol(phi: &SuperOperator, tol: f64) -> f64 {
    tol * phi.norm().max(1.0)
}

fn kms_to_reducing(space: &QuantumSpace, kms_p: &Element) -> Element {
    let d = space.density_power(-0.25);
    (&(&d * kms_p) * &d).support()
}

fn certify(phi: &SuperOperator, kms: &SuperOperator, kms_p: Element, symmetric: bool, tol: f64) -> Result<ReducingCertificate> {
    let space = phi.space();
    let q = kms_to_reducing(space, &kms_p);
    let lemma = lemma_residuals(phi, &q);
    let commutation = symmetric.then(|| commutation_residual(kms, &kms_p));
    Ok(ReducingCertificate {
        kms_projection: Projection::new(kms_p, 1e3 * tol)?,
        projection: Projection::new(q, 1e3 * tol)?,
        lemma,
        commutation,
    })
}

/// Decide irreducibility of a completely positive map. On reducibility a
/// non-trivial reducing projection is returned, validated against all five
/// conditions of the irreducibility lemma.
pub fn is_irreducible(phi: &SuperOperator, tol: f64) -> Result<(bool, Option<ReducingCertificate>)> {
    let space = phi.space().clone();
    let scale_tol = check_tol(phi, tol);
    let kraus = phi.kraus_from_choi()?;
    let kms = phi.kms_implementation();
    let symmetric = phi.is_kms_symmetric(scale_tol);
    if space.hdim() == 1 {
        return Ok((true, None));
    }

    let candidate = if symmetric {
        let kernel = kernel_of(&kms, tol)?;
        if kernel.dim() <= 1 {
            return Ok((true, None));
        }
        kernel.reducing_projection(&space)
    } else {
        // the bimodule operators are Kraus operators of Ã
        let (full, _, closure) = burnside_closure(&space, &kraus);
        if full {
            return Ok((true, None));
        }
        invariant_subspace(&space, &closure, &kms, scale_tol)
    };
    let kms_p = candidate.ok_or_else(|| Error::Numerical("no reducing projection found for a reducible map".into()))?;
    let cert = certify(phi, &kms, kms_p, symmetric, tol)?;
    if cert.lemma.max() > 1e2 * scale_tol {
        return Err(Error::Numerical(format!(
            "reducing projection failed validation (lemma residual {:.3e})",
            cert.lemma.max()
        )));
    }
    Ok((false, Some(cert)))
}

/// An orthonormal (for the reference trace) basis of a *-subalgebra of `M`
/// together with the residuals of the algebra checks.
#[derive(Debug, Clone)]
pub struct KernelAlgebra {
    pub basis: Vec<Element>,
    /// Distance of `1` from the span.
    pub unit_residual: f64,
    pub product_residual: f64,
    pub adjoint_residual: f64,
}

impl KernelAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn coords(&self) -> CMatrix {
        let n = self.basis.first().map(|b| b.to_coords().len()).unwrap_or(0);
        let mut q = CMatrix::zeros(n, self.basis.len());
        for (c, b) in self.basis.iter().enumerate() {
            q.set_column(c, &b.to_coords());
        }
        q
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, space: &QuantumSpace, x: &Element) -> Element {
        let q = self.coords();
        Element::from_coords(space, &(&q * (q.adjoint() * x.to_coords())))
    }

    /// A non-trivial projection of the algebra: a spectral projection for
    /// the lowest eigenvalue cluster of a self-adjoint, non-scalar element.
    pub fn reducing_projection(&self, space: &QuantumSpace) -> Option<Element> {
        let mut candidates = vec![self.project(space, &generic_diagonal(space))];
        for b in &self.basis {
            candidates.push(b.hermitian_part());
            candidates.push(b.scale(c64(0.0, 1.0)).hermitian_part());
        }
        candidates.into_iter().find_map(|y| lowest_cluster_projection(&y))
    }
}

/// A self-adjoint diagonal element with incommensurable entries.
fn generic_diagonal(space: &QuantumSpace) -> Element {
    let golden = 0.618_033_988_749_894_9_f64;
    let mut blocks = Vec::new();
    let mut k = 0usize;
    for &n in space.blocks() {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            k += 1;
            m[(i, i)] = c64(k as f64 + (k as f64 * golden).fract(), 0.0);
        }
        blocks.push(m);
    }
    Element::new(space, blocks).expect("diagonal blocks follow the space")
}

fn lowest_cluster_projection(y: &Element) -> Option<Element> {
    let values = y.hermitian_eigenvalues();
    let (lo, hi) = (values[0], values[values.len() - 1]);
    let diameter = hi - lo;
    if diameter <= 1e-9 * hi.abs().max(lo.abs()).max(1e-300) || diameter == 0.0 {
        return None;
    }
    let gap = CLUSTER_REL_GAP * diameter;
    let clusters = linalg::cluster_sorted(&values, gap);
    if clusters.len() < 2 {
        return None;
    }
    let top = values[*clusters[0].last().unwrap()];
    let next = values[clusters[1][0]];
    Some(y.spectral_projection(f64::NEG_INFINITY, 0.5 * (top + next)))
}

/// Solve `[Ã, R_y] = 0` for `y ∈ M`.
fn kernel_of(kms: &SuperOperator, tol: f64) -> Result<KernelAlgebra> {
    let space = kms.space();
    let n = space.dim();
    let a = kms.matrix();
    let mut system = CMatrix::zeros(n * n, n);
    for k in 0..n {
        let r = space.right_mult(&Element::basis(space, k));
        let comm = a * &r - &r * a;
        for (idx, z) in comm.iter().enumerate() {
            system[(idx, k)] = *z;
        }
    }
    let abs = tol.max(1e-8 * kms.norm().max(1.0));
    let q = linalg::null_space(&system, abs);
    let basis: Vec<Element> = (0..q.ncols())
        .map(|c| Element::from_coords(space, &q.column(c).into_owned()))
        .collect();
    let mut alg = KernelAlgebra {
        basis,
        unit_residual: 0.0,
        product_residual: 0.0,
        adjoint_residual: 0.0,
    };
    let outside = |x: &Element| -> f64 {
        let c = x.to_coords();
        (&c - &q * (q.adjoint() * &c)).norm()
    };
    alg.unit_residual = outside(&Element::identity(space));
    for b in &alg.basis {
        alg.adjoint_residual = alg.adjoint_residual.max(outside(&b.adjoint()));
        for c in &alg.basis {
            alg.product_residual = alg.product_residual.max(outside(&(b * c)));
        }
    }
    Ok(alg)
}

/// `{y ∈ M : Ã(xy) = Ã(x)y for all x}` for an undirected graph.
pub fn kernel_algebra(g: &QuantumGraph) -> Result<KernelAlgebra> {
    g.require_undirected()?;
    kernel_of(&g.kms_adjacency(), g.tol())
}

/// Nullity of the Laplacian `Δ = ∇*∇`, with `∇y = [A, R_y]`, computed in
/// orthonormal coordinates for the GNS inner product.
pub fn laplacian_nullity(g: &QuantumGraph) -> Result<usize> {
    if !g.flags().gns_symmetric {
        return Err(Error::NotGnsSymmetric {
            residual: g.residuals().gns_symmetry,
        });
    }
    let space = g.space();
    let n = space.dim();
    let gram = space.gram_gns();
    let chol = Cholesky::new(gram).ok_or_else(|| Error::Numerical("GNS Gram is not positive definite".into()))?;
    let l = chol.l();
    let lt = l.adjoint();
    let lt_inv = lt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let a = g.adjacency().matrix();
    let mut grad = CMatrix::zeros(n * n, n);
    for j in 0..n {
        let y = Element::from_coords(space, &lt_inv.column(j).into_owned());
        let r = space.right_mult(&y);
        let comm = &lt * (a * &r - &r * a) * &lt_inv;
        for (idx, z) in comm.iter().enumerate() {
            grad[(idx, j)] = *z;
        }
    }
    let lap = grad.adjoint() * &grad;
    let (values, _) = linalg::hermitian_eigen(&lap);
    let top = values.last().cloned().unwrap_or(0.0);
    let cut = 1e-9 * top.max(1.0);
    Ok(values.iter().filter(|&&v| v <= cut).count())
}

/// The unital algebra generated by `S` and the block identities of `M'`,
/// as an orthonormal (Frobenius) basis of operators on `H`.
fn burnside_closure(space: &QuantumSpace, system: &OperatorSystem) -> (bool, usize, Vec<CMatrix>) {
    let h = space.hdim();
    let gens = system.on_h();
    let units: Vec<CMatrix> = (0..space.num_blocks()).map(|a| space.block_unit_on_h(a)).collect();
    let n = h * h;
    // orthonormal basis, grown by Gram-Schmidt with one re-orthogonalization
    let mut basis = CMatrix::zeros(n, n);
    let mut k = 0;
    let absorb = |m: &CMatrix, basis: &mut CMatrix, k: &mut usize| -> Option<CMatrix> {
        if *k == n {
            return None;
        }
        let mut w = linalg::vec_row_major(m);
        let norm = w.norm();
        if norm == 0.0 {
            return None;
        }
        for _ in 0..2 {
            let q = basis.columns(0, *k);
            w -= &q * (q.adjoint() * &w);
        }
        let r = w.norm();
        if r <= linalg::RANK_REL_TOL * norm {
            return None;
        }
        w.unscale_mut(r);
        basis.set_column(*k, &w);
        *k += 1;
        Some(linalg::unvec_row_major(w.as_slice(), h, h))
    };
    let mut frontier: Vec<CMatrix> = units.iter().filter_map(|u| absorb(u, &mut basis, &mut k)).collect();
    while !frontier.is_empty() && k < n {
        let mut next = Vec::new();
        for v in &frontier {
            for g in &gens {
                if let Some(b) = absorb(&(v * g), &mut basis, &mut k) {
                    next.push(b);
                }
            }
        }
        frontier = next;
    }
    let current: Vec<CMatrix> = (0..k)
        .map(|c| linalg::unvec_row_major(basis.column(c).as_slice(), h, h))
        .collect();
    (current.len() == h * h, current.len(), current)
}

/// Whether `S` together with `M'` generates `B(H)`; also the dimension of
/// the generated algebra.
pub fn burnside_generates(space: &QuantumSpace, system: &OperatorSystem) -> (bool, usize) {
    let (full, dim, _) = burnside_closure(space, system);
    (full, dim)
}

/// Search a proper unital algebra of operators on `H` for an invariant
/// subspace: orbits of eigenvectors of random elements (and of their
/// adjoints, whose invariant subspaces give complements). The projection
/// is returned as an element of `M` once it reduces `Ã`.
fn invariant_subspace(space: &QuantumSpace, closure: &[CMatrix], kms: &SuperOperator, tol: f64) -> Option<Element> {
    let h = space.hdim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let adjoints: Vec<CMatrix> = closure.iter().map(|m| m.adjoint()).collect();
    for _ in 0..8 {
        let mut b = CMatrix::zeros(h, h);
        for m in closure {
            b += m * gaussian(&mut rng);
        }
        for (alg, probe, complement) in [(closure, b.clone(), false), (&adjoints[..], b.adjoint(), true)] {
            let Ok(values) = linalg::eigenvalues(&probe) else {
                continue;
            };
            let norm = linalg::spectral_norm(&probe).max(1e-300);
            for lambda in values {
                let shifted = &probe - linalg::identity(h) * lambda;
                for cut in [1e-10, 1e-7] {
                    let ns = linalg::null_space(&shifted, cut * norm);
                    for c in 0..ns.ncols() {
                        let v = ns.column(c).into_owned();
                        if let Some(p) = orbit_projection(space, alg, &v, complement) {
                            let elem = space.compress(&p);
                            let residual = lemma_residuals(kms, &elem).max();
                            if residual <= 1e2 * tol {
                                return Some(elem);
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

fn orbit_projection(space: &QuantumSpace, alg: &[CMatrix], v: &CVector, complement: bool) -> Option<CMatrix> {
    let h = space.hdim();
    let mut cols = CMatrix::zeros(h, alg.len());
    for (c, m) in alg.iter().enumerate() {
        cols.set_column(c, &(m * v));
    }
    let cut = 1e-6 * linalg::spectral_norm(&cols);
    let q = linalg::range_basis(&cols, cut);
    if q.ncols() == 0 || q.ncols() == h {
        return None;
    }
    let p = linalg::projector(&q);
    let p = if complement { linalg::identity(h) - p } else { p };
    // must be block diagonal, i.e. lie in M
    let back = space.embed(&space.compress(&p));
    if linalg::spectral_norm(&(&back - &p)) > 1e-6 {
        return None;
    }
    Some(back)
}

/// Support projections of `Choi(A^k)` and of their joint range.
#[derive(Debug, Clone)]
pub struct ChoiSupportSequence {
    /// `p_k` for `k = 1, 2, …` on `H ⊗ H`.
    pub supports: Vec<CMatrix>,
    pub ranks: Vec<usize>,
    /// Projection onto the joint range of all `p_k`.
    pub sup: CMatrix,
    pub sup_rank: usize,
    /// `sup = 1`.
    pub full: bool,
}

/// `p_k = supp Choi(A^k)` for composition powers. The joint range stops
/// growing for good once one step adds nothing, so the sequence ends there
/// (or at `kmax`, default `(Σnₐ)²`).
pub fn choi_support_sequence(g: &QuantumGraph, kmax: Option<usize>) -> ChoiSupportSequence {
    let space = g.space();
    let h = space.hdim();
    let kmax = kmax.unwrap_or(h * h).max(1);
    let a = g.adjacency();
    let mut power = a.clone();
    let mut supports = Vec::new();
    let mut ranks = Vec::new();
    let mut joint = CMatrix::zeros(h * h, 0);
    for k in 1..=kmax {
        if k > 1 {
            power = a.compose(&power).expect("same space");
        }
        let p = power.choi().support_projection();
        let range = linalg::psd_range(&p, 0.5);
        ranks.push(range.ncols());
        supports.push(p);
        // singular values of [joint, range] squared are the eigenvalues of the projector sum
        let grown = linalg::psd_range(&(linalg::projector(&joint) + linalg::projector(&range)), 0.25);
        let stalled = grown.ncols() == joint.ncols();
        joint = grown;
        if stalled || joint.ncols() == h * h {
            break;
        }
    }
    let sup_rank = joint.ncols();
    ChoiSupportSequence {
        supports,
        ranks,
        sup: linalg::projector(&joint),
        sup_rank,
        full: sup_rank == h * h,
    }
}

/// A candidate graph homomorphism `G₁ → G₂`, given as a linear map
/// `f : M₂ → M₁` (an `N₁ × N₂` matrix in the canonical bases).
#[derive(Debug, Clone)]
pub struct Homomorphism {
    pub source: QuantumGraph,
    pub target: QuantumGraph,
    pub f: CMatrix,
}

impl Homomorphism {
    pub fn new(source: QuantumGraph, target: QuantumGraph, f: CMatrix) -> Result<Self> {
        let shape = (source.space().dim(), target.space().dim());
        if f.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} map", shape.0, shape.1),
                found: format!("{}x{}", f.nrows(), f.ncols()),
            });
        }
        Ok(Self { source, target, f })
    }

    /// `f(e_i) = ρ^{-1/4} p_i ρ^{-1/4}` for projections `p₁ + p₂ = 1`, onto
    /// the two-point graph with adjacency `target` (identity for `T₂`, the
    /// swap for `K₂`).
    pub fn from_partition(source: QuantumGraph, p1: &Element, target: QuantumGraph) -> Result<Self> {
        let space = source.space().clone();
        if target.space().dim() != 2 || target.space().num_blocks() != 2 {
            return Err(Error::ShapeMismatch {
                expected: "two-point target graph".into(),
                found: format!("blocks {:?}", target.space().blocks()),
            });
        }
        let p2 = &Element::identity(&space) - p1;
        let d = space.density_power(-0.25);
        let mut f = CMatrix::zeros(space.dim(), 2);
        f.set_column(0, &(&(&d * p1) * &d).to_coords());
        f.set_column(1, &(&(&d * &p2) * &d).to_coords());
        Self::new(source, target, f)
    }

    /// The KMS implementation `f̃ = ρ₁^{1/4} f(ρ₂^{-1/4} · ρ₂^{-1/4}) ρ₁^{1/4}`.
    pub fn kms_implementation(&self) -> CMatrix {
        let (c1, _) = self.source.space().kms_conjugation();
        let (_, c2_inv) = self.target.space().kms_conjugation();
        c1 * &self.f * c2_inv
    }

    /// KMS adjoint `f* : M₁ → M₂`.
    pub fn kms_adjoint(&self) -> CMatrix {
        let g1 = self.source.space().gram_kms();
        let g2_inv = self
            .target
            .space()
            .gram_kms()
            .try_inverse()
            .expect("KMS Gram is positive definite");
        g2_inv * self.f.adjoint() * g1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomomorphismCheck {
    pub multiplicative: f64,
    pub unital: f64,
    pub adjoint: f64,
    /// `‖A₂ • (f*A₁f) − f*A₁f‖`.
    pub graph_identity: f64,
    pub valid: bool,
    /// For two-point targets: whether `f` is injective.
    pub surjective: Option<bool>,
    /// For two-point targets: `τ(p₁Ã(p₂))` and `τ(p₂Ã(p₁))`.
    pub cross_traces: Option<(f64, f64)>,
}

/// Check the graph-homomorphism conditions for `f : M₂ → M₁`.
pub fn verify_homomorphism(hom: &Homomorphism) -> Result<HomomorphismCheck> {
    let s1 = hom.source.space();
    let s2 = hom.target.space();
    let tol = hom.source.tol().max(hom.target.tol());
    let ft = hom.kms_implementation();
    let apply = |x: &Element| Element::from_coords(s1, &(&ft * x.to_coords()));
    let scale = linalg::spectral_norm(&ft).max(1.0);

    let mut multiplicative: f64 = 0.0;
    for k in 0..s2.dim() {
        for l in 0..s2.dim() {
            let (ek, el) = (Element::basis(s2, k), Element::basis(s2, l));
            let lhs = apply(&(&ek * &el));
            let rhs = &apply(&ek) * &apply(&el);
            multiplicative = multiplicative.max((&lhs - &rhs).norm());
        }
    }
    let unital = (&apply(&Element::identity(s2)) - &Element::identity(s1)).norm();
    let mut adjoint: f64 = 0.0;
    for k in 0..s2.dim() {
        let ek = Element::basis(s2, k);
        adjoint = adjoint.max((&apply(&ek.adjoint()) - &apply(&ek).adjoint()).norm());
    }
    for (what, residual) in [("multiplicativity", multiplicative), ("unitality", unital), ("adjoint", adjoint)] {
        if residual > tol * scale {
            return Err(Error::NotAHomomorphismOfAlgebras { what, residual });
        }
    }

    let pulled = hom.kms_adjoint() * hom.source.adjacency().matrix() * &hom.f;
    let pulled = SuperOperator::new(s2.clone(), pulled)?;
    let schur = hom.target.adjacency().schur_product(&pulled)?;
    let graph_identity = schur.distance(&pulled);
    let valid = graph_identity <= tol * pulled.norm().max(1.0);

    let (surjective, cross_traces) = if s2.dim() == 2 && s2.num_blocks() == 2 {
        let p1 = apply(&Element::basis(s2, 0));
        let p2 = apply(&Element::basis(s2, 1));
        let kms = hom.source.kms_adjacency();
        let t12 = s1.trace(&(&p1 * &kms.apply(&p2))).re;
        let t21 = s1.trace(&(&p2 * &kms.apply(&p1))).re;
        (Some(p1.norm() > tol && p2.norm() > tol), Some((t12, t21)))
    } else {
        (None, None)
    };
    Ok(HomomorphismCheck {
        multiplicative,
        unital,
        adjoint,
        graph_identity,
        valid,
        surjective,
        cross_traces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodVerdict {
    pub method: Method,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct ConnectivityReport {
    pub connected: bool,
    pub verdicts: Vec<MethodVerdict>,
    /// Present exactly when the graph is disconnected.
    pub certificate: Option<ReducingCertificate>,
    pub kernel_dimension: Option<usize>,
    pub laplacian_nullity: Option<usize>,
    pub burnside_dimension: Option<usize>,
    pub choi_support: Option<ChoiSupportSequence>,
    pub perron_frobenius: Option<spectral::PerronFrobenius>,
    /// All computed verdicts coincide.
    pub agreement: bool,
}

impl ConnectivityReport {
    pub fn verdict(&self, method: Method) -> Option<Verdict> {
        self.verdicts.iter().find(|v| v.method == method).map(|v| v.verdict)
    }
}

/// Methods that apply to `g`; `choi-support` and `spectral` need an
/// undirected graph, `laplacian` a GNS-symmetric one.
pub fn applicable(g: &QuantumGraph, method: Method) -> bool {
    match method {
        Method::Auto | Method::Irreducibility | Method::Burnside => true,
        Method::Laplacian => g.flags().gns_symmetric,
        Method::ChoiSupport | Method::Spectral => g.flags().undirected,
    }
}

/// Decide (strong) connectivity. With `cross_check` every applicable method
/// runs and any disagreement is an error.
pub fn connected(g: &QuantumGraph, method: Method, cross_check: bool) -> Result<ConnectivityReport> {
    let tol = g.tol();
    let a = g.adjacency();
    a.require_completely_positive(check_tol(a, tol))?;
    let space = g.space();
    let trivial_algebra = space.hdim() == 1;

    let methods: Vec<Method> = if cross_check {
        Method::CONCRETE.iter().cloned().filter(|&m| applicable(g, m)).collect()
    } else {
        vec![if method == Method::Auto { Method::Irreducibility } else { method }]
    };

    let mut report = ConnectivityReport {
        connected: false,
        verdicts: Vec::new(),
        certificate: None,
        kernel_dimension: None,
        laplacian_nullity: None,
        burnside_dimension: None,
        choi_support: None,
        perron_frobenius: None,
        agreement: true,
    };
    let mut irreducibility = None;
    for m in methods {
        let verdict = if !applicable(g, m) {
            Verdict::Inapplicable
        } else {
            match m {
                Method::Auto | Method::Irreducibility => {
                    let (irr, cert) = is_irreducible(a, tol)?;
                    if g.flags().undirected {
                        report.kernel_dimension = Some(kernel_algebra(g)?.dim());
                    }
                    irreducibility = Some(cert);
                    Verdict::from_flag(irr)
                }
                Method::Laplacian => {
                    let nullity = laplacian_nullity(g)?;
                    report.laplacian_nullity = Some(nullity);
                    Verdict::from_flag(nullity == 1)
                }
                Method::Burnside => {
                    let (full, dim) = burnside_generates(space, &g.operator_system()?);
                    report.burnside_dimension = Some(dim);
                    Verdict::from_flag(full)
                }
                Method::ChoiSupport => {
                    let seq = choi_support_sequence(g, None);
                    // on M = ℂ there are no non-trivial projections at all
                    let verdict = Verdict::from_flag(seq.full || trivial_algebra);
                    report.choi_support = Some(seq);
                    verdict
                }
                Method::Spectral => {
                    let pf = spectral::perron_frobenius(a, tol)?;
                    let verdict = Verdict::from_flag(pf.simple && pf.strictly_positive);
                    report.perron_frobenius = Some(pf);
                    verdict
                }
            }
        };
        report.verdicts.push(MethodVerdict { method: m, verdict });
    }

    let decided: Vec<&MethodVerdict> = report.verdicts.iter().filter(|v| v.verdict != Verdict::Inapplicable).collect();
    if let Some(first) = decided.first() {
        if let Some(other) = decided.iter().find(|v| v.verdict != first.verdict) {
            report.agreement = false;
            if cross_check {
                return Err(Error::MethodDisagreement {
                    first: first.method.to_string(),
                    first_verdict: first.verdict.to_string(),
                    second: other.method.to_string(),
                    second_verdict: other.verdict.to_string(),
                });
            }
        }
        report.connected = first.verdict == Verdict::Connected;
    }

    if !report.connected {
        let cert = match irreducibility {
            Some(c) => c,
            None => is_irreducible(a, tol)?.1,
        };
        report.certificate = cert;
        if report.certificate.is_none() {
            return Err(Error::MethodDisagreement {
                first: decided.first().map(|v| v.method.to_string()).unwrap_or_default(),
                first_verdict: Verdict::Disconnected.to_string(),
                second: Method::Irreducibility.to_string(),
                second_verdict: Verdict::Connected.to_string(),
            });
        }
    }
    Ok(report)
}

/// Connected components as the minimal central projections of the kernel
/// algebra (in the frame of `Ã`).
pub fn connected_components(g: &QuantumGraph) -> Result<Vec<Projection>> {
    let kernel = kernel_algebra(g)?;
    let space = g.space();
    let m = kernel.dim();
    let n = space.dim();
    // centre: Σ cᵢ bᵢ commuting with every bⱼ
    let mut system = CMatrix::zeros(m * n, m);
    for (i, bi) in kernel.basis.iter().enumerate() {
        for (j, bj) in kernel.basis.iter().enumerate() {
            let comm = (&(bi * bj) - &(bj * bi)).to_coords();
            system.view_mut((j * n, i), (n, 1)).copy_from(&comm);
        }
    }
    let centre = linalg::null_space(&system, 1e-8);
    let k = centre.ncols();
    let centre_elems: Vec<Element> = (0..k)
        .map(|c| {
            let mut x = Element::zero(space);
            for (i, b) in kernel.basis.iter().enumerate() {
                x = &x + &b.scale(centre[(i, c)]);
            }
            x
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    for _ in 0..16 {
        let mut z = Element::zero(space);
        for c in &centre_elems {
            z = &z + &c.scale(gaussian(&mut rng)).hermitian_part();
        }
        let values = z.hermitian_eigenvalues();
        let diameter = values[values.len() - 1] - values[0];
        let clusters = if diameter <= 1e-12 {
            vec![(0..values.len()).collect()]
        } else {
            linalg::cluster_sorted(&values, CLUSTER_REL_GAP.max(1e-6) * diameter)
        };
        if clusters.len() != k.max(1) {
            continue;
        }
        let mut out = Vec::with_capacity(clusters.len());
        for (ci, cluster) in clusters.iter().enumerate() {
            let lo = if ci == 0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (values[*clusters[ci - 1].last().unwrap()] + values[cluster[0]])
            };
            let hi = if ci + 1 == clusters.len() {
                f64::INFINITY
            } else {
                0.5 * (values[*cluster.last().unwrap()] + values[clusters[ci + 1][0]])
            };
            out.push(Projection::new(z.spectral_projection(lo, hi), 1e-6)?);
        }
        out.sort_by_key(|p| first_support_index(p.element()));
        return Ok(out);
    }
    Err(Error::Numerical("could not separate the centre of the kernel algebra".into()))
}

fn first_support_index(p: &Element) -> usize {
    p.to_coords()
        .iter()
        .position(|z| z.norm() > 1e-6)
        .unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_qg, vertex_indicator};
    use crate::space::DEFAULT_TOL;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn classical(n: usize, edges: &[(usize, usize)]) -> QuantumGraph {
        QuantumGraph::from_edges(n, edges, DEFAULT_TOL).unwrap()
    }

    fn m2() -> Arc<QuantumSpace> {
        QuantumSpace::tracial(&[2])
    }

    #[test]
    fn complete_map_is_irreducible() {
        let k = SuperOperator::complete(m2());
        let (irr, cert) = is_irreducible(&k, DEFAULT_TOL).unwrap();
        assert!(irr && cert.is_none());
        // (1−p)K(p)(1−p) = ψ(p)(1−p) on a sampled rank-one projection
        let v = CVector::from_vec(vec![c64(0.6, 0.0), c64(0.0, 0.8)]);
        let p = Element::new(&m2(), vec![&v * v.adjoint()]).unwrap();
        let q = &Element::identity(&m2()) - &p;
        let img = &(&q * &k.apply(&p)) * &q;
        assert!((&img - &q.scale(m2().functional(&p))).norm() < 1e-12);
        assert!(img.norm() > 0.5);
    }

    #[test]
    fn identity_is_reducible() {
        let id = SuperOperator::identity(m2());
        let (irr, cert) = is_irreducible(&id, DEFAULT_TOL).unwrap();
        assert!(!irr);
        let cert = cert.unwrap();
        let e11 = Element::new(&m2(), vec![CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)])]).unwrap();
        assert!((cert.projection.element() - &e11).norm() < 1e-9);
        assert!(cert.lemma.max() < 1e-9);
    }

    #[test]
    fn path_is_irreducible() {
        let g = classical(3, &[(0, 1), (1, 2)]);
        assert!(is_irreducible(g.adjacency(), DEFAULT_TOL).unwrap().0);
    }

    #[test]
    fn kernel_algebra_examples() {
        let g = classical(5, &[(0, 1), (2, 3)]);
        let k = kernel_algebra(&g).unwrap();
        assert_eq!(k.dim(), 3);
        assert!(k.unit_residual < 1e-8 && k.product_residual < 1e-8 && k.adjoint_residual < 1e-8);
        let kc = kernel_algebra(&QuantumGraph::complete(m2(), DEFAULT_TOL).unwrap()).unwrap();
        assert_eq!(kc.dim(), 1);
        let kt = kernel_algebra(&QuantumGraph::trivial(m2(), DEFAULT_TOL).unwrap()).unwrap();
        assert_eq!(kt.dim(), 4);
    }

    #[test]
    fn kernel_algebra_needs_undirected_graph() {
        let adj = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let g = QuantumGraph::from_classical(&adj, DEFAULT_TOL).unwrap();
        assert!(matches!(kernel_algebra(&g), Err(Error::NotUndirected { .. })));
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(laplacian_nullity(&classical(4, &[(0, 1), (1, 2), (2, 3)])).unwrap(), 1);
        assert_eq!(laplacian_nullity(&classical(6, &[(0, 1), (2, 3), (3, 4)])).unwrap(), 3);
        assert_eq!(laplacian_nullity(&QuantumGraph::trivial(m2(), DEFAULT_TOL).unwrap()).unwrap(), 4);
    }

    #[test]
    fn burnside_examples() {
        let sp = QuantumSpace::tracial(&[2]);
        let unit = |i: usize, j: usize| {
            let mut m = CMatrix::zeros(2, 2);
            m[(i, j)] = c64(1.0, 0.0);
            m
        };
        let mut diag = OperatorSystem::empty(&[2]);
        diag.set(0, 0, vec![unit(0, 0), unit(1, 1)]).unwrap();
        assert_eq!(burnside_generates(&sp, &diag), (false, 2));
        let mut off = OperatorSystem::empty(&[2]);
        off.set(0, 0, vec![unit(0, 1), unit(1, 0)]).unwrap();
        assert_eq!(burnside_generates(&sp, &off), (true, 4));
        let g = random_qg(3, 2, 11).unwrap();
        assert_eq!(burnside_generates(g.space(), &g.operator_system().unwrap()), (true, 9));
    }

    #[test]
    fn choi_support_examples() {
        let trivial = QuantumGraph::trivial(m2(), DEFAULT_TOL).unwrap();
        let seq = choi_support_sequence(&trivial, None);
        assert!(seq.ranks.iter().all(|&r| r == 1));
        assert!(!seq.full);
        let complete = QuantumGraph::complete(m2(), DEFAULT_TOL).unwrap();
        let seq = choi_support_sequence(&complete, None);
        assert_eq!(seq.ranks[0], 4);
        assert!(seq.full);
    }

    #[test]
    fn homomorphism_examples() {
        let c4 = classical(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let k2 = classical(2, &[(0, 1)]);
        let p = vertex_indicator(c4.space(), &[0, 2]);
        let hom = Homomorphism::from_partition(c4.clone(), &p, k2).unwrap();
        let check = verify_homomorphism(&hom).unwrap();
        assert!(check.valid && check.surjective == Some(true));

        let t2 = QuantumGraph::trivial(QuantumSpace::diagonal(2), DEFAULT_TOL).unwrap();
        let split = classical(4, &[(0, 1), (2, 3)]);
        let p = vertex_indicator(split.space(), &[0, 1]);
        let check = verify_homomorphism(&Homomorphism::from_partition(split, &p, t2.clone()).unwrap()).unwrap();
        assert!(check.valid);
        let (a, b) = check.cross_traces.unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);

        // a connected graph admits no surjective homomorphism onto T₂
        for set in [vec![0], vec![0, 1], vec![0, 2], vec![1, 2, 3]] {
            let p = vertex_indicator(c4.space(), &set);
            let check = verify_homomorphism(&Homomorphism::from_partition(c4.clone(), &p, t2.clone()).unwrap()).unwrap();
            assert!(!check.valid);
        }
    }

    #[test]
    fn non_projection_partition_is_not_a_homomorphism() {
        let c4 = classical(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let t2 = QuantumGraph::trivial(QuantumSpace::diagonal(2), DEFAULT_TOL).unwrap();
        let half = Element::identity(c4.space()).scale(c64(0.5, 0.0));
        let hom = Homomorphism::from_partition(c4, &half, t2).unwrap();
        assert!(matches!(
            verify_homomorphism(&hom),
            Err(Error::NotAHomomorphismOfAlgebras { .. })
        ));
    }

    #[test]
    fn connected_examples() {
        let c4 = classical(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let r = connected(&c4, Method::Auto, true).unwrap();
        assert!(r.connected && r.agreement && r.certificate.is_none());
        assert_eq!(r.verdicts.len(), 5);

        let trivial = QuantumGraph::trivial(m2(), DEFAULT_TOL).unwrap();
        let r = connected(&trivial, Method::Auto, true).unwrap();
        assert!(!r.connected);
        let cert = r.certificate.unwrap();
        assert_eq!(cert.projection.rank(), 1);
        assert!(cert.commutation.unwrap() < 1e-9);

        let g = random_qg(3, 2, 5).unwrap();
        assert!(connected(&g, Method::Auto, true).unwrap().connected);
    }

    #[test]
    fn components_examples() {
        let g = classical(3, &[(0, 1)]);
        let comps = connected_components(&g).unwrap();
        assert_eq!(comps.len(), 2);
        let e = |set: &[usize]| vertex_indicator(g.space(), set);
        assert!((comps[0].element() - &e(&[0, 1])).norm() < 1e-9);
        assert!((comps[1].element() - &e(&[2])).norm() < 1e-9);

        let c4 = classical(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(connected_components(&c4).unwrap().len(), 1);

        let t3 = QuantumGraph::trivial(QuantumSpace::diagonal(3), DEFAULT_TOL).unwrap();
        let comps = connected_components(&t3).unwrap();
        assert_eq!(comps.len(), 3);
        assert!(comps.iter().all(|p| p.rank() == 1));
    }

    #[test]
    fn directed_reducible_map_gets_invariant_subspace() {
        let adj = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let g = QuantumGraph::from_classical(&adj, DEFAULT_TOL).unwrap();
        let (irr, cert) = is_irreducible(g.adjacency(), DEFAULT_TOL).unwrap();
        assert!(!irr);
        assert!(cert.unwrap().lemma.max() < 1e-9);
        let cycle = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let g = QuantumGraph::from_classical(&cycle, DEFAULT_TOL).unwrap();
        assert!(is_irreducible(g.adjacency(), DEFAULT_TOL).unwrap().0);
    }
}
