//! Finite-dimensional quantum spaces `M = ⊕ₐ M_{nₐ}` with a 1-form `ψ = ⊕ₐ Tr(ρₐ ·)`.
//!
//! Elements are stored block by block. The canonical basis of `M` is the set
//! of matrix units `e^a_{ij}` ordered lexicographically by `(a, i, j)`; the
//! coordinate vector of an element is the concatenation of its row-major
//! blocks. In these coordinates the reference trace `τ = ⊕ₐ Tr` has the
//! identity as Gram matrix, so every map that is self-adjoint for `τ` has a
//! Hermitian matrix.
//!
//! The standard representation space is `H = ⊕ₐ ℂ^{nₐ}`; [`QuantumSpace::embed`]
//! places an element block-diagonally on `H`.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::superop::SuperOperator;

/// Default absolute tolerance for identity checks (spectral norms).
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative eigenvalue floor for positive definiteness of densities.
pub const POSDEF_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct BlockPowers {
    quarter: CMatrix,
    neg_quarter: CMatrix,
    half: CMatrix,
    neg_half: CMatrix,
    inverse: CMatrix,
}

#[derive(Debug, Clone)]
pub struct QuantumSpace {
    blocks: Vec<usize>,
    rho: Vec<CMatrix>,
    rho_eigen: Vec<(Vec<f64>, CMatrix)>,
    powers: Vec<BlockPowers>,
    offsets: Vec<usize>,
    h_offsets: Vec<usize>,
    dim: usize,
    hdim: usize,
    tracial: bool,
}

impl PartialEq for QuantumSpace {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks && self.rho == other.rho
    }
}

impl QuantumSpace {
    /// Build a quantum space from block sizes and optional densities.
    ///
    /// Without densities the canonical tracial 1-form `ρₐ = nₐ·I` is used.
    /// With `normalize` set, each density is rescaled by `Tr(ρₐ⁻¹)` so that
    /// the 1-form condition holds; otherwise a violation is an error.
    pub fn new(blocks: &[usize], rho: Option<Vec<CMatrix>>, normalize: bool) -> Result<Arc<Self>> {
        if blocks.is_empty() || blocks.iter().any(|&n| n == 0) {
            return Err(Error::InvalidBlocks(blocks.to_vec()));
        }
        let rho = match rho {
            None => blocks
                .iter()
                .map(|&n| linalg::identity(n).scale(n as f64))
                .collect::<Vec<_>>(),
            Some(r) => {
                if r.len() != blocks.len() {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{} density blocks", blocks.len()),
                        found: format!("{}", r.len()),
                    });
                }
                r
            }
        };

        let mut checked = Vec::with_capacity(blocks.len());
        for (a, (m, &n)) in rho.into_iter().zip(blocks).enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n}x{n} density for block {a}"),
                    found: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
            let scale = linalg::spectral_norm(&m).max(1.0);
            if linalg::hermitian_residual(&m) > DEFAULT_TOL * scale {
                return Err(Error::NonPositiveDensity {
                    block: a,
                    min_eigenvalue: f64::NAN,
                });
            }
            let m = linalg::hermitian_part(&m);
            let (values, _) = linalg::hermitian_eigen(&m);
            let top = values.last().cloned().unwrap_or(0.0);
            let bottom = values[0];
            if !(bottom > POSDEF_REL_TOL * top) || top <= 0.0 {
                return Err(Error::NonPositiveDensity {
                    block: a,
                    min_eigenvalue: bottom,
                });
            }
            let trace_inverse: f64 = values.iter().map(|v| 1.0 / v).sum();
            let m = if normalize {
                m.scale(trace_inverse)
            } else {
                if (trace_inverse - 1.0).abs() > DEFAULT_TOL {
                    return Err(Error::OneFormViolation {
                        block: a,
                        trace_inverse,
                    });
                }
                m
            };
            checked.push(m);
        }
        Ok(Arc::new(Self::assemble(blocks.to_vec(), checked)))
    }

    /// `⊕ₐ M_{nₐ}` with the tracial 1-form `⊕ₐ nₐ Tr`.
    pub fn tracial(blocks: &[usize]) -> Arc<Self> {
        Self::new(blocks, None, false).expect("tracial 1-form is always valid")
    }

    /// The commutative space `D_n = ℂⁿ` with counting measure.
    pub fn diagonal(n: usize) -> Arc<Self> {
        Self::tracial(&vec![1; n])
    }

    fn assemble(blocks: Vec<usize>, rho: Vec<CMatrix>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut h_offsets = Vec::with_capacity(blocks.len());
        let (mut dim, mut hdim) = (0, 0);
        for &n in &blocks {
            offsets.push(dim);
            h_offsets.push(hdim);
            dim += n * n;
            hdim += n;
        }
        let rho_eigen: Vec<_> = rho.iter().map(linalg::hermitian_eigen).collect();
        let power = |(values, vectors): &(Vec<f64>, CMatrix), s: f64| {
            let d = CVector::from_iterator(values.len(), values.iter().map(|v| c64(v.powf(s), 0.0)));
            vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
        };
        let powers = rho_eigen
            .iter()
            .map(|e| BlockPowers {
                quarter: power(e, 0.25),
                neg_quarter: power(e, -0.25),
                half: power(e, 0.5),
                neg_half: power(e, -0.5),
                inverse: power(e, -1.0),
            })
            .collect();
        let tracial = rho.iter().zip(&blocks).all(|(r, &n)| {
            let mean = r.trace() / n as f64;
            linalg::spectral_norm(&(r - linalg::identity(n) * mean)) <= DEFAULT_TOL
        });
        Self {
            blocks,
            rho,
            rho_eigen,
            powers,
            offsets,
            h_offsets,
            dim,
            hdim,
            tracial,
        }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn rho(&self) -> &[CMatrix] {
        &self.rho
    }

    /// Vector-space dimension `N = Σ nₐ²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension `n = Σ nₐ` of the standard representation space `H`.
    pub fn hdim(&self) -> usize {
        self.hdim
    }

    pub fn is_tracial(&self) -> bool {
        self.tracial
    }

    /// Offset of block `a` in coordinate vectors.
    pub fn offset(&self, a: usize) -> usize {
        self.offsets[a]
    }

    /// Offset of block `a` inside `H`.
    pub fn h_offset(&self, a: usize) -> usize {
        self.h_offsets[a]
    }

    /// Coordinate index of the matrix unit `e^a_{ij}`.
    pub fn index(&self, a: usize, i: usize, j: usize) -> usize {
        self.offsets[a] + i * self.blocks[a] + j
    }

    /// Inverse of [`QuantumSpace::index`].
    pub fn label(&self, k: usize) -> (usize, usize, usize) {
        let a = self.offsets.partition_point(|&o| o <= k) - 1;
        let local = k - self.offsets[a];
        (a, local / self.blocks[a], local % self.blocks[a])
    }

    pub fn rho_power(&self, a: usize, s: f64) -> CMatrix {
        let p = &self.powers[a];
        match s {
            x if x == 0.25 => p.quarter.clone(),
            x if x == -0.25 => p.neg_quarter.clone(),
            x if x == 0.5 => p.half.clone(),
            x if x == -0.5 => p.neg_half.clone(),
            x if x == -1.0 => p.inverse.clone(),
            x if x == 1.0 => self.rho[a].clone(),
            _ => self.rho_complex_power(a, c64(s, 0.0)),
        }
    }

    /// Principal power `ρₐ^w` for complex `w`.
    pub fn rho_complex_power(&self, a: usize, w: Complex64) -> CMatrix {
        let (values, vectors) = &self.rho_eigen[a];
        let d = CVector::from_iterator(values.len(), values.iter().map(|&v| (w * v.ln()).exp()));
        vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
    }

    /// The element `⊕ₐ ρₐ^s`.
    pub fn density_power(&self, s: f64) -> Element {
        Element::from_blocks_unchecked((0..self.num_blocks()).map(|a| self.rho_power(a, s)).collect())
    }

    /// `ψ(x) = Σₐ Tr(ρₐ xₐ)`.
    pub fn functional(&self, x: &Element) -> Complex64 {
        self.rho.iter().zip(&x.blocks).map(|(r, b)| (r * b).trace()).sum()
    }

    /// Reference trace `τ(x) = Σₐ Tr(xₐ)`.
    pub fn trace(&self, x: &Element) -> Complex64 {
        x.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Matrix of `y ↦ l y r` in the canonical basis.
    pub fn sandwich_matrix(&self, l: &Element, r: &Element) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (a, &n) in self.blocks.iter().enumerate() {
            let o = self.offsets[a];
            let blk = l.blocks[a].kronecker(&r.blocks[a].transpose());
            m.view_mut((o, o), (n * n, n * n)).copy_from(&blk);
        }
        m
    }

    /// Matrix of left multiplication `L_x : y ↦ xy`.
    pub fn left_mult(&self, x: &Element) -> CMatrix {
        self.sandwich_matrix(x, &Element::identity(self))
    }

    /// Matrix of right multiplication `R_x : y ↦ yx`.
    pub fn right_mult(&self, x: &Element) -> CMatrix {
        self.sandwich_matrix(&Element::identity(self), x)
    }

    /// Matrix of `x ↦ ρ^{1/4} x ρ^{1/4}` (and its inverse).
    pub fn kms_conjugation(&self) -> (CMatrix, CMatrix) {
        let q = self.density_power(0.25);
        let qi = self.density_power(-0.25);
        (self.sandwich_matrix(&q, &q), self.sandwich_matrix(&qi, &qi))
    }

    /// Modular group `σ_z(x) = ρ^{iz} x ρ^{-iz}`.
    pub fn modular_map(self: &Arc<Self>, z: Complex64) -> SuperOperator {
        let i = c64(0.0, 1.0);
        let l = Element::from_blocks_unchecked((0..self.num_blocks()).map(|a| self.rho_complex_power(a, i * z)).collect());
        let r = Element::from_blocks_unchecked((0..self.num_blocks()).map(|a| self.rho_complex_power(a, -i * z)).collect());
        SuperOperator::from_matrix_unchecked(self.clone(), self.sandwich_matrix(&l, &r))
    }

    /// Gram matrix of the GNS inner product `ψ(x*y)`.
    pub fn gram_gns(&self) -> CMatrix {
        let one = Element::identity(self);
        let rho = Element::from_blocks_unchecked(self.rho.clone());
        // ⟨e_{ij}, e_{kl}⟩ = δ_{ik} ρ_{lj}
        self.sandwich_matrix(&one, &rho)
    }

    /// Gram matrix of the KMS inner product `ψ(x* σ_{-i/2}(y))`.
    pub fn gram_kms(&self) -> CMatrix {
        let h = self.density_power(0.5);
        // ⟨e_{ij}, e_{kl}⟩_KMS = (ρ^{1/2})_{ik} (ρ^{1/2})_{lj}
        self.sandwich_matrix(&h, &h)
    }

    /// Matrix of the multiplication `m : M ⊗ M → M` (`N × N²`); the basis of
    /// `M ⊗ M` is `e_k ⊗ e_l ↦ k·N + l`.
    pub fn mult(&self) -> CMatrix {
        let n = self.dim;
        let mut m = CMatrix::zeros(n, n * n);
        for (a, &na) in self.blocks.iter().enumerate() {
            for i in 0..na {
                for j in 0..na {
                    for l in 0..na {
                        // e_{ij} e_{jl} = e_{il}
                        let col = self.index(a, i, j) * n + self.index(a, j, l);
                        m[(self.index(a, i, l), col)] = c64(1.0, 0.0);
                    }
                }
            }
        }
        m
    }

    /// Matrix of `m*` (`N² × N`) from `m*(e^a_{ij}) = Σ_k e^a_{ik} ρₐ⁻¹ ⊗ e^a_{kj}`.
    pub fn mult_adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut m = CMatrix::zeros(n * n, n);
        for (a, &na) in self.blocks.iter().enumerate() {
            let inv = &self.powers[a].inverse;
            for i in 0..na {
                for j in 0..na {
                    let col = self.index(a, i, j);
                    for k in 0..na {
                        // e_{ik} ρ⁻¹ = Σ_m (ρ⁻¹)_{km} e_{im}
                        for mm in 0..na {
                            let row = self.index(a, i, mm) * n + self.index(a, k, j);
                            m[(row, col)] += inv[(k, mm)];
                        }
                    }
                }
            }
        }
        m
    }

    /// Block-diagonal `n × n` matrix of `x` acting on `H`.
    pub fn embed(&self, x: &Element) -> CMatrix {
        let mut m = CMatrix::zeros(self.hdim, self.hdim);
        for (a, &n) in self.blocks.iter().enumerate() {
            let o = self.h_offsets[a];
            m.view_mut((o, o), (n, n)).copy_from(&x.blocks[a]);
        }
        m
    }

    /// Diagonal blocks of an operator on `H`, read back as an element of `M`.
    pub fn compress(&self, m: &CMatrix) -> Element {
        Element::from_blocks_unchecked(
            self.blocks
                .iter()
                .enumerate()
                .map(|(a, &n)| {
                    let o = self.h_offsets[a];
                    m.view((o, o), (n, n)).into_owned()
                })
                .collect(),
        )
    }

    /// Block-identity `1_{nₐ}` on `H` (the generators of `M'`).
    pub fn block_unit_on_h(&self, a: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.hdim, self.hdim);
        let o = self.h_offsets[a];
        for i in 0..self.blocks[a] {
            m[(o + i, o + i)] = c64(1.0, 0.0);
        }
        m
    }

    pub(crate) fn check_element(&self, x: &Element) -> Result<()> {
        let ok = x.blocks.len() == self.blocks.len()
            && x.blocks.iter().zip(&self.blocks).all(|(b, &n)| b.shape() == (n, n));
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: format!("blocks {:?}", self.blocks),
                found: format!("{:?}", x.blocks.iter().map(|b| b.nrows()).collect::<Vec<_>>()),
            })
        }
    }
}

/// An element of `M`, stored block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    blocks: Vec<CMatrix>,
}

impl Element {
    pub fn new(space: &QuantumSpace, blocks: Vec<CMatrix>) -> Result<Self> {
        let e = Self { blocks };
        space.check_element(&e)?;
        Ok(e)
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<CMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zero(space: &QuantumSpace) -> Self {
        Self::from_blocks_unchecked(space.blocks().iter().map(|&n| CMatrix::zeros(n, n)).collect())
    }

    pub fn identity(space: &QuantumSpace) -> Self {
        Self::from_blocks_unchecked(space.blocks().iter().map(|&n| linalg::identity(n)).collect())
    }

    /// The `k`-th canonical matrix unit.
    pub fn basis(space: &QuantumSpace, k: usize) -> Self {
        let mut e = Self::zero(space);
        let (a, i, j) = space.label(k);
        e.blocks[a][(i, j)] = c64(1.0, 0.0);
        e
    }

    /// Element equal to `m` in block `a` and zero elsewhere.
    pub fn supported_on(space: &QuantumSpace, a: usize, m: CMatrix) -> Self {
        let mut e = Self::zero(space);
        assert_eq!(e.blocks[a].shape(), m.shape(), "block shape");
        e.blocks[a] = m;
        e
    }

    pub fn from_coords(space: &QuantumSpace, v: &CVector) -> Self {
        assert_eq!(v.len(), space.dim(), "coordinate vector has wrong length");
        Self::from_blocks_unchecked(
            space
                .blocks()
                .iter()
                .enumerate()
                .map(|(a, &n)| {
                    let o = space.offset(a);
                    linalg::unvec_row_major(&v.as_slice()[o..o + n * n], n, n)
                })
                .collect(),
        )
    }

    pub fn to_coords(&self) -> CVector {
        let parts: Vec<Complex64> = self
            .blocks
            .iter()
            .flat_map(|b| linalg::vec_row_major(b).iter().cloned().collect::<Vec<_>>())
            .collect();
        CVector::from_vec(parts)
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, a: usize) -> &CMatrix {
        &self.blocks[a]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_blocks_unchecked(self.blocks.iter().map(|b| b.adjoint()).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_blocks_unchecked(self.blocks.iter().map(|b| b * s).collect())
    }

    pub fn hermitian_part(&self) -> Self {
        Self::from_blocks_unchecked(self.blocks.iter().map(linalg::hermitian_part).collect())
    }

    /// C*-norm: the largest block operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::spectral_norm).fold(0.0, f64::max)
    }

    /// Hilbert–Schmidt norm for the reference trace.
    pub fn norm2(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::frobenius_norm(b).powi(2)).sum::<f64>().sqrt()
    }

    /// Eigenvalues of the Hermitian part, over all blocks, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.blocks.iter().flat_map(|b| linalg::hermitian_eigen(b).0).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Support projection of a positive semidefinite element. The rank cut
    /// is relative to the whole element, not to each block.
    pub fn support(&self) -> Self {
        let top = self
            .blocks
            .iter()
            .filter_map(|b| linalg::hermitian_eigen(b).0.last().cloned())
            .fold(0.0, f64::max);
        let cut = linalg::RANK_REL_TOL * top;
        Self::from_blocks_unchecked(self.blocks.iter().map(|b| linalg::support_projection_above(b, cut)).collect())
    }

    /// Spectral projection of the Hermitian part onto eigenvalues in `[lo, hi]`.
    pub fn spectral_projection(&self, lo: f64, hi: f64) -> Self {
        Self::from_blocks_unchecked(
            self.blocks
                .iter()
                .map(|b| {
                    let (values, vectors) = linalg::hermitian_eigen(b);
                    let n = b.nrows();
                    let mut p = CMatrix::zeros(n, n);
                    for (i, &v) in values.iter().enumerate() {
                        if v >= lo && v <= hi {
                            let col = vectors.column(i);
                            p += &col * col.adjoint();
                        }
                    }
                    p
                })
                .collect(),
        )
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        Element::from_blocks_unchecked(self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        Element::from_blocks_unchecked(self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect())
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        Element::from_blocks_unchecked(self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect())
    }
}

/// A self-adjoint idempotent `p = p² = p*` in `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection(Element);

impl Projection {
    pub fn new(p: Element, tol: f64) -> Result<Self> {
        let residual = projection_residual(&p);
        if residual > tol {
            return Err(Error::NotAProjection { residual });
        }
        Ok(Self(p))
    }

    pub fn element(&self) -> &Element {
        &self.0
    }

    pub fn into_element(self) -> Element {
        self.0
    }

    pub fn complement(&self, space: &QuantumSpace) -> Self {
        Self(&Element::identity(space) - &self.0)
    }

    /// `0 ≠ p ≠ 1` within `tol`.
    pub fn is_nontrivial(&self, tol: f64) -> bool {
        let n = self.0.blocks.len();
        let one = Element::from_blocks_unchecked((0..n).map(|a| linalg::identity(self.0.blocks[a].nrows())).collect());
        self.0.norm() > tol && (&self.0 - &one).norm() > tol
    }

    /// Rank of `p` on `H` (rounded trace).
    pub fn rank(&self) -> usize {
        self.0.blocks.iter().map(|b| b.trace().re).sum::<f64>().round() as usize
    }
}

/// `max(‖p² − p‖, ‖p* − p‖)`.
pub fn projection_residual(p: &Element) -> f64 {
    let sq = (&(p * p) - p).norm();
    let adj = (&p.adjoint() - p).norm();
    sq.max(adj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0))))
    }

    fn skewed() -> Arc<QuantumSpace> {
        QuantumSpace::new(&[2], Some(vec![diag(&[3.0, 1.5])]), false).unwrap()
    }

    #[test]
    fn counting_measure_on_two_points() {
        let s = QuantumSpace::tracial(&[1, 1]);
        assert_eq!(s.rho()[0][(0, 0)], c64(1.0, 0.0));
        assert_eq!(s.rho()[1][(0, 0)], c64(1.0, 0.0));
        assert!(s.is_tracial());
        assert_eq!(s.functional(&Element::identity(&s)), c64(2.0, 0.0));
    }

    #[test]
    fn matrix_block_default_density() {
        let s = QuantumSpace::tracial(&[2]);
        assert!(linalg::spectral_norm(&(&s.rho()[0] - linalg::identity(2).scale(2.0))) < 1e-15);
        assert!((s.functional(&Element::identity(&s)) - c64(4.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn skewed_density_accepted() {
        let s = skewed();
        assert!(!s.is_tracial());
        let e11 = Element::basis(&s, s.index(0, 0, 0));
        assert!((s.functional(&e11) - c64(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn one_form_violation_and_normalization() {
        let bad = QuantumSpace::new(&[2], Some(vec![diag(&[2.0, 3.0])]), false);
        assert!(matches!(bad, Err(Error::OneFormViolation { block: 0, .. })));
        let fixed = QuantumSpace::new(&[2], Some(vec![diag(&[2.0, 3.0])]), true).unwrap();
        let tr: f64 = linalg::hermitian_eigen(&fixed.rho()[0]).0.iter().map(|v| 1.0 / v).sum();
        assert!((tr - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_density() {
        let bad = QuantumSpace::new(&[2], Some(vec![diag(&[1.0, -1.0])]), true);
        assert!(matches!(bad, Err(Error::NonPositiveDensity { .. })));
        assert!(matches!(QuantumSpace::new(&[0], None, false), Err(Error::InvalidBlocks(_))));
    }

    #[test]
    fn modular_map_examples() {
        let s = skewed();
        let id = linalg::identity(s.dim());
        assert!(linalg::spectral_norm(&(s.modular_map(c64(0.0, 0.0)).matrix() - &id)) < 1e-13);
        let t = QuantumSpace::tracial(&[2, 1]);
        assert!(linalg::spectral_norm(&(t.modular_map(c64(0.3, 0.7)).matrix() - linalg::identity(t.dim()))) < 1e-13);
        // σ_{-i/2}(e12) = √2 e12
        let sigma = s.modular_map(c64(0.0, -0.5));
        let e12 = Element::basis(&s, s.index(0, 0, 1));
        let out = sigma.apply(&e12);
        let expected = e12.scale(c64(2f64.sqrt(), 0.0));
        assert!((&out - &expected).norm() < 1e-13);
    }

    #[test]
    fn gram_examples() {
        let d2 = QuantumSpace::diagonal(2);
        assert!(linalg::spectral_norm(&(d2.gram_gns() - linalg::identity(2))) < 1e-15);
        assert!(linalg::spectral_norm(&(d2.gram_kms() - linalg::identity(2))) < 1e-15);
        let s = skewed();
        let k = s.index(0, 0, 1);
        assert!((s.gram_gns()[(k, k)].re - 1.5).abs() < 1e-14);
        assert!((s.gram_kms()[(k, k)].re - 3.0 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grams_agree_with_functional() {
        let s = QuantumSpace::new(
            &[2, 1],
            Some(vec![
                CMatrix::from_row_slice(2, 2, &[c64(3.0, 0.0), c64(0.5, 0.5), c64(0.5, -0.5), c64(2.0, 0.0)]),
                diag(&[1.0]),
            ]),
            true,
        )
        .unwrap();
        let sigma = s.modular_map(c64(0.0, -0.5));
        let gns = s.gram_gns();
        let kms = s.gram_kms();
        for k in 0..s.dim() {
            for l in 0..s.dim() {
                let x = Element::basis(&s, k);
                let y = Element::basis(&s, l);
                let g = s.functional(&(&x.adjoint() * &y));
                let h = s.functional(&(&x.adjoint() * &sigma.apply(&y)));
                assert!((g - gns[(k, l)]).norm() < 1e-13);
                assert!((h - kms[(k, l)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn comultiplication_examples() {
        let d2 = QuantumSpace::diagonal(2);
        let ms = d2.mult_adjoint();
        // m*(e1) = e1 ⊗ e1
        assert_eq!(ms[(0, 0)], c64(1.0, 0.0));
        assert_eq!(ms.column(0).iter().filter(|z| z.norm() > 0.0).count(), 1);

        let m2 = QuantumSpace::tracial(&[2]);
        let ms = m2.mult_adjoint();
        let n = m2.dim();
        let e11 = m2.index(0, 0, 0);
        let e12 = m2.index(0, 0, 1);
        let e21 = m2.index(0, 1, 0);
        assert!((ms[(e11 * n + e11, e11)] - c64(0.5, 0.0)).norm() < 1e-15);
        assert!((ms[(e12 * n + e21, e11)] - c64(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(ms.column(e11).iter().filter(|z| z.norm() > 1e-15).count(), 2);
    }

    #[test]
    fn comultiplication_is_gns_adjoint_of_multiplication() {
        let s = QuantumSpace::new(
            &[2, 1],
            Some(vec![
                CMatrix::from_row_slice(2, 2, &[c64(3.0, 0.0), c64(0.5, 0.5), c64(0.5, -0.5), c64(2.0, 0.0)]),
                diag(&[1.0]),
            ]),
            true,
        )
        .unwrap();
        let g = s.gram_gns();
        let gg = g.kronecker(&g);
        let via_adjoint = gg.try_inverse().unwrap() * s.mult().adjoint() * &g;
        assert!(linalg::spectral_norm(&(via_adjoint - s.mult_adjoint())) < 1e-12);
    }

    #[test]
    fn label_inverts_index() {
        let s = QuantumSpace::tracial(&[3, 1, 2]);
        for k in 0..s.dim() {
            let (a, i, j) = s.label(k);
            assert_eq!(s.index(a, i, j), k);
        }
    }

    #[test]
    fn projections() {
        let s = QuantumSpace::tracial(&[2]);
        let p = Projection::new(Element::basis(&s, 0), 1e-12).unwrap();
        assert!(p.is_nontrivial(1e-9));
        assert_eq!(p.rank(), 1);
        assert!(!Projection::new(Element::identity(&s), 1e-12).unwrap().is_nontrivial(1e-9));
        assert!(Projection::new(Element::basis(&s, 1), 1e-12).is_err());
    }
}
