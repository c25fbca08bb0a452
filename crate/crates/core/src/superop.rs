//! Linear maps `M → M` and their calculus: quantum Schur products, Choi
//! matrices, KMS implementations, adjoints and positivity predicates.
//!
//! A [`SuperOperator`] is an `N × N` matrix in the canonical matrix-unit
//! basis of its space. Choi matrices live in `M ⊗ M^op`, stored as operators
//! on `H ⊗ H` with the opposite leg transposed, so that positivity in
//! `M ⊗ M^op` is positive semidefiniteness of the stored matrix.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::OperatorSystem;
use crate::linalg::{self, c64, CMatrix, RANK_REL_TOL};
use crate::space::{Element, QuantumSpace, DEFAULT_TOL};

#[derive(Debug, Clone)]
pub struct SuperOperator {
    space: Arc<QuantumSpace>,
    mat: CMatrix,
}

impl SuperOperator {
    pub fn new(space: Arc<QuantumSpace>, mat: CMatrix) -> Result<Self> {
        let n = space.dim();
        if mat.shape() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n} superoperator"),
                found: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        Ok(Self { space, mat })
    }

    pub(crate) fn from_matrix_unchecked(space: Arc<QuantumSpace>, mat: CMatrix) -> Self {
        Self { space, mat }
    }

    /// Tabulate a linear map on the canonical basis.
    pub fn from_fn(space: Arc<QuantumSpace>, f: impl Fn(&Element) -> Element) -> Self {
        let n = space.dim();
        let mut mat = CMatrix::zeros(n, n);
        for k in 0..n {
            let image = f(&Element::basis(&space, k));
            mat.set_column(k, &image.to_coords());
        }
        Self { space, mat }
    }

    pub fn identity(space: Arc<QuantumSpace>) -> Self {
        let n = space.dim();
        Self::from_matrix_unchecked(space, linalg::identity(n))
    }

    pub fn zero(space: Arc<QuantumSpace>) -> Self {
        let n = space.dim();
        Self::from_matrix_unchecked(space, CMatrix::zeros(n, n))
    }

    /// `K(x) = ψ(x)·1`, the adjacency matrix of the complete quantum graph.
    pub fn complete(space: Arc<QuantumSpace>) -> Self {
        let sp = space.clone();
        Self::from_fn(space, move |x| Element::identity(&sp).scale(sp.functional(x)))
    }

    pub fn space(&self) -> &Arc<QuantumSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn apply(&self, x: &Element) -> Element {
        Element::from_coords(&self.space, &(&self.mat * x.to_coords()))
    }

    pub fn same_space(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self::from_matrix_unchecked(self.space.clone(), &self.mat * &other.mat))
    }

    /// `k`-fold composition power; `k = 0` is the identity.
    pub fn power(&self, k: usize) -> Self {
        let mut out = linalg::identity(self.space.dim());
        for _ in 0..k {
            out = &self.mat * out;
        }
        Self::from_matrix_unchecked(self.space.clone(), out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_matrix_unchecked(self.space.clone(), self.mat.scale(s))
    }

    /// Spectral norm of the difference of the two matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        linalg::spectral_norm(&(&self.mat - &other.mat))
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.mat)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.mat)
    }

    /// Quantum Schur product `A • B = m (A ⊗ B) m*`.
    pub fn schur_product(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let m = self.space.mult();
        let ms = self.space.mult_adjoint();
        let prod = m * self.mat.kronecker(&other.mat) * ms;
        Ok(Self::from_matrix_unchecked(self.space.clone(), prod))
    }

    /// Choi matrix from
    /// `Σₐ Σᵢⱼ A(ρₐ^{-1/4} e_ij ρₐ^{-1/4}) ⊗ (ρₐ^{-1/4} e_ji ρₐ^{-1/4})^op`.
    pub fn choi(&self) -> ChoiMatrix {
        let sp = &self.space;
        let h = sp.hdim();
        let mut out = CMatrix::zeros(h * h, h * h);
        for k in 0..sp.dim() {
            let (a, i, j) = sp.label(k);
            let q = sp.rho_power(a, -0.25);
            let mut unit = CMatrix::zeros(sp.blocks()[a], sp.blocks()[a]);
            unit[(i, j)] = c64(1.0, 0.0);
            let input = Element::supported_on(sp, a, &q * &unit * &q);
            let first = sp.embed(&self.apply(&input));
            let second = Element::supported_on(sp, a, (&q * unit.transpose() * &q).transpose());
            out += first.kronecker(&sp.embed(&second));
        }
        ChoiMatrix {
            space: sp.clone(),
            mat: out,
        }
    }

    /// Choi matrix from its definition `(A ⊗ σ_{-i/2}) m*(1)`.
    pub fn choi_from_comultiplication(&self) -> ChoiMatrix {
        let sp = &self.space;
        let n = sp.dim();
        let h = sp.hdim();
        let sigma = sp.modular_map(c64(0.0, -0.5));
        let unit = sp.mult_adjoint() * Element::identity(sp).to_coords();
        let w = self.mat.kronecker(sigma.matrix()) * unit;
        let mut out = CMatrix::zeros(h * h, h * h);
        for k in 0..n {
            let (a, i, j) = sp.label(k);
            let (r1, c1) = (sp.h_offset(a) + i, sp.h_offset(a) + j);
            for l in 0..n {
                let z = w[k * n + l];
                if z == c64(0.0, 0.0) {
                    continue;
                }
                let (b, i2, j2) = sp.label(l);
                // second leg transposed
                let (r2, c2) = (sp.h_offset(b) + j2, sp.h_offset(b) + i2);
                out[(r1 * h + r2, c1 * h + c2)] += z;
            }
        }
        ChoiMatrix {
            space: sp.clone(),
            mat: out,
        }
    }

    /// KMS implementation `Ã(x) = ρ^{1/4} A(ρ^{-1/4} x ρ^{-1/4}) ρ^{1/4}`.
    pub fn kms_implementation(&self) -> Self {
        let (c, ci) = self.space.kms_conjugation();
        Self::from_matrix_unchecked(self.space.clone(), c * &self.mat * ci)
    }

    /// Adjoint for the GNS inner product, `G⁻¹ A† G`.
    pub fn adjoint_gns(&self) -> Self {
        let g = self.space.gram_gns();
        let gi = g.clone().try_inverse().expect("GNS Gram is positive definite");
        Self::from_matrix_unchecked(self.space.clone(), gi * self.mat.adjoint() * g)
    }

    /// Adjoint for the KMS inner product: conjugate transpose of `Ã`,
    /// conjugated back.
    pub fn adjoint_kms(&self) -> Self {
        let (c, ci) = self.space.kms_conjugation();
        let tilde = &c * &self.mat * &ci;
        Self::from_matrix_unchecked(self.space.clone(), ci * tilde.adjoint() * c)
    }

    /// `Aᵀ(x) = (A*_KMS(x*))*`.
    pub fn transpose(&self) -> Self {
        let adj = self.adjoint_kms();
        let perm = star_permutation(&self.space);
        let n = self.space.dim();
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = adj.mat[(perm[r], perm[c])].conj();
            }
        }
        Self::from_matrix_unchecked(self.space.clone(), out)
    }

    /// Apply the involution `x ↦ A(x*)*`.
    pub fn conjugate_map(&self) -> Self {
        let perm = star_permutation(&self.space);
        let n = self.space.dim();
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = self.mat[(perm[r], perm[c])].conj();
            }
        }
        Self::from_matrix_unchecked(self.space.clone(), out)
    }

    /// `‖A(x*)* − A(x)‖` as a map, i.e. failure of *-preservation.
    pub fn star_residual(&self) -> f64 {
        self.distance(&self.conjugate_map())
    }

    pub fn kms_symmetry_residual(&self) -> f64 {
        linalg::hermitian_residual(&self.kms_implementation().mat)
    }

    pub fn gns_symmetry_residual(&self) -> f64 {
        self.distance(&self.adjoint_gns())
    }

    pub fn is_completely_positive(&self, tol: f64) -> bool {
        let choi = self.choi();
        choi.hermitian_residual() <= tol && choi.min_eigenvalue() >= -tol
    }

    pub fn is_star_preserving(&self, tol: f64) -> bool {
        self.choi().hermitian_residual() <= tol
    }

    pub fn is_kms_symmetric(&self, tol: f64) -> bool {
        self.kms_symmetry_residual() <= tol
    }

    pub fn is_gns_symmetric(&self, tol: f64) -> bool {
        self.gns_symmetry_residual() <= tol
    }

    /// Error unless the map is completely positive within `tol`.
    pub fn require_completely_positive(&self, tol: f64) -> Result<ChoiMatrix> {
        let choi = self.choi();
        let hermitian_residual = choi.hermitian_residual();
        let min_eigenvalue = choi.min_eigenvalue();
        if hermitian_residual > tol || min_eigenvalue < -tol {
            return Err(Error::NotCompletelyPositive {
                min_eigenvalue,
                hermitian_residual,
            });
        }
        Ok(choi)
    }

    /// Recover spanning operators `S_ab^i` of the bimodule from the Choi
    /// matrix, one eigenvector per retained eigenvalue, scaled by the square
    /// root of that eigenvalue. For a Schur idempotent the eigenvalues are 1
    /// and the result is an orthonormal basis.
    pub fn kraus_from_choi(&self) -> Result<OperatorSystem> {
        let tol = DEFAULT_TOL * self.norm().max(1.0);
        let choi = self.require_completely_positive(tol)?;
        Ok(choi.kraus_operators())
    }
}

/// Coordinate permutation implementing `e^a_{ij} ↦ e^a_{ji}`.
pub(crate) fn star_permutation(space: &QuantumSpace) -> Vec<usize> {
    (0..space.dim())
        .map(|k| {
            let (a, i, j) = space.label(k);
            space.index(a, j, i)
        })
        .collect()
}

/// A Choi matrix stored on `H ⊗ H` with the second leg transposed.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    space: Arc<QuantumSpace>,
    mat: CMatrix,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn space(&self) -> &Arc<QuantumSpace> {
        &self.space
    }

    pub fn hermitian_residual(&self) -> f64 {
        linalg::hermitian_residual(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.mat).0.first().cloned().unwrap_or(0.0)
    }

    pub fn support_projection(&self) -> CMatrix {
        linalg::support_projection(&self.mat)
    }

    pub fn rank(&self) -> usize {
        let (values, _) = linalg::hermitian_eigen(&self.mat);
        let top = values.last().cloned().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        values.iter().filter(|&&v| v >= RANK_REL_TOL * top).count()
    }

    /// Tensor flip `a ⊗ b^op ↦ b ⊗ a^op`.
    pub fn flip(&self) -> ChoiMatrix {
        let h = self.space.hdim();
        let mut out = CMatrix::zeros(h * h, h * h);
        for i1 in 0..h {
            for i2 in 0..h {
                for j1 in 0..h {
                    for j2 in 0..h {
                        out[(i1 * h + i2, j1 * h + j2)] = self.mat[(j2 * h + j1, i2 * h + i1)];
                    }
                }
            }
        }
        ChoiMatrix {
            space: self.space.clone(),
            mat: out,
        }
    }

    /// Square block of the Choi matrix for the pair `a → b`, indexed by the
    /// row-major vectorization of `n_b × n_a` matrices.
    pub fn pair_block(&self, from: usize, to: usize) -> CMatrix {
        let sp = &self.space;
        let h = sp.hdim();
        let (na, nb) = (sp.blocks()[from], sp.blocks()[to]);
        let idx: Vec<usize> = (0..nb)
            .flat_map(|r| (0..na).map(move |c| (r, c)))
            .map(|(r, c)| (sp.h_offset(to) + r) * h + sp.h_offset(from) + c)
            .collect();
        CMatrix::from_fn(idx.len(), idx.len(), |r, c| self.mat[(idx[r], idx[c])])
    }

    /// Kraus-type decomposition by eigendecomposition of each block.
    pub fn kraus_operators(&self) -> OperatorSystem {
        let sp = &self.space;
        let nblocks = sp.num_blocks();
        let mut pieces = Vec::new();
        let mut top: f64 = 0.0;
        for a in 0..nblocks {
            for b in 0..nblocks {
                let (values, vectors) = linalg::hermitian_eigen(&self.pair_block(a, b));
                top = top.max(values.last().cloned().unwrap_or(0.0));
                pieces.push((a, b, values, vectors));
            }
        }
        let mut system = OperatorSystem::empty(sp.blocks());
        for (a, b, values, vectors) in pieces {
            let (na, nb) = (sp.blocks()[a], sp.blocks()[b]);
            let left = sp.rho_power(b, 0.25);
            let right = sp.rho_power(a, 0.25);
            let mut ops = Vec::new();
            for (i, &v) in values.iter().enumerate().rev() {
                if top <= 0.0 || v < RANK_REL_TOL * top {
                    continue;
                }
                let col: Vec<Complex64> = vectors.column(i).iter().map(|z| z * v.sqrt()).collect();
                let vmat = linalg::unvec_row_major(&col, nb, na);
                ops.push(&left * vmat * &right);
            }
            if !ops.is_empty() {
                system.set(a, b, ops).expect("operator shapes follow the blocks");
            }
        }
        system
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVector;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0))))
    }

    fn skewed() -> Arc<QuantumSpace> {
        QuantumSpace::new(&[2], Some(vec![diag(&[3.0, 1.5])]), false).unwrap()
    }

    fn classical(space: &Arc<QuantumSpace>, rows: &[&[f64]]) -> SuperOperator {
        let n = rows.len();
        let m = CMatrix::from_fn(n, n, |i, j| c64(rows[i][j], 0.0));
        SuperOperator::new(space.clone(), m).unwrap()
    }

    #[test]
    fn schur_product_on_diagonal_algebra_is_entrywise() {
        let d3 = QuantumSpace::diagonal(3);
        let a = classical(&d3, &[&[1.0, 2.0, 0.0], &[3.0, -1.0, 4.0], &[0.5, 0.0, 2.0]]);
        let b = classical(&d3, &[&[2.0, 1.0, 1.0], &[1.0, 1.0, 0.0], &[4.0, 1.0, 3.0]]);
        let prod = a.schur_product(&b).unwrap();
        let expected = a.matrix().component_mul(b.matrix());
        assert!(linalg::spectral_norm(&(prod.matrix() - expected)) < 1e-13);
    }

    #[test]
    fn identity_is_schur_idempotent_on_matrix_block() {
        let m2 = QuantumSpace::tracial(&[2]);
        let id = SuperOperator::identity(m2);
        assert!(id.schur_product(&id).unwrap().distance(&id) < 1e-13);
    }

    #[test]
    fn choi_of_complete_map_is_identity() {
        for space in [
            QuantumSpace::tracial(&[2]),
            QuantumSpace::tracial(&[2, 1]),
            skewed(),
        ] {
            let k = SuperOperator::complete(space.clone());
            let h = space.hdim();
            assert!(linalg::spectral_norm(&(k.choi().matrix() - linalg::identity(h * h))) < 1e-12);
        }
    }

    #[test]
    fn choi_of_classical_map_is_diagonal() {
        let d3 = QuantumSpace::diagonal(3);
        let a = classical(&d3, &[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        let c = a.choi();
        for r in 0..9 {
            for s in 0..9 {
                let expected = if r == s { a.matrix()[(r / 3, r % 3)] } else { c64(0.0, 0.0) };
                assert!((c.matrix()[(r, s)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn choi_explicit_matches_definition() {
        let space = QuantumSpace::new(
            &[2, 1],
            Some(vec![
                CMatrix::from_row_slice(2, 2, &[c64(3.0, 0.0), c64(0.5, 0.5), c64(0.5, -0.5), c64(2.0, 0.0)]),
                diag(&[1.0]),
            ]),
            true,
        )
        .unwrap();
        let n = space.dim();
        let a = SuperOperator::new(
            space.clone(),
            CMatrix::from_fn(n, n, |i, j| c64((i * 7 + j * 3) as f64 % 5.0 - 2.0, ((i + 2 * j) % 3) as f64)),
        )
        .unwrap();
        let d = linalg::spectral_norm(&(a.choi().matrix() - a.choi_from_comultiplication().matrix()));
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn left_multiplication_by_matrix_unit_is_not_star_preserving() {
        let m2 = QuantumSpace::tracial(&[2]);
        let e12 = Element::basis(&m2, m2.index(0, 0, 1));
        let l = SuperOperator::new(m2.clone(), m2.left_mult(&e12)).unwrap();
        assert!(!l.is_star_preserving(1e-9));
        assert!(l.choi().hermitian_residual() > 1e-3);
    }

    #[test]
    fn complete_map_predicates() {
        let m2 = QuantumSpace::tracial(&[2]);
        let k = SuperOperator::complete(m2);
        assert!(k.is_completely_positive(1e-9));
        assert!(k.is_star_preserving(1e-9));
        assert!(k.is_kms_symmetric(1e-9));
        assert!(k.is_gns_symmetric(1e-9));
    }

    #[test]
    fn swap_on_two_points_predicates() {
        let d2 = QuantumSpace::diagonal(2);
        let a = classical(&d2, &[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(a.is_completely_positive(1e-9));
        assert!(a.is_star_preserving(1e-9));
        assert!(a.is_kms_symmetric(1e-9));
        assert!(a.is_gns_symmetric(1e-9));
        assert!(a.adjoint_gns().distance(&a) < 1e-14);
        assert!(a.adjoint_kms().distance(&a) < 1e-14);
        assert!(a.transpose().distance(&a) < 1e-14);
    }

    #[test]
    fn kms_implementation_examples() {
        let m3 = QuantumSpace::tracial(&[3]);
        let n = m3.dim();
        let a = SuperOperator::new(m3.clone(), CMatrix::from_fn(n, n, |i, j| c64(i as f64 - j as f64, 1.0))).unwrap();
        assert!(a.kms_implementation().distance(&a) < 1e-12);
        let id = SuperOperator::identity(skewed());
        assert!(id.kms_implementation().distance(&id) < 1e-13);
    }

    #[test]
    fn kraus_examples() {
        let d2 = QuantumSpace::diagonal(2);
        let swap = classical(&d2, &[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = swap.kraus_from_choi().unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.get(1, 0).len(), 1);
        assert_eq!(s.get(0, 1).len(), 1);
        assert!(s.get(0, 0).is_empty() && s.get(1, 1).is_empty());

        let m2 = QuantumSpace::tracial(&[2]);
        let id = SuperOperator::identity(m2.clone());
        let s = id.kraus_from_choi().unwrap();
        assert_eq!(s.dim(), 1);
        let op = &s.get(0, 0)[0];
        // a scalar multiple of I₂ with Tr(S*S) = 2
        assert!((op[(0, 1)]).norm() < 1e-12 && (op[(0, 0)] - op[(1, 1)]).norm() < 1e-12);
        assert!((op[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let k = SuperOperator::complete(m2);
        assert_eq!(k.kraus_from_choi().unwrap().dim(), 4);
    }

    #[test]
    fn kraus_rejects_non_cp() {
        let d2 = QuantumSpace::diagonal(2);
        let a = classical(&d2, &[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!(matches!(a.kraus_from_choi(), Err(Error::NotCompletelyPositive { .. })));
    }
}
