//! Dense complex linear algebra helpers shared by the rest of the crate.
//!
//! Mostly a thin layer over `nalgebra`: Hermitian eigensolves, SVD based
//! rank decisions, and matrix functions of positive matrices. The SVD itself
//! is a one-sided Jacobi sweep, since nalgebra's complex SVD is not reliable
//! on rank-deficient input.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative cutoff used for every rank / support decision.
pub const RANK_REL_TOL: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest singular value. Zero for empty matrices.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    // the top eigenvalue of the smaller Gram matrix carries full relative accuracy
    let a = m.unscale(scale);
    let gram = if a.nrows() <= a.ncols() { &a * a.adjoint() } else { a.adjoint() * &a };
    let top = gram.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max);
    scale * top.max(0.0).sqrt()
}

/// Singular value decomposition `m = u * diag(s) * v^*` with `u` of size
/// `rows x k`, `v` of size `cols x k`, `k = min(rows, cols)`.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Singular value decomposition by one-sided Jacobi, after reducing very
/// wide or tall inputs to a square factor with Householder QR.
///
/// nalgebra's own complex SVD is not used: on small rank-deficient inputs it
/// sometimes returns factors that do not reproduce the matrix, and it can
/// fail outright with NaN singular values.
pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let fro = frobenius_norm(m);
    let reproduces = |q: &CMatrix, r: &CMatrix, target: &CMatrix| frobenius_norm(&(q * r - target)) <= QR_CHECK_TOL * fro;
    if rows > 0 && cols > 2 * rows {
        // m = r* q*
        let t = m.adjoint();
        let qr = t.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        if reproduces(&q, &r, &t) {
            let inner = jacobi_svd(&r.adjoint());
            return Svd {
                u: inner.u,
                s: inner.s,
                v: q * inner.v,
            };
        }
    }
    if cols > 0 && rows > 2 * cols {
        let qr = m.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        if reproduces(&q, &r, m) {
            let inner = jacobi_svd(&r);
            return Svd {
                u: q * inner.u,
                s: inner.s,
                v: inner.v,
            };
        }
    }
    jacobi_svd(m)
}

const QR_CHECK_TOL: f64 = 1e-12;

#[cfg(test)]
impl Svd {
    fn reconstruction_error(&self, m: &CMatrix) -> f64 {
        let mut us = self.u.clone();
        for (c, &s) in self.s.iter().enumerate() {
            us.column_mut(c).scale_mut(s);
        }
        frobenius_norm(&(us * self.v.adjoint() - m))
    }
}

/// One-sided (Hestenes) Jacobi SVD.
fn jacobi_svd(m: &CMatrix) -> Svd {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = identity(cols);
    // columns below this are numerical zeros and are left alone
    let floor = (f64::EPSILON * frobenius_norm(m)).powi(2);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a.column(p).iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a.column(q).iter().map(|z| z.norm_sqr()).sum();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let phase = phase / phase.norm();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // rotate columns p and e^{-i phi} q
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, p)];
                        let y = mat[(r, q)] * phase.conj();
                        mat[(r, p)] = x * c - y * s;
                        mat[(r, q)] = (x * s + y * c) * phase;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|c| a.column(c).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = CMatrix::zeros(rows, cols);
    let mut vs = CMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    let mut filled = 0;
    for (c, &i) in order.iter().enumerate() {
        s.push(norms[i]);
        vs.set_column(c, &v.column(i));
        // left vectors of numerically zero columns are not determined
        if norms[i] * norms[i] > floor && norms[i] > 0.0 {
            u.set_column(c, &a.column(i).unscale(norms[i]));
            filled = c + 1;
        }
    }
    complete_orthonormal(&mut u, filled);
    Svd { u, s, v: vs }
}

/// Fill columns `from..` of `q` so that all columns are orthonormal, given
/// that the first `from` already are.
fn complete_orthonormal(q: &mut CMatrix, from: usize) {
    let (rows, cols) = q.shape();
    for c in from..cols {
        // the standard basis vector least explained by the columns so far
        let mut best = CVector::zeros(rows);
        for e in 0..rows {
            let mut w = CVector::zeros(rows);
            w[e] = c64(1.0, 0.0);
            for _ in 0..2 {
                let basis = q.columns(0, c);
                w -= &basis * (basis.adjoint() * &w);
            }
            if w.norm() > best.norm() {
                best = w;
            }
        }
        let n = best.norm();
        q.set_column(c, &best.unscale(n));
    }
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    spectral_norm(&(m - m.adjoint()))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// `f(m)` for Hermitian `m` through its eigendecomposition.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CVector::from_iterator(values.len(), values.iter().map(|&x| f(x)));
    &vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()
}

/// Eigenvalues of a general square matrix via the complex Schur form.
///
/// The QR iteration can stall at a machine-epsilon deflation threshold, so
/// looser thresholds and a fixed unitary similarity are tried in turn.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let attempt = |a: &CMatrix, eps: f64| {
        nalgebra::linalg::Schur::try_new(a.clone(), eps, 10_000)
            .and_then(|s| s.eigenvalues())
            .map(|v| v.iter().cloned().collect::<Vec<_>>())
    };
    for eps in [f64::EPSILON, 1e-14, 1e-13] {
        if let Some(v) = attempt(m, eps) {
            return Ok(v);
        }
    }
    let u = fixed_unitary(n);
    let similar = u.adjoint() * m * &u;
    for eps in [f64::EPSILON, 1e-13] {
        if let Some(v) = attempt(&similar, eps) {
            return Ok(v);
        }
    }
    Err(Error::Numerical("Schur iteration did not converge".into()))
}

/// A deterministic dense unitary (QR of a fixed quasi-random matrix).
fn fixed_unitary(n: usize) -> CMatrix {
    let golden = 0.618_033_988_749_894_9_f64;
    let g = CMatrix::from_fn(n, n, |i, j| {
        let k = (i * n + j + 1) as f64;
        c64((k * golden).fract() - 0.5, (k * golden * golden).fract() - 0.5)
    });
    g.qr().q()
}

/// Orthonormal basis (as columns) of the column space of `m`; singular
/// values below `RANK_REL_TOL * sigma_max` (or `abs_tol`) are discarded.
pub fn range_basis(m: &CMatrix, abs_tol: f64) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let Svd { u, s: sv, .. } = svd(m);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = abs_tol.max(RANK_REL_TOL * smax);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cut).collect();
    let mut out = CMatrix::zeros(rows, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

pub fn rank(m: &CMatrix, abs_tol: f64) -> usize {
    range_basis(m, abs_tol).ncols()
}

/// Orthonormal basis (as columns) of the null space of `m`.
pub fn null_space(m: &CMatrix, abs_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    // pad to at least square so the SVD returns a full V
    let work = if m.nrows() < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let Svd { s: sv, v, .. } = svd(&work);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = abs_tol.max(RANK_REL_TOL * smax);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    let mut out = CMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &v.column(i));
    }
    out
}

/// Orthonormal eigenvectors of a positive semidefinite `m` with eigenvalue
/// above `cut`.
pub fn psd_range(m: &CMatrix, cut: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > cut).collect();
    let mut out = CMatrix::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &vectors.column(i));
    }
    out
}

/// Orthogonal projector onto the span of orthonormal columns `q`.
pub fn projector(q: &CMatrix) -> CMatrix {
    q * q.adjoint()
}

/// Support projection of a Hermitian positive semidefinite matrix.
pub fn support_projection(m: &CMatrix) -> CMatrix {
    let top = hermitian_eigen(m).0.last().cloned().unwrap_or(0.0);
    support_projection_above(m, RANK_REL_TOL * top)
}

/// Spectral projection of the Hermitian part of `m` onto eigenvalues at
/// least `cut`; empty unless `cut > 0`.
pub fn support_projection_above(m: &CMatrix, cut: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut p = CMatrix::zeros(n, n);
    if cut <= 0.0 {
        return p;
    }
    for (i, &v) in values.iter().enumerate() {
        if v >= cut {
            let col = vectors.column(i);
            p += &col * col.adjoint();
        }
    }
    p
}

/// Group indices of sorted real values into clusters: consecutive values
/// closer than `gap` belong to one cluster.
pub fn cluster_sorted(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if (v - values[*last.last().unwrap()]).abs() <= gap => last.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

/// Match two multisets of complex numbers greedily and return the largest
/// pairwise distance, or infinity when the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut sorted_a: Vec<Complex64> = a.to_vec();
    sorted_a.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    for x in sorted_a {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        worst = worst.max(best_d);
    }
    worst
}

/// Row-major vectorization of a matrix.
pub fn vec_row_major(m: &CMatrix) -> CVector {
    let (r, c) = m.shape();
    CVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]))
}

pub fn unvec_row_major(v: &[Complex64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn low_rank(rng: &mut ChaCha8Rng) -> CMatrix {
        let rows = rng.random_range(1..14);
        let cols = rng.random_range(1..14);
        let rank = rng.random_range(1..=rows.min(cols));
        let mut g = || c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let a = CMatrix::from_fn(rows, rank, |_, _| g());
        let b = CMatrix::from_fn(rank, cols, |_, _| g());
        a * b
    }

    #[test]
    fn svd_reconstructs_low_rank_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..400 {
            let m = low_rank(&mut rng);
            let dec = svd(&m);
            assert!(dec.reconstruction_error(&m) <= 1e-12 * frobenius_norm(&m));
            let k = dec.s.len();
            let v_orth = frobenius_norm(&(dec.v.adjoint() * &dec.v - identity(k)));
            let u_orth = frobenius_norm(&(dec.u.adjoint() * &dec.u - identity(k)));
            assert!(v_orth <= 1e-10 && u_orth <= 1e-10);
            let top = dec.s.iter().cloned().fold(0.0, f64::max);
            assert!((spectral_norm(&m) - top).abs() <= 1e-12 * top);
        }
    }

    #[test]
    fn jacobi_svd_matches_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let m = low_rank(&mut rng);
            let dec = jacobi_svd(&m);
            assert!(dec.reconstruction_error(&m) <= 1e-12 * frobenius_norm(&m));
            let top = dec.s[0];
            let r = dec.s.iter().filter(|&&x| x > 1e-9 * top).count();
            assert_eq!(r, range_basis(&m, 0.0).ncols());
            let ns = null_space(&m, 0.0);
            assert_eq!(ns.ncols() + r, m.ncols());
            assert!(spectral_norm(&(&m * &ns)) <= 1e-10 * top);
        }
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = CMatrix::from_row_slice(1, 3, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(spectral_norm(&(&m * &ns)) < 1e-12);
    }

    #[test]
    fn hermitian_function_square_root() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(4.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(9.0, 0.0)]);
        let r = hermitian_function(&m, |x| c64(x.sqrt(), 0.0));
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn general_eigenvalues_of_rotation() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(-1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let ev = eigenvalues(&m).unwrap();
        let expected = [c64(0.0, 1.0), c64(0.0, -1.0)];
        assert!(multiset_distance(&ev, &expected) < 1e-12);
    }

    #[test]
    fn clusters_split_on_gaps() {
        let c = cluster_sorted(&[0.0, 1e-12, 1.0, 1.0 + 1e-12, 3.0], 1e-9);
        assert_eq!(c, vec![vec![0, 1], vec![2, 3], vec![4]]);
    }
}
