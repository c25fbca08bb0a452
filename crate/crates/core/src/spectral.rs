//! Spectral data of quantum adjacency matrices: spectra through the KMS
//! implementation, Perron–Frobenius eigenpairs, bipartitions, GNS operator
//! norms and regularity.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::connectivity::{self, Method};
use crate::error::{Error, Result};
use crate::graph::QuantumGraph;
use crate::linalg::{self, c64, CMatrix};
use crate::space::{Element, Projection};
use crate::superop::SuperOperator;

/// Relative gap deciding whether an eigenvalue is simple.
pub const SIMPLE_REL_GAP: f64 = 1e-7;
/// Relative floor on the smallest eigenvalue of a strictly positive element.
pub const POSITIVE_REL_TOL: f64 = 1e-8;
/// Relative tolerance for detecting `−λ` in the spectrum.
pub const BIPARTITE_REL_TOL: f64 = 1e-8;

/// Perron–Frobenius data `(r, x)` of a completely positive map.
#[derive(Debug, Clone)]
pub struct PerronFrobenius {
    /// Spectral radius.
    pub r: f64,
    /// A positive eigenvector for `r`, normalized in the reference trace.
    pub eigenvector: Element,
    pub simple: bool,
    pub strictly_positive: bool,
    /// `‖Φ(x) − r x‖`.
    pub residual: f64,
    /// Multiplicity of the cluster at `r`.
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Eigenvalues of `Ã`, sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    /// Real for undirected graphs (Hermitian solver).
    pub hermitian: bool,
    pub perron_frobenius: PerronFrobenius,
}

impl SpectralData {
    pub fn top(&self) -> f64 {
        self.perron_frobenius.r
    }
}

fn sort_descending(values: &mut [Complex64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Eigenvalues of `Ã` and the Perron–Frobenius pair of `A`.
pub fn spectrum(g: &QuantumGraph) -> Result<SpectralData> {
    let kms = g.kms_adjacency();
    let hermitian = g.flags().undirected;
    let mut eigenvalues: Vec<Complex64> = if hermitian {
        linalg::hermitian_eigen(kms.matrix()).0.into_iter().map(|v| c64(v, 0.0)).collect()
    } else {
        kms.eigenvalues()?
    };
    sort_descending(&mut eigenvalues);
    Ok(SpectralData {
        eigenvalues,
        hermitian,
        perron_frobenius: perron_frobenius(g.adjacency(), g.tol())?,
    })
}

fn is_strictly_positive(x: &Element) -> bool {
    let values = x.hermitian_eigenvalues();
    let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    norm > 0.0 && values[0] > POSITIVE_REL_TOL * norm
}

/// Rotate `x` so that `τ(x) > 0`, take the Hermitian part and normalize.
fn phase_fix(space: &crate::space::QuantumSpace, x: &Element) -> Element {
    let t = space.trace(x);
    let rotated = if t.norm() > 1e-12 * x.norm2().max(1e-300) {
        x.scale(t.conj() / t.norm())
    } else {
        x.clone()
    };
    let h = rotated.hermitian_part();
    let n = h.norm2();
    if n > 0.0 {
        h.scale(c64(1.0 / n, 0.0))
    } else {
        h
    }
}

/// Perron–Frobenius data of a completely positive map. KMS-symmetric maps
/// are handled through the Hermitian matrix of `Ã`; the eigenvector is
/// mapped back by `x = ρ^{-1/4} x̃ ρ^{-1/4}`.
pub fn perron_frobenius(phi: &SuperOperator, tol: f64) -> Result<PerronFrobenius> {
    let scale_tol = tol * phi.norm().max(1.0);
    phi.require_completely_positive(scale_tol)?;
    let space = phi.space().clone();
    let kms = phi.kms_implementation();
    let n = space.dim();

    let (r, x, multiplicity) = if phi.is_kms_symmetric(scale_tol) {
        let (values, vectors) = linalg::hermitian_eigen(kms.matrix());
        let r = values[n - 1];
        let diameter = r - values[0];
        let gap = SIMPLE_REL_GAP * diameter.max(r.abs());
        let multiplicity = values.iter().filter(|&&v| (v - r).abs() <= gap).count();
        let one = Element::identity(&space).to_coords();
        let mut coords = linalg::CVector::zeros(n);
        if multiplicity == 1 {
            coords = vectors.column(n - 1).into_owned();
        } else {
            for i in (n - multiplicity)..n {
                let col = vectors.column(i);
                coords += &col * (col.adjoint() * &one)[(0, 0)];
            }
        }
        let xt = phase_fix(&space, &Element::from_coords(&space, &coords));
        let d = space.density_power(-0.25);
        (r, &(&d * &xt) * &d, multiplicity)
    } else {
        let values = phi.eigenvalues()?;
        let r = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diameter = values
            .iter()
            .flat_map(|a| values.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        let gap = SIMPLE_REL_GAP * diameter.max(r);
        let multiplicity = values.iter().filter(|z| (*z - c64(r, 0.0)).norm() <= gap).count();
        let shifted = phi.matrix() - linalg::identity(n) * c64(r, 0.0);
        let ns = linalg::null_space(&shifted, 1e-9 * phi.norm().max(1.0));
        let x = if multiplicity == 1 && ns.ncols() == 1 {
            phase_fix(&space, &Element::from_coords(&space, &ns.column(0).into_owned()))
        } else {
            shifted_power_iteration(phi, r)
        };
        (r, x, multiplicity)
    };
    let x = x.scale(c64(1.0 / x.norm2().max(1e-300), 0.0));
    let residual = (&phi.apply(&x) - &x.scale(c64(r, 0.0))).norm2();
    Ok(PerronFrobenius {
        r,
        simple: multiplicity == 1,
        strictly_positive: is_strictly_positive(&x),
        eigenvector: x,
        residual,
        multiplicity,
    })
}

/// Iterate `x ↦ (Φ + r)x` from `1`; positivity is preserved and the
/// component along the eigenvalue `r` dominates.
fn shifted_power_iteration(phi: &SuperOperator, r: f64) -> Element {
    let space = phi.space();
    let n = space.dim();
    let step = phi.matrix() + linalg::identity(n) * c64(r.max(1e-12), 0.0);
    let mut v = Element::identity(space).to_coords();
    for _ in 0..5000 {
        let next = &step * &v;
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        let next = next.unscale(norm);
        let done = (&next - &v).norm() < 1e-15;
        v = next;
        if done {
            break;
        }
    }
    phase_fix(space, &Element::from_coords(space, &v))
}

/// Residuals of the bipartite lemma for `Ã` and a projection `p`, plus the
/// operator-system condition `pSp = (1−p)S(1−p) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteResiduals {
    /// `‖Ã(p)p‖`.
    pub first: f64,
    /// `‖Ã(1−p)(1−p)‖`.
    pub second: f64,
    /// `‖Ã R_p − R_{1−p} Ã‖`.
    pub swap: f64,
    /// `max ‖p S p‖, ‖(1−p) S (1−p)‖` over the operators of `S`.
    pub operator_system: f64,
}

impl BipartiteResiduals {
    pub fn max(&self) -> f64 {
        [self.first, self.second, self.swap, self.operator_system]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn bipartite_residuals(g: &QuantumGraph, p: &Element) -> Result<BipartiteResiduals> {
    let space = g.space();
    let kms = g.kms_adjacency();
    let q = &Element::identity(space) - p;
    let rp = space.right_mult(p);
    let rq = space.right_mult(&q);
    let (ph, qh) = (space.embed(p), space.embed(&q));
    let mut operator_system: f64 = 0.0;
    for s in g.operator_system()?.on_h() {
        operator_system = operator_system
            .max(linalg::spectral_norm(&(&ph * &s * &ph)))
            .max(linalg::spectral_norm(&(&qh * &s * &qh)));
    }
    Ok(BipartiteResiduals {
        first: (&kms.apply(p) * p).norm(),
        second: (&kms.apply(&q) * &q).norm(),
        swap: linalg::spectral_norm(&(kms.matrix() * &rp - &rq * kms.matrix())),
        operator_system,
    })
}

#[derive(Debug, Clone)]
pub struct Bipartiteness {
    pub bipartite: bool,
    /// Largest eigenvalue `λ` of `Ã`.
    pub lambda: f64,
    pub lambda_min: f64,
    /// `(p₁, p₂)` in the frame of `Ã`.
    pub partition: Option<(Projection, Projection)>,
    pub residuals: Option<BipartiteResiduals>,
}

/// Decide bipartiteness of a connected undirected graph from `−λ ∈ σ(Ã)`
/// and extract the bipartition from a self-adjoint `−λ` eigenvector.
pub fn is_bipartite(g: &QuantumGraph) -> Result<Bipartiteness> {
    g.require_undirected()?;
    if !connectivity::connected(g, Method::Auto, false)?.connected {
        return Err(Error::NotConnected);
    }
    let space = g.space();
    let kms = g.kms_adjacency();
    let n = space.dim();
    let (values, vectors) = linalg::hermitian_eigen(kms.matrix());
    let lambda = values[n - 1];
    let lambda_min = values[0];
    let mut out = Bipartiteness {
        bipartite: false,
        lambda,
        lambda_min,
        partition: None,
        residuals: None,
    };
    if lambda <= 0.0 || (lambda_min + lambda).abs() > BIPARTITE_REL_TOL * lambda {
        return Ok(out);
    }
    out.bipartite = true;

    let gap = SIMPLE_REL_GAP * (lambda - lambda_min);
    let mut best: Option<Element> = None;
    for i in (0..n).filter(|&i| (values[i] - lambda_min).abs() <= gap.max(BIPARTITE_REL_TOL * lambda)) {
        let v = Element::from_coords(space, &vectors.column(i).into_owned());
        for cand in [v.hermitian_part(), v.scale(c64(0.0, 1.0)).hermitian_part()] {
            if best.as_ref().map_or(true, |b| cand.norm2() > b.norm2()) {
                best = Some(cand);
            }
        }
    }
    let x = best.ok_or_else(|| Error::Numerical("empty −λ eigenspace".into()))?;
    let p1 = x.spectral_projection(0.0, f64::INFINITY);
    let p2 = &Element::identity(space) - &p1;
    out.residuals = Some(bipartite_residuals(g, &p1)?);
    out.partition = Some((Projection::new(p1, 1e-6)?, Projection::new(p2, 1e-6)?));
    Ok(out)
}

/// Operator norm of `A` on the GNS space `L²(M, ψ)`.
pub fn operator_norm_gns(g: &QuantumGraph) -> Result<f64> {
    let space = g.space();
    let chol = Cholesky::new(space.gram_gns()).ok_or_else(|| Error::Numerical("GNS Gram is not positive definite".into()))?;
    let lt: CMatrix = chol.l().adjoint();
    let lt_inv = lt
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok(linalg::spectral_norm(&(&lt * g.adjacency().matrix() * lt_inv)))
}

/// The degree `d` when `A1 = d1` and `A*1 = d1` (GNS adjoint).
pub fn regularity(g: &QuantumGraph) -> Option<f64> {
    let space = g.space();
    let one = Element::identity(space);
    let a = g.adjacency();
    let image = a.apply(&one);
    let d = space.trace(&(&one * &image)).re / space.trace(&one).re;
    let tol = g.tol() * d.abs().max(1.0);
    let dual = a.adjoint_gns().apply(&one);
    let d1 = one.scale(c64(d, 0.0));
    let ok = d >= -tol && (&image - &d1).norm() <= tol && (&dual - &d1).norm() <= tol;
    ok.then_some(d.max(0.0))
}
