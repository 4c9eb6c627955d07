//! Dense complex linear algebra helpers shared by all modules.
//!
//! Everything is double precision and dense; problem sizes are desk scale
//! (total dimensions up to a couple hundred). Hermitian eigendecompositions
//! use nalgebra's native complex routine; spectral radii of non-normal
//! matrices go through the 2n x 2n real embedding.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hermitian part `(A + A*)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Relative deviation of `A` from its Hermitian part.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let scale = a.norm().max(1e-300);
    (a - a.adjoint()).norm() / (2.0 * scale)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first so that tiny round-off asymmetry cannot
/// leak complex eigenvalues into the result.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let se = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn lambda_max(a: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(a);
    vals.last().copied().unwrap_or(0.0)
}

pub fn lambda_min(a: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(a);
    vals.first().copied().unwrap_or(0.0)
}

/// Largest singular value (operator norm). Zero for empty matrices.
pub fn op_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Smallest singular value of a (not necessarily square) matrix.
pub fn sigma_min(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(f64::INFINITY, |m, &s| m.min(s))
}

/// Real 2n x 2n embedding `[[Re A, -Im A], [Im A, Re A]]`.
fn real_embedding(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    let m = a.ncols();
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * m);
    for i in 0..n {
        for j in 0..m {
            let z = a[(i, j)];
            e[(i, j)] = z.re;
            e[(i, j + m)] = -z.im;
            e[(i + n, j)] = z.im;
            e[(i + n, j + m)] = z.re;
        }
    }
    e
}

/// Spectral radius of a square complex matrix.
pub fn spectral_radius(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    assert_eq!(a.nrows(), a.ncols(), "spectral radius needs a square matrix");
    real_embedding(a)
        .complex_eigenvalues()
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Eigenvalue of largest modulus together with a unit eigenvector.
///
/// Eigenvalues come from the real embedding (which lists both `λ` and `λ̄`);
/// the eigenvector is recovered by inverse iteration, retrying with the
/// conjugate when the first candidate is spurious.
pub fn top_eigenpair(a: &CMat) -> Option<(C64, CVec)> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let eigs = real_embedding(a).complex_eigenvalues();
    let top = eigs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if top < 1e-300 {
        return None;
    }
    // The embedding lists both λ and λ̄; only one of each pair is an
    // eigenvalue of `a`. Iterate from every near-top shift and keep the
    // genuinely converged pair of largest modulus.
    let mut shifts: Vec<C64> = Vec::new();
    for z in eigs.iter() {
        if z.norm() >= top * (1.0 - 1e-10) {
            let c = C64::new(z.re, z.im);
            if !shifts.iter().any(|s| (s - c).norm() <= 1e-12 * top) {
                shifts.push(c);
            }
        }
    }
    let mut best: Option<(C64, CVec)> = None;
    for cand in shifts {
        if let Some((lam, v)) = inverse_iterate(a, cand) {
            let res = (a * &v - &v * lam).norm();
            let converged = res <= 1e-10 * (1.0 + op_norm(a));
            let better = best.as_ref().map_or(true, |(bl, _)| lam.norm() > bl.norm());
            if converged && better {
                best = Some((lam, v));
            }
        }
    }
    best
}

fn inverse_iterate(a: &CMat, shift: C64) -> Option<(C64, CVec)> {
    let n = a.nrows();
    // Nudge the shift off the exact eigenvalue so the solve stays well posed.
    let eps = 1e-10 * (1.0 + shift.norm());
    let shifted = a - identity(n) * (shift + cx(eps, eps));
    let lu = shifted.lu();
    let mut v = CVec::from_element(n, cx(1.0, 0.0));
    v /= cx(v.norm(), 0.0);
    for _ in 0..16 {
        let w = lu.solve(&v)?;
        let nw = w.norm();
        if !nw.is_finite() || nw < 1e-300 {
            return None;
        }
        v = w / cx(nw, 0.0);
    }
    let lam = v.dotc(&(a * &v));
    Some((lam, v))
}

/// Principal square root of a Hermitian PSD matrix (negative round-off
/// eigenvalues clamped to zero).
pub fn psd_sqrt(a: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&l| cx(l.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Inverse square root of a Hermitian PD matrix.
pub fn pd_inv_sqrt(a: &CMat) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(a);
    let floor = vals.last().copied().unwrap_or(0.0) * 1e-14;
    if vals.first().copied().unwrap_or(0.0) <= floor.max(0.0) {
        return Err(Error::Numerical(format!(
            "inverse square root of a non-PD matrix (min eigenvalue {:.3e})",
            vals.first().copied().unwrap_or(0.0)
        )));
    }
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&l| cx(1.0 / l.sqrt(), 0.0)),
    ));
    Ok(&vecs * d * vecs.adjoint())
}

/// Moore-Penrose pseudoinverse with relative singular value cutoff.
pub fn pinv(a: &CMat, rel_cutoff: f64) -> CMat {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let smax = svd.singular_values.max();
    let cut = smax * rel_cutoff;
    let k = svd.singular_values.len();
    let sinv = CMat::from_diagonal(&CVec::from_iterator(
        k,
        svd.singular_values
            .iter()
            .map(|&s| if s > cut { cx(1.0 / s, 0.0) } else { cx(0.0, 0.0) }),
    ));
    vt.adjoint() * sinv * u.adjoint()
}

/// Clip singular values of `a` to at most `bound`.
pub fn clip_singular_values(a: &CMat, bound: f64) -> CMat {
    let svd = a.clone().svd(true, true);
    if svd.singular_values.max() <= bound {
        return a.clone();
    }
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let k = svd.singular_values.len();
    let s = CMat::from_diagonal(&CVec::from_iterator(
        k,
        svd.singular_values.iter().map(|&s| cx(s.min(bound), 0.0)),
    ));
    u * s * vt
}

/// Cholesky factor `L` with `A = L L*`, requiring strictly positive real
/// pivots. Returns `None` when `A` is not positive definite.
pub fn cholesky_pd(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return None;
    }
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = cx(dj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / cx(dj, 0.0);
        }
    }
    Some(l)
}

/// Positive definiteness via the pivot-checked Cholesky factorization.
pub fn is_pd(a: &CMat) -> bool {
    a.nrows() == 0 || cholesky_pd(&hermitian_part(a)).is_some()
}

/// `true` when `a - margin I` admits a Cholesky factorization.
pub fn is_pd_with_margin(a: &CMat, margin: f64) -> bool {
    let n = a.nrows();
    is_pd(&(a - identity(n).scale(margin)))
}

/// Standard complex Gaussian matrix (entries with unit total variance).
pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cx(re, im) * cx(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    loop {
        let v = random_complex_matrix(rng, n, 1).column(0).into_owned();
        let norm = v.norm();
        if norm > 1e-8 {
            return v / cx(norm, 0.0);
        }
    }
}

/// Haar-ish random unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex_matrix(rng, n, n);
    g.qr().q()
}

/// Random Hermitian PSD matrix `G G*` scaled to unit trace.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex_matrix(rng, n, n);
    let p = &g * g.adjoint();
    let tr: f64 = (0..n).map(|i| p[(i, i)].re).sum();
    p.scale(1.0 / tr.max(1e-300))
}

pub fn contains_nan(a: &CMat) -> bool {
    a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
}
