//! Tensor product / Hilbert-Schmidt kernel.
//!
//! A vector in `H ⊗ K` is identified with an operator `K → H` through the
//! unitary reshape `U[h ⊗ k] = h kᵀ`; the conjugation on `K` is fixed as
//! entrywise conjugation in the standard basis, so `ᵀ` is the plain
//! transpose. Index convention: the `H` index runs slow, the `K` index fast.
//!
//! On top of the identification sits the structured Douglas solver: given
//! `p ∈ H ⊗ H0` and `q ∈ K ⊗ H0`, a contraction `X : H → K` with
//! `(X ⊗ I)p = q` exists exactly when `U[q]*U[q] − U[p]*U[p] ⪯ 0`, and is
//! produced constructively from the pseudoinverse of `U[p]`.

use crate::error::{Error, Result};
use crate::linalg::{clip_singular_values, hermitian_eigen, pinv, CMat, CVec};

/// Dimensions of the identification `H ⊗ K ≅ (K → H matrices)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HsShape {
    pub dim_h: usize,
    pub dim_k: usize,
}

impl HsShape {
    pub fn new(dim_h: usize, dim_k: usize) -> Self {
        HsShape { dim_h, dim_k }
    }

    pub fn len(&self) -> usize {
        self.dim_h * self.dim_k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reshape a tensor-product vector into the corresponding `dim_h x dim_k`
/// matrix: `U[h ⊗ k] = h kᵀ`.
pub fn hs_vec(shape: HsShape, v: &CVec) -> Result<CMat> {
    if v.len() != shape.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} for a {}x{} identification",
            v.len(),
            shape.dim_h,
            shape.dim_k
        )));
    }
    Ok(CMat::from_fn(shape.dim_h, shape.dim_k, |i, a| v[i * shape.dim_k + a]))
}

/// Inverse of [`hs_vec`].
pub fn hs_unvec(m: &CMat) -> CVec {
    let (h, k) = (m.nrows(), m.ncols());
    CVec::from_fn(h * k, |idx, _| m[(idx / k, idx % k)])
}

/// `Yᵀ = conj(Y*)`; with entrywise conjugation this is the plain transpose.
pub fn transpose_op(y: &CMat) -> CMat {
    y.transpose()
}

#[derive(Debug, Clone, Copy)]
pub struct DouglasOptions {
    /// Slack allowed in the solvability criterion `U[q]*U[q] ⪯ U[p]*U[p]`.
    pub tol: f64,
    /// Relative singular value cutoff for the pseudoinverse rank decision.
    pub pinv_cutoff: f64,
}

impl Default for DouglasOptions {
    fn default() -> Self {
        DouglasOptions { tol: 1e-10, pinv_cutoff: 1e-12 }
    }
}

/// Solve `(X ⊗ I_{H0}) p = q` with `‖X‖ ≤ 1`.
///
/// `p` lives in `H ⊗ H0`, `q` in `K ⊗ H0`; the returned `X` is `dim_k x
/// dim_h`. `X := U[q]·U[p]⁺` acts on the range of `U[p]` and vanishes on its
/// orthogonal complement; singular values are clipped to 1 afterwards so the
/// result is a genuine contraction even when the criterion holds with slack
/// close to `tol`.
pub fn douglas_solve(
    p: &CVec,
    q: &CVec,
    dim_h: usize,
    dim_k: usize,
    dim_h0: usize,
    opts: DouglasOptions,
) -> Result<CMat> {
    let pm = hs_vec(HsShape::new(dim_h, dim_h0), p)?;
    let qm = hs_vec(HsShape::new(dim_k, dim_h0), q)?;
    let crit = qm.adjoint() * &qm - pm.adjoint() * &pm;
    let (vals, _) = hermitian_eigen(&crit);
    let worst = vals.last().copied().unwrap_or(0.0);
    if worst > opts.tol {
        return Err(Error::CriterionViolated(worst, opts.tol));
    }
    let x = &qm * pinv(&pm, opts.pinv_cutoff);
    Ok(clip_singular_values(&x, 1.0))
}

/// Residual `‖(X ⊗ I)p − q‖` of a Douglas solution.
pub fn douglas_residual(x: &CMat, p: &CVec, q: &CVec, dim_h: usize, dim_k: usize, dim_h0: usize) -> f64 {
    let pm = hs_vec(HsShape::new(dim_h, dim_h0), p).expect("shape checked by caller");
    let qm = hs_vec(HsShape::new(dim_k, dim_h0), q).expect("shape checked by caller");
    (x * pm - qm).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cx, op_norm, random_complex_matrix, random_unit_vector};
    use crate::seed::rng_for;

    #[test]
    fn pure_tensor_reshape() {
        // e1 ⊗ e2 in C^2 ⊗ C^2 -> single 1 at row 0, col 1
        let mut v = CVec::zeros(4);
        v[1] = cx(1.0, 0.0);
        let m = hs_vec(HsShape::new(2, 2), &v).unwrap();
        assert_eq!(m[(0, 1)], cx(1.0, 0.0));
        assert_eq!(m.norm(), 1.0);
        assert_eq!(hs_unvec(&m), v);
    }

    #[test]
    fn unitarity_on_random_pairs() {
        let mut rng = rng_for(10, 0);
        for &(h, k) in &[(2usize, 2usize), (3, 2), (5, 3)] {
            let shape = HsShape::new(h, k);
            for _ in 0..50 {
                let x = random_unit_vector(&mut rng, shape.len());
                let y = random_unit_vector(&mut rng, shape.len());
                let xm = hs_vec(shape, &x).unwrap();
                let ym = hs_vec(shape, &y).unwrap();
                // <U[x], U[y]>_HS = tr(U[y]* U[x]) must equal <x, y>
                let hs = (ym.adjoint() * &xm).trace();
                let direct = y.dotc(&x);
                assert!((hs - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn intertwining_relation() {
        let mut rng = rng_for(11, 0);
        for _ in 0..50 {
            let (h, k, h0, k0) = (3usize, 2usize, 3usize, 4usize);
            let x = random_complex_matrix(&mut rng, k, h);
            let y = random_complex_matrix(&mut rng, k0, h0);
            let v = random_unit_vector(&mut rng, h * h0);
            // (X ⊗ Y) v  computed entrywise
            let vm = hs_vec(HsShape::new(h, h0), &v).unwrap();
            let lhs = {
                let xy = x.kronecker(&y);
                let w = &xy * &v;
                hs_vec(HsShape::new(k, k0), &w).unwrap()
            };
            let rhs = &x * vm * transpose_op(&y);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn douglas_rank_one_permutation() {
        // p = e1 ⊗ e1, q = e2 ⊗ e1 in C^2 ⊗ C^2: X = e2 e1*
        let mut p = CVec::zeros(4);
        p[0] = cx(1.0, 0.0);
        let mut q = CVec::zeros(4);
        q[2] = cx(1.0, 0.0);
        let x = douglas_solve(&p, &q, 2, 2, 2, DouglasOptions::default()).unwrap();
        assert!((x[(1, 0)] - cx(1.0, 0.0)).norm() < 1e-14);
        assert!((op_norm(&x) - 1.0).abs() < 1e-12);
        assert!(douglas_residual(&x, &p, &q, 2, 2, 2) < 1e-14);
    }

    #[test]
    fn douglas_zero_target() {
        let mut rng = rng_for(12, 0);
        let p = random_unit_vector(&mut rng, 6);
        let q = CVec::zeros(6);
        let x = douglas_solve(&p, &q, 3, 3, 2, DouglasOptions::default()).unwrap();
        assert!(x.norm() < 1e-12);
    }

    #[test]
    fn douglas_forward_generated_contraction() {
        let mut rng = rng_for(13, 0);
        for _ in 0..25 {
            let (h, k, h0) = (4usize, 3usize, 2usize);
            let x0raw = random_complex_matrix(&mut rng, k, h);
            let x0 = clip_singular_values(&x0raw, 0.95);
            let p = random_unit_vector(&mut rng, h * h0);
            let q = {
                let big = x0.kronecker(&crate::linalg::identity(h0));
                &big * &p
            };
            let x = douglas_solve(&p, &q, h, k, h0, DouglasOptions::default()).unwrap();
            let res = douglas_residual(&x, &p, &q, h, k, h0);
            assert!(res <= 1e-9 * p.norm(), "residual {res}");
            assert!(op_norm(&x) <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn douglas_rejects_expansive_targets() {
        let mut rng = rng_for(14, 0);
        let p = random_unit_vector(&mut rng, 4);
        let q = &p * cx(2.0, 0.0);
        let err = douglas_solve(&q, &p, 2, 2, 2, DouglasOptions::default());
        assert!(err.is_ok());
        let err = douglas_solve(&p, &q, 2, 2, 2, DouglasOptions::default());
        assert!(matches!(err, Err(Error::CriterionViolated(_, _))));
    }
}
