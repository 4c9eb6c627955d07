//! Rank-one witness machinery shared by the lower-bound search and the LMI
//! engine's dual side.
//!
//! A vector `h` in the (possibly enhanced) source space is a destabilization
//! witness at scale `t` when for every component the reshaped quadratic forms
//! satisfy `Y_k*Y_k ⪰ t² S_k*S_k`, with `Y_k = U[P_{R,k} M h]` and
//! `S_k = U[P_{S,k} h]`. The Douglas construction then turns the witness into
//! per-component contraction blocks with `(W_k ⊗ I) P_{R,k}(M/t)h = P_{S,k}h`,
//! i.e. a structured `Δ` of norm `1/t` making `I − ΔM` singular.

use rand::Rng;

use crate::error::Result;
use crate::graph::StructureGraph;
use crate::hs::{douglas_solve, hs_vec, DouglasOptions, HsShape};
use crate::linalg::{cx, hermitian_eigen, CMat, CVec};

/// `sup { t >= 0 : A ⪰ t² B }` for Hermitian PSD Gram matrices `A = Y*Y`,
/// `B = S*S`. Returns `f64::INFINITY` when `B` vanishes.
pub(crate) fn gram_ratio(a: &CMat, b: &CMat) -> f64 {
    let scale_b = b.norm();
    if scale_b < 1e-300 {
        return f64::INFINITY;
    }
    let (vals, vecs) = hermitian_eigen(a);
    let amax = vals.last().copied().unwrap_or(0.0).max(0.0);
    if amax < 1e-300 {
        return 0.0;
    }
    let cutoff = amax * 1e-13;
    // Any B-mass on the kernel of A kills every positive t.
    let d = vals.len();
    let mut leak = 0.0f64;
    let mut c = CMat::zeros(d, d);
    // C = A^{-1/2} B A^{-1/2} restricted to the range of A, in A's eigenbasis.
    let bt = vecs.adjoint() * b * &vecs;
    for i in 0..d {
        for j in 0..d {
            let (li, lj) = (vals[i].max(0.0), vals[j].max(0.0));
            if li <= cutoff || lj <= cutoff {
                if i == j {
                    leak += bt[(i, j)].re.abs();
                }
            } else {
                c[(i, j)] = bt[(i, j)] / cx((li * lj).sqrt(), 0.0);
            }
        }
    }
    if leak > 1e-10 * scale_b {
        return 0.0;
    }
    let (cv, _) = hermitian_eigen(&c);
    let top = cv.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 / top).sqrt()
    }
}

/// Largest scale `t` at which `h` is a witness: `min_k` of the component
/// Gram ratios for the pair `(Mh, h)`.
pub(crate) fn witness_scale(g: &StructureGraph, m: &CMat, h: &CVec) -> f64 {
    let lay = g.layout();
    let y = m * h;
    let mut t = f64::INFINITY;
    for (k, c) in g.components().iter().enumerate() {
        let yk = hs_vec(HsShape::new(c.n_ranges, c.multiplicity), &lay.range_chunk(&y, k, 1)).expect("layout");
        let sk = hs_vec(HsShape::new(c.n_sources, c.multiplicity), &lay.source_chunk(h, k, 1)).expect("layout");
        let r = gram_ratio(&(yk.adjoint() * &yk), &(sk.adjoint() * &sk));
        t = t.min(r);
    }
    t
}

/// Douglas contraction blocks for a witness: `(W_k ⊗ I) P_{R,k} mh = P_{S,k} h`
/// at enhancement level `q`. `mh` must already carry the `1/t` scaling.
pub(crate) fn contraction_blocks(
    g: &StructureGraph,
    mh: &CVec,
    h: &CVec,
    q: usize,
    opts: DouglasOptions,
) -> Result<Vec<CMat>> {
    let lay = g.layout();
    let mut blocks = Vec::with_capacity(g.num_components());
    for (k, c) in g.components().iter().enumerate() {
        let p = lay.range_chunk(mh, k, q);
        let s = lay.source_chunk(h, k, q);
        blocks.push(douglas_solve(&p, &s, q * c.n_ranges, q * c.n_sources, c.multiplicity, opts)?);
    }
    Ok(blocks)
}

/// Gradient-style ascent of the witness scale from a starting vector.
///
/// The ascent target is the surrogate `min_k ‖P_{R,k}Mh‖ / ‖P_{S,k}h‖`
/// (which coincides with the true scale on multiplicity-one components);
/// each step pushes `h` along `M*P_{R,k*}M h − t² P_{S,k*} h` for the worst
/// component. The true PSD-order scale is what gets scored and returned.
pub(crate) fn ascend<R: Rng + ?Sized>(
    g: &StructureGraph,
    m: &CMat,
    h0: CVec,
    iters: usize,
    rng: &mut R,
) -> (f64, CVec) {
    let lay = g.layout();
    let n_s = lay.source_dim();
    let mut h = h0.clone();
    let hn = h.norm();
    if hn < 1e-300 {
        return (0.0, h0);
    }
    h /= cx(hn, 0.0);

    // Per-component quadratic forms M* P_{R,k} M and source masks.
    let grams: Vec<CMat> = (0..g.num_components())
        .map(|k| {
            let rows = m.rows(lay.range_offset(k), lay.range_extent(k)).into_owned();
            rows.adjoint() * rows
        })
        .collect();

    let mut best_t = witness_scale(g, m, &h);
    let mut best_h = h.clone();
    let mut eta = 0.5f64;
    let mut stall = 0usize;

    let surrogate = |v: &CVec, y: &CVec| -> (f64, usize) {
        let mut worst = f64::INFINITY;
        let mut arg = 0;
        for k in 0..g.num_components() {
            let num = lay.range_chunk(y, k, 1).norm();
            let den = lay.source_chunk(v, k, 1).norm();
            let r = if den < 1e-300 { f64::INFINITY } else { num / den };
            if r < worst {
                worst = r;
                arg = k;
            }
        }
        (worst, arg)
    };

    for it in 0..iters {
        let y = m * &h;
        let (t_sur, k_star) = surrogate(&h, &y);
        if !t_sur.is_finite() {
            break;
        }
        // gradient of ‖P_R M h‖² − t²‖P_S h‖² for the worst component
        let mut dir = &grams[k_star] * &h;
        let so = lay.source_offset(k_star);
        let ext = lay.source_extent(k_star);
        for i in 0..ext {
            dir[so + i] -= cx(t_sur * t_sur, 0.0) * h[so + i];
        }
        let dn = dir.norm();
        if dn < 1e-14 {
            // stationary for the surrogate; jiggle
            dir = crate::linalg::random_unit_vector(rng, n_s);
        } else {
            dir /= cx(dn, 0.0);
        }
        let mut cand = &h + dir.scale(eta);
        if it % 9 == 8 && stall > 3 {
            cand += crate::linalg::random_unit_vector(rng, n_s).scale(0.1);
        }
        let cn = cand.norm();
        if cn < 1e-300 {
            break;
        }
        cand /= cx(cn, 0.0);
        let y_cand = m * &cand;
        let (t_cand, _) = surrogate(&cand, &y_cand);
        if t_cand >= t_sur {
            h = cand;
            eta = (eta * 1.3).min(1.0);
            stall = 0;
        } else {
            eta = (eta * 0.4).max(1e-3);
            stall += 1;
        }
        let t_true = witness_scale(g, m, &h);
        if t_true.is_finite() && t_true > best_t {
            best_t = t_true;
            best_h = h.clone();
        }
    }
    (best_t, best_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::StructureGraph;
    use crate::linalg::{identity, random_unit_vector};
    use crate::seed::rng_for;

    #[test]
    fn gram_ratio_scalar_cases() {
        let a = CMat::from_row_slice(1, 1, &[cx(4.0, 0.0)]);
        let b = CMat::from_row_slice(1, 1, &[cx(1.0, 0.0)]);
        assert!((gram_ratio(&a, &b) - 2.0).abs() < 1e-12);
        assert_eq!(gram_ratio(&a, &CMat::zeros(1, 1)), f64::INFINITY);
        assert_eq!(gram_ratio(&CMat::zeros(1, 1), &b), 0.0);
    }

    #[test]
    fn witness_scale_identity_two_scalars() {
        // M = I with two scalar blocks: every unit h with nonzero blocks has
        // scale exactly 1.
        let g = StructureGraph::scalar_blocks(2);
        let m = identity(2);
        let mut rng = rng_for(20, 0);
        for _ in 0..10 {
            let h = random_unit_vector(&mut rng, 2);
            let t = witness_scale(&g, &m, &h);
            assert!((t - 1.0).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn ascent_reaches_sigma_on_full_block() {
        let g = StructureGraph::full_block(2, 2);
        let m = CMat::from_row_slice(2, 2, &[cx(2.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(0.5, 0.0)]);
        let mut rng = rng_for(21, 0);
        let h0 = random_unit_vector(&mut rng, 2);
        let (t, _) = ascend(&g, &m, h0, 30, &mut rng);
        assert!((t - 2.0).abs() < 1e-6, "t = {t}");
    }
}
