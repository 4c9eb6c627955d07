//! Feasibility engine for structured Stein inequalities and the D-scaling
//! bisection built on it.
//!
//! The decision problem: does a structured positive definite scaling pair
//! `(X, Y)` generated by Hermitian blocks `Γ_k` exist with
//!
//! ```text
//!     F(Γ) = M* X(Γ) M − Y(Γ) + R ≺ 0
//! ```
//!
//! (`R` optional, Hermitian)? The engine minimizes `λ_max(F(Γ))` over the
//! trace-one spectraplex of `(Γ_1, …, Γ_K)` by projected subgradient with
//! Polyak-type steps; when the offset `R` is present its coefficient joins
//! the simplex as one more scalar block so the search stays homogeneous.
//!
//! Either side of the verdict carries an independently checkable
//! certificate. Feasible: a strictly PD scaling pair, re-verified by
//! Cholesky. Infeasible: a PSD trace-one witness `Υ` on the source space —
//! the running average of the top eigenprojectors of `F(Γ_t)` — whose
//! per-component compressions `Φ_k(Υ)` are all PSD; weak duality then rules
//! out every structured `Γ ⪰ 0` at once. An undecided outcome reports the
//! best margin reached and is never silently converted into a claim.

use crate::error::{Error, Result};
use crate::graph::{ScalingPair, StructureGraph};
use crate::linalg::{
    contains_nan, cx, hermitian_eigen, hermitian_part, identity, is_pd, op_norm,
    CMat, CVec,
};
use crate::seed::rng_for;

#[derive(Debug, Clone)]
pub struct SteinProblem {
    pub graph: StructureGraph,
    pub m: CMat,
    /// Optional Hermitian offset: feasibility of `M*XM − Y + R ≺ 0`.
    pub offset: Option<CMat>,
}

impl SteinProblem {
    pub fn new(graph: StructureGraph, m: CMat) -> Result<Self> {
        let (r, s) = (graph.range_dim(), graph.source_dim());
        if (m.nrows(), m.ncols()) != (r, s) {
            return Err(Error::ShapeMismatch(format!(
                "plant is {}x{}, layout wants rangeDim {} x sourceDim {}",
                m.nrows(),
                m.ncols(),
                r,
                s
            )));
        }
        Ok(SteinProblem { graph, m, offset: None })
    }

    pub fn with_offset(graph: StructureGraph, m: CMat, r: CMat) -> Result<Self> {
        let mut p = SteinProblem::new(graph, m)?;
        let s = p.graph.source_dim();
        if (r.nrows(), r.ncols()) != (s, s) {
            return Err(Error::ShapeMismatch(format!(
                "offset is {}x{}, expected sourceDim {} square",
                r.nrows(),
                r.ncols(),
                s
            )));
        }
        let defect = crate::linalg::hermitian_defect(&r);
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        p.offset = Some(hermitian_part(&r));
        Ok(p)
    }

    /// `F(Γ) = M*X(Γ)M − Y(Γ) + R` for a concrete scaling pair.
    pub fn stein_matrix(&self, pair: &ScalingPair) -> CMat {
        let mut f = self.m.adjoint() * pair.x_matrix() * &self.m - pair.y_matrix();
        if let Some(r) = &self.offset {
            f += r;
        }
        f
    }

    fn scale(&self) -> f64 {
        let mut s = op_norm(&self.m).powi(2);
        if let Some(r) = &self.offset {
            s += op_norm(r);
        }
        s.max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SteinOptions {
    /// Strictness margin: `≺ 0` means `λ_max ≤ −tol·scale`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Primal warm start (one Hermitian block per component).
    pub warm_start: Option<Vec<CMat>>,
    /// Dual warm start (PSD trace-one witness on the source space).
    pub dual_warm: Option<CMat>,
}

impl Default for SteinOptions {
    fn default() -> Self {
        SteinOptions { tol: 1e-8, max_iter: 5000, seed: 0, warm_start: None, dual_warm: None }
    }
}

#[derive(Debug, Clone)]
pub enum LmiVerdict {
    /// Strictly feasible scaling; `margin = −λ_max(F(Γ)) > 0`.
    Feasible { scaling: ScalingPair, margin: f64 },
    /// PSD trace-one witness with all compressions `⪰ −slack I`.
    Infeasible { upsilon: CMat, slack: f64 },
    Undecided { best_margin: f64, iterations: usize },
}

impl LmiVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LmiVerdict::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LmiVerdict::Infeasible { .. })
    }
}

/// Per-component compressions `Φ_k(Υ)` of a Hermitian `Υ` on the source
/// space: the multiplicity-space partial trace of `M*P_{R,k}M − P_{S,k}`
/// against `Υ`, oriented so that `Φ_k(hh*)` equals the quadratic form
/// `U[P_{R,k}Mh]*U[P_{R,k}Mh] − U[P_{S,k}h]*U[P_{S,k}h]`.
///
/// With that orientation the pairing against a scaling block reads
/// `tr(F(Γ)Υ) = Σ_k tr(Γ_kᵀ Φ_k(Υ))`; the transpose is harmless for
/// semidefiniteness tests since conjugation preserves the PSD cone.
pub fn compressions(g: &StructureGraph, m: &CMat, upsilon: &CMat) -> Result<Vec<CMat>> {
    let lay = g.layout();
    let (r, s) = (lay.range_dim(), lay.source_dim());
    if (m.nrows(), m.ncols()) != (r, s) {
        return Err(Error::ShapeMismatch("plant shape does not match layout".into()));
    }
    if (upsilon.nrows(), upsilon.ncols()) != (s, s) {
        return Err(Error::ShapeMismatch(format!(
            "witness is {}x{}, expected sourceDim {} square",
            upsilon.nrows(),
            upsilon.ncols(),
            s
        )));
    }
    let pushed = m * upsilon * m.adjoint();
    let mut out = Vec::with_capacity(g.num_components());
    for (k, c) in g.components().iter().enumerate() {
        let d = c.multiplicity;
        let (ro, so) = (lay.range_offset(k), lay.source_offset(k));
        let mut phi = CMat::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = cx(0.0, 0.0);
                for i in 0..c.n_ranges {
                    acc += pushed[(ro + i * d + b, ro + i * d + a)];
                }
                for j in 0..c.n_sources {
                    acc -= upsilon[(so + j * d + b, so + j * d + a)];
                }
                phi[(a, b)] = acc;
            }
        }
        out.push(hermitian_part(&phi));
    }
    Ok(out)
}

/// Independent re-verification of a feasible verdict: Cholesky of `−F(Γ)`
/// and of every `Γ_k − tol I`. Returns the margin `−λ_max(F(Γ))`.
pub fn verify_feasible(prob: &SteinProblem, pair: &ScalingPair, tol: f64) -> Result<f64> {
    if !pair.is_positive_definite(tol) {
        return Err(Error::Verification("scaling blocks are not PD with the required margin".into()));
    }
    let f = prob.stein_matrix(pair);
    if !is_pd(&f.scale(-1.0)) {
        return Err(Error::Verification("−F(Γ) failed its Cholesky factorization".into()));
    }
    let (vals, _) = hermitian_eigen(&f);
    Ok(-vals.last().copied().unwrap_or(0.0))
}

/// Independent re-verification of an infeasibility witness: `Υ` Hermitian
/// PSD with unit trace, every compression `⪰ −tol I`, the offset pairing
/// nonnegative, and the weak-duality identity spot-checked on random PSD
/// structured scalings. Returns the worst compression eigenvalue.
pub fn verify_infeasible(prob: &SteinProblem, upsilon: &CMat, tol: f64, seed: u64) -> Result<f64> {
    let scale = prob.scale();
    let tol_d = tol * scale;
    if crate::linalg::hermitian_defect(upsilon) > 1e-10 {
        return Err(Error::Verification("witness is not Hermitian".into()));
    }
    let (uvals, _) = hermitian_eigen(upsilon);
    if uvals.first().copied().unwrap_or(0.0) < -1e-10 {
        return Err(Error::Verification("witness is not PSD".into()));
    }
    let trace: f64 = upsilon.diagonal().iter().map(|z| z.re).sum();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(Error::Verification(format!("witness trace {trace} is not 1")));
    }
    let phis = compressions(&prob.graph, &prob.m, upsilon)?;
    let mut worst = f64::INFINITY;
    for phi in &phis {
        let (vals, _) = hermitian_eigen(phi);
        worst = worst.min(vals.first().copied().unwrap_or(0.0));
    }
    if let Some(r) = &prob.offset {
        worst = worst.min((r * upsilon).trace().re);
    }
    if worst < -tol_d {
        return Err(Error::Verification(format!(
            "witness compression has eigenvalue {worst:.3e} below −{tol_d:.3e}"
        )));
    }
    // Weak duality on random PSD structured scalings: the pairing identity
    // holds exactly and the value stays above −tol·Σ tr Γ_k.
    let mut rng = rng_for(seed, 0xDA7A);
    for _ in 0..20 {
        let gammas: Vec<CMat> = prob
            .graph
            .components()
            .iter()
            .map(|c| {
                let a = crate::linalg::random_complex_matrix(&mut rng, c.multiplicity, c.multiplicity);
                &a * a.adjoint()
            })
            .collect();
        let pair = ScalingPair::new(prob.graph.clone(), gammas.clone())?;
        let mut f = prob.m.adjoint() * pair.x_matrix() * &prob.m - pair.y_matrix();
        if let Some(r) = &prob.offset {
            f += r;
        }
        let lhs = (&f * upsilon).trace().re;
        let mut rhs = 0.0;
        let mut trsum = 0.0;
        for (gam, phi) in gammas.iter().zip(&phis) {
            rhs += (gam.transpose() * phi).trace().re;
            trsum += gam.trace().re;
        }
        if let Some(r) = &prob.offset {
            rhs += (r * upsilon).trace().re;
        }
        if (lhs - rhs).abs() > 1e-8 * scale * trsum.max(1.0) {
            return Err(Error::Verification(format!(
                "weak-duality pairing identity violated: {lhs:.6e} vs {rhs:.6e}"
            )));
        }
        if lhs < -2.0 * tol_d * trsum {
            return Err(Error::Verification(format!(
                "weak-duality bound violated: tr(F(Γ)Υ) = {lhs:.6e} for tr Σ Γ = {trsum:.6e}"
            )));
        }
    }
    Ok(worst)
}

// Internal simplex state: one Hermitian block per component plus, when an
// offset is present, a scalar weight for it (homogenization).
struct SimplexState {
    gammas: Vec<CMat>,
    tau: Option<f64>,
}

impl SimplexState {
    fn uniform(g: &StructureGraph, with_tau: bool) -> Self {
        let total: usize = g.components().iter().map(|c| c.multiplicity).sum::<usize>() + usize::from(with_tau);
        let w = 1.0 / total as f64;
        SimplexState {
            gammas: g.components().iter().map(|c| identity(c.multiplicity).scale(w)).collect(),
            tau: with_tau.then_some(w),
        }
    }

    fn from_warm(g: &StructureGraph, warm: &[CMat], with_tau: bool) -> Option<Self> {
        if warm.len() != g.num_components() {
            return None;
        }
        for (c, w) in g.components().iter().zip(warm) {
            if (w.nrows(), w.ncols()) != (c.multiplicity, c.multiplicity) {
                return None;
            }
        }
        let mut s = SimplexState {
            gammas: warm.iter().map(hermitian_part).collect(),
            tau: with_tau.then_some(1.0 / (g.source_dim() + 1) as f64),
        };
        s.project();
        Some(s)
    }

    /// Euclidean projection onto `{Γ_k ⪰ 0, τ ≥ 0, Σ tr Γ_k + τ = 1}`:
    /// project the joint spectrum onto the probability simplex, keeping each
    /// block's eigenbasis.
    fn project(&mut self) {
        let mut decomps = Vec::with_capacity(self.gammas.len());
        let mut spectrum = Vec::new();
        for g in &self.gammas {
            let (vals, vecs) = hermitian_eigen(g);
            spectrum.extend_from_slice(&vals);
            decomps.push(vecs);
        }
        if let Some(t) = self.tau {
            spectrum.push(t);
        }
        let projected = project_simplex(&spectrum);
        let mut idx = 0;
        for (g, vecs) in self.gammas.iter_mut().zip(&decomps) {
            let d = g.nrows();
            let diag = CMat::from_diagonal(&CVec::from_iterator(
                d,
                projected[idx..idx + d].iter().map(|&l| cx(l, 0.0)),
            ));
            *g = vecs * diag * vecs.adjoint();
            idx += d;
        }
        if let Some(t) = &mut self.tau {
            *t = projected[idx];
        }
    }

    fn step(&mut self, dirs: &[CMat], dtau: f64, alpha: f64) {
        for (g, d) in self.gammas.iter_mut().zip(dirs) {
            *g -= d.scale(alpha);
        }
        if let Some(t) = &mut self.tau {
            *t -= alpha * dtau;
        }
        self.project();
    }
}

/// Euclidean projection of a real vector onto `{x ≥ 0, Σ x = 1}`.
fn project_simplex(u: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = u.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (j, &uj) in sorted.iter().enumerate() {
        acc += uj;
        let t = (acc - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
            rho = j + 1;
        }
    }
    if rho == 0 {
        // All mass collapsed; fall back to uniform.
        return vec![1.0 / u.len() as f64; u.len()];
    }
    u.iter().map(|&x| (x - theta).max(0.0)).collect()
}

struct Engine<'a> {
    prob: &'a SteinProblem,
    scale: f64,
    /// Gate for attempting a feasible exit.
    tol_f: f64,
    /// Acceptance floor for witness slack: machine-level, scale-aware. A
    /// looser floor would let near-feasible instances masquerade as
    /// infeasible inside the tolerance band.
    dual_floor: f64,
}

impl<'a> Engine<'a> {
    fn f_matrix(&self, s: &SimplexState) -> CMat {
        let pair = ScalingPair::new_unchecked(self.prob.graph.clone(), s.gammas.clone());
        let mut f = self.prob.m.adjoint() * pair.x_matrix() * &self.prob.m - pair.y_matrix();
        if let (Some(r), Some(t)) = (&self.prob.offset, s.tau) {
            f += r.scale(t);
        }
        f
    }

    /// Top eigenvalue of `F` and the averaged projector over the tied top
    /// eigenspace (the subgradient generator).
    fn top_projector(&self, f: &CMat) -> (f64, CMat) {
        let (vals, vecs) = hermitian_eigen(f);
        let n = vals.len();
        let lam = vals[n - 1];
        let tie = 1e-9 * self.scale;
        let mut count = 0;
        let mut p = CMat::zeros(n, n);
        for i in (0..n).rev() {
            if lam - vals[i] <= tie {
                let v = vecs.column(i);
                p += &v * v.adjoint();
                count += 1;
            } else {
                break;
            }
        }
        (lam, p.scale(1.0 / count as f64))
    }

    /// Does `Υ` satisfy the witness conditions up to `tol_pass`?
    fn witness_ok(&self, upsilon: &CMat, tol_pass: f64) -> Option<f64> {
        let phis = compressions(&self.prob.graph, &self.prob.m, upsilon).ok()?;
        let mut worst = f64::INFINITY;
        for phi in &phis {
            let (vals, _) = hermitian_eigen(phi);
            worst = worst.min(vals.first().copied().unwrap_or(0.0));
        }
        if let Some(r) = &self.prob.offset {
            worst = worst.min((r * upsilon).trace().re);
        }
        (worst >= -tol_pass).then_some(worst)
    }

    /// Blend toward the uniform point until the scaling is strictly PD, then
    /// undo the homogenization (divide by τ, or rescale when no offset).
    fn strictify(&self, s: &SimplexState, lam: f64, b_uniform: f64, tol: f64) -> Option<(ScalingPair, f64)> {
        let m0 = -lam;
        let denom = 2.0 * (b_uniform.max(0.0) + m0);
        let theta_star = if denom > 0.0 { (m0 / denom).min(0.45) } else { 0.45 };
        let uniform = SimplexState::uniform(&self.prob.graph, self.prob.offset.is_some());
        for &shrink in &[1.0, 0.25, 0.0625, 0.0] {
            let theta = theta_star * shrink;
            let mut gammas: Vec<CMat> = s
                .gammas
                .iter()
                .zip(&uniform.gammas)
                .map(|(g, u)| g.scale(1.0 - theta) + u.scale(theta))
                .collect();
            let margin_scale;
            match (self.prob.offset.is_some(), s.tau) {
                (true, Some(t)) => {
                    let tau = (1.0 - theta) * t + theta * uniform.tau.unwrap();
                    if tau < 1e-300 {
                        continue;
                    }
                    for g in &mut gammas {
                        *g = g.scale(1.0 / tau);
                    }
                    margin_scale = 1.0 / tau;
                }
                _ => {
                    // Homogeneous problem: scale up until the PD floor clears.
                    let total: usize = self.prob.graph.components().iter().map(|c| c.multiplicity).sum();
                    let floor = theta / total.max(1) as f64;
                    let c = if floor > 0.0 { (4.0 * tol / floor).max(1.0) } else { 1.0 };
                    for g in &mut gammas {
                        *g = g.scale(c);
                    }
                    margin_scale = c;
                }
            }
            let _ = margin_scale;
            let pair = ScalingPair::new_unchecked(self.prob.graph.clone(), gammas);
            if !pair.is_positive_definite(tol) {
                continue;
            }
            if let Ok(margin) = verify_feasible(self.prob, &pair, tol) {
                if margin > 0.0 {
                    return Some((pair, margin));
                }
            }
        }
        None
    }
}

/// Decide the structured Stein inequality.
pub fn solve_stein(prob: &SteinProblem, opts: &SteinOptions) -> Result<LmiVerdict> {
    if contains_nan(&prob.m) {
        return Err(Error::Numerical("plant contains non-finite entries".into()));
    }
    let g = &prob.graph;
    let scale = prob.scale();
    let tol_f = opts.tol.max(1e-12 * scale);
    let dual_floor = 1e-11 * scale;
    let engine = Engine { prob, scale, tol_f, dual_floor };
    let with_tau = prob.offset.is_some();
    let n_s = g.source_dim();

    // Cheap witness candidates first: the top right-singular projector
    // (pure-gain instances), the dominant eigenvector projector (spectral
    // instances), any dual warm start, and a few rank-one ascent probes.
    {
        let mut candidates: Vec<CMat> = Vec::new();
        if let Some(w) = &opts.dual_warm {
            candidates.push(hermitian_part(w));
        }
        let svd = prob.m.clone().svd(false, true);
        if let Some(vt) = svd.v_t {
            let v = vt.row(0).adjoint();
            candidates.push(&v * v.adjoint());
        }
        if prob.m.nrows() == prob.m.ncols() {
            if let Some((_, v)) = crate::linalg::top_eigenpair(&prob.m) {
                candidates.push(&v * v.adjoint());
            }
        }
        if prob.offset.is_none() {
            let mut rng = rng_for(opts.seed, 0x01AD);
            for _ in 0..3 {
                let h0 = crate::linalg::random_unit_vector(&mut rng, n_s);
                let (t, h) = crate::witness::ascend(g, &prob.m, h0, 24, &mut rng);
                if t >= 1.0 - 1e-12 {
                    candidates.push(&h * h.adjoint());
                }
            }
        }
        for cand in candidates {
            if let Some(worst) = engine.witness_ok(&cand, dual_floor) {
                if verify_infeasible(prob, &cand, opts.tol, opts.seed).is_ok() {
                    return Ok(LmiVerdict::Infeasible { upsilon: cand, slack: worst });
                }
            }
        }
    }

    // Primal candidate for a single square block: the Stein series
    // Σ_j (M*)^j M^j, summed by doubling, converges exactly when the block
    // spectral radius is below one and then solves M*ΓM − Γ = −I.
    if prob.offset.is_none() && g.num_components() == 1 {
        let c = &g.components()[0];
        if c.n_sources == 1 && c.n_ranges == 1 {
            if let Some(gamma) = stein_series(&prob.m) {
                let pair = ScalingPair::new_unchecked(g.clone(), vec![gamma]);
                if let Ok(margin) = verify_feasible(prob, &pair, opts.tol) {
                    if margin > 0.0 {
                        return Ok(LmiVerdict::Feasible { scaling: pair, margin });
                    }
                }
            }
        }
    }

    let mut state = opts
        .warm_start
        .as_ref()
        .and_then(|w| SimplexState::from_warm(g, w, with_tau))
        .unwrap_or_else(|| SimplexState::uniform(g, with_tau));
    let b_uniform = {
        let uni = SimplexState::uniform(g, with_tau);
        let (vals, _) = hermitian_eigen(&engine.f_matrix(&uni));
        vals.last().copied().unwrap_or(0.0)
    };

    let mut dual_sum = CMat::zeros(n_s, n_s);
    let mut dual_count = 0usize;
    let mut best_margin = f64::INFINITY;
    // Adaptive Polyak level control.
    let mut delta = 0.25 * scale;
    let mut since_progress = 0usize;
    let mut level_best = f64::INFINITY;
    let mut stall = 0usize;
    let mut iterations = 0usize;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let f = engine.f_matrix(&state);
        if contains_nan(&f) {
            return Err(Error::Numerical("iteration produced non-finite entries".into()));
        }
        let (lam, proj) = engine.top_projector(&f);
        if lam < best_margin - 1e-14 * scale {
            best_margin = lam;
            stall = 0;
        } else {
            stall += 1;
        }

        if lam < -engine.tol_f {
            if let Some((pair, margin)) = engine.strictify(&state, lam, b_uniform, opts.tol) {
                return Ok(LmiVerdict::Feasible { scaling: pair, margin });
            }
        }

        dual_sum += &proj;
        dual_count += 1;

        if it % 8 == 7 {
            for cand in [dual_sum.scale(1.0 / dual_count as f64), proj.clone()] {
                if let Some(worst) = engine.witness_ok(&cand, dual_floor) {
                    if verify_infeasible(prob, &cand, opts.tol, opts.seed).is_ok() {
                        return Ok(LmiVerdict::Infeasible { upsilon: cand, slack: worst });
                    }
                }
            }
        }

        // Clearly infeasible and no longer improving: hand over to the
        // dual polish instead of burning the rest of the budget.
        if stall > 400 && best_margin > 10.0 * engine.tol_f {
            break;
        }

        // Subgradient blocks: conj(Φ_k(P)) so that movement matches the
        // pairing tr(Γᵀ Φ).
        let phis = compressions(g, &prob.m, &proj)?;
        let dirs: Vec<CMat> = phis.iter().map(|p| p.conjugate()).collect();
        let dtau = prob.offset.as_ref().map(|r| (r * &proj).trace().re).unwrap_or(0.0);
        let gnorm2: f64 = dirs.iter().map(|d| d.norm_squared()).sum::<f64>() + dtau * dtau;
        if gnorm2 < 1e-300 {
            break;
        }

        // Polyak step toward an adaptive level below the best value seen.
        if lam < level_best - 0.5 * delta {
            level_best = lam;
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress > 40 {
                delta = (delta * 0.5).max(engine.tol_f);
                since_progress = 0;
            }
        }
        let level = (level_best.min(lam) - delta).min(-2.0 * engine.tol_f);
        let alpha = ((lam - level) / gnorm2).clamp(0.0, 4.0 / gnorm2.sqrt());
        state.step(&dirs, dtau, alpha);
    }

    // Dual polish: monotone Frank-Wolfe ascent of the worst compression
    // eigenvalue over density matrices, from the averaged iterate.
    let init = if dual_count > 0 {
        dual_sum.scale(1.0 / dual_count as f64)
    } else {
        identity(n_s).scale(1.0 / n_s as f64)
    };
    if let Some((ups, worst)) = dual_polish(&engine, init, opts.max_iter / 4 + 200, dual_floor) {
        if verify_infeasible(prob, &ups, opts.tol, opts.seed).is_ok() {
            return Ok(LmiVerdict::Infeasible { upsilon: ups, slack: worst });
        }
    }

    Ok(LmiVerdict::Undecided { best_margin, iterations })
}

/// Maximize `min_k λ_min(Φ_k(Υ))` over PSD trace-one `Υ`, monotonically:
/// Frank-Wolfe steps toward the best rank-one vertex of the tie-averaged
/// supergradient, with a halving line search on the true objective.
fn dual_polish(engine: &Engine, init: CMat, iters: usize, tol_pass: f64) -> Option<(CMat, f64)> {
    let g = &engine.prob.graph;
    let mut upsilon = hermitian_part(&init);
    project_density(&mut upsilon);

    let objective = |u: &CMat| -> Option<f64> {
        let phis = compressions(g, &engine.prob.m, u).ok()?;
        let mut worst = f64::INFINITY;
        for phi in &phis {
            let (vals, _) = hermitian_eigen(phi);
            worst = worst.min(vals.first().copied().unwrap_or(0.0));
        }
        if let Some(r) = &engine.prob.offset {
            worst = worst.min((r * u).trace().re);
        }
        Some(worst)
    };

    let mut j = objective(&upsilon)?;
    for _ in 0..iters {
        if j >= -tol_pass {
            return Some((upsilon, j));
        }
        // Tie-averaged supergradient across all near-worst eigenpairs.
        let phis = compressions(g, &engine.prob.m, &upsilon).ok()?;
        let tie = (j.abs() * 1e-3).max(1e-12 * engine.scale);
        let mut dir = CMat::zeros(upsilon.nrows(), upsilon.ncols());
        let mut hits = 0usize;
        for (k, phi) in phis.iter().enumerate() {
            let (vals, vecs) = hermitian_eigen(phi);
            for (i, &v) in vals.iter().enumerate() {
                if v - j <= tie {
                    let w = vecs.column(i).into_owned();
                    dir += single_block_form(g, &engine.prob.m, k, &(&w * w.adjoint()).conjugate());
                    hits += 1;
                }
            }
        }
        if let Some(r) = &engine.prob.offset {
            if (r * &upsilon).trace().re - j <= tie {
                dir += r;
                hits += 1;
            }
        }
        if hits == 0 || dir.norm() < 1e-300 {
            return None;
        }
        // Frank-Wolfe vertex: the top eigenvector of the ascent direction.
        let (dvals, dvecs) = hermitian_eigen(&dir);
        let u = dvecs.column(dvals.len() - 1).into_owned();
        let vertex = &u * u.adjoint();
        let mut advanced = false;
        let mut step = 1.0f64;
        for _ in 0..24 {
            let cand = upsilon.scale(1.0 - step) + vertex.scale(step);
            if let Some(jc) = objective(&cand) {
                if jc > j {
                    upsilon = cand;
                    j = jc;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    (j >= -tol_pass).then_some((upsilon, j))
}

/// Doubled Stein series `Σ_{j<2^k} (M*)^j M^j`: `S ← S + P*SP`, `P ← P²`.
/// Diverges (and returns `None`) when `ρ(M) ≥ 1`.
fn stein_series(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut s = identity(n);
    let mut p = m.clone();
    for _ in 0..64 {
        let pn = p.norm();
        if !pn.is_finite() || pn > 1e9 {
            return None;
        }
        if pn < 1e-300 {
            break;
        }
        let snew = &s + p.adjoint() * &s * &p;
        let pnew = &p * &p;
        if (&snew - &s).norm() <= 1e-16 * s.norm() {
            s = snew;
            break;
        }
        s = snew;
        p = pnew;
        if s.norm() > 1e12 {
            return None;
        }
    }
    if contains_nan(&s) {
        return None;
    }
    Some(hermitian_part(&s))
}

/// `M* emb_{R,k}(I ⊗ W) M − emb_{S,k}(I ⊗ W)` for a single component: the
/// adjoint of the compression map at block `k`.
fn single_block_form(g: &StructureGraph, m: &CMat, k: usize, w: &CMat) -> CMat {
    let lay = g.layout();
    let c = &g.components()[k];
    let d = c.multiplicity;
    let mut x = CMat::zeros(lay.range_dim(), lay.range_dim());
    let blk = identity(c.n_ranges).kronecker(w);
    x.view_mut((lay.range_offset(k), lay.range_offset(k)), (blk.nrows(), blk.ncols()))
        .copy_from(&blk);
    let mut y = CMat::zeros(lay.source_dim(), lay.source_dim());
    let blk = identity(c.n_sources).kronecker(w);
    y.view_mut((lay.source_offset(k), lay.source_offset(k)), (blk.nrows(), blk.ncols()))
        .copy_from(&blk);
    let _ = d;
    m.adjoint() * x * m - y
}

/// Project a Hermitian matrix onto `{Υ ⪰ 0, tr Υ = 1}` in place.
fn project_density(u: &mut CMat) {
    let (vals, vecs) = hermitian_eigen(u);
    let proj = project_simplex(&vals);
    let d = CMat::from_diagonal(&CVec::from_iterator(proj.len(), proj.iter().map(|&l| cx(l, 0.0))));
    *u = &vecs * d * vecs.adjoint();
}

#[derive(Debug, Clone)]
pub struct BisectOptions {
    pub rel_tol: f64,
    pub gamma_max: Option<f64>,
    pub stein: SteinOptions,
    pub max_steps: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions { rel_tol: 1e-5, gamma_max: None, stein: SteinOptions::default(), max_steps: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct MuHatResult {
    /// Interval midpoint once the bracket is narrower than `rel_tol`.
    pub mu_hat: f64,
    pub lower: f64,
    pub upper: f64,
    /// `(γ, Γ)` from the last verified feasible level, when one was solved.
    pub certificate: Option<(f64, ScalingPair)>,
    pub warnings: Vec<String>,
}

/// D-scaling upper bound by bisection: `μ̂ < γ` iff the Stein inequality for
/// `M/γ` is feasible. Initial bracket `[0, σ̄(M)(1+1e-9)]` since the identity
/// scaling witnesses feasibility above the operator norm.
pub fn mu_hat_bisect(g: &StructureGraph, m: &CMat, opts: &BisectOptions) -> Result<MuHatResult> {
    let sigma = op_norm(m);
    if sigma < 1e-14 {
        return Ok(MuHatResult {
            mu_hat: 0.0,
            lower: 0.0,
            upper: 0.0,
            certificate: Some((0.0, ScalingPair::identity(g))),
            warnings: Vec::new(),
        });
    }
    let mut lo = 0.0f64;
    let mut hi = opts.gamma_max.unwrap_or(sigma * (1.0 + 1e-9));
    let mut cert: Option<(f64, ScalingPair)> = None;
    let mut warnings = Vec::new();
    let mut warm: Option<Vec<CMat>> = None;
    let mut dual_warm: Option<CMat> = None;
    let abs_floor = 1e-13 * sigma;

    for _ in 0..opts.max_steps {
        if hi - lo <= (opts.rel_tol * hi).max(abs_floor) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let scaled = m.scale(1.0 / mid);
        let prob = SteinProblem::new(g.clone(), scaled)?;
        let mut sopts = opts.stein.clone();
        sopts.warm_start = warm.clone();
        sopts.dual_warm = dual_warm.clone();
        let verdict = solve_stein(&prob, &sopts)?;
        match verdict {
            LmiVerdict::Feasible { scaling, .. } => {
                warm = Some(scaling.gammas().to_vec());
                cert = Some((mid, scaling));
                hi = mid;
            }
            LmiVerdict::Infeasible { upsilon, .. } => {
                dual_warm = Some(upsilon);
                lo = mid;
            }
            LmiVerdict::Undecided { best_margin, .. } => {
                warnings.push(format!(
                    "undecided at gamma {mid:.8e} (best margin {best_margin:.3e}); bracketing conservatively"
                ));
                lo = mid;
            }
        }
    }

    Ok(MuHatResult { mu_hat: 0.5 * (lo + hi), lower: lo, upper: hi, certificate: cert, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Component, StructureGraph};
    use crate::linalg::random_complex_matrix;

    fn diag2(a: f64, b: f64) -> CMat {
        CMat::from_row_slice(2, 2, &[cx(a, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(b, 0.0)])
    }

    #[test]
    fn zero_plant_is_feasible() {
        let g = StructureGraph::scalar_blocks(2);
        let prob = SteinProblem::new(g, CMat::zeros(2, 2)).unwrap();
        match solve_stein(&prob, &SteinOptions::default()).unwrap() {
            LmiVerdict::Feasible { margin, scaling } => {
                assert!(margin > 0.1, "margin {margin}");
                assert!(scaling.is_positive_definite(1e-8));
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn expansive_full_block_is_infeasible_with_svd_witness() {
        let g = StructureGraph::full_block(2, 2);
        let m = diag2(2.0, 0.5);
        // Oracle claim: the top right-singular-vector projector has
        // compression sigma^2 - 1 = 3.
        let v = CVec::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]);
        let ups = &v * v.adjoint();
        let phis = compressions(&g, &m, &ups).unwrap();
        assert_eq!(phis[0].nrows(), 1);
        assert!((phis[0][(0, 0)].re - 3.0).abs() < 1e-12);

        let prob = SteinProblem::new(g, m).unwrap();
        match solve_stein(&prob, &SteinOptions::default()).unwrap() {
            LmiVerdict::Infeasible { upsilon, .. } => {
                verify_infeasible(&prob, &upsilon, 1e-8, 0).unwrap();
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn nilpotent_two_scalars_feasible_at_any_gamma() {
        let g = StructureGraph::scalar_blocks(2);
        let m = CMat::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        for gamma in [0.5, 2.0, 17.0] {
            let prob = SteinProblem::new(g.clone(), m.scale(1.0 / gamma)).unwrap();
            let verdict = solve_stein(&prob, &SteinOptions::default()).unwrap();
            assert!(verdict.is_feasible(), "gamma {gamma}: {verdict:?}");
        }
    }

    #[test]
    fn compression_of_basis_vector_matches_direct_formula() {
        let mut rng = crate::seed::rng_for(31, 0);
        let g = StructureGraph::scalar_blocks(3);
        let m = random_complex_matrix(&mut rng, 3, 3);
        let e1 = CVec::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        let phis = compressions(&g, &m, &(&e1 * e1.adjoint())).unwrap();
        // Φ_1 = ‖P_{R,1} M e1‖² − 1, Φ_k = ‖P_{R,k} M e1‖² for k ≠ 1
        let me1 = &m * &e1;
        assert!((phis[0][(0, 0)].re - (me1[0].norm_sqr() - 1.0)).abs() < 1e-12);
        assert!((phis[1][(0, 0)].re - me1[1].norm_sqr()).abs() < 1e-12);

        // zero witness -> zero compressions; linearity on a random pair
        let z = compressions(&g, &m, &CMat::zeros(3, 3)).unwrap();
        assert!(z.iter().all(|p| p.norm() == 0.0));
        let u1 = crate::linalg::random_density(&mut rng, 3);
        let u2 = crate::linalg::random_density(&mut rng, 3);
        let combo = u1.scale(0.3) + u2.scale(0.7);
        let pc = compressions(&g, &m, &combo).unwrap();
        let p1 = compressions(&g, &m, &u1).unwrap();
        let p2 = compressions(&g, &m, &u2).unwrap();
        for k in 0..3 {
            assert!((&pc[k] - (p1[k].scale(0.3) + p2[k].scale(0.7))).norm() < 1e-12);
        }
    }

    #[test]
    fn bisect_full_block_matches_operator_norm() {
        let g = StructureGraph::full_block(2, 2);
        let m = diag2(2.0, 0.5);
        let res = mu_hat_bisect(&g, &m, &BisectOptions::default()).unwrap();
        assert!((res.mu_hat - 2.0).abs() <= 1e-4 * 2.0, "mu_hat {}", res.mu_hat);
    }

    #[test]
    fn bisect_repeated_scalar_matches_spectral_radius() {
        let g = StructureGraph::repeated_scalar(2);
        let m = CMat::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(4.0, 0.0), cx(0.25, 0.0), cx(0.0, 0.0)]);
        let res = mu_hat_bisect(&g, &m, &BisectOptions::default()).unwrap();
        assert!((res.mu_hat - 1.0).abs() <= 1e-4, "mu_hat {}", res.mu_hat);
    }

    #[test]
    fn bisect_zero_plant() {
        let g = StructureGraph::scalar_blocks(2);
        let res = mu_hat_bisect(&g, &CMat::zeros(2, 2), &BisectOptions::default()).unwrap();
        assert_eq!(res.mu_hat, 0.0);
    }

    #[test]
    fn bisect_nilpotent_goes_to_zero() {
        let g = StructureGraph::scalar_blocks(2);
        let m = CMat::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)]);
        let res = mu_hat_bisect(&g, &m, &BisectOptions::default()).unwrap();
        // The infimum is 0 but unattained; margins shrink like gamma^2, so
        // the bisection bottoms out near the fourth root of machine noise.
        assert!(res.mu_hat < 5e-3, "mu_hat {}", res.mu_hat);
    }

    #[test]
    fn offset_problem_feasible_and_infeasible() {
        // F = -Y + R with R = diag(1, -2) on one full 2-block: need Y ≻ R,
        // feasible (scale up). With R = I and M = I at gamma 0.5 infeasible.
        let g = StructureGraph::full_block(2, 2);
        let r = diag2(1.0, -2.0);
        let prob = SteinProblem::with_offset(g.clone(), CMat::zeros(2, 2), r).unwrap();
        let verdict = solve_stein(&prob, &SteinOptions::default()).unwrap();
        assert!(verdict.is_feasible(), "{verdict:?}");
        if let LmiVerdict::Feasible { scaling, .. } = &verdict {
            assert!(verify_feasible(&prob, scaling, 1e-8).unwrap() > 0.0);
        }

        let prob = SteinProblem::with_offset(g, identity(2) * cx(2.0, 0.0), identity(2)).unwrap();
        let verdict = solve_stein(&prob, &SteinOptions::default()).unwrap();
        assert!(verdict.is_infeasible(), "{verdict:?}");
    }

    #[test]
    fn monotone_in_gamma() {
        let mut rng = crate::seed::rng_for(37, 0);
        let g = StructureGraph::new(vec![
            Component::new("p1", 1, 1, 1),
            Component::new("p2", 2, 1, 1),
        ])
        .unwrap();
        let m = random_complex_matrix(&mut rng, g.range_dim(), g.source_dim());
        let res = mu_hat_bisect(&g, &m, &BisectOptions::default()).unwrap();
        let gamma = res.mu_hat * 1.2 + 1e-6;
        let prob = SteinProblem::new(g.clone(), m.scale(1.0 / gamma)).unwrap();
        assert!(solve_stein(&prob, &SteinOptions::default()).unwrap().is_feasible());
        let prob = SteinProblem::new(g, m.scale(1.0 / (2.0 * gamma))).unwrap();
        assert!(solve_stein(&prob, &SteinOptions::default()).unwrap().is_feasible());
    }
}
