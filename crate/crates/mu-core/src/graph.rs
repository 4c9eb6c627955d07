//! Admissible uncertainty graphs and the block machinery hanging off them.
//!
//! A structure graph is a finite bipartite graph whose connected components
//! are complete bipartite; component `k` has `n_k` source vertices, `m_k`
//! range vertices and a multiplicity dimension `d_k`. The edge set is
//! therefore redundant and the graph is specified directly by the
//! `(n_k, m_k, d_k)` triples.
//!
//! Index conventions, fixed once for every module:
//!
//! * base source space `⊕_k C^{n_k} ⊗ C^{d_k}`, index `(k, i, a)` at
//!   `source_offset_k + i*d_k + a` (multiplicity fastest);
//! * base range space likewise with `(k, j, b)`;
//! * enhancement level `q >= 1` sits outermost *within each component*:
//!   index `(k, α, i, a)` at `q*source_offset_k + α*n_k*d_k + i*d_k + a`.
//!
//! A structured perturbation maps the range space to the source space,
//! `Δ = diag_k (W_k ⊗ I_{d_k})` with `W_k` of shape `(n_k q) x (m_k q)`.
//! A scaling pair `(X, Y)` is generated by one Hermitian `Γ_k` per component,
//! `X = ⊕_k I_{m_k} ⊗ Γ_k` on the range space and `Y = ⊕_k I_{n_k} ⊗ Γ_k` on
//! the source space; these are exactly the pairs with `ΔX = YΔ` for every
//! structured `Δ`.

use crate::error::{Error, Result};
use crate::linalg::{cx, hermitian_defect, hermitian_part, identity, op_norm, CMat, CVec};

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub n_sources: usize,
    pub n_ranges: usize,
    pub multiplicity: usize,
}

impl Component {
    pub fn new(name: impl Into<String>, n_sources: usize, n_ranges: usize, multiplicity: usize) -> Self {
        Component { name: name.into(), n_sources, n_ranges, multiplicity }
    }

    /// Repeated-scalar shaped: one source, one range, multiplicity >= 2.
    pub fn is_scalar_type(&self) -> bool {
        self.n_sources == 1 && self.n_ranges == 1 && self.multiplicity >= 2
    }

    /// Full-block shaped: multiplicity one, any vertex counts.
    pub fn is_full_type(&self) -> bool {
        self.multiplicity == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureGraph {
    components: Vec<Component>,
}

impl StructureGraph {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidGraph("component list is empty".into()));
        }
        for c in &components {
            if c.n_sources == 0 || c.n_ranges == 0 || c.multiplicity == 0 {
                return Err(Error::InvalidGraph(format!(
                    "component '{}' has a zero count (sources {}, ranges {}, multiplicity {})",
                    c.name, c.n_sources, c.n_ranges, c.multiplicity
                )));
            }
            if c.name.is_empty() {
                return Err(Error::InvalidGraph("component with empty name".into()));
            }
        }
        for (i, c) in components.iter().enumerate() {
            if components[..i].iter().any(|c2| c2.name == c.name) {
                return Err(Error::InvalidGraph(format!("duplicate component name '{}'", c.name)));
            }
        }
        Ok(StructureGraph { components })
    }

    /// Single full block of shape `n x m`.
    pub fn full_block(n: usize, m: usize) -> Self {
        StructureGraph::new(vec![Component::new("full", n, m, 1)]).expect("valid")
    }

    /// Single repeated-scalar block `δ I_d`.
    pub fn repeated_scalar(d: usize) -> Self {
        StructureGraph::new(vec![Component::new("scalar", 1, 1, d)]).expect("valid")
    }

    /// `f` independent scalar blocks (diagonal uncertainty).
    pub fn scalar_blocks(f: usize) -> Self {
        let comps = (0..f).map(|k| Component::new(format!("p{}", k + 1), 1, 1, 1)).collect();
        StructureGraph::new(comps).expect("valid")
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn source_dim(&self) -> usize {
        self.components.iter().map(|c| c.n_sources * c.multiplicity).sum()
    }

    pub fn range_dim(&self) -> usize {
        self.components.iter().map(|c| c.n_ranges * c.multiplicity).sum()
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self)
    }

    /// Append one full block `(n = in_dim, m = out_dim, d = 1)`; used to fold
    /// a bounded-real condition into a structured singular value test.
    pub fn augment_with_full_block(&self, in_dim: usize, out_dim: usize) -> Result<StructureGraph> {
        let mut comps = self.components.clone();
        let mut name = format!("aug{}", comps.len());
        while comps.iter().any(|c| c.name == name) {
            name.push('_');
        }
        comps.push(Component::new(name, in_dim, out_dim, 1));
        StructureGraph::new(comps)
    }

    /// Prepend a state block `(1, 1, dim)` carrying a full Hermitian scaling.
    pub fn prepend_state_block(&self, dim: usize) -> Result<StructureGraph> {
        let mut name = "state".to_string();
        while self.components.iter().any(|c| c.name == name) {
            name.push('_');
        }
        let mut comps = vec![Component::new(name, 1, 1, dim)];
        comps.extend(self.components.iter().cloned());
        StructureGraph::new(comps)
    }

    /// Edges `(component, source vertex, range vertex)` in canonical order.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (k, c) in self.components.iter().enumerate() {
            for i in 0..c.n_sources {
                for j in 0..c.n_ranges {
                    out.push((k, i, j));
                }
            }
        }
        out
    }
}

/// Offset tables realizing the canonical embeddings as column selections.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    comps: Vec<CompLayout>,
    source_dim: usize,
    range_dim: usize,
}

#[derive(Debug, Clone)]
struct CompLayout {
    source_offset: usize,
    range_offset: usize,
    n: usize,
    m: usize,
    d: usize,
}

impl BlockLayout {
    fn new(g: &StructureGraph) -> Self {
        let mut comps = Vec::with_capacity(g.num_components());
        let (mut so, mut ro) = (0usize, 0usize);
        for c in g.components() {
            comps.push(CompLayout {
                source_offset: so,
                range_offset: ro,
                n: c.n_sources,
                m: c.n_ranges,
                d: c.multiplicity,
            });
            so += c.n_sources * c.multiplicity;
            ro += c.n_ranges * c.multiplicity;
        }
        BlockLayout { comps, source_dim: so, range_dim: ro }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn range_dim(&self) -> usize {
        self.range_dim
    }

    pub fn source_offset(&self, k: usize) -> usize {
        self.comps[k].source_offset
    }

    pub fn range_offset(&self, k: usize) -> usize {
        self.comps[k].range_offset
    }

    pub fn source_extent(&self, k: usize) -> usize {
        self.comps[k].n * self.comps[k].d
    }

    pub fn range_extent(&self, k: usize) -> usize {
        self.comps[k].m * self.comps[k].d
    }

    /// Embedding of the vertex space `C^{d_k}` as source vertex `(k, i)`;
    /// a 0/1 column selector with `ι*ι = I`.
    pub fn iota_source(&self, k: usize, i: usize) -> CMat {
        let c = &self.comps[k];
        assert!(i < c.n, "source vertex index out of range");
        let mut m = CMat::zeros(self.source_dim, c.d);
        for a in 0..c.d {
            m[(c.source_offset + i * c.d + a, a)] = cx(1.0, 0.0);
        }
        m
    }

    pub fn iota_range(&self, k: usize, j: usize) -> CMat {
        let c = &self.comps[k];
        assert!(j < c.m, "range vertex index out of range");
        let mut m = CMat::zeros(self.range_dim, c.d);
        for b in 0..c.d {
            m[(c.range_offset + j * c.d + b, b)] = cx(1.0, 0.0);
        }
        m
    }

    /// Component chunk of a source-space vector at enhancement level `q`.
    pub fn source_chunk(&self, v: &CVec, k: usize, q: usize) -> CVec {
        let c = &self.comps[k];
        debug_assert_eq!(v.len(), q * self.source_dim);
        v.rows(q * c.source_offset, q * c.n * c.d).into_owned()
    }

    pub fn range_chunk(&self, v: &CVec, k: usize, q: usize) -> CVec {
        let c = &self.comps[k];
        debug_assert_eq!(v.len(), q * self.range_dim);
        v.rows(q * c.range_offset, q * c.m * c.d).into_owned()
    }
}

/// Build the map `I_q ⊗ M` in the per-component enhanced layout.
///
/// `m` maps the base source space to the base range space; the result maps
/// the level-`q` source space to the level-`q` range space, acting slotwise.
pub fn enhanced_lift(g: &StructureGraph, m: &CMat, q: usize) -> CMat {
    let lay = g.layout();
    let (s, r) = (lay.source_dim(), lay.range_dim());
    assert_eq!((m.nrows(), m.ncols()), (r, s), "map shape must be range_dim x source_dim");
    let mut out = CMat::zeros(q * r, q * s);
    for (kr, cr) in lay.comps.iter().enumerate() {
        for (ks, cs) in lay.comps.iter().enumerate() {
            let _ = (kr, ks);
            for alpha in 0..q {
                for jr in 0..cr.m * cr.d {
                    for is in 0..cs.n * cs.d {
                        let val = m[(cr.range_offset + jr, cs.source_offset + is)];
                        if val != cx(0.0, 0.0) {
                            out[(
                                q * cr.range_offset + alpha * cr.m * cr.d + jr,
                                q * cs.source_offset + alpha * cs.n * cs.d + is,
                            )] = val;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Place a base source-space vector into time slot `slot` of the level-`q`
/// source space.
pub fn slot_embed_source(g: &StructureGraph, v: &CVec, slot: usize, q: usize) -> CVec {
    let lay = g.layout();
    assert_eq!(v.len(), lay.source_dim());
    assert!(slot < q);
    let mut out = CVec::zeros(q * lay.source_dim());
    for c in &lay.comps {
        for i in 0..c.n * c.d {
            out[q * c.source_offset + slot * c.n * c.d + i] = v[c.source_offset + i];
        }
    }
    out
}

/// Extract time slot `slot` of a level-`q` source-space vector.
pub fn slot_extract_source(g: &StructureGraph, v: &CVec, slot: usize, q: usize) -> CVec {
    let lay = g.layout();
    assert_eq!(v.len(), q * lay.source_dim());
    let mut out = CVec::zeros(lay.source_dim());
    for c in &lay.comps {
        for i in 0..c.n * c.d {
            out[c.source_offset + i] = v[q * c.source_offset + slot * c.n * c.d + i];
        }
    }
    out
}

/// Block-diagonal structured perturbation `Δ = diag_k (W_k ⊗ I_{d_k})`.
#[derive(Debug, Clone)]
pub struct StructuredPerturbation {
    graph: StructureGraph,
    level: usize,
    blocks: Vec<CMat>,
}

impl StructuredPerturbation {
    /// `blocks[k]` must be `(n_k q) x (m_k q)`; the enhancement index runs
    /// slowest within the block.
    pub fn new(graph: StructureGraph, blocks: Vec<CMat>, level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::ShapeMismatch("enhancement level must be >= 1".into()));
        }
        if blocks.len() != graph.num_components() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks for {} components",
                blocks.len(),
                graph.num_components()
            )));
        }
        for (c, w) in graph.components().iter().zip(&blocks) {
            let want = (c.n_sources * level, c.n_ranges * level);
            if (w.nrows(), w.ncols()) != want {
                return Err(Error::ShapeMismatch(format!(
                    "block '{}' is {}x{}, expected {}x{}",
                    c.name,
                    w.nrows(),
                    w.ncols(),
                    want.0,
                    want.1
                )));
            }
        }
        Ok(StructuredPerturbation { graph, blocks, level })
    }

    /// Classical (level-1) pencil value `L(λ) = Σ_e λ_e ι_{s(e)} ι_{r(e)}*`.
    pub fn from_edge_scalars(graph: StructureGraph, lambdas: &[crate::linalg::C64]) -> Result<Self> {
        let edges = graph.edges();
        if lambdas.len() != edges.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} edge scalars for {} edges",
                lambdas.len(),
                edges.len()
            )));
        }
        let mut blocks: Vec<CMat> = graph
            .components()
            .iter()
            .map(|c| CMat::zeros(c.n_sources, c.n_ranges))
            .collect();
        for (&(k, i, j), &l) in edges.iter().zip(lambdas) {
            blocks[k][(i, j)] = l;
        }
        StructuredPerturbation::new(graph, blocks, 1)
    }

    /// Pencil value `L(Z) = Σ_e Z_e ⊗ ι ι*` for per-edge `q x q` matrices.
    pub fn from_edge_operators(graph: StructureGraph, z: &[CMat], q: usize) -> Result<Self> {
        let edges = graph.edges();
        if z.len() != edges.len() {
            return Err(Error::ShapeMismatch(format!("{} edge operators for {} edges", z.len(), edges.len())));
        }
        for ze in z {
            if (ze.nrows(), ze.ncols()) != (q, q) {
                return Err(Error::ShapeMismatch(format!(
                    "edge operator is {}x{}, expected {}x{}",
                    ze.nrows(),
                    ze.ncols(),
                    q,
                    q
                )));
            }
        }
        let mut blocks: Vec<CMat> = graph
            .components()
            .iter()
            .map(|c| CMat::zeros(c.n_sources * q, c.n_ranges * q))
            .collect();
        for (&(k, i, j), ze) in edges.iter().zip(z) {
            let c = &graph.components()[k];
            for alpha in 0..q {
                for beta in 0..q {
                    blocks[k][(alpha * c.n_sources + i, beta * c.n_ranges + j)] = ze[(alpha, beta)];
                }
            }
        }
        StructuredPerturbation::new(graph, blocks, q)
    }

    pub fn graph(&self) -> &StructureGraph {
        &self.graph
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    /// Dense `(q·source_dim) x (q·range_dim)` matrix, range space to source
    /// space.
    pub fn assemble(&self) -> CMat {
        let lay = self.graph.layout();
        let q = self.level;
        let mut out = CMat::zeros(q * lay.source_dim(), q * lay.range_dim());
        for (k, w) in self.blocks.iter().enumerate() {
            let d = self.graph.components()[k].multiplicity;
            let block = w.kronecker(&identity(d));
            out.view_mut(
                (q * lay.source_offset(k), q * lay.range_offset(k)),
                (block.nrows(), block.ncols()),
            )
            .copy_from(&block);
        }
        out
    }

    /// `‖Δ‖ = max_k ‖W_k‖` for block-diagonal maps.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(op_norm).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: crate::linalg::C64) -> Self {
        StructuredPerturbation {
            graph: self.graph.clone(),
            level: self.level,
            blocks: self.blocks.iter().map(|w| w * c).collect(),
        }
    }

    /// Check that a dense matrix carries the `diag_k(W_k ⊗ I_{d_k})` zero
    /// pattern of this structure at level `q`, within `tol` in Frobenius norm.
    pub fn matches_pattern(g: &StructureGraph, mat: &CMat, q: usize, tol: f64) -> bool {
        match Self::project_pattern(g, mat, q) {
            Ok(p) => (p.assemble() - mat).norm() <= tol * mat.norm().max(1.0),
            Err(_) => false,
        }
    }

    /// Orthogonal projection of a dense map onto the structured subspace
    /// (block extraction plus averaging over the multiplicity tensor).
    pub fn project_pattern(g: &StructureGraph, mat: &CMat, q: usize) -> Result<Self> {
        let lay = g.layout();
        if (mat.nrows(), mat.ncols()) != (q * lay.source_dim(), q * lay.range_dim()) {
            return Err(Error::ShapeMismatch("dense map has wrong enhanced shape".into()));
        }
        let mut blocks = Vec::new();
        for (k, c) in g.components().iter().enumerate() {
            let d = c.multiplicity;
            let mut w = CMat::zeros(q * c.n_sources, q * c.n_ranges);
            for ri in 0..q * c.n_sources {
                for cj in 0..q * c.n_ranges {
                    let mut acc = cx(0.0, 0.0);
                    for a in 0..d {
                        acc += mat[(q * lay.source_offset(k) + ri * d + a, q * lay.range_offset(k) + cj * d + a)];
                    }
                    w[(ri, cj)] = acc / cx(d as f64, 0.0);
                }
            }
            blocks.push(w);
        }
        StructuredPerturbation::new(g.clone(), blocks, q)
    }
}

/// Commutant-style scaling pair generated by Hermitian `Γ_k` per component.
#[derive(Debug, Clone)]
pub struct ScalingPair {
    graph: StructureGraph,
    gammas: Vec<CMat>,
}

impl ScalingPair {
    /// `Γ_k` must be Hermitian `d_k x d_k` (relative asymmetry below 1e-12).
    pub fn new(graph: StructureGraph, gammas: Vec<CMat>) -> Result<Self> {
        if gammas.len() != graph.num_components() {
            return Err(Error::ShapeMismatch(format!(
                "{} scaling blocks for {} components",
                gammas.len(),
                graph.num_components()
            )));
        }
        for (c, g) in graph.components().iter().zip(&gammas) {
            if (g.nrows(), g.ncols()) != (c.multiplicity, c.multiplicity) {
                return Err(Error::ShapeMismatch(format!(
                    "scaling block '{}' is {}x{}, expected {}x{}",
                    c.name,
                    g.nrows(),
                    g.ncols(),
                    c.multiplicity,
                    c.multiplicity
                )));
            }
            let defect = hermitian_defect(g);
            if defect > 1e-12 {
                return Err(Error::NotHermitian(defect));
            }
        }
        // Symmetrize exactly so downstream eigensolves see Hermitian data.
        let gammas = gammas.iter().map(hermitian_part).collect();
        Ok(ScalingPair { graph, gammas })
    }

    pub fn identity(graph: &StructureGraph) -> Self {
        let gammas = graph.components().iter().map(|c| identity(c.multiplicity)).collect();
        ScalingPair { graph: graph.clone(), gammas }
    }

    /// Internal constructor for blocks already known to be Hermitian.
    pub(crate) fn new_unchecked(graph: StructureGraph, gammas: Vec<CMat>) -> Self {
        ScalingPair { graph, gammas }
    }

    pub fn graph(&self) -> &StructureGraph {
        &self.graph
    }

    pub fn gammas(&self) -> &[CMat] {
        &self.gammas
    }

    /// Range-space factor `X = ⊕_k I_{m_k} ⊗ Γ_k`.
    pub fn x_matrix(&self) -> CMat {
        self.x_matrix_enhanced(1)
    }

    /// Source-space factor `Y = ⊕_k I_{n_k} ⊗ Γ_k`.
    pub fn y_matrix(&self) -> CMat {
        self.y_matrix_enhanced(1)
    }

    pub fn x_matrix_enhanced(&self, q: usize) -> CMat {
        let lay = self.graph.layout();
        let mut out = CMat::zeros(q * lay.range_dim(), q * lay.range_dim());
        for (k, gam) in self.gammas.iter().enumerate() {
            let c = &self.graph.components()[k];
            let block = identity(q * c.n_ranges).kronecker(gam);
            out.view_mut(
                (q * lay.range_offset(k), q * lay.range_offset(k)),
                (block.nrows(), block.ncols()),
            )
            .copy_from(&block);
        }
        out
    }

    pub fn y_matrix_enhanced(&self, q: usize) -> CMat {
        let lay = self.graph.layout();
        let mut out = CMat::zeros(q * lay.source_dim(), q * lay.source_dim());
        for (k, gam) in self.gammas.iter().enumerate() {
            let c = &self.graph.components()[k];
            let block = identity(q * c.n_sources).kronecker(gam);
            out.view_mut(
                (q * lay.source_offset(k), q * lay.source_offset(k)),
                (block.nrows(), block.ncols()),
            )
            .copy_from(&block);
        }
        out
    }

    /// All `Γ_k - margin I` positive definite (independent Cholesky check).
    pub fn is_positive_definite(&self, margin: f64) -> bool {
        self.gammas.iter().all(|g| crate::linalg::is_pd_with_margin(g, margin))
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScalingPair {
            graph: self.graph.clone(),
            gammas: self.gammas.iter().map(|g| g.scale(c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_complex_matrix, C64};
    use crate::seed::rng_for;

    fn graph_2x3_plus_scalar2() -> StructureGraph {
        StructureGraph::new(vec![
            Component::new("p1", 2, 3, 1),
            Component::new("p2", 1, 1, 2),
        ])
        .unwrap()
    }

    #[test]
    fn layout_dims() {
        let g = StructureGraph::new(vec![Component::new("p1", 1, 1, 1)]).unwrap();
        assert_eq!((g.source_dim(), g.range_dim()), (1, 1));

        let g = graph_2x3_plus_scalar2();
        assert_eq!((g.source_dim(), g.range_dim()), (4, 5));

        let g = StructureGraph::repeated_scalar(3);
        assert_eq!((g.source_dim(), g.range_dim()), (3, 3));
    }

    #[test]
    fn validation_rejects_bad_graphs() {
        assert!(StructureGraph::new(vec![]).is_err());
        assert!(StructureGraph::new(vec![Component::new("a", 0, 1, 1)]).is_err());
        assert!(StructureGraph::new(vec![
            Component::new("a", 1, 1, 1),
            Component::new("a", 1, 1, 1)
        ])
        .is_err());
    }

    #[test]
    fn iota_orthogonality_is_exact() {
        let g = graph_2x3_plus_scalar2();
        let lay = g.layout();
        let i0 = lay.iota_source(0, 0);
        let i1 = lay.iota_source(0, 1);
        let i2 = lay.iota_source(1, 0);
        assert_eq!(i0.adjoint() * &i0, identity(1));
        assert_eq!(i2.adjoint() * &i2, identity(2));
        assert_eq!((i0.adjoint() * &i1).norm(), 0.0);
        assert_eq!((i1.adjoint() * &i2).norm(), 0.0);
        let r0 = lay.iota_range(0, 2);
        assert_eq!(r0.adjoint() * &r0, identity(1));
    }

    #[test]
    fn repeated_scalar_block_is_scalar_times_identity() {
        let g = StructureGraph::repeated_scalar(3);
        let p = StructuredPerturbation::from_edge_scalars(g, &[cx(2.5, -1.0)]).unwrap();
        let dense = p.assemble();
        assert_eq!(dense, identity(3) * cx(2.5, -1.0));
    }

    #[test]
    fn scalar_times_identity_multiplicity_two() {
        let g = StructureGraph::repeated_scalar(2);
        let w = CMat::from_row_slice(1, 1, &[cx(3.0, 0.0)]);
        let p = StructuredPerturbation::new(g, vec![w], 1).unwrap();
        assert_eq!(p.assemble(), identity(2) * cx(3.0, 0.0));
        assert!((p.norm() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn permutation_full_block_norm() {
        let g = StructureGraph::full_block(2, 2);
        let w = CMat::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]);
        let p = StructuredPerturbation::new(g, vec![w.clone()], 1).unwrap();
        assert_eq!(p.assemble(), w);
        assert!((p.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_scalar_blocks_assemble_to_diagonal() {
        let g = StructureGraph::scalar_blocks(2);
        let p = StructuredPerturbation::from_edge_scalars(g, &[cx(2.0, 0.0), cx(0.0, 3.0)]).unwrap();
        let d = p.assemble();
        assert_eq!(d[(0, 0)], cx(2.0, 0.0));
        assert_eq!(d[(1, 1)], cx(0.0, 3.0));
        assert_eq!(d[(0, 1)], cx(0.0, 0.0));
    }

    #[test]
    fn pencil_norm_identity_random() {
        let mut rng = rng_for(1, 0);
        let g = graph_2x3_plus_scalar2();
        for _ in 0..20 {
            let lambdas: Vec<C64> = (0..g.edges().len())
                .map(|_| random_complex_matrix(&mut rng, 1, 1)[(0, 0)])
                .collect();
            let p = StructuredPerturbation::from_edge_scalars(g.clone(), &lambdas).unwrap();
            let dense_norm = op_norm(&p.assemble());
            let block_norm = p.norm();
            assert!((dense_norm - block_norm).abs() <= 1e-10 * block_norm.max(1.0));
        }
    }

    #[test]
    fn scaling_intertwines_all_perturbations() {
        let mut rng = rng_for(2, 0);
        let g = graph_2x3_plus_scalar2();
        for _ in 0..100 {
            let blocks: Vec<CMat> = g
                .components()
                .iter()
                .map(|c| random_complex_matrix(&mut rng, c.n_sources, c.n_ranges))
                .collect();
            let delta = StructuredPerturbation::new(g.clone(), blocks, 1).unwrap();
            let gammas: Vec<CMat> = g
                .components()
                .iter()
                .map(|c| {
                    let a = random_complex_matrix(&mut rng, c.multiplicity, c.multiplicity);
                    hermitian_part(&a)
                })
                .collect();
            let pair = ScalingPair::new(g.clone(), gammas).unwrap();
            let d = delta.assemble();
            let resid = (&d * pair.x_matrix() - pair.y_matrix() * &d).norm();
            let bound = 1e-12 * d.norm().max(1e-30) * pair.x_matrix().norm().max(1e-30);
            assert!(resid <= bound.max(1e-14), "intertwining residual {resid}");
        }
    }

    #[test]
    fn scaling_examples() {
        let g = StructureGraph::scalar_blocks(2);
        let pair = ScalingPair::new(
            g,
            vec![
                CMat::from_row_slice(1, 1, &[cx(4.0, 0.0)]),
                CMat::from_row_slice(1, 1, &[cx(9.0, 0.0)]),
            ],
        )
        .unwrap();
        let expect = CMat::from_diagonal(&CVec::from_vec(vec![cx(4.0, 0.0), cx(9.0, 0.0)]));
        assert_eq!(pair.x_matrix(), expect);
        assert_eq!(pair.y_matrix(), expect);

        // 2 sources x 3 ranges with scalar gamma c: X = c I_3, Y = c I_2.
        let g = StructureGraph::full_block(2, 3);
        let pair = ScalingPair::new(g, vec![CMat::from_row_slice(1, 1, &[cx(0.7, 0.0)])]).unwrap();
        assert_eq!(pair.x_matrix(), identity(3) * cx(0.7, 0.0));
        assert_eq!(pair.y_matrix(), identity(2) * cx(0.7, 0.0));

        let g = graph_2x3_plus_scalar2();
        let pair = ScalingPair::identity(&g);
        assert_eq!(pair.x_matrix(), identity(5));
        assert_eq!(pair.y_matrix(), identity(4));
    }

    #[test]
    fn scaling_rejects_non_hermitian() {
        let g = StructureGraph::repeated_scalar(2);
        let bad = CMat::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)]);
        assert!(matches!(ScalingPair::new(g, vec![bad]), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn augment_adds_full_block() {
        let g = StructureGraph::full_block(1, 1);
        let aug = g.augment_with_full_block(1, 1).unwrap();
        assert_eq!(aug.num_components(), 2);
        assert!(aug.components()[1].is_full_type());

        let g = graph_2x3_plus_scalar2();
        let aug = g.augment_with_full_block(3, 2).unwrap();
        assert_eq!(aug.source_dim(), g.source_dim() + 3);
        assert_eq!(aug.range_dim(), g.range_dim() + 2);
    }

    #[test]
    fn enhanced_lift_acts_slotwise() {
        let mut rng = rng_for(3, 0);
        let g = graph_2x3_plus_scalar2();
        let m = random_complex_matrix(&mut rng, g.range_dim(), g.source_dim());
        let q = 3;
        let lifted = enhanced_lift(&g, &m, q);
        for slot in 0..q {
            let v = crate::linalg::random_unit_vector(&mut rng, g.source_dim());
            let emb = slot_embed_source(&g, &v, slot, q);
            let out = &lifted * &emb;
            // output lives in slot `slot` of the range side and equals M v
            let mv = &m * &v;
            let lay = g.layout();
            let mut expect = CVec::zeros(q * lay.range_dim());
            for (k, c) in g.components().iter().enumerate() {
                for j in 0..c.n_ranges * c.multiplicity {
                    expect[q * lay.range_offset(k) + slot * c.n_ranges * c.multiplicity + j] =
                        mv[lay.range_offset(k) + j];
                }
            }
            assert!((out - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn slot_embed_roundtrip() {
        let mut rng = rng_for(4, 0);
        let g = graph_2x3_plus_scalar2();
        let v = crate::linalg::random_unit_vector(&mut rng, g.source_dim());
        let emb = slot_embed_source(&g, &v, 2, 4);
        let back = slot_extract_source(&g, &emb, 2, 4);
        assert!((&back - &v).norm() < 1e-15);
        assert!((emb.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pattern_projection_identifies_structure() {
        let mut rng = rng_for(5, 0);
        let g = graph_2x3_plus_scalar2();
        let blocks: Vec<CMat> = g
            .components()
            .iter()
            .map(|c| random_complex_matrix(&mut rng, 2 * c.n_sources, 2 * c.n_ranges))
            .collect();
        let p = StructuredPerturbation::new(g.clone(), blocks, 2).unwrap();
        let dense = p.assemble();
        assert!(StructuredPerturbation::matches_pattern(&g, &dense, 2, 1e-12));
        let mut offpattern = dense.clone();
        offpattern[(0, dense.ncols() - 1)] += cx(0.5, 0.0);
        assert!(!StructuredPerturbation::matches_pattern(&g, &offpattern, 2, 1e-12));
    }
}
