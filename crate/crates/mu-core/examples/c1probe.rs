use mu_core::graph::StructureGraph;
use mu_core::linalg::{cx, CMat};
use mu_core::stein::{solve_stein, SteinOptions, SteinProblem};

fn main() {
    let g = StructureGraph::full_block(2, 2);
    let r = CMat::from_row_slice(2, 2, &[cx(1.0,0.0), cx(0.0,0.0), cx(0.0,0.0), cx(-2.0,0.0)]);
    let prob = SteinProblem::with_offset(g, CMat::zeros(2, 2), r).unwrap();
    eprintln!("solving");
    let verdict = solve_stein(&prob, &SteinOptions { max_iter: 200, ..Default::default() }).unwrap();
    eprintln!("verdict: {verdict:?}");
}
