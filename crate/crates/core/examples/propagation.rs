//! Label propagation on a small graph: one-shot LP, the two-step variant and
//! the agreement between the closed form and the fixed-point iteration.

use household_sid::graph::{affinity, EmbeddingView, ScalingRule};
use household_sid::propagation::{
    init_label_matrix, propagate, run_2lp, run_2lpea, run_lp, HouseholdGraph, PropagationConfig, Solver,
};

fn main() -> household_sid::Result<()> {
    // Node order is labeled, then unlabeled, then held out.
    let pts: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0],
        vec![4.0, 0.0],
        vec![0.5, 0.2],
        vec![1.0, 0.4],
        vec![3.5, 0.1],
        vec![3.0, -0.3],
        vec![1.6, 0.5],
        vec![2.5, 0.0],
    ];
    let view = EmbeddingView::dense("voice", pts.clone())?;
    let w = affinity(&view, &ScalingRule::Local { k: 2, s: 1.0 }, None)?;
    let g = HouseholdGraph::from_affinity(w, vec![0, 1], 4, 2, 2)?;

    let cfg = PropagationConfig::default();
    let y0 = init_label_matrix(&g, None)?;
    let closed = propagate(&g, &y0, &cfg.clone().with_solver(Solver::ClosedForm))?;
    let iter = propagate(&g, &y0, &cfg.clone().with_solver(Solver::Iterative))?;
    println!(
        "closed form vs iteration: |dF| = {:.2e} after {} iterations",
        (closed.scores.matrix() - iter.scores.matrix()).norm(),
        iter.iterations
    );
    println!("scores:\n{:.3}", closed.scores.matrix());

    let lp = run_lp(&g, &cfg)?;
    let two = run_2lp(&g, &cfg)?;
    let ea = run_2lpea(&g, &pts, &cfg)?;
    println!("LP    held out: {:?}", lp.heldout.labels);
    println!("2LP   pseudo:   {:?}", two.pseudo.as_ref().map(|p| &p.labels));
    println!("2LP   held out: {:?}", two.heldout.labels);
    println!("2LPEA held out: {:?}", ea.heldout.labels);
    Ok(())
}
