//! Affinity under the three bandwidth rules, and why local scaling does not
//! care about the overall spread of the embeddings.

use std::collections::BTreeMap;

use household_sid::graph::{affinity, normalized_laplacian, EmbeddingView, ScalingRule};

fn main() -> household_sid::Result<()> {
    // Two tight speakers plus one loose one.
    let pts = vec![
        vec![0.0, 0.0],
        vec![0.1, 0.0],
        vec![0.0, 0.1],
        vec![2.0, 2.0],
        vec![2.1, 2.0],
        vec![2.0, 2.1],
        vec![-2.0, 3.0],
        vec![-1.2, 2.4],
        vec![-2.6, 3.8],
    ];
    let view = EmbeddingView::dense("voice", pts)?;

    let rules = [
        ("universal 0.5", ScalingRule::Universal { sigma: 0.5 }),
        ("cohort", ScalingRule::Cohort { sigma_by_cohort: BTreeMap::from([("hard".to_string(), 1.0)]) }),
        ("local k=2 s=1", ScalingRule::Local { k: 2, s: 1.0 }),
    ];
    for (name, rule) in &rules {
        let w = affinity(&view, rule, Some("hard"))?;
        let m = w.matrix();
        println!("{name:>14}: w(0,1)={:.3} w(6,7)={:.3} w(0,3)={:.2e}", m[(0, 1)], m[(6, 7)], m[(0, 3)]);
    }

    println!("\nscaling every embedding by 10:");
    let big = view.scaled(10.0);
    for (name, rule) in &rules {
        let a = affinity(&view, rule, Some("hard"))?;
        let b = affinity(&big, rule, Some("hard"))?;
        println!("{name:>14}: max |dW| = {:.3e}", (a.matrix() - b.matrix()).amax());
    }

    let l = normalized_laplacian(&affinity(&view, &rules[2].1, None)?)?;
    let eig = l.matrix().clone().symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    println!("\nlaplacian spectrum (local): {:.3?}", ev);
    Ok(())
}
