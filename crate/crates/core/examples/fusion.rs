//! Combining a voice view and a face view: edge pooling versus power means
//! of the Laplacians.

use household_sid::fusion::{default_shift, edgepool_fuse, pml_fuse};
use household_sid::graph::{affinity, normalized_laplacian, EmbeddingView, ScalingRule};

fn main() -> household_sid::Result<()> {
    // Voice separates {0,1,2} from {3,4,5}; face is confused about node 2.
    let voice = EmbeddingView::dense(
        "voice",
        vec![vec![0.0], vec![0.1], vec![0.2], vec![3.0], vec![3.1], vec![3.2]],
    )?;
    let face = EmbeddingView::dense(
        "face",
        vec![vec![0.0], vec![0.1], vec![3.05], vec![3.0], vec![3.1], vec![3.2]],
    )?;
    let rule = ScalingRule::Universal { sigma: 0.5 };
    let wv = affinity(&voice, &rule, None)?;
    let wf = affinity(&face, &rule, None)?;

    let pooled = edgepool_fuse(&[wv.clone(), wf.clone()])?;
    println!("edge pool w(2,3) = {:.3} (voice {:.3}, face {:.3})", pooled.matrix()[(2, 3)], wv.matrix()[(2, 3)], wf.matrix()[(2, 3)]);

    let lv = normalized_laplacian(&wv)?;
    let lf = normalized_laplacian(&wf)?;
    println!("\n   p   shift   L(2,1)   L(2,3)");
    for p in [-5.0, -1.0, 1.0, 5.0] {
        let shift = default_shift(p);
        let l = pml_fuse(&[lv.clone(), lf.clone()], p, shift)?;
        let m = l.matrix();
        println!("{p:>4}  {shift:.3}  {:>7.3}  {:>7.3}", m[(2, 1)], m[(2, 3)]);
    }
    Ok(())
}
