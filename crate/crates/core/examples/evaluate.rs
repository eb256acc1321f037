//! Scores graph methods and baselines on simulated validation households and
//! prints the markdown table.

use household_sid::evaluation::{evaluate_many, EvalOptions, Method, MethodSpec};
use household_sid::fusion::FusionRule;
use household_sid::graph::ScalingRule;
use household_sid::report::render_markdown;
use household_sid::simulation::{simulate, SimulationConfig, FACE_VIEW, SESSION_VIEW, VOICE_VIEW};

fn main() -> household_sid::Result<()> {
    let data = simulate(&SimulationConfig { seed: 1, ..SimulationConfig::default() })?;
    let local = ScalingRule::Local { k: 40, s: 0.5 };
    let specs = vec![
        MethodSpec::graph(Method::TwoLp, local.clone(), FusionRule::single(VOICE_VIEW)),
        MethodSpec::graph(Method::TwoLp, local.clone(), FusionRule::edge_pool([VOICE_VIEW, SESSION_VIEW])),
        MethodSpec::graph(Method::TwoLp, local.clone(), FusionRule::pml([VOICE_VIEW, FACE_VIEW], 1.0)),
        MethodSpec::graph(Method::TwoLpea, local, FusionRule::single(VOICE_VIEW)),
    ];
    let report = evaluate_many(&data.val, &specs, EvalOptions::default())?;
    print!("{}", render_markdown(&report));
    Ok(())
}
