//! Picks alpha and the local bandwidth factor on dev households, then checks
//! the chosen setting on val.

use household_sid::evaluation::{micro_sier, sweep, Grid, Method, MethodSpec};
use household_sid::fusion::FusionRule;
use household_sid::graph::ScalingRule;
use household_sid::report::sweep_csv;
use household_sid::simulation::{simulate, SimulationConfig, VOICE_VIEW};

fn main() -> household_sid::Result<()> {
    let data = simulate(&SimulationConfig { seed: 2, ..SimulationConfig::default() })?;
    let template =
        MethodSpec::graph(Method::TwoLp, ScalingRule::Local { k: 40, s: 0.3 }, FusionRule::single(VOICE_VIEW));
    let grid: Grid = [
        ("alpha".to_string(), vec![0.5, 0.9, 0.99]),
        ("s".to_string(), vec![0.3, 0.5, 1.0]),
    ]
    .into();

    let result = sweep(&data.dev, &grid, &template)?;
    print!("{}", sweep_csv(&result, None, Some(2)));
    let best = &result.rows[result.best];
    println!("\nbest on dev: {:?} -> {:.2}%", best.values, best.sier.unwrap_or(f64::NAN) * 100.0);

    let val = micro_sier(&data.val, &result.best_spec)?;
    let base = micro_sier(&data.val, &template)?;
    println!("val: tuned {:.2}% vs untuned {:.2}%", val.sier * 100.0, base.sier * 100.0);
    Ok(())
}
