//! The four cosine-scoring baselines on a few simulated households.

use household_sid::evaluation::{error_count, PreparedHousehold};
use household_sid::baselines::{run_2cs, run_2csea, run_cs, run_csea, BaselineInput, BaselineOutcome};
use household_sid::simulation::{simulate, SimulationConfig, VOICE_VIEW};

type Runner = fn(&BaselineInput) -> household_sid::Result<BaselineOutcome>;

fn main() -> household_sid::Result<()> {
    let cfg = SimulationConfig { seed: 3, groups: vec!["hard".into()], ..SimulationConfig::default() };
    let data = simulate(&cfg)?;
    let runners: [(&str, Runner); 4] = [("CS", run_cs), ("CSEA", run_csea), ("2CS", run_2cs), ("2CSEA", run_2csea)];

    println!("{:<10} {:>6} {:>6} {:>6} {:>6}", "household", "CS", "CSEA", "2CS", "2CSEA");
    for hh in &data.val {
        let prepared = PreparedHousehold::new(hh)?;
        let input = prepared.baseline_input(VOICE_VIEW)?;
        let truth = &prepared.truth;
        let mut line = format!("{:<10}", hh.id);
        for (_, run) in runners {
            let (errors, total) = error_count(&run(&input)?.heldout.labels, truth)?;
            line.push_str(&format!(" {:>3}/{:<2}", errors, total));
        }
        println!("{line}");
    }
    Ok(())
}
