//! Full comparison table: every method family over several views and fusion
//! rules, pooled over a handful of simulation seeds.
//!
//! `cargo run --release --example reproduce_tables -- 5` runs five seeds.

use std::collections::BTreeMap;

use household_sid::evaluation::{evaluate_many, relative_improvement, EvalOptions, Method, MethodSpec, SierCell};
use household_sid::fusion::FusionRule;
use household_sid::graph::ScalingRule;
use household_sid::simulation::{simulate, SimulationConfig, FACE_VIEW, SESSION_VIEW, VOICE_VIEW};

fn specs() -> Vec<MethodSpec> {
    let local = ScalingRule::Local { k: 40, s: 0.5 };
    let fusions = [
        FusionRule::single(VOICE_VIEW),
        FusionRule::single(FACE_VIEW),
        FusionRule::edge_pool([VOICE_VIEW, SESSION_VIEW]),
        FusionRule::pml([VOICE_VIEW, FACE_VIEW], 1.0),
        FusionRule::pml([VOICE_VIEW, FACE_VIEW, SESSION_VIEW], 1.0),
    ];
    // Cosine baselines on the voice view are added by the evaluator.
    let mut out = Vec::new();
    for method in Method::GRAPH {
        for fusion in &fusions {
            let mut spec = MethodSpec::graph(method, local.clone(), fusion.clone());
            if method == Method::TwoLpea && fusion.views().len() > 1 {
                spec.primary_view = Some(VOICE_VIEW.into());
            }
            out.push(spec);
        }
    }
    out
}

fn main() -> household_sid::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let specs = specs();
    let mut pooled: BTreeMap<(usize, String), (String, SierCell)> = BTreeMap::new();
    let mut groups = Vec::new();

    for seed in 0..seeds {
        let data = simulate(&SimulationConfig { seed, ..SimulationConfig::default() })?;
        let report = evaluate_many(&data.val, &specs, EvalOptions::default())?;
        groups.clone_from(&report.groups);
        for (i, row) in report.rows.iter().enumerate() {
            for (g, cell) in row.cells.iter().chain([(&"overall".to_string(), &row.overall)]) {
                let e = pooled.entry((i, g.clone())).or_insert_with(|| (row.label.clone(), SierCell::default()));
                e.1 = e.1.merge(*cell);
            }
        }
        eprintln!("seed {seed} done");
    }
    groups.push("overall".into());

    println!("SIER (%) pooled over {seeds} seeds\n");
    println!("| Method | {} |", groups.join(" | "));
    println!("|---|{}", "---|".repeat(groups.len()));
    let rows = pooled.keys().map(|k| k.0).max().map_or(0, |m| m + 1);
    let mut best_baseline = vec![f64::INFINITY; groups.len()];
    let mut best_graph = vec![f64::INFINITY; groups.len()];
    for i in 0..rows {
        let label = &pooled[&(i, groups[0].clone())].0;
        let cells: Vec<f64> = groups.iter().map(|g| pooled[&(i, g.clone())].1.sier).collect();
        let target = if label.starts_with("CS") || label.starts_with("2CS") { &mut best_baseline } else { &mut best_graph };
        for (b, c) in target.iter_mut().zip(&cells) {
            *b = b.min(*c);
        }
        let cells: Vec<String> = cells.iter().map(|c| format!("{:.2}", c * 100.0)).collect();
        println!("| {label} | {} |", cells.join(" | "));
    }
    let imp: Vec<String> = best_baseline
        .iter()
        .zip(&best_graph)
        .map(|(b, m)| relative_improvement(*b, *m).map_or("n/a".into(), |r| format!("{r:.1}")))
        .collect();
    println!("| Improvement (%) | {} |", imp.join(" | "));
    Ok(())
}
