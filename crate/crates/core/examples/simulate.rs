//! Generates the synthetic dev/val split and summarizes each household group.

use std::collections::BTreeMap;

use household_sid::dataset::{write_dataset, Role};
use household_sid::simulation::{simulate, SimulationConfig};

fn main() -> household_sid::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = SimulationConfig { seed, ..SimulationConfig::default() };
    let data = simulate(&cfg)?;

    let mut by_group: BTreeMap<&str, (usize, usize, usize, usize)> = BTreeMap::new();
    for hh in data.dev.iter().chain(&data.val) {
        let e = by_group.entry(hh.group.as_str()).or_default();
        e.0 += 1;
        e.1 += hh.count(Role::Enrolled);
        e.2 += hh.count(Role::Unlabeled);
        e.3 += hh.count(Role::Heldout);
    }
    println!("seed {seed}: {} dev / {} val households", data.dev.len(), data.val.len());
    println!("{:<10} {:>10} {:>9} {:>10} {:>8}", "group", "households", "enrolled", "unlabeled", "heldout");
    for (g, (n, e, u, h)) in by_group {
        println!("{g:<10} {n:>10} {e:>9} {u:>10} {h:>8}");
    }

    let mut buf = Vec::new();
    write_dataset(&mut buf, &data.dev[..1])?;
    let first = String::from_utf8_lossy(&buf);
    let line = first.lines().next().unwrap_or_default();
    println!("\nfirst record ({} bytes): {}...", line.len(), &line[..line.len().min(160)]);
    Ok(())
}
