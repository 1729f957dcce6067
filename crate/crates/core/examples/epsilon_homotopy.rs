//! Continues the 2π-periodic L3 vertical orbit from the CR3BP into the
//! Laplace-resonance model and reports every Melnikov branch.
use crnbp::scenarios::{compute_epsilon, ScenarioConfig};

fn main() -> crnbp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/scenarios/epsilon_ganymede_laplace.toml");
    let cfg = ScenarioConfig::load(path)?;
    let run = compute_epsilon(&cfg)?;
    println!("parent period {:.12}", run.parent.period);
    for (i, b) in run.branches.iter().enumerate() {
        let last = b.family.members.last().unwrap();
        println!(
            "  branch {i}: theta {:.4}, {} steps, reached eps {:.3}, deformation {}",
            b.theta,
            b.family.members.len() - 1,
            last.param,
            b.deformation.map_or("-".into(), |d| format!("{d:.4}"))
        );
    }
    let end = run.branch().family.members.last().unwrap();
    println!("selected {}; end state {:?}", run.selected, end.state0.as_slice());
    Ok(())
}
