//! Backward landing sweep at Europa: CR3BP against the full Jovian model at
//! one arrival epoch, over a coarse set of landing longitudes.
use crnbp::bodies::load_system;
use crnbp::propagate::IntegratorSettings;
use crnbp::scenarios::landing::{gateway_radius, landing_sweep, LandingOutcome, LandingSpec};

fn main() -> crnbp::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/systems/");
    let full = load_system(format!("{dir}jupiter_europa_crnbp.toml"))?.model;
    let cr3bp = load_system(format!("{dir}jupiter_europa_cr3bp.toml"))?.model;
    let spec = LandingSpec {
        theta_step_deg: 10.0,
        arrival_days: 2.36,
        keep_samples: false,
        ..LandingSpec::default()
    };
    let settings = IntegratorSettings::default().with_tolerance(1e-11);
    let gateway = gateway_radius(&full)?;
    println!("gateway radius {gateway:.5}");
    for (name, model) in [("CR3BP", &cr3bp), ("CRNBP", &full)] {
        let res = landing_sweep(model, &spec, &settings)?;
        let line: String = res
            .iter()
            .map(|r| match r.outcome {
                LandingOutcome::Survived if r.max_m1_distance > gateway => 'X',
                LandingOutcome::Survived => 'o',
                LandingOutcome::Collided { .. } => '.',
                _ => '?',
            })
            .collect();
        println!("{name} |{line}|  (o survived, X left past the gateway, . hit Europa)");
    }
    Ok(())
}
