//! Builds the Jovian CRNBP from constants and an ephemeris snapshot, then
//! maps the snapshot through the fixed/synodic transformation.
use crnbp::bodies::load_system;
use crnbp::ephem::{to_canonical, SynodicMap};

fn main() -> crnbp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/systems/jupiter_europa_crnbp.toml");
    let sys = load_system(path)?;
    let m = &sys.model;
    println!("{} bodies, eps {}, hash {}", m.n_bodies(), m.epsilon(), &m.hash()[..12]);
    println!("length unit {:.1} km, time unit {:.1} s", m.length_unit(), m.time_unit());
    for j in 0..m.n_massive() {
        println!(
            "  {:<10} mu {:.6e}  R {:.6}  n {:+.6}  psi0 {:+.6}",
            m.names()[j],
            m.mu()[j],
            m.orbit_radius()[j],
            m.mean_motion()[j],
            m.psi0()[j]
        );
    }
    let e = sys.ephemeris.as_ref().expect("system has an ephemeris");
    let s12 = e.table.position(&m.names()[1], e.jd0)?;
    let map = SynodicMap::new(&e.frame, &s12, m.mu2())?;
    println!("synodic positions at the epoch:");
    for rec in &e.table.records {
        let (p, v) = to_canonical(m, &rec.position, &rec.velocity);
        let s = map.to_synodic(0.0, &p, &v);
        let (p2, _) = map.to_fixed(0.0, &s);
        println!(
            "  {:<10} ({:+.6}, {:+.6}, {:+.6})  round trip {:.1e}",
            rec.body,
            s[0],
            s[1],
            s[2],
            (p2 - p).amax()
        );
    }
    Ok(())
}
