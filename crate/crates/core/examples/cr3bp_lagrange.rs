//! Lagrange points, Jacobi levels and the zero-velocity condition for
//! Earth–Moon, then the same points seen by the full CRNBP at ε = 0 and 1.
use crnbp::bodies::load_system;
use crnbp::dynamics::{crnbp_accel, jacobi_constant, lagrange_points, speed_squared_for_jacobi};
use crnbp::SystemModel;

fn main() -> crnbp::Result<()> {
    let em = SystemModel::cr3bp(0.01215)?;
    println!("Earth-Moon, mu = {}", em.mu2());
    for (i, p) in lagrange_points(&em)?.iter().enumerate() {
        let c = jacobi_constant(&em, p)?;
        println!("  L{}  x {:+.6}  y {:+.6}  C {:.6}", i + 1, p[0], p[1], c);
    }
    let l2 = lagrange_points(&em)?[1];
    let c2 = jacobi_constant(&em, &l2)?;
    let probe = nalgebra::Vector3::new(0.5, 0.0, 0.0);
    println!("speed^2 at x = 0.5 on the L2 level: {:.6}", speed_squared_for_jacobi(&em, &probe, c2)?);

    // L-points of the primaries are no longer equilibria once perturbers act.
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/systems/jupiter_europa_crnbp.toml");
    let full = load_system(dir)?.model;
    let l1 = lagrange_points(&full)?[0];
    for eps in [0.0, 1.0] {
        let m = full.with_epsilon(eps)?;
        let a = crnbp_accel(&m, &l1, 0.0)?;
        println!("Jupiter-Europa L1, eps {eps}: |acceleration| = {:.3e}", a.norm());
    }
    Ok(())
}
