use std::f64::consts::TAU;

use crate::bodies::SystemModel;
use crate::dynamics::{lagrange_points, LagrangePoint, State6};
use crate::error::{Error, Result};

/// c2 = μ1/r1³ + μ2/r2³ at a Lagrange point.
fn c2(model: &SystemModel, p: &State6) -> f64 {
    let r1 = ((p[0] + model.mu2()).powi(2) + p[1] * p[1]).sqrt();
    let r2 = ((p[0] - model.mu1()).powi(2) + p[1] * p[1]).sqrt();
    model.mu1() / r1.powi(3) + model.mu2() / r2.powi(3)
}

/// Small-oscillation frequency normal to the orbital plane at a Lagrange point.
pub fn vertical_frequency(model: &SystemModel, point: LagrangePoint) -> Result<f64> {
    let p = lagrange_points(model)?[point.index()];
    Ok(c2(model, &p).sqrt())
}

/// Linear vertical oscillation about a Lagrange point, starting on the
/// orbital plane with out-of-plane speed `amplitude · ω_z`. Returns the state
/// and the linear period.
pub fn vertical_seed(model: &SystemModel, point: LagrangePoint, amplitude: f64) -> Result<(State6, f64)> {
    let mut s = lagrange_points(model)?[point.index()];
    let w = vertical_frequency(model, point)?;
    s[5] = amplitude * w;
    Ok((s, TAU / w))
}

/// Linear in-plane (planar Lyapunov) oscillation about a collinear point with
/// x-amplitude `amplitude`. Returns the state at the x-maximum and the linear
/// period.
pub fn planar_seed(model: &SystemModel, point: LagrangePoint, amplitude: f64) -> Result<(State6, f64)> {
    if matches!(point, LagrangePoint::L4 | LagrangePoint::L5) {
        return Err(Error::InvalidInput("planar seeds are defined for collinear points".into()));
    }
    let mut s = lagrange_points(model)?[point.index()];
    let c = c2(model, &s);
    let (uxx, uyy) = (1.0 + 2.0 * c, 1.0 - c);
    // λ⁴ + (4 - uxx - uyy) λ² + uxx uyy = 0; the center root has λ² < 0.
    let b = 4.0 - uxx - uyy;
    let disc = (b * b - 4.0 * uxx * uyy).sqrt();
    let w = ((b + disc) / 2.0).sqrt();
    let k = (w * w + uxx) / (2.0 * w);
    s[0] += amplitude;
    s[4] = -k * amplitude * w;
    Ok((s, TAU / w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earth_moon_l1_frequencies() {
        // Linear L1 frequencies for μ = 0.01215: ω_xy ≈ 2.334, ω_z ≈ 2.269.
        let m = SystemModel::cr3bp(0.01215).unwrap();
        let (_, tp) = planar_seed(&m, LagrangePoint::L1, 1e-3).unwrap();
        let wz = vertical_frequency(&m, LagrangePoint::L1).unwrap();
        assert!((TAU / tp - 2.334).abs() < 2e-3);
        assert!((wz - 2.269).abs() < 2e-3);
    }
}
