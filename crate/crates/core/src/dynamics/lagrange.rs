use super::State6;
use crate::bodies::SystemModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagrangePoint {
    L1,
    L2,
    L3,
    L4,
    L5,
}

impl LagrangePoint {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// x-acceleration on the M1–M2 line with zero velocity.
pub fn collinear_residual(mu2: f64, x: f64) -> f64 {
    let mu1 = 1.0 - mu2;
    let d1 = x + mu2;
    let d2 = x - mu1;
    x - mu1 * d1 / d1.abs().powi(3) - mu2 * d2 / d2.abs().powi(3)
}

fn collinear_slope(mu2: f64, x: f64) -> f64 {
    let mu1 = 1.0 - mu2;
    1.0 + 2.0 * mu1 / (x + mu2).abs().powi(3) + 2.0 * mu2 / (x - mu1).abs().powi(3)
}

fn solve_collinear(mu2: f64, mut lo: f64, mut hi: f64, which: u8) -> Result<f64> {
    let f = |x| collinear_residual(mu2, x);
    let (mut flo, fhi) = (f(lo), f(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::LagrangeBracket(which));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let step = f(x) / collinear_slope(mu2, x);
        let next = x - step;
        if f(next).abs() >= f(x).abs() {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// L1..L5 as zero-velocity synodic states, using only μ1 and μ2.
pub fn lagrange_points(model: &SystemModel) -> Result<[State6; 5]> {
    let mu2 = model.mu2();
    let mu1 = model.mu1();
    let gap = 1e-9 * mu2.cbrt().min(1.0);
    let l1 = solve_collinear(mu2, -mu2 + gap, mu1 - gap, 1)?;
    let l2 = solve_collinear(mu2, mu1 + gap, 2.0 + mu1, 2)?;
    let l3 = solve_collinear(mu2, -2.0 - mu2, -mu2 - gap, 3)?;
    let h = 3f64.sqrt() / 2.0;
    let at = |x, y| State6::new(x, y, 0.0, 0.0, 0.0, 0.0);
    Ok([
        at(l1, 0.0),
        at(l2, 0.0),
        at(l3, 0.0),
        at(0.5 - mu2, h),
        at(0.5 - mu2, -h),
    ])
}
