use std::path::Path;

use crate::error::Result;

use super::FliGrid;

/// Planar Tisserand parameter with respect to a perturber on a circle of radius `a_p`.
pub fn tisserand(a: f64, e: f64, a_p: f64) -> f64 {
    a_p / a + 2.0 * ((a / a_p) * (1.0 - e * e)).sqrt()
}

/// Both roots x = a/a_P of 1/x + 2√(c x) = t_value with c = 1 - e², or a
/// single root at the minimum when it touches.
fn roots(c: f64, t_value: f64) -> Vec<f64> {
    let g = |x: f64| 1.0 / x + 2.0 * (c * x).sqrt() - t_value;
    let dg = |x: f64| -1.0 / (x * x) + (c / x).sqrt();
    let x_min = c.powf(-1.0 / 3.0);
    let g_min = g(x_min);
    if g_min > 1e-14 * t_value {
        return Vec::new();
    }
    if g_min >= -1e-14 * t_value {
        return vec![x_min];
    }
    let solve = |mut lo: f64, mut hi: f64| {
        let increasing = g(hi) > g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (g(mid) > 0.0) == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let d = dg(x);
            if d == 0.0 {
                break;
            }
            let next = x - g(x) / d;
            if g(next).abs() >= g(x).abs() {
                break;
            }
            x = next;
        }
        x
    };
    // Inner root: g → +∞ as x → 0.
    let mut lo = x_min;
    while g(lo) <= 0.0 {
        lo *= 0.5;
    }
    let mut hi = x_min;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    vec![solve(lo, x_min), solve(x_min, hi)]
}

/// Points (a, e) with Tisserand parameter `t_value`, for `n` eccentricities
/// spread over `e_range`. The polyline runs along the inner branch from high
/// to low eccentricity and back out along the outer branch.
pub fn tisserand_curve(a_p: f64, t_value: f64, e_range: (f64, f64), n: usize) -> Vec<(f64, f64)> {
    let es: Vec<f64> = if n <= 1 {
        vec![e_range.0]
    } else {
        (0..n)
            .map(|i| e_range.0 + (e_range.1 - e_range.0) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for &e in &es {
        let r = roots(1.0 - e * e, t_value);
        match r.len() {
            1 => outer.push((r[0] * a_p, e)),
            2 => {
                inner.push((r[0] * a_p, e));
                outer.push((r[1] * a_p, e));
            }
            _ => {}
        }
    }
    inner.reverse();
    inner.extend(outer);
    inner
}

pub fn write_polyline_csv(path: impl AsRef<Path>, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["a", "e"])?;
    for (a, e) in points {
        w.write_record([a.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandStats {
    pub band_mean: f64,
    pub band_cells: usize,
    pub median: f64,
}

/// Mean FLI over cells within `half_width` columns of the Tisserand curve in
/// each eccentricity row, compared with the grid median.
pub fn tisserand_band(grid: &FliGrid, a_p: f64, t_value: f64, half_width: usize) -> BandStats {
    let a = grid.spec.a_values();
    let n_a = grid.spec.n_a;
    let mut mask = vec![false; grid.values.len()];
    for (ie, &e) in grid.spec.e_values().iter().enumerate() {
        for x in roots(1.0 - e * e, t_value) {
            let a_curve = x * a_p;
            if a_curve < a[0] || a_curve > a[n_a - 1] {
                continue;
            }
            let nearest = (0..n_a)
                .min_by(|&i, &j| (a[i] - a_curve).abs().total_cmp(&(a[j] - a_curve).abs()))
                .unwrap();
            let lo = nearest.saturating_sub(half_width);
            let hi = (nearest + half_width).min(n_a - 1);
            for ia in lo..=hi {
                mask[ie * n_a + ia] = true;
            }
        }
    }
    let band: Vec<f64> = grid
        .values
        .iter()
        .zip(&mask)
        .filter_map(|(v, &m)| m.then_some(*v))
        .collect();
    BandStats {
        band_mean: band.iter().sum::<f64>() / band.len().max(1) as f64,
        band_cells: band.len(),
        median: grid.median(),
    }
}
