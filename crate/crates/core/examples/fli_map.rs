//! A small FLI map around Jupiter's orbit in the Sun–Jupiter CR3BP, with the
//! T = 3 Tisserand band compared to the grid median.
use crnbp::fli::{scan, tisserand_band, GridSpec};
use crnbp::propagate::IntegratorSettings;
use crnbp::SystemModel;

fn main() -> crnbp::Result<()> {
    let model = SystemModel::cr3bp(9.537e-4)?;
    let spec = GridSpec {
        a_min: 0.5,
        a_max: 1.5,
        n_a: 16,
        e_min: 0.0,
        e_max: 0.6,
        n_e: 10,
        horizon: 60.0,
        phase_offset: 1.0,
        periapsis_longitude: 0.0,
        epoch: 0.0,
        checkpoints: 4,
    };
    let grid = scan(&model, &spec, &IntegratorSettings::default().with_tolerance(1e-10))?;
    for (ie, e) in spec.e_values().iter().enumerate() {
        let row: String = (0..spec.n_a).map(|ia| shade(grid.at(ie, ia))).collect();
        println!("e {e:.2} |{row}|");
    }
    let band = tisserand_band(&grid, 1.0, 3.0, 1);
    println!(
        "median {:.2}, band mean {:.2} over {} cells, monotone {}",
        band.median,
        band.band_mean,
        band.band_cells,
        grid.monotone_in_horizon()
    );
    Ok(())
}

fn shade(v: f64) -> char {
    match v {
        v if v < 4.0 => ' ',
        v if v < 6.0 => '.',
        v if v < 9.0 => '+',
        _ => '#',
    }
}
