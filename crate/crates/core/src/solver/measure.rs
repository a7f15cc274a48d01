//! Spike metrics on gridded fields: per-site height, peak offset, half-width.
//!
//! Each site from the critical-point scan owns the cells nearest to it
//! (Voronoi basins, ties to the lower site index). The height is the basin
//! maximum; the half-width is the distance from the peak at which the field
//! first drops to height/e, located by linear interpolation between cell
//! centers and averaged over the axis directions that cross inside the
//! basin. Heights below the off threshold mark the site as off.

use super::Grid;
use crate::potential::CriticalPoint;

/// A site whose basin maximum is below this height carries no spike.
pub const OFF_HEIGHT: f64 = 1e-6;

/// Measured geometry of one site's spike (or its absence).
#[derive(Debug, Clone)]
pub struct SpikeMeasurement {
    /// Index into the site list passed to the measurement.
    pub site: usize,
    /// Largest field value in the site's basin.
    pub height: f64,
    /// Distance from the peak cell center to the site location.
    pub peak_offset: f64,
    /// Distance from the peak at which the field falls to height/e;
    /// NaN when no crossing lies inside the basin.
    pub half_width: f64,
    /// True when the basin maximum is below the off threshold.
    pub off: bool,
}

/// Index of the nearest site (squared Euclidean distance, ties low).
fn nearest_site(x: &[f64], sites: &[CriticalPoint]) -> usize {
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (s, site) in sites.iter().enumerate() {
        let d2: f64 =
            site.location.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
        if d2 < best_d2 {
            best_d2 = d2;
            best = s;
        }
    }
    best
}

/// Walk from the peak cell along one axis direction until the field drops
/// to the target, staying inside the basin; returns the interpolated
/// distance from the peak center.
#[allow(clippy::too_many_arguments)]
fn crossing_distance(
    grid: &Grid,
    field: &[f64],
    basin: &[usize],
    site: usize,
    peak: (usize, usize),
    axis: usize,
    step: isize,
    target: f64,
) -> Option<f64> {
    let (nx, _) = grid.shape();
    let cells_along = grid.cell_count(axis);
    let peak_along = if axis == 0 { peak.0 } else { peak.1 };
    let peak_coord = grid.center(axis, peak_along);
    let index_of = |along: usize| -> usize {
        if axis == 0 {
            along + peak.1 * nx
        } else {
            peak.0 + along * nx
        }
    };
    let mut prev_along = peak_along;
    let mut prev_value = field[index_of(peak_along)];
    loop {
        let next = prev_along as isize + step;
        if next < 0 || next >= cells_along as isize {
            return None;
        }
        let next = next as usize;
        let idx = index_of(next);
        if basin[idx] != site {
            return None;
        }
        let value = field[idx];
        if value <= target {
            let prev_coord = grid.center(axis, prev_along);
            let next_coord = grid.center(axis, next);
            let fraction = if prev_value == value {
                0.0
            } else {
                (prev_value - target) / (prev_value - value)
            };
            let crossing = prev_coord + fraction * (next_coord - prev_coord);
            return Some((crossing - peak_coord).abs());
        }
        prev_along = next;
        prev_value = value;
    }
}

/// Measure every site's spike on the field. One row per site, in order.
pub fn measure_spikes(
    grid: &Grid,
    field: &[f64],
    sites: &[CriticalPoint],
) -> Vec<SpikeMeasurement> {
    assert_eq!(field.len(), grid.cells(), "field length must match the grid");
    assert!(field.iter().all(|v| v.is_finite()), "field must be finite");
    if sites.is_empty() {
        return Vec::new();
    }
    let (nx, ny) = grid.shape();
    let basin: Vec<usize> =
        (0..grid.cells()).map(|i| nearest_site(&grid.cell_center(i), sites)).collect();

    let mut peaks: Vec<Option<(usize, f64)>> = vec![None; sites.len()];
    for (i, (&value, &owner)) in field.iter().zip(&basin).enumerate() {
        match peaks[owner] {
            Some((_, best)) if best >= value => {}
            _ => peaks[owner] = Some((i, value)),
        }
    }

    (0..sites.len())
        .map(|s| {
            let Some((peak_index, height)) = peaks[s] else {
                // A site whose basin is empty on this grid has nothing on it.
                return SpikeMeasurement {
                    site: s,
                    height: 0.0,
                    peak_offset: f64::NAN,
                    half_width: f64::NAN,
                    off: true,
                };
            };
            if height < OFF_HEIGHT {
                return SpikeMeasurement {
                    site: s,
                    height,
                    peak_offset: f64::NAN,
                    half_width: f64::NAN,
                    off: true,
                };
            }
            let center = grid.cell_center(peak_index);
            let peak_offset = sites[s]
                .location
                .iter()
                .zip(&center)
                .map(|(c, x)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt();
            let peak = (peak_index % nx, peak_index / nx);
            let target = height / std::f64::consts::E;
            let mut crossings = Vec::with_capacity(4);
            let axes = if ny > 1 { 2 } else { 1 };
            for axis in 0..axes {
                for step in [-1isize, 1] {
                    if let Some(d) = crossing_distance(
                        grid, field, &basin, s, peak, axis, step, target,
                    ) {
                        crossings.push(d);
                    }
                }
            }
            let half_width = if crossings.is_empty() {
                f64::NAN
            } else {
                crossings.iter().sum::<f64>() / crossings.len() as f64
            };
            SpikeMeasurement { site: s, height, peak_offset, half_width, off: false }
        })
        .collect()
}
