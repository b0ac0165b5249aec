//! Photometric quantities and the lighting-standard constraint system:
//! average illuminance floor, per-point cap, and uniformity with its
//! linearization through the auxiliary minimum-illuminance variable.
//!
//! Illuminance is a property of the lighting installation: it uses the
//! unblocked LoS field only (no reflections, no occupants) and a hemispheric
//! sensing aperture, so it is invariant to reflector placement, user pose
//! and the comms receiver's FoV.

use crate::optimizer::lp::LpRow;
use crate::scene::{IlluminationConstraints, Scene};

/// Work-plane sensing lattice with precomputed per-point, per-LED LoS gains.
#[derive(Debug, Clone)]
pub struct SensingGrid {
    /// Point coordinates (x, y) on the work plane, row-major over y then x.
    pub points: Vec<(f64, f64)>,
    /// Plane height, m.
    pub height: f64,
    /// Grid pitch, m.
    pub spacing: f64,
    pub n_leds: usize,
    /// `N x L` row-major unblocked LoS gains (hemispheric aperture).
    pub gains: Vec<f64>,
    /// lux per (watt * gain): luminous efficacy over PD area.
    pub lux_factor: f64,
}

/// Photometric summary of a power allocation over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlluminationSummary {
    pub e_avg: f64,
    pub e_min_point: f64,
    pub e_max_point: f64,
    pub uniformity: f64,
}

/// Build the sensing lattice for a scene. Points cover the full floor
/// footprint including the boundary.
pub fn build_sensing_grid(scene: &Scene) -> SensingGrid {
    let spacing = scene.sensing.spacing;
    let nx = (scene.room.width / spacing).round() as usize + 1;
    let ny = (scene.room.depth / spacing).round() as usize + 1;
    let mut points = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            points.push((ix as f64 * spacing, iy as f64 * spacing));
        }
    }
    let n_leds = scene.luminaires.len();
    let mut gains = Vec::with_capacity(points.len() * n_leds);
    for &(px, py) in &points {
        for lum in &scene.luminaires {
            let dx = lum.position.x - px;
            let dy = lum.position.y - py;
            let dz = lum.position.z - scene.sensing.height;
            let d2 = dx * dx + dy * dy + dz * dz;
            let d = d2.sqrt();
            let cos = dz / d;
            let g = if cos > 0.0 {
                (lum.lambert_index + 1.0) * scene.receiver.pd_area
                    / (2.0 * std::f64::consts::PI * d2)
                    * cos.powf(lum.lambert_index)
                    * cos
            } else {
                0.0
            };
            gains.push(g);
        }
    }
    SensingGrid {
        points,
        height: scene.sensing.height,
        spacing,
        n_leds,
        gains,
        lux_factor: scene.illum.k_ev / scene.receiver.pd_area,
    }
}

impl SensingGrid {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// lux contributed per watt by LED `l` at point `n`.
    #[inline]
    pub fn lux_per_watt(&self, n: usize, l: usize) -> f64 {
        self.lux_factor * self.gains[n * self.n_leds + l]
    }
}

/// Illuminance at sensing point `n` under allocation `p`.
///
/// Panics when `n` is out of range or `p` has the wrong length.
pub fn illuminance_point(grid: &SensingGrid, p: &[f64], n: usize) -> f64 {
    assert!(n < grid.n_points(), "sensing point index out of range");
    assert_eq!(p.len(), grid.n_leds);
    (0..grid.n_leds).map(|l| p[l] * grid.lux_per_watt(n, l)).sum()
}

/// Average, extremes and uniformity of the illuminance field under `p`.
pub fn illumination_summary(grid: &SensingGrid, p: &[f64]) -> IlluminationSummary {
    assert!(grid.n_points() > 0);
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for n in 0..grid.n_points() {
        let e = illuminance_point(grid, p, n);
        sum += e;
        min = min.min(e);
        max = max.max(e);
    }
    let e_avg = sum / grid.n_points() as f64;
    IlluminationSummary {
        e_avg,
        e_min_point: min,
        e_max_point: max,
        uniformity: if e_avg > 0.0 { min / e_avg } else { 0.0 },
    }
}

/// Linear inequality system over the variables `(P_0..P_{L-1}, E_min)`, in
/// `a . x <= b` form with implicit nonnegativity bounds.
///
/// Emits, in order: the average-illuminance floor, the uniformity link
/// `E_min >= U_min * E_avg`, the N rows tying `E_min` under every point, and
/// the N per-point caps; `2N + 2` rows in total.
pub fn constraint_rows(grid: &SensingGrid, cfg: &IlluminationConstraints) -> Vec<LpRow> {
    let n_points = grid.n_points();
    let n_leds = grid.n_leds;
    let n_vars = n_leds + 1;
    let inv_n = 1.0 / n_points as f64;

    let mut avg = vec![0.0; n_leds];
    for n in 0..n_points {
        for l in 0..n_leds {
            avg[l] += grid.lux_per_watt(n, l) * inv_n;
        }
    }

    let mut rows = Vec::with_capacity(2 * n_points + 2);

    // Average floor: -avg . P <= -E_th
    let mut c5 = vec![0.0; n_vars];
    for l in 0..n_leds {
        c5[l] = -avg[l];
    }
    rows.push(LpRow::new(c5, -cfg.e_th));

    // Uniformity link: U_min * avg . P - E_min <= 0
    let mut c6 = vec![0.0; n_vars];
    for l in 0..n_leds {
        c6[l] = cfg.u_min * avg[l];
    }
    c6[n_leds] = -1.0;
    rows.push(LpRow::new(c6, 0.0));

    // E_min below every point: E_min - E_v(n) <= 0
    for n in 0..n_points {
        let mut c = vec![0.0; n_vars];
        for l in 0..n_leds {
            c[l] = -grid.lux_per_watt(n, l);
        }
        c[n_leds] = 1.0;
        rows.push(LpRow::new(c, 0.0));
    }

    // Per-point cap: E_v(n) <= E_max
    for n in 0..n_points {
        let mut c = vec![0.0; n_vars];
        for l in 0..n_leds {
            c[l] = grid.lux_per_watt(n, l);
        }
        rows.push(LpRow::new(c, cfg.e_max));
    }

    rows
}
