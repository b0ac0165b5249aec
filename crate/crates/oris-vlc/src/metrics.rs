//! Figures of merit: received SNR (direct squared-sum form and the expanded
//! bilinear/quadratic decomposition over the power-placement products),
//! outage flag, a scene-wide SNR upper bound for big-M linearizations, and
//! optical energy efficiency.
//!
//! All SNR math is linear-scale; dB conversion happens at the configuration
//! boundary only.

use crate::channel::{self, ChannelMatrix};
use crate::scene::{ElementSet, NoiseModel, Scene};
use crate::Error;

/// Aggregate received signal `sum_l P_l H_l(beta)` before responsivity.
pub fn signal_sum(p: &[f64], owner: &[Option<u16>], cm: &ChannelMatrix) -> f64 {
    debug_assert_eq!(p.len(), cm.n_leds);
    (0..cm.n_leds)
        .map(|l| p[l] * channel::overall_gain(cm, l, owner))
        .sum()
}

/// Received electrical SNR from the squared photocurrent over the noise
/// power.
pub fn snr_direct(
    p: &[f64],
    owner: &[Option<u16>],
    cm: &ChannelMatrix,
    responsivity: f64,
    noise: &NoiseModel,
) -> f64 {
    let s = responsivity * signal_sum(p, owner, cm);
    s * s / (noise.n0 * noise.bandwidth)
}

/// The lifted products `varrho_{l,k} = P_l * beta_{l,k}` that linearize the
/// power-placement coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedProducts {
    /// `L x E` row-major.
    pub varrho: Vec<f64>,
    pub n_leds: usize,
    pub n_elements: usize,
}

impl LinearizedProducts {
    pub fn from_assignment(p: &[f64], owner: &[Option<u16>], n_elements: usize) -> Self {
        let n_leds = p.len();
        let mut varrho = vec![0.0; n_leds * n_elements];
        for (g, o) in owner.iter().enumerate() {
            if let Some(l) = o {
                varrho[*l as usize * n_elements + g] = p[*l as usize];
            }
        }
        Self {
            varrho,
            n_leds,
            n_elements,
        }
    }
}

/// SNR evaluated through the expanded sum of quadratic and bilinear terms in
/// `(P, varrho)`, never forming the per-LED overall gains.
///
/// Terms, in order: squared LoS responses; squared per-element NLoS
/// responses; same-LED cross-element products; same-LED LoS x NLoS products;
/// cross-LED LoS x LoS, LoS x NLoS (both orientations), and NLoS x NLoS
/// products.
pub fn snr_linearized(
    p: &[f64],
    lin: &LinearizedProducts,
    cm: &ChannelMatrix,
    responsivity: f64,
    noise: &NoiseModel,
) -> f64 {
    let nl = cm.n_leds;
    let ne = cm.n_elements;
    debug_assert_eq!(p.len(), nl);
    debug_assert_eq!(lin.n_leds, nl);
    debug_assert_eq!(lin.n_elements, ne);

    // Masked LoS responses and per-LED NLoS response sums.
    let mut u = vec![0.0; nl]; // I_l * R_l^LoS
    let mut w = vec![0.0; nl]; // sum_k I_{l,k} * R_{l,k}^NLoS
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    let mut t3 = 0.0;
    let mut t4 = 0.0;

    for l in 0..nl {
        let r_los = p[l] * cm.h_los[l];
        if cm.i_los[l] {
            u[l] = r_los;
            t1 += r_los * r_los;
        }
        let base = l * ne;
        let mut suffix = 0.0;
        let mut w_l = 0.0;
        // Iterate elements from the back so `suffix` always holds the sum of
        // the strictly-later masked responses.
        for g in (0..ne).rev() {
            if !cm.i_nlos[base + g] {
                continue;
            }
            let r = p[l] * cm.h_wall[base + g]
                + lin.varrho[base + g] * (cm.h_spec[base + g] - cm.h_wall[base + g]);
            t2 += r * r;
            t3 += 2.0 * r * suffix;
            suffix += r;
            w_l += r;
        }
        w[l] = w_l;
        t4 += 2.0 * u[l] * w_l;
    }

    let mut t5 = 0.0;
    let mut t6 = 0.0;
    let mut t7 = 0.0;
    let mut t8 = 0.0;
    for lp in 1..nl {
        for l in 0..lp {
            t5 += 2.0 * u[l] * u[lp];
            t6 += 2.0 * u[l] * w[lp];
            t7 += 2.0 * u[lp] * w[l];
            t8 += 2.0 * w[l] * w[lp];
        }
    }

    let total = t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8;
    responsivity * responsivity * total / (noise.n0 * noise.bandwidth)
}

/// Service indicator: true (no outage) iff the SNR meets the threshold,
/// boundary included.
pub fn outage_flag(gamma: f64, gamma_th: f64) -> bool {
    gamma >= gamma_th
}

/// Check the big-M linearization pair for a given `(gamma, b)` at slack
/// 1e-9: the conditional service definition rewritten as two linear
/// inequalities.
pub fn big_m_consistent(gamma: f64, b: bool, gamma_th: f64, m: f64) -> bool {
    let tol = 1e-9 * gamma_th.max(1.0);
    let bf = b as u8 as f64;
    gamma >= gamma_th - m * (1.0 - bf) - tol && gamma <= gamma_th + m * bf + tol
}

/// Scene-wide SNR upper bound over every user position, power allocation
/// respecting the per-point illuminance cap, and reflector placement.
///
/// Power: each LED alone at the cap allowed by the point directly beneath
/// it. Channel: LoS at the minimum possible distance plus an envelope over
/// every wall element, specular with summed minimum distances where the
/// element may be steerable, diffuse with the worst-case cosine product
/// otherwise.
pub fn big_m(scene: &Scene, elems: &ElementSet) -> f64 {
    let dh = scene.body.device_height;
    let a_pd = scene.receiver.pd_area;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut power_weighted_h = 0.0;
    let mut h_los_ub = 0.0f64;
    for lum in &scene.luminaires {
        let m = lum.lambert_index;
        let d_plane = lum.position.z - scene.sensing.height;
        let lux_below = scene.illum.k_ev * (m + 1.0) / (two_pi * d_plane * d_plane);
        let cap = scene.illum.e_max / lux_below;
        let d_min = lum.position.z - dh;
        h_los_ub = h_los_ub.max((m + 1.0) * a_pd / (two_pi * d_min * d_min));
        power_weighted_h += cap;
    }

    let m_max = scene
        .luminaires
        .iter()
        .map(|l| l.lambert_index)
        .fold(0.0f64, f64::max);
    let mut elem_sum = 0.0;
    for (g, elem) in elems.elements.iter().enumerate() {
        let d1_min = scene
            .luminaires
            .iter()
            .map(|l| l.position.dist(elem.center))
            .fold(f64::INFINITY, f64::min);
        let dz = (elem.center.z - dh).abs();
        let spec = if elems.oris_range.contains(&g) {
            scene.specular_reflectance * (m_max + 1.0) * a_pd
                / (two_pi * (d1_min + dz) * (d1_min + dz))
        } else {
            0.0
        };
        // Envelope of cos(out) * cos(pd) / d2^2 at fixed element-to-plane
        // height offset: 9 / (16 sqrt(3) dz^2).
        let diffuse = if dz > 0.0 {
            scene.wall_reflectance * (m_max + 1.0) * a_pd * elem.area
                * (9.0 / (16.0 * 3f64.sqrt()))
                / (two_pi * d1_min * d1_min * dz * dz)
        } else {
            0.0
        };
        elem_sum += spec.max(diffuse);
    }

    let h_ub = h_los_ub + elem_sum;
    let s = scene.receiver.responsivity * power_weighted_h * h_ub;
    s * s / (scene.noise.n0 * scene.noise.bandwidth)
}

/// Optical energy efficiency in bit/J: the capacity lower bound per watt of
/// total optical power when the threshold is met, zero in outage.
pub fn energy_efficiency(
    gamma: f64,
    total_power: f64,
    bandwidth: f64,
    gamma_th: f64,
) -> Result<f64, Error> {
    if gamma < gamma_th {
        return Ok(0.0);
    }
    if total_power <= 0.0 {
        return Err(Error::InvalidInput(
            "energy efficiency undefined at zero transmit power".into(),
        ));
    }
    let e = std::f64::consts::E;
    Ok(bandwidth / 2.0 * (1.0 + e / (2.0 * std::f64::consts::PI) * gamma).log2() / total_power)
}
