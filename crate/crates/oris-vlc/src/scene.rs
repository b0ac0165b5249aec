//! Scenario description: room box, luminaire lattice, receiver front end,
//! wall reflector grids and material coefficients, noise, lighting limits.
//!
//! `Scene::default()` is the reference office scenario used throughout the
//! test suites: a 4 x 4 x 3 m room, four ceiling LEDs in a 2-by-2 lattice,
//! one ORIS-capable wall gridded 30 x 15, and standard office lighting
//! requirements (500 lux average, 800 lux cap, uniformity 0.5).

use serde::{Deserialize, Serialize};

use crate::geometry::{BodyConfig, Point3, WallGrid, WallId};
use crate::Error;

/// Axis-aligned room; x spans `0..width`, y spans `0..depth`, z `0..height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomDims {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
}

/// A ceiling LED modeled as a downward-oriented Lambertian point source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Luminaire {
    pub position: Point3,
    /// Half-power semi-angle, rad.
    pub half_power_semiangle: f64,
    /// Lambertian mode number derived from the half-power semi-angle.
    pub lambert_index: f64,
}

impl Luminaire {
    pub fn new(position: Point3, half_power_semiangle: f64) -> Self {
        let lambert_index = -1.0 / half_power_semiangle.cos().log2();
        Self {
            position,
            half_power_semiangle,
            lambert_index,
        }
    }
}

/// Upward-oriented photodetector front end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    /// Active PD area, m^2.
    pub pd_area: f64,
    /// Field-of-view semi-angle, rad.
    pub fov_semiangle: f64,
    /// Responsivity, A/W.
    pub responsivity: f64,
}

/// Receiver-side AWGN model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Noise power spectral density, W/Hz.
    pub n0: f64,
    /// Communication bandwidth, Hz.
    pub bandwidth: f64,
}

/// Lighting-standard limits plus the luminous efficacy used to convert
/// optical watts to photometric units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminationConstraints {
    /// Minimum average illuminance, lux.
    pub e_th: f64,
    /// Maximum illuminance allowed at any sensing point, lux.
    pub e_max: f64,
    /// Minimum illuminance uniformity (min/avg), in (0, 1].
    pub u_min: f64,
    /// Luminous efficacy, lm/W.
    pub k_ev: f64,
}

impl Default for IlluminationConstraints {
    fn default() -> Self {
        Self {
            e_th: 500.0,
            e_max: 800.0,
            u_min: 0.5,
            k_ev: 280.0,
        }
    }
}

/// Work-plane sensing lattice parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingSpec {
    /// Grid pitch, m; must divide both floor extents.
    pub spacing: f64,
    /// Work-plane height, m.
    pub height: f64,
}

impl Default for SensingSpec {
    fn default() -> Self {
        Self {
            spacing: 0.25,
            height: 1.0,
        }
    }
}

/// What the reflector-capable wall is equipped with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectorMode {
    /// Plain walls everywhere; every NLoS bounce is diffuse.
    None,
    /// Fixed flat mirrors flush with the wall.
    Mirror,
    /// Steerable mirror elements (optimally oriented toward the user).
    Oris,
}

/// One wall reflector element, flattened into the scene-wide element list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallElement {
    pub wall: WallId,
    /// Index within its wall's grid.
    pub local_index: usize,
    pub center: Point3,
    pub area: f64,
    pub normal: Point3,
}

/// All wall elements of the scene in a fixed order: the ORIS-capable wall's
/// grid first, then the remaining walls in `WallId::ALL` order.
#[derive(Debug, Clone)]
pub struct ElementSet {
    pub elements: Vec<WallElement>,
    /// Contiguous range of global indices belonging to the ORIS wall.
    pub oris_range: std::ops::Range<usize>,
}

/// Full scenario description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub room: RoomDims,
    pub luminaires: Vec<Luminaire>,
    pub receiver: Receiver,
    /// Diffuse reflection coefficient of plain wall material.
    pub wall_reflectance: f64,
    /// Specular reflection coefficient of mirror/ORIS elements.
    pub specular_reflectance: f64,
    /// Horizontal element count per wall.
    pub grid_ky: usize,
    /// Vertical element count per wall.
    pub grid_kz: usize,
    /// The single wall that may host specular elements.
    pub oris_wall: WallId,
    pub mode: ReflectorMode,
    pub noise: NoiseModel,
    pub illum: IlluminationConstraints,
    pub body: BodyConfig,
    pub sensing: SensingSpec,
}

impl Default for Scene {
    fn default() -> Self {
        let phi_half = 80f64.to_radians();
        let led_z = 3.0;
        let positions = [(1.0, 1.0), (1.0, 3.0), (3.0, 1.0), (3.0, 3.0)];
        Scene {
            room: RoomDims {
                width: 4.0,
                depth: 4.0,
                height: 3.0,
            },
            luminaires: positions
                .iter()
                .map(|&(x, y)| Luminaire::new(Point3::new(x, y, led_z), phi_half))
                .collect(),
            receiver: Receiver {
                pd_area: 1e-4,
                fov_semiangle: 50f64.to_radians(),
                responsivity: 1.0,
            },
            wall_reflectance: 0.2,
            specular_reflectance: 0.99,
            grid_ky: 30,
            grid_kz: 15,
            oris_wall: WallId::XMin,
            mode: ReflectorMode::Oris,
            noise: NoiseModel {
                n0: 2.5e-20,
                bandwidth: 20e6,
            },
            illum: IlluminationConstraints::default(),
            body: BodyConfig::default(),
            sensing: SensingSpec::default(),
        }
    }
}

impl Scene {
    pub fn wall_grid(&self, wall: WallId) -> WallGrid {
        let (plane, horiz) = match wall {
            WallId::XMin => (0.0, self.room.depth),
            WallId::XMax => (self.room.width, self.room.depth),
            WallId::YMin => (0.0, self.room.width),
            WallId::YMax => (self.room.depth, self.room.width),
        };
        WallGrid::new(wall, plane, horiz, self.room.height, self.grid_ky, self.grid_kz)
    }

    /// Flatten all four wall grids, ORIS wall first.
    pub fn element_set(&self) -> ElementSet {
        let mut walls = vec![self.oris_wall];
        walls.extend(WallId::ALL.iter().copied().filter(|w| *w != self.oris_wall));
        let mut elements = Vec::new();
        for wall in walls {
            let grid = self.wall_grid(wall);
            let area = grid.element_area();
            let normal = wall.inward_normal();
            for k in 0..grid.element_count() {
                elements.push(WallElement {
                    wall,
                    local_index: k,
                    center: grid.element_center(k),
                    area,
                    normal,
                });
            }
        }
        let per_wall = self.grid_ky * self.grid_kz;
        ElementSet {
            elements,
            oris_range: 0..per_wall,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.room.width > 0.0 && self.room.depth > 0.0 && self.room.height > 0.0) {
            return fail("room dimensions must be positive".into());
        }
        if self.luminaires.is_empty() {
            return fail("at least one luminaire is required".into());
        }
        for (i, lum) in self.luminaires.iter().enumerate() {
            if !(lum.half_power_semiangle > 0.0 && lum.half_power_semiangle < std::f64::consts::FRAC_PI_2) {
                return fail(format!("luminaire {i}: half-power semi-angle out of (0, pi/2)"));
            }
            if !(lum.lambert_index > 0.0) {
                return fail(format!("luminaire {i}: nonpositive Lambertian index"));
            }
            if !lum.position.is_finite() || lum.position.z <= self.sensing.height {
                return fail(format!("luminaire {i}: must sit above the work plane"));
            }
        }
        if !(self.receiver.pd_area > 0.0) {
            return fail("PD area must be positive".into());
        }
        if !(self.receiver.fov_semiangle > 0.0 && self.receiver.fov_semiangle < std::f64::consts::FRAC_PI_2) {
            return fail("receiver FoV semi-angle out of (0, pi/2)".into());
        }
        if !(self.receiver.responsivity > 0.0) {
            return fail("responsivity must be positive".into());
        }
        for (name, r) in [("wall", self.wall_reflectance), ("specular", self.specular_reflectance)] {
            if !(r > 0.0 && r <= 1.0) {
                return fail(format!("{name} reflection coefficient out of (0, 1]"));
            }
        }
        if self.grid_ky == 0 || self.grid_kz == 0 {
            return fail("wall grid must have at least one element per axis".into());
        }
        if !(self.noise.n0 > 0.0 && self.noise.bandwidth > 0.0) {
            return fail("noise PSD and bandwidth must be positive".into());
        }
        if !(self.illum.e_th > 0.0 && self.illum.e_th <= self.illum.e_max) {
            return fail("need 0 < E_th <= E_max".into());
        }
        if !(self.illum.u_min > 0.0 && self.illum.u_min <= 1.0) {
            return fail("uniformity floor out of (0, 1]".into());
        }
        if !(self.illum.k_ev > 0.0) {
            return fail("luminous efficacy must be positive".into());
        }
        if !(self.body.radius > 0.0 && self.body.height > 0.0) {
            return fail("body cylinder dimensions must be positive".into());
        }
        if !(self.sensing.spacing > 0.0) {
            return fail("sensing spacing must be positive".into());
        }
        for (name, extent) in [("width", self.room.width), ("depth", self.room.depth)] {
            let cells = extent / self.sensing.spacing;
            if (cells - cells.round()).abs() > 1e-9 {
                return fail(format!("sensing spacing must divide the room {name}"));
            }
        }
        let inset = self.body.radius.max(self.body.pd_offset);
        if 2.0 * inset >= self.room.width.min(self.room.depth) {
            return fail("room too small for the body model".into());
        }
        Ok(())
    }
}
