//! Spatial primitives: points and segments, finite-cylinder occlusion tests,
//! wall reflector grids, image-method specular reflection points, and the
//! closed-form NLoS coverage limits for fixed mirrors and steerable (ORIS)
//! reflector elements.
//!
//! Conventions: right-handed axes, floor plane at z = 0, all lengths in
//! meters, all angles in radians.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Sub};

use crate::Error;

/// A point (or free vector) in room coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Directed straight segment used as a LoS/NLoS ray carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point3,
    pub b: Point3,
}

impl Segment {
    /// Endpoints must differ.
    pub fn new(a: Point3, b: Point3) -> Self {
        debug_assert!(a != b, "degenerate segment");
        Self { a, b }
    }
}

/// Upright opaque cylinder modeling the user's body. `base` sits on the
/// floor; the solid spans `base.z ..= base.z + height` vertically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyCylinder {
    pub base: Point3,
    pub radius: f64,
    pub height: f64,
}

/// Body dimensions and device placement shared by every sampled user.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BodyConfig {
    /// Body cylinder radius, m.
    pub radius: f64,
    /// Body cylinder height, m.
    pub height: f64,
    /// Horizontal distance from the body axis to the held device, m.
    pub pd_offset: f64,
    /// Height of the device's photodetector above the floor, m.
    pub device_height: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self {
            radius: 0.15,
            height: 1.75,
            pd_offset: 0.3,
            device_height: 1.0,
        }
    }
}

/// A user: body cylinder plus the photodetector position held `pd_offset`
/// meters from the body axis along `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPose {
    pub body: BodyCylinder,
    pub pd_position: Point3,
    /// Horizontal facing direction, `[0, 2π)`.
    pub heading: f64,
}

impl UserPose {
    pub fn standing(center_x: f64, center_y: f64, heading: f64, cfg: &BodyConfig) -> Self {
        let body = BodyCylinder {
            base: Point3::new(center_x, center_y, 0.0),
            radius: cfg.radius,
            height: cfg.height,
        };
        let pd_position = Point3::new(
            center_x + cfg.pd_offset * heading.cos(),
            center_y + cfg.pd_offset * heading.sin(),
            cfg.device_height,
        );
        Self {
            body,
            pd_position,
            heading,
        }
    }
}

/// True iff the segment intersects the closed solid cylinder (lateral
/// surface, caps or interior). Tangential grazing counts as blocked.
pub fn segment_blocked(seg: &Segment, body: &BodyCylinder) -> bool {
    let d = seg.b - seg.a;
    let z0 = body.base.z;
    let z1 = body.base.z + body.height;

    // Clip the parameter range to the horizontal slab of the cylinder.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if d.z.abs() > 0.0 {
        let t0 = (z0 - seg.a.z) / d.z;
        let t1 = (z1 - seg.a.z) / d.z;
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
    } else if seg.a.z < z0 || seg.a.z > z1 {
        return false;
    }
    if lo > hi {
        return false;
    }

    // Minimize squared horizontal distance to the axis over [lo, hi].
    let ax = seg.a.x - body.base.x;
    let ay = seg.a.y - body.base.y;
    let qa = d.x * d.x + d.y * d.y;
    let qb = 2.0 * (ax * d.x + ay * d.y);
    let q = |t: f64| {
        let px = ax + t * d.x;
        let py = ay + t * d.y;
        px * px + py * py
    };
    let mut min_q = q(lo).min(q(hi));
    if qa > 0.0 {
        let t_star = -qb / (2.0 * qa);
        if t_star > lo && t_star < hi {
            min_q = min_q.min(q(t_star));
        }
    }
    min_q <= body.radius * body.radius
}

/// The four vertical room walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallId {
    /// Plane x = 0, interior at larger x.
    XMin,
    /// Plane x = room width, interior at smaller x.
    XMax,
    /// Plane y = 0, interior at larger y.
    YMin,
    /// Plane y = room depth, interior at smaller y.
    YMax,
}

impl WallId {
    pub const ALL: [WallId; 4] = [WallId::XMin, WallId::XMax, WallId::YMin, WallId::YMax];

    /// Unit normal pointing into the room.
    pub fn inward_normal(self) -> Point3 {
        match self {
            WallId::XMin => Point3::new(1.0, 0.0, 0.0),
            WallId::XMax => Point3::new(-1.0, 0.0, 0.0),
            WallId::YMin => Point3::new(0.0, 1.0, 0.0),
            WallId::YMax => Point3::new(0.0, -1.0, 0.0),
        }
    }

    /// The coordinate held fixed on this wall's plane.
    fn plane_coord(self, p: Point3) -> f64 {
        match self {
            WallId::XMin | WallId::XMax => p.x,
            WallId::YMin | WallId::YMax => p.y,
        }
    }

    /// The in-plane horizontal coordinate.
    fn horiz_coord(self, p: Point3) -> f64 {
        match self {
            WallId::XMin | WallId::XMax => p.y,
            WallId::YMin | WallId::YMax => p.x,
        }
    }
}

/// A wall partitioned into `k_y` (horizontal) x `k_z` (vertical) equal
/// rectangular reflector elements; element k = iz * k_y + iy.
#[derive(Debug, Clone, PartialEq)]
pub struct WallGrid {
    pub wall: WallId,
    /// Fixed coordinate of the wall plane (0 or the room extent).
    pub plane: f64,
    /// Horizontal extent of the wall, m.
    pub horiz_extent: f64,
    /// Vertical extent of the wall, m.
    pub vert_extent: f64,
    pub k_y: usize,
    pub k_z: usize,
}

impl WallGrid {
    pub fn new(wall: WallId, plane: f64, horiz_extent: f64, vert_extent: f64, k_y: usize, k_z: usize) -> Self {
        assert!(k_y > 0 && k_z > 0);
        assert!(horiz_extent > 0.0 && vert_extent > 0.0);
        Self {
            wall,
            plane,
            horiz_extent,
            vert_extent,
            k_y,
            k_z,
        }
    }

    pub fn element_count(&self) -> usize {
        self.k_y * self.k_z
    }

    pub fn element_width(&self) -> f64 {
        self.horiz_extent / self.k_y as f64
    }

    pub fn element_height(&self) -> f64 {
        self.vert_extent / self.k_z as f64
    }

    pub fn element_area(&self) -> f64 {
        self.element_width() * self.element_height()
    }

    /// Center of element k in room coordinates.
    pub fn element_center(&self, k: usize) -> Point3 {
        let iy = k % self.k_y;
        let iz = k / self.k_y;
        let h = (iy as f64 + 0.5) * self.element_width();
        let z = (iz as f64 + 0.5) * self.element_height();
        self.wall_point(h, z)
    }

    /// Map in-wall coordinates (horizontal offset, height) to a room point.
    pub fn wall_point(&self, horiz: f64, z: f64) -> Point3 {
        match self.wall {
            WallId::XMin | WallId::XMax => Point3::new(self.plane, horiz, z),
            WallId::YMin | WallId::YMax => Point3::new(horiz, self.plane, z),
        }
    }

    /// Element containing a point known to lie on the wall rectangle.
    pub fn element_index_of(&self, p: Point3) -> Option<usize> {
        let h = self.wall.horiz_coord(p);
        if h < 0.0 || h > self.horiz_extent || p.z < 0.0 || p.z > self.vert_extent {
            return None;
        }
        let iy = ((h / self.element_width()) as usize).min(self.k_y - 1);
        let iz = ((p.z / self.element_height()) as usize).min(self.k_z - 1);
        Some(iz * self.k_y + iy)
    }

    /// Signed distance from the wall plane, positive on the interior side.
    pub fn interior_depth(&self, p: Point3) -> f64 {
        let n = self.wall.inward_normal();
        let c = self.wall.plane_coord(p);
        (c - self.plane) * (n.x + n.y)
    }
}

/// Image-method specular reflection point on a wall.
///
/// Reflects `pd` across the wall plane and intersects the segment
/// `led -> image(pd)` with the plane. When the intersection falls inside the
/// wall rectangle, returns it together with its containing element index.
/// The construction makes the reflection angles on both sides of the wall
/// normal equal, and equivalently makes the LED-side irradiance angle (from
/// the LED's downward normal) equal the PD-side incidence angle (from the
/// PD's upward normal).
///
/// Both endpoints must lie strictly on the interior side of the wall;
/// otherwise `None`.
pub fn specular_point(led: Point3, pd: Point3, wall: &WallGrid) -> Option<(Point3, usize)> {
    if wall.interior_depth(led) <= 0.0 || wall.interior_depth(pd) <= 0.0 {
        return None;
    }
    let lc = wall.wall.plane_coord(led);
    let pc = wall.wall.plane_coord(pd);
    let image_c = 2.0 * wall.plane - pc;
    let denom = image_c - lc;
    // led interior, image exterior: the crossing parameter is always in (0,1).
    let t = (wall.plane - lc) / denom;
    if !(t > 0.0 && t < 1.0) {
        return None;
    }
    let image = match wall.wall {
        WallId::XMin | WallId::XMax => Point3::new(image_c, pd.y, pd.z),
        WallId::YMin | WallId::YMax => Point3::new(pd.x, image_c, pd.z),
    };
    let p = led + (image - led) * t;
    wall.element_index_of(p).map(|k| (p, k))
}

/// Reflector kind for the coverage-limit formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    Mirror,
    Oris,
}

/// Maximum wall-perpendicular user distance that still receives an NLoS
/// specular contribution, for a receiver of FoV semi-angle `psi` at height
/// `z_u` and an LED at perpendicular distance `led.x` and height `led.z`
/// from the reflector wall.
///
/// A fixed mirror's reach shrinks as the LED moves away from the wall; a
/// steerable element's reach is independent of the LED's horizontal
/// location. Results are clamped at zero.
pub fn coverage_limit(mode: CoverageMode, led: Point3, z_u: f64, psi: f64) -> Result<f64, Error> {
    if !(psi > 0.0 && psi < FRAC_PI_2) {
        return Err(Error::InvalidConfig(format!(
            "fov semi-angle must lie in (0, pi/2) rad, got {psi}"
        )));
    }
    debug_assert!(z_u < led.z, "receiver must sit below the luminaire");
    let reach = match mode {
        CoverageMode::Oris => (led.z - z_u) * psi.tan(),
        CoverageMode::Mirror => {
            // Reflecting element height at which the LED-side irradiance
            // angle equals psi; the covered area is bounded by the line of
            // slope -cot(psi) through it.
            let z_k = led.z - led.x / psi.tan();
            (z_u - z_k) / -(FRAC_PI_2 - psi).tan()
        }
    };
    Ok(reach.max(0.0))
}
