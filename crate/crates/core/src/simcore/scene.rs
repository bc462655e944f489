//! The room, landing platform and cuboid obstacles, plus the JSON scene file.

use serde::{Deserialize, Serialize};

use super::geometry::{rotate_body_to_world, Pose, Vec3};
use super::SimError;

/// Side length of the square landing platform.
pub const PLATFORM_SIDE: f64 = 0.60;
/// Thickness of the platform slab; its top is the landing support height.
pub const PLATFORM_THICKNESS: f64 = 0.01;
/// Collision box of the drone, used for footprint checks and swept rays.
pub const DEFAULT_DRONE_HALF_EXTENTS: Vec3 = Vec3::new(0.09, 0.09, 0.025);

pub const FLOOR_ALBEDO: f64 = 0.75;
pub const WALL_ALBEDO: f64 = 0.85;
pub const CEILING_ALBEDO: f64 = 0.9;
pub const CUBOID_ALBEDO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomDims {
    pub w: f64,
    pub d: f64,
    pub h: f64,
}

impl Default for RoomDims {
    fn default() -> Self {
        Self {
            w: 3.3,
            d: 3.3,
            h: 2.5,
        }
    }
}

impl RoomDims {
    pub fn contains(&self, p: Vec3) -> bool {
        (0.0..=self.w).contains(&p.x) && (0.0..=self.d).contains(&p.y) && (0.0..=self.h).contains(&p.z)
    }

    pub fn min_dimension(&self) -> f64 {
        self.w.min(self.d).min(self.h)
    }
}

/// A yaw-rotated rectangle on the floor plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub cx: f64,
    pub cy: f64,
    pub yaw: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Footprint {
    pub fn corners(&self) -> [(f64, f64); 4] {
        let mut out = [(0.0, 0.0); 4];
        for (i, (sx, sy)) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].into_iter().enumerate() {
            let v = rotate_body_to_world(Vec3::new(sx * self.hx, sy * self.hy, 0.0), self.yaw);
            out[i] = (self.cx + v.x, self.cy + v.y);
        }
        out
    }

    pub fn inside_room(&self, room: &RoomDims) -> bool {
        self.corners()
            .iter()
            .all(|&(x, y)| (0.0..=room.w).contains(&x) && (0.0..=room.d).contains(&y))
    }

    /// Separating-axis test between two oriented rectangles. Touching edges
    /// count as overlap.
    pub fn overlaps(&self, other: &Footprint) -> bool {
        let axes = [self.yaw, self.yaw + std::f64::consts::FRAC_PI_2, other.yaw, other.yaw + std::f64::consts::FRAC_PI_2];
        let a = self.corners();
        let b = other.corners();
        for theta in axes {
            let (s, c) = theta.sin_cos();
            let project = |pts: &[(f64, f64); 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
                    let p = x * c + y * s;
                    (lo.min(p), hi.max(p))
                })
            };
            let (alo, ahi) = project(&a);
            let (blo, bhi) = project(&b);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
        true
    }
}

/// Yaw-rotated box obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub center: Vec3,
    pub yaw: f64,
    pub half_extents: Vec3,
    /// Gray level in `[0, 1]`.
    pub albedo: f64,
}

impl Cuboid {
    pub fn footprint(&self) -> Footprint {
        Footprint {
            cx: self.center.x,
            cy: self.center.y,
            yaw: self.yaw,
            hx: self.half_extents.x,
            hy: self.half_extents.y,
        }
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandingPlatform {
    /// Center of the slab; `z` is half its thickness.
    pub center: Vec3,
    pub yaw: f64,
    pub side: f64,
    pub thickness: f64,
}

impl LandingPlatform {
    pub fn new(cx: f64, cy: f64, yaw: f64) -> Self {
        Self {
            center: Vec3::new(cx, cy, PLATFORM_THICKNESS / 2.0),
            yaw,
            side: PLATFORM_SIDE,
            thickness: PLATFORM_THICKNESS,
        }
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            cx: self.center.x,
            cy: self.center.y,
            yaw: self.yaw,
            hx: self.side / 2.0,
            hy: self.side / 2.0,
        }
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.thickness / 2.0
    }

    /// The slab as a solid box, for ray queries.
    pub fn as_cuboid(&self) -> Cuboid {
        Cuboid {
            center: self.center,
            yaw: self.yaw,
            half_extents: Vec3::new(self.side / 2.0, self.side / 2.0, self.thickness / 2.0),
            albedo: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub room: RoomDims,
    pub platform: LandingPlatform,
    pub cuboids: Vec<Cuboid>,
    /// Always on the floor.
    pub drone_start: Pose,
}

impl Scene {
    pub fn empty(room: RoomDims, platform: LandingPlatform, drone_start: Pose) -> Self {
        Self {
            room,
            platform,
            cuboids: Vec::new(),
            drone_start,
        }
    }

    pub fn start_footprint(&self, drone_half: Vec3) -> Footprint {
        Footprint {
            cx: self.drone_start.position.x,
            cy: self.drone_start.position.y,
            yaw: self.drone_start.yaw,
            hx: drone_half.x,
            hy: drone_half.y,
        }
    }

    pub fn total_cuboid_volume(&self) -> f64 {
        self.cuboids.iter().map(Cuboid::volume).sum()
    }

    /// Checks every scene invariant against the default drone footprint.
    pub fn validate(&self) -> Result<(), SimError> {
        self.validate_with(DEFAULT_DRONE_HALF_EXTENTS)
    }

    pub fn validate_with(&self, drone_half: Vec3) -> Result<(), SimError> {
        let room = &self.room;
        let bad = |msg: String| Err(SimError::InvalidScene(msg));
        if !(room.w > 0.0 && room.d > 0.0 && room.h > 0.0) {
            return bad(format!("room dimensions must be positive, got {room:?}"));
        }
        if !self.platform.footprint().inside_room(room) {
            return bad("platform footprint leaves the room".into());
        }
        let start = self.start_footprint(drone_half);
        if self.drone_start.position.z != 0.0 || !start.inside_room(room) {
            return bad("drone start must be on the floor inside the room".into());
        }
        for (i, c) in self.cuboids.iter().enumerate() {
            let he = c.half_extents;
            if !(he.x > 0.0 && he.y > 0.0 && he.z > 0.0) || !c.center.is_finite() {
                return bad(format!("cuboid {i} has non-positive extents"));
            }
            if !(0.0..=1.0).contains(&c.albedo) {
                return bad(format!("cuboid {i} albedo outside [0, 1]"));
            }
            if !c.footprint().inside_room(room) || c.center.z - he.z < 0.0 || c.center.z + he.z > room.h {
                return bad(format!("cuboid {i} leaves the room"));
            }
            if c.footprint().overlaps(&self.platform.footprint()) {
                return bad(format!("cuboid {i} overlaps the landing platform"));
            }
            if c.footprint().overlaps(&start) {
                return bad(format!("cuboid {i} overlaps the drone start"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SceneFile::from(self)).expect("scene serialization is infallible")
    }

    /// Parses and validates a scene document.
    pub fn from_json(text: &str) -> Result<Scene, SimError> {
        let file: SceneFile = serde_json::from_str(text)?;
        let scene = Scene::from(file);
        scene.validate()?;
        Ok(scene)
    }
}

// On-disk layout. Cuboid `ex/ey/ez` are full edge lengths.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    room: RoomFile,
    platform: PlatformFile,
    cuboids: Vec<CuboidFile>,
    drone_start: StartFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomFile {
    w: f64,
    d: f64,
    h: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformFile {
    cx: f64,
    cy: f64,
    yaw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CuboidFile {
    cx: f64,
    cy: f64,
    cz: f64,
    yaw: f64,
    ex: f64,
    ey: f64,
    ez: f64,
    albedo: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartFile {
    x: f64,
    y: f64,
    yaw: f64,
}

impl From<&Scene> for SceneFile {
    fn from(s: &Scene) -> Self {
        SceneFile {
            room: RoomFile {
                w: s.room.w,
                d: s.room.d,
                h: s.room.h,
            },
            platform: PlatformFile {
                cx: s.platform.center.x,
                cy: s.platform.center.y,
                yaw: s.platform.yaw,
            },
            cuboids: s
                .cuboids
                .iter()
                .map(|c| CuboidFile {
                    cx: c.center.x,
                    cy: c.center.y,
                    cz: c.center.z,
                    yaw: c.yaw,
                    ex: 2.0 * c.half_extents.x,
                    ey: 2.0 * c.half_extents.y,
                    ez: 2.0 * c.half_extents.z,
                    albedo: c.albedo,
                })
                .collect(),
            drone_start: StartFile {
                x: s.drone_start.position.x,
                y: s.drone_start.position.y,
                yaw: s.drone_start.yaw,
            },
        }
    }
}

impl From<SceneFile> for Scene {
    fn from(f: SceneFile) -> Self {
        Scene {
            room: RoomDims {
                w: f.room.w,
                d: f.room.d,
                h: f.room.h,
            },
            platform: LandingPlatform::new(f.platform.cx, f.platform.cy, f.platform.yaw),
            cuboids: f
                .cuboids
                .into_iter()
                .map(|c| Cuboid {
                    center: Vec3::new(c.cx, c.cy, c.cz),
                    yaw: c.yaw,
                    half_extents: Vec3::new(c.ex / 2.0, c.ey / 2.0, c.ez / 2.0),
                    albedo: c.albedo,
                })
                .collect(),
            drone_start: Pose::new(Vec3::new(f.drone_start.x, f.drone_start.y, 0.0), f.drone_start.yaw),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> Scene {
        let mut s = Scene::empty(
            RoomDims::default(),
            LandingPlatform::new(2.0, 1.65, 0.3),
            Pose::new(Vec3::new(1.0, 1.65, 0.0), 0.0),
        );
        s.cuboids.push(Cuboid {
            center: Vec3::new(0.6, 0.6, 0.4),
            yaw: 0.7,
            half_extents: Vec3::new(0.2, 0.1, 0.4),
            albedo: 0.5,
        });
        s
    }

    #[test]
    fn json_round_trip_is_value_identical() {
        let s = demo();
        let back = Scene::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = s_with_extra(&demo().to_json());
        assert!(matches!(Scene::from_json(&text), Err(SimError::SceneFormat(_))));
    }

    fn s_with_extra(json: &str) -> String {
        json.replacen("\"room\": {", "\"room\": {\n    \"colour\": 3,", 1)
    }

    #[test]
    fn overlapping_cuboid_is_invalid() {
        let mut s = demo();
        s.cuboids.push(Cuboid {
            center: Vec3::new(2.1, 1.7, 0.2),
            yaw: 0.0,
            half_extents: Vec3::new(0.1, 0.1, 0.2),
            albedo: 0.5,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn footprint_overlap_rotated() {
        let a = Footprint { cx: 0.0, cy: 0.0, yaw: 0.0, hx: 0.5, hy: 0.5 };
        // a diamond whose corner reaches 0.5·√2 ≈ 0.707 along x
        let b = Footprint { cx: 1.25, cy: 0.0, yaw: std::f64::consts::FRAC_PI_4, hx: 0.5, hy: 0.5 };
        assert!(!a.overlaps(&b));
        let c = Footprint { cx: 1.15, ..b };
        assert!(a.overlaps(&c));
    }
}
