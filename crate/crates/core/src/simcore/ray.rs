//! Ray queries against the room shell, the platform slab and cuboids.
//!
//! Boxes use the slab method in their own (yaw-rotated) frame. Everything is
//! treated as solid: a ray whose start point lies inside a box, or outside the
//! room, hits immediately with the normal facing back along the ray.

use super::geometry::{rotate_body_to_world, Vec3};
use super::scene::{Cuboid, RoomDims, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wall {
    /// x = 0
    West,
    /// x = w
    East,
    /// y = 0
    South,
    /// y = d
    North,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Floor,
    Ceiling,
    Wall(Wall),
    Platform,
    Cuboid(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub surface: Surface,
    /// Unit, facing the incoming ray.
    pub normal: Vec3,
}

/// Intersects a ray with a yaw-rotated box, returning the first hit distance
/// in `[t_min, t_max]` and the outward normal there.
pub fn ray_box(origin: Vec3, dir: Vec3, cuboid: &Cuboid, t_min: f64, t_max: f64) -> Option<(f64, Vec3)> {
    // into the box frame
    let o = rotate_body_to_world(origin - cuboid.center, -cuboid.yaw);
    let d = rotate_body_to_world(dir, -cuboid.yaw);
    let o = [o.x, o.y, o.z];
    let d = [d.x, d.y, d.z];
    let he = [cuboid.half_extents.x, cuboid.half_extents.y, cuboid.half_extents.z];

    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    let mut enter_axis = 0usize;
    let mut enter_sign = 0.0;
    for axis in 0..3 {
        if d[axis] == 0.0 {
            if o[axis] < -he[axis] || o[axis] > he[axis] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let mut t0 = (-he[axis] - o[axis]) * inv;
        let mut t1 = (he[axis] - o[axis]) * inv;
        // the face entered first: -he when travelling +, +he when travelling -
        let mut sign = -1.0;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
            sign = 1.0;
        }
        if t0 > t_enter {
            t_enter = t0;
            enter_axis = axis;
            enter_sign = sign;
        }
        t_exit = t_exit.min(t1);
    }
    if t_enter > t_exit || t_exit < t_min || t_enter > t_max {
        return None;
    }
    if t_enter >= t_min {
        let mut n = [0.0; 3];
        n[enter_axis] = enter_sign;
        let normal = rotate_body_to_world(Vec3::new(n[0], n[1], n[2]), cuboid.yaw);
        Some((t_enter, normal))
    } else {
        // start point is inside the solid
        Some((t_min, -dir))
    }
}

/// Intersects a ray with the inside of the room shell.
pub fn ray_room(origin: Vec3, dir: Vec3, room: &RoomDims, t_min: f64, t_max: f64) -> Option<RayHit> {
    let start = origin + dir * t_min;
    if !room.contains(start) {
        if t_min > t_max {
            return None;
        }
        return Some(RayHit {
            distance: t_min,
            surface: Surface::Floor,
            normal: -dir,
        });
    }
    let mut best = RayHit {
        distance: f64::INFINITY,
        surface: Surface::Floor,
        normal: Vec3::ZERO,
    };
    let mut consider = |t: f64, surface: Surface, normal: Vec3| {
        if t < best.distance {
            best = RayHit {
                distance: t,
                surface,
                normal,
            };
        }
    };
    if dir.x > 0.0 {
        consider((room.w - origin.x) / dir.x, Surface::Wall(Wall::East), -Vec3::X);
    } else if dir.x < 0.0 {
        consider(-origin.x / dir.x, Surface::Wall(Wall::West), Vec3::X);
    }
    if dir.y > 0.0 {
        consider((room.d - origin.y) / dir.y, Surface::Wall(Wall::North), -Vec3::Y);
    } else if dir.y < 0.0 {
        consider(-origin.y / dir.y, Surface::Wall(Wall::South), Vec3::Y);
    }
    if dir.z > 0.0 {
        consider((room.h - origin.z) / dir.z, Surface::Ceiling, -Vec3::Z);
    } else if dir.z < 0.0 {
        consider(-origin.z / dir.z, Surface::Floor, Vec3::Z);
    }
    (best.distance <= t_max).then_some(best)
}

impl Scene {
    /// Nearest hit along `dir` (unit) from `origin`, over all surfaces.
    ///
    /// A point inside the room always hits something, so this only returns
    /// `None` for a degenerate ray.
    pub fn ray_intersect(&self, origin: Vec3, dir: Vec3) -> Option<RayHit> {
        self.ray_cast(origin, dir, 0.0, f64::INFINITY)
    }

    /// Nearest hit with distance in `[t_min, t_max]`.
    pub fn ray_cast(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<RayHit> {
        assert!(dir.norm() > 0.0, "ray direction must be non-zero");
        let mut best = ray_room(origin, dir, &self.room, t_min, t_max);
        let mut limit = best.map_or(t_max, |h| h.distance);
        if let Some((t, normal)) = ray_box(origin, dir, &self.platform.as_cuboid(), t_min, limit) {
            if best.map_or(true, |b| t < b.distance) {
                best = Some(RayHit {
                    distance: t,
                    surface: Surface::Platform,
                    normal,
                });
                limit = t;
            }
        }
        for (i, c) in self.cuboids.iter().enumerate() {
            if let Some((t, normal)) = ray_box(origin, dir, c, t_min, limit) {
                if best.map_or(true, |b| t < b.distance) {
                    best = Some(RayHit {
                        distance: t,
                        surface: Surface::Cuboid(i),
                        normal,
                    });
                    limit = t;
                }
            }
        }
        best
    }

    /// True if some surface is hit strictly closer than `max_dist`.
    pub fn ray_blocked(&self, origin: Vec3, dir: Vec3, max_dist: f64) -> bool {
        self.ray_cast(origin, dir, 0.0, max_dist)
            .is_some_and(|h| h.distance < max_dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{LandingPlatform, Pose};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn unit_box(yaw: f64) -> Cuboid {
        Cuboid {
            center: Vec3::new(2.0, 0.0, 0.5),
            yaw,
            half_extents: Vec3::new(0.5, 0.5, 0.5),
            albedo: 0.5,
        }
    }

    fn room_scene() -> Scene {
        Scene::empty(
            RoomDims::default(),
            LandingPlatform::new(0.5, 0.5, 0.0),
            Pose::new(Vec3::new(2.5, 2.5, 0.0), 0.0),
        )
    }

    #[test]
    fn ceiling_straight_up() {
        let s = room_scene();
        let o = Vec3::new(1.65, 1.65, 1.0);
        let hit = s.ray_intersect(o, Vec3::Z).unwrap();
        assert_eq!(hit.surface, Surface::Ceiling);
        assert!((hit.distance - 1.5).abs() < 1e-12);
        assert_eq!(hit.normal, -Vec3::Z);
    }

    #[test]
    fn axis_aligned_box_slab() {
        let (t, n) = ray_box(Vec3::new(0.0, 0.0, 0.5), Vec3::X, &unit_box(0.0), 0.0, f64::INFINITY).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
        assert!((n - (-Vec3::X)).norm() < 1e-12);
    }

    #[test]
    fn yawed_box_slab() {
        let (t, n) = ray_box(Vec3::new(0.0, 0.0, 0.5), Vec3::X, &unit_box(FRAC_PI_4), 0.0, f64::INFINITY).unwrap();
        assert!((t - (2.0 - 0.5 * SQRT_2)).abs() < 1e-12, "t = {t}");
        assert!((n.norm() - 1.0).abs() < 1e-12);
        assert!(n.x < 0.0);
    }

    #[test]
    fn miss_and_inside() {
        let b = unit_box(0.0);
        assert!(ray_box(Vec3::new(0.0, 0.0, 0.5), Vec3::Y, &b, 0.0, f64::INFINITY).is_none());
        assert!(ray_box(Vec3::new(0.0, 0.0, 0.5), -Vec3::X, &b, 0.0, f64::INFINITY).is_none());
        let (t, _) = ray_box(Vec3::new(2.0, 0.0, 0.5), Vec3::X, &b, 0.0, f64::INFINITY).unwrap();
        assert_eq!(t, 0.0);
        // beyond t_max
        assert!(ray_box(Vec3::new(0.0, 0.0, 0.5), Vec3::X, &b, 0.0, 1.0).is_none());
    }

    #[test]
    fn platform_and_cuboid_are_found() {
        let mut s = room_scene();
        let hit = s.ray_intersect(Vec3::new(0.5, 0.5, 1.0), -Vec3::Z).unwrap();
        assert_eq!(hit.surface, Surface::Platform);
        assert!((hit.distance - 0.99).abs() < 1e-12);
        s.cuboids.push(Cuboid {
            center: Vec3::new(2.0, 1.0, 0.5),
            yaw: 0.0,
            half_extents: Vec3::new(0.2, 0.2, 0.5),
            albedo: 0.5,
        });
        let hit = s.ray_intersect(Vec3::new(1.0, 1.0, 0.5), Vec3::X).unwrap();
        assert_eq!(hit.surface, Surface::Cuboid(0));
        assert!((hit.distance - 0.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn inside_room_always_hits(x in 0.01..3.29f64, y in 0.01..3.29f64, z in 0.01..2.49f64,
                                   th in 0.0..std::f64::consts::PI, ph in 0.0..std::f64::consts::TAU) {
            let s = room_scene();
            let dir = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let hit = s.ray_intersect(Vec3::new(x, y, z), dir);
            prop_assert!(hit.is_some());
            let hit = hit.unwrap();
            prop_assert!(hit.distance >= 0.0);
            prop_assert!((hit.normal.norm() - 1.0).abs() < 1e-9);
            prop_assert!(hit.normal.dot(dir) <= 1e-12);
        }
    }
}
