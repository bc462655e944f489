use rayon::prelude::*;

use super::{primary_ray, view_basis, CameraConfig, CameraError, CameraIntrinsics, CameraMode, CameraMount, Image};
use crate::simcore::{
    rotate_body_to_world, Pose, Scene, Surface, Vec3, CEILING_ALBEDO, FLOOR_ALBEDO, WALL_ALBEDO,
};

pub const MARKER_WHITE: f64 = 0.95;
pub const MARKER_BLACK: f64 = 0.05;
/// Concentric square rings on the platform top, outermost black.
pub const MARKER_RINGS: u32 = 5;

const AMBIENT: f64 = 0.4;
const DIFFUSE: f64 = 0.6;

fn light_dir() -> Vec3 {
    Vec3::new(0.3, 0.2, 1.0).normalized()
}

fn marker_albedo(scene: &Scene, hit: Vec3) -> f64 {
    let p = &scene.platform;
    let local = rotate_body_to_world(hit - p.center, -p.yaw);
    let half = p.side / 2.0;
    let r = local.x.abs().max(local.y.abs()) / half;
    // ring 0 is the center square
    let ring = ((r * MARKER_RINGS as f64).floor() as u32).min(MARKER_RINGS - 1);
    if (MARKER_RINGS - 1 - ring) % 2 == 0 {
        MARKER_BLACK
    } else {
        MARKER_WHITE
    }
}

fn albedo(scene: &Scene, surface: Surface, normal: Vec3, hit: Vec3) -> f64 {
    match surface {
        Surface::Floor => FLOOR_ALBEDO,
        Surface::Ceiling => CEILING_ALBEDO,
        Surface::Wall(_) => WALL_ALBEDO,
        Surface::Platform if normal.z > 0.5 => marker_albedo(scene, hit),
        Surface::Platform => scene.platform.as_cuboid().albedo,
        Surface::Cuboid(i) => scene.cuboids[i].albedo,
    }
}

fn shade(albedo: f64, normal: Vec3) -> u8 {
    let v = albedo * (AMBIENT + DIFFUSE * normal.dot(light_dir()).max(0.0));
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Renders rows `first..first + count` of the full frame into `pixels` and
/// `depth`, one row per rayon task.
fn render_band(
    scene: &Scene,
    intr: &CameraIntrinsics,
    mount: &CameraMount,
    pose: &Pose,
    first: u32,
    pixels: &mut [u8],
    depth: &mut [f32],
) {
    let (eye, forward, up) = view_basis(pose, mount);
    let w = intr.width as usize;
    pixels
        .par_chunks_mut(w)
        .zip(depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(row, (prow, drow))| {
            let py = (first as usize + row) as f64 + 0.5;
            for (i, (p, d)) in prow.iter_mut().zip(drow.iter_mut()).enumerate() {
                let (o, dir) = primary_ray(intr, eye, forward, up, i as f64 + 0.5, py);
                match scene.ray_cast(o, dir, intr.near, intr.far) {
                    Some(h) => {
                        let hit = o + dir * h.distance;
                        *p = shade(albedo(scene, h.surface, h.normal, hit), h.normal);
                        *d = h.distance as f32;
                    }
                    None => {
                        *p = 0;
                        *d = intr.far as f32;
                    }
                }
            }
        });
}

/// Renders one frame with depth. In split mode the top half of the output
/// is the central band of a downward (90°) frame and the bottom half the
/// central band of the forward (10°) frame, both at the full resolution's
/// field of view.
pub fn render(scene: &Scene, intr: &CameraIntrinsics, mount: &CameraMount, pose: &Pose) -> Image {
    let (w, h) = (intr.width as usize, intr.height);
    let mut img = Image::new(intr.width, h);
    let mut depth = vec![0f32; w * h as usize];
    if mount.mode == CameraMode::Split {
        let top = h / 2;
        let bottom = h - top;
        let down = CameraMount {
            pitch_down: CameraMode::Bottom.pitch_down(),
            ..*mount
        };
        let front = CameraMount {
            pitch_down: CameraMode::Front.pitch_down(),
            ..*mount
        };
        let (pt, pb) = img.pixels.split_at_mut(w * top as usize);
        let (dt, db) = depth.split_at_mut(w * top as usize);
        render_band(scene, intr, &down, pose, (h - top) / 2, pt, dt);
        render_band(scene, intr, &front, pose, (h - bottom) / 2, pb, db);
    } else {
        render_band(scene, intr, mount, pose, 0, &mut img.pixels, &mut depth);
    }
    img.depth = Some(depth);
    img
}

/// Renders the drone's view per `cfg`, keeping depth only if requested.
pub fn capture(scene: &Scene, cfg: &CameraConfig, pose: &Pose) -> Result<Image, CameraError> {
    let mut img = render(scene, &cfg.intrinsics()?, &cfg.mount(), pose);
    if !cfg.with_depth {
        img.depth = None;
    }
    Ok(img)
}
