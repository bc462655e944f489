//! Camera calibration math and the raycasting renderer.
//!
//! Cameras are pinholes at every field of view, fisheye included. The
//! image plane is 4:3; `vfov` is derived from the diagonal field of view.

mod image;
mod render;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::simcore::{rotate_body_to_world, Pose, Vec3};

pub use image::{Image, ImageFormatError};
pub use render::{capture, render, MARKER_BLACK, MARKER_RINGS, MARKER_WHITE};

pub const DEFAULT_DFOV_DEG: f64 = 82.6;
pub const FISHEYE_DFOV_DEG: f64 = 150.0;
pub const DEFAULT_NEAR: f64 = 0.05;
pub const DEFAULT_FAR: f64 = 5.0;
/// Camera position relative to the pose reference point (the bottom-center
/// of the drone box): 4 cm ahead of the body center.
pub const DEFAULT_MOUNT_OFFSET: Vec3 = Vec3::new(0.04, 0.0, 0.025);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("diagonal field of view must be in (0, 180) degrees, got {0}°")]
    InvalidFov(f64),
    #[error("resolution {width}x{height} is not a non-empty 4:3 frame")]
    InvalidResolution { width: u32, height: u32 },
    #[error("clip planes must satisfy 0 < near < far (near {near}, far {far})")]
    InvalidClip { near: f64, far: f64 },
}

/// Vertical field of view of a `width`×`height` pinhole with diagonal field
/// of view `dfov`, all angles in radians.
pub fn dfov_to_vfov(dfov: f64, width: u32, height: u32) -> Result<f64, CameraError> {
    if !(dfov > 0.0 && dfov < PI) {
        return Err(CameraError::InvalidFov(dfov.to_degrees()));
    }
    let (w, h) = (width as f64, height as f64);
    let d = w.hypot(h);
    Ok(2.0 * ((h / d) * (dfov / 2.0).tan()).atan())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraMode {
    Front,
    Diagonal,
    Bottom,
    Split,
    Fisheye,
}

impl CameraMode {
    pub const ALL: [CameraMode; 5] = [Self::Front, Self::Diagonal, Self::Bottom, Self::Split, Self::Fisheye];

    pub fn dfov(self) -> f64 {
        match self {
            Self::Fisheye => FISHEYE_DFOV_DEG.to_radians(),
            _ => DEFAULT_DFOV_DEG.to_radians(),
        }
    }

    /// Downward pitch of the (first) pass.
    pub fn pitch_down(self) -> f64 {
        match self {
            Self::Front | Self::Fisheye | Self::Split => 10f64.to_radians(),
            Self::Diagonal => 45f64.to_radians(),
            Self::Bottom => 90f64.to_radians(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Front => "front",
            Self::Diagonal => "diagonal",
            Self::Bottom => "bottom",
            Self::Split => "split",
            Self::Fisheye => "fisheye",
        }
    }
}

impl fmt::Display for CameraMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CameraMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown camera mode '{s}' (expected front, diagonal, bottom, split or fisheye)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub dfov: f64,
    pub vfov: f64,
    pub near: f64,
    pub far: f64,
}

impl CameraIntrinsics {
    pub fn new(width: u32, height: u32, dfov: f64) -> Result<Self, CameraError> {
        Self::with_clip(width, height, dfov, DEFAULT_NEAR, DEFAULT_FAR)
    }

    pub fn with_clip(width: u32, height: u32, dfov: f64, near: f64, far: f64) -> Result<Self, CameraError> {
        if width == 0 || height == 0 || width as u64 * 3 != height as u64 * 4 {
            return Err(CameraError::InvalidResolution { width, height });
        }
        if !(near > 0.0 && near < far) {
            return Err(CameraError::InvalidClip { near, far });
        }
        Ok(Self {
            width,
            height,
            dfov,
            vfov: dfov_to_vfov(dfov, width, height)?,
            near,
            far,
        })
    }

    fn half_tangents(&self) -> (f64, f64) {
        let tv = (self.vfov / 2.0).tan();
        (tv * self.width as f64 / self.height as f64, tv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraMount {
    /// Body-frame offset from the pose reference point.
    pub offset: Vec3,
    pub pitch_down: f64,
    pub mode: CameraMode,
}

impl CameraMount {
    pub fn for_mode(mode: CameraMode) -> Self {
        Self {
            offset: DEFAULT_MOUNT_OFFSET,
            pitch_down: mode.pitch_down(),
            mode,
        }
    }
}

/// Eye position and unit forward/up vectors in world coordinates.
pub fn view_basis(pose: &Pose, mount: &CameraMount) -> (Vec3, Vec3, Vec3) {
    let (s, c) = mount.pitch_down.sin_cos();
    let eye = pose.position + rotate_body_to_world(mount.offset, pose.yaw);
    let forward = rotate_body_to_world(Vec3::new(c, 0.0, -s), pose.yaw);
    let up = rotate_body_to_world(Vec3::new(s, 0.0, c), pose.yaw);
    (eye, forward, up)
}

/// Ray through the continuous image coordinate (`px`, `py`); pixel `(i, j)`
/// covers `[i, i+1) × [j, j+1)`, so its center is `(i + 0.5, j + 0.5)`.
pub fn primary_ray(intr: &CameraIntrinsics, eye: Vec3, forward: Vec3, up: Vec3, px: f64, py: f64) -> (Vec3, Vec3) {
    let (th, tv) = intr.half_tangents();
    let right = forward.cross(up);
    let x = (2.0 * px / intr.width as f64 - 1.0) * th;
    let y = (1.0 - 2.0 * py / intr.height as f64) * tv;
    (eye, (forward + right * x + up * y).normalized())
}

/// Continuous image coordinate of a world point, or `None` if it lies
/// behind the camera.
pub fn project(intr: &CameraIntrinsics, eye: Vec3, forward: Vec3, up: Vec3, point: Vec3) -> Option<(f64, f64)> {
    let (th, tv) = intr.half_tangents();
    let v = point - eye;
    let depth = v.dot(forward);
    if depth <= 0.0 {
        return None;
    }
    let x = v.dot(forward.cross(up)) / depth / th;
    let y = v.dot(up) / depth / tv;
    Some(((x + 1.0) * intr.width as f64 / 2.0, (1.0 - y) * intr.height as f64 / 2.0))
}

/// Everything needed to take a picture; the renderer's public configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub width: u32,
    pub height: u32,
    pub mode: CameraMode,
    pub near: f64,
    pub far: f64,
    pub offset: [f64; 3],
    pub with_depth: bool,
}

impl Default for CameraConfig {
    fn default() -> Self {
        let o = DEFAULT_MOUNT_OFFSET;
        Self {
            width: 160,
            height: 120,
            mode: CameraMode::Front,
            near: DEFAULT_NEAR,
            far: DEFAULT_FAR,
            offset: [o.x, o.y, o.z],
            with_depth: false,
        }
    }
}

impl CameraConfig {
    pub fn intrinsics(&self) -> Result<CameraIntrinsics, CameraError> {
        CameraIntrinsics::with_clip(self.width, self.height, self.mode.dfov(), self.near, self.far)
    }

    pub fn mount(&self) -> CameraMount {
        let [x, y, z] = self.offset;
        CameraMount {
            offset: Vec3::new(x, y, z),
            ..CameraMount::for_mode(self.mode)
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn vfov_default_lens() {
        // tan(41.3°) = 0.878521…, × 0.6 = 0.527113…, atan → 27.79429°
        let v = dfov_to_vfov(82.6f64.to_radians(), 160, 120).unwrap().to_degrees();
        assert!((v - 55.58858).abs() < 1e-5, "{v}");
    }

    #[test]
    fn vfov_fisheye() {
        // tan(75°) = 2 + √3, × 0.6 = 2.23923…, atan → 65.93532°
        let v = dfov_to_vfov(150f64.to_radians(), 320, 240).unwrap().to_degrees();
        assert!((v - 131.87064).abs() < 1e-5, "{v}");
    }

    #[test]
    fn vfov_small_angle_limit() {
        let d = 0.001;
        let v = dfov_to_vfov(d, 4, 3).unwrap();
        assert!((v - d * 0.6).abs() < 1e-9);
    }

    #[test]
    fn vfov_rejects_half_turn() {
        assert!(dfov_to_vfov(PI, 4, 3).is_err());
        assert!(dfov_to_vfov(0.0, 4, 3).is_err());
        assert!(dfov_to_vfov(-1.0, 4, 3).is_err());
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(160, 100, 1.0).is_err());
        assert!(CameraIntrinsics::new(0, 0, 1.0).is_err());
        assert!(CameraIntrinsics::with_clip(160, 120, 1.0, 1.0, 0.5).is_err());
        for (w, h) in [(160, 120), (280, 210), (320, 240)] {
            assert!(CameraIntrinsics::new(w, h, 1.0).is_ok());
        }
    }

    #[test]
    fn basis_identity_mount() {
        let m = CameraMount {
            offset: Vec3::ZERO,
            pitch_down: 0.0,
            mode: CameraMode::Front,
        };
        let (eye, f, u) = view_basis(&Pose::new(Vec3::new(1.0, 2.0, 0.5), 0.0), &m);
        assert!(close(eye, Vec3::new(1.0, 2.0, 0.5), EPS));
        assert!(close(f, Vec3::X, EPS));
        assert!(close(u, Vec3::Z, EPS));
    }

    #[test]
    fn basis_bottom_mount() {
        let m = CameraMount::for_mode(CameraMode::Bottom);
        let (_, f, u) = view_basis(&Pose::new(Vec3::ZERO, 0.0), &m);
        assert!(close(f, Vec3::new(0.0, 0.0, -1.0), EPS));
        assert!(close(u, Vec3::X, EPS));
    }

    #[test]
    fn basis_yawed_front_mount() {
        let m = CameraMount::for_mode(CameraMode::Front);
        let pose = Pose::new(Vec3::new(1.0, 1.0, 0.0), PI / 2.0);
        let (eye, f, _) = view_basis(&pose, &m);
        let t = 10f64.to_radians();
        assert!(close(f, Vec3::new(0.0, t.cos(), -t.sin()), EPS));
        assert!(close(eye, Vec3::new(1.0, 1.04, 0.025), EPS));
    }

    #[test]
    fn center_ray_is_optical_axis() {
        let intr = CameraIntrinsics::new(160, 120, DEFAULT_DFOV_DEG.to_radians()).unwrap();
        let (_, f, u) = view_basis(&Pose::new(Vec3::ZERO, 0.7), &CameraMount::for_mode(CameraMode::Diagonal));
        let (_, d) = primary_ray(&intr, Vec3::ZERO, f, u, 80.0, 60.0);
        assert!(close(d, f, EPS));
    }

    #[test]
    fn top_edge_ray_is_half_vfov_off_axis() {
        let intr = CameraIntrinsics::new(160, 120, DEFAULT_DFOV_DEG.to_radians()).unwrap();
        let (_, d) = primary_ray(&intr, Vec3::ZERO, Vec3::X, Vec3::Z, 80.0, 0.0);
        let angle = d.dot(Vec3::X).acos();
        assert!((angle - intr.vfov / 2.0).abs() < 1e-12);
        // first row's pixel center is half a pixel lower
        let (_, c) = primary_ray(&intr, Vec3::ZERO, Vec3::X, Vec3::Z, 80.0, 0.5);
        let pixel = intr.vfov / intr.height as f64;
        assert!((c.dot(Vec3::X).acos() - intr.vfov / 2.0).abs() < pixel);
        assert!(c.z > 0.0);
    }

    #[test]
    fn left_right_edges_mirror() {
        let intr = CameraIntrinsics::new(160, 120, DEFAULT_DFOV_DEG.to_radians()).unwrap();
        let (_, l) = primary_ray(&intr, Vec3::ZERO, Vec3::X, Vec3::Z, 0.0, 60.0);
        let (_, r) = primary_ray(&intr, Vec3::ZERO, Vec3::X, Vec3::Z, 160.0, 60.0);
        assert!((l.x - r.x).abs() < EPS && (l.y + r.y).abs() < EPS && l.z.abs() < EPS);
        // image right is world -y when facing +x
        assert!(r.y < 0.0);
        // corners sit at half the diagonal field of view
        let (_, corner) = primary_ray(&intr, Vec3::ZERO, Vec3::X, Vec3::Z, 0.0, 0.0);
        assert!((corner.x.acos() - intr.dfov / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mode_strings_round_trip() {
        for m in CameraMode::ALL {
            assert_eq!(m.to_string().parse::<CameraMode>().unwrap(), m);
        }
        assert!("wide".parse::<CameraMode>().is_err());
    }

    proptest! {
        #[test]
        fn vfov_strictly_increasing(a in 0.01f64..3.1, b in 0.01f64..3.1) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(dfov_to_vfov(lo, 160, 120).unwrap() < dfov_to_vfov(hi, 160, 120).unwrap());
        }

        #[test]
        fn projection_inverts_primary_ray(px in 0.0f64..160.0, py in 0.0f64..120.0, yaw in 0.0f64..6.28, t in 0.1f64..4.0) {
            let intr = CameraIntrinsics::new(160, 120, DEFAULT_DFOV_DEG.to_radians()).unwrap();
            let (eye, f, u) = view_basis(&Pose::new(Vec3::new(1.0, 1.0, 0.5), yaw), &CameraMount::for_mode(CameraMode::Diagonal));
            let (o, d) = primary_ray(&intr, eye, f, u, px, py);
            let (qx, qy) = project(&intr, eye, f, u, o + d * t).unwrap();
            prop_assert!((qx - px).abs() < 1e-6 && (qy - py).abs() < 1e-6);
        }
    }
}
