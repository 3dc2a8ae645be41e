//! Cone-beam acquisition geometry with a fixed source and detector and a
//! sample rotated by the robotic holder.
//!
//! World frame: the source sits at `(0, 0, -source_to_object)`, the rotation
//! center at the origin and the detector plane at
//! `z = source_to_detector - source_to_object`; the central ray travels along
//! `+z`. Detector columns run along world `x` and rows along world `y`.
//!
//! A pose with sphere direction `d` rotates the sample so that the beam runs
//! along `d` in sample coordinates. Its rotation `R = Rz(phi) * Ry(theta) *
//! Rz(roll)` maps the canonical sample `z` axis onto `d` and maps world
//! coordinates into sample coordinates.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{angles, PixelId, SpherePartition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub rows: usize,
    pub cols: usize,
    /// Pixel pitch in mm.
    pub pixel_pitch: f64,
    pub source_to_object: f64,
    pub source_to_detector: f64,
}

impl Default for DetectorSpec {
    /// Desk-scale detector: 72 x 72 pixels of 6 mm at 2x magnification.
    fn default() -> Self {
        Self {
            rows: 72,
            cols: 72,
            pixel_pitch: 6.0,
            source_to_object: 500.0,
            source_to_detector: 1000.0,
        }
    }
}

impl DetectorSpec {
    /// 720 x 720 detector with 0.6 mm pixels.
    pub fn full_scale() -> Self {
        Self {
            rows: 720,
            cols: 720,
            pixel_pitch: 0.6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("detector must have rows and columns".into()));
        }
        if !(self.pixel_pitch > 0.0) {
            return Err(Error::InvalidConfig("detector pixel pitch must be positive".into()));
        }
        if !(self.source_to_detector > self.source_to_object && self.source_to_object > 0.0) {
            return Err(Error::InvalidConfig(
                "need source_to_detector > source_to_object > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn magnification(&self) -> f64 {
        self.source_to_detector / self.source_to_object
    }

    pub fn source_world(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.source_to_object)
    }

    /// World position of the center of detector pixel `(row, col)`.
    pub fn pixel_world(&self, row: usize, col: usize) -> Vector3<f64> {
        let u = (col as f64 - (self.cols as f64 - 1.0) / 2.0) * self.pixel_pitch;
        let v = (row as f64 - (self.rows as f64 - 1.0) / 2.0) * self.pixel_pitch;
        Vector3::new(u, v, self.source_to_detector - self.source_to_object)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeBeamPose {
    pub theta: f64,
    pub phi: f64,
    pub roll: f64,
    pub rotation: Matrix3<f64>,
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

impl ConeBeamPose {
    pub fn from_angles(theta: f64, phi: f64, roll: f64) -> Self {
        Self {
            theta,
            phi,
            roll,
            rotation: rot_z(phi) * rot_y(theta) * rot_z(roll),
        }
    }

    /// Pose for a direction vector. On the polar axis the azimuth is taken as
    /// zero, so `-z` is a half turn about `y`.
    pub fn from_direction(dir: &Vector3<f64>, roll: f64) -> Self {
        let (theta, mut phi) = angles(dir);
        let n = dir.normalize();
        if n.x.hypot(n.y) < 1e-15 {
            phi = 0.0;
        }
        Self::from_angles(theta, phi, roll)
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.rotation * Vector3::z()
    }

    /// World-to-sample rotation.
    pub fn world_to_sample(&self) -> &Matrix3<f64> {
        &self.rotation
    }
}

/// Pose whose beam direction is the center of sphere pixel `id`.
pub fn pose_from_pixel(p: &SpherePartition, id: PixelId, roll: f64) -> Result<ConeBeamPose> {
    let (theta, phi) = p.pixel_center(id)?;
    Ok(ConeBeamPose::from_angles(theta, phi, roll))
}
