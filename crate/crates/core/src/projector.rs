//! Ray-driven cone-beam X-ray transform (Joseph's method) and its exact
//! transpose.
//!
//! One ray per detector pixel center. Each ray is stepped one voxel plane at
//! a time along its dominant axis, and the volume is bilinearly interpolated
//! in the two minor axes at the plane crossing; values outside the grid count
//! as zero. Both directions run through the same [`trace_ray`] kernel so the
//! back-projection is the algebraic adjoint of the forward projection.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConeBeamPose, DetectorSpec};
use crate::volume::{read_f32_raw, write_f32_raw, Field, Grid};

/// Stack of detector images, view-major then row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub n_views: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(n_views: usize, rows: usize, cols: usize) -> Self {
        Self {
            n_views,
            rows,
            cols,
            data: vec![0.0; n_views * rows * cols],
        }
    }

    pub fn view_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn view(&self, v: usize) -> &[f64] {
        let n = self.view_len();
        &self.data[v * n..(v + 1) * n]
    }

    pub fn view_mut(&mut self, v: usize) -> &mut [f64] {
        let n = self.view_len();
        &mut self.data[v * n..(v + 1) * n]
    }

    pub fn push_view(&mut self, image: &[f64]) -> Result<()> {
        if image.len() != self.view_len() {
            return Err(Error::DimensionMismatch(format!(
                "image has {} pixels, sinogram views have {}",
                image.len(),
                self.view_len()
            )));
        }
        self.data.extend_from_slice(image);
        self.n_views += 1;
        Ok(())
    }

    /// Sub-stack of the given views, in the given order.
    pub fn select(&self, views: &[usize]) -> Sinogram {
        let mut out = Sinogram::zeros(0, self.rows, self.cols);
        for &v in views {
            out.data.extend_from_slice(self.view(v));
            out.n_views += 1;
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Writes `<stem>.raw` (f32 LE, view-major) and a JSON sidecar with the
    /// per-view poses.
    pub fn save(&self, dir: &Path, stem: &str, poses: &[ConeBeamPose]) -> Result<PathBuf> {
        if poses.len() != self.n_views {
            return Err(Error::DimensionMismatch("one pose per view required".into()));
        }
        write_f32_raw(&dir.join(format!("{stem}.raw")), &self.data)?;
        let meta = SinogramMetadata {
            n_views: self.n_views,
            rows: self.rows,
            cols: self.cols,
            data_file: format!("{stem}.raw"),
            poses: poses.iter().map(PoseRecord::from).collect(),
        };
        let json = dir.join(format!("{stem}.json"));
        serde_json::to_writer_pretty(BufWriter::new(File::create(&json)?), &meta)?;
        Ok(json)
    }

    pub fn load(sidecar: &Path) -> Result<(Sinogram, Vec<ConeBeamPose>)> {
        let meta: SinogramMetadata = serde_json::from_reader(File::open(sidecar)?)?;
        let dir = sidecar.parent().unwrap_or(Path::new("."));
        let data = read_f32_raw(&dir.join(&meta.data_file), meta.n_views * meta.rows * meta.cols)?;
        let poses = meta
            .poses
            .iter()
            .map(|p| ConeBeamPose::from_angles(p.theta_rad, p.phi_rad, p.roll_rad))
            .collect();
        Ok((
            Sinogram {
                n_views: meta.n_views,
                rows: meta.rows,
                cols: meta.cols,
                data,
            },
            poses,
        ))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoseRecord {
    pub theta_rad: f64,
    pub phi_rad: f64,
    pub roll_rad: f64,
    /// Row-major world-to-sample rotation.
    pub rotation: [[f64; 3]; 3],
}

impl From<&ConeBeamPose> for PoseRecord {
    fn from(p: &ConeBeamPose) -> Self {
        let r = p.rotation;
        Self {
            theta_rad: p.theta,
            phi_rad: p.phi,
            roll_rad: p.roll,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SinogramMetadata {
    n_views: usize,
    rows: usize,
    cols: usize,
    data_file: String,
    poses: Vec<PoseRecord>,
}

/// Visits every (voxel, weight) pair of the Joseph discretization of one
/// ray. `src` is in continuous voxel-index coordinates, `dir` a unit vector
/// in the (isotropic) sample frame. Weights carry the path length in mm.
#[inline(always)]
pub fn trace_ray<F: FnMut(usize, f64)>(grid: &Grid, src: [f64; 3], dir: [f64; 3], mut visit: F) {
    let ad = dir.map(f64::abs);
    let a = if ad[0] >= ad[1] && ad[0] >= ad[2] {
        0
    } else if ad[1] >= ad[2] {
        1
    } else {
        2
    };
    let (b, c) = match a {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let n = grid.dims;
    let strides = [1usize, n[0], n[0] * n[1]];
    let sb = dir[b] / dir[a];
    let sc = dir[c] / dir[a];
    let step = grid.spacing * (1.0 + sb * sb + sc * sc).sqrt();

    // Planes m where the crossing lies inside the interpolation band
    // (-1, n) of both minor axes.
    let mut lo = 0.0f64;
    let mut hi = n[a] as f64 - 1.0;
    for (s, axis) in [(sb, b), (sc, c)] {
        let p0 = src[axis];
        let lim = n[axis] as f64;
        if s == 0.0 {
            if !(p0 > -1.0 && p0 < lim) {
                return;
            }
        } else {
            let t1 = (-1.0 - p0) / s + src[a];
            let t2 = (lim - p0) / s + src[a];
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
    }
    if lo > hi {
        return;
    }
    let m_lo = lo.ceil().max(0.0) as usize;
    let m_hi = hi.floor().min(n[a] as f64 - 1.0);
    if m_hi < 0.0 {
        return;
    }
    let m_hi = m_hi as usize;
    let (nb, nc) = (n[b] as i64, n[c] as i64);
    for m in m_lo..=m_hi {
        let dm = m as f64 - src[a];
        let u = src[b] + dm * sb;
        let v = src[c] + dm * sc;
        // u, v > -1 inside the band, so truncation after a shift is floor.
        let i0 = (u + 1.0) as i64 - 1;
        let j0 = (v + 1.0) as i64 - 1;
        let (fu, fv) = ((u - i0 as f64).max(0.0), (v - j0 as f64).max(0.0));
        let base = m * strides[a];
        let w00 = (1.0 - fu) * (1.0 - fv) * step;
        let w10 = fu * (1.0 - fv) * step;
        let w01 = (1.0 - fu) * fv * step;
        let w11 = fu * fv * step;
        if i0 >= 0 && i0 + 1 < nb && j0 >= 0 && j0 + 1 < nc {
            let idx = base + i0 as usize * strides[b] + j0 as usize * strides[c];
            visit(idx, w00);
            visit(idx + strides[b], w10);
            visit(idx + strides[c], w01);
            visit(idx + strides[b] + strides[c], w11);
        } else {
            for (di, dj, w) in [(0, 0, w00), (1, 0, w10), (0, 1, w01), (1, 1, w11)] {
                let (i, j) = (i0 + di, j0 + dj);
                if i >= 0 && i < nb && j >= 0 && j < nc {
                    visit(base + i as usize * strides[b] + j as usize * strides[c], w);
                }
            }
        }
    }
}

/// Views handled per partial grid in the back-projection. Fixed so that the
/// accumulation order (and hence the result) does not depend on the thread
/// count.
const BACKPROJECT_CHUNK: usize = 16;

struct ViewFrame {
    src: [f64; 3],
    rotation: nalgebra::Matrix3<f64>,
}

/// Joseph projector for a fixed grid, detector and pose list.
pub struct JosephProjector {
    grid: Grid,
    det: DetectorSpec,
    frames: Vec<ViewFrame>,
}

impl JosephProjector {
    pub fn new(grid: Grid, det: DetectorSpec, poses: &[ConeBeamPose]) -> Result<Self> {
        det.validate()?;
        let r = grid.bounding_radius_mm() + 2.0 * 3f64.sqrt() * grid.spacing;
        if det.source_to_object <= r {
            return Err(Error::DegenerateGeometry(format!(
                "source at {} mm lies inside the volume's bounding sphere ({r:.1} mm)",
                det.source_to_object
            )));
        }
        if det.source_to_detector - det.source_to_object <= r {
            return Err(Error::DegenerateGeometry("detector plane intersects the volume".into()));
        }
        let frames = poses
            .iter()
            .map(|p| {
                let s = p.world_to_sample() * det.source_world();
                ViewFrame {
                    src: grid.mm_to_index([s.x, s.y, s.z]),
                    rotation: *p.world_to_sample(),
                }
            })
            .collect();
        Ok(Self { grid, det, frames })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn detector(&self) -> &DetectorSpec {
        &self.det
    }

    pub fn n_views(&self) -> usize {
        self.frames.len()
    }

    pub fn sinogram_len(&self) -> usize {
        self.frames.len() * self.det.n_pixels()
    }

    #[inline]
    fn ray_dir(&self, frame: &ViewFrame, row: usize, col: usize) -> [f64; 3] {
        let d = frame.rotation * (self.det.pixel_world(row, col) - self.det.source_world());
        let d: Vector3<f64> = d.normalize();
        [d.x, d.y, d.z]
    }

    fn forward_view(&self, frame: &ViewFrame, x: &[f64], out: &mut [f64]) {
        for row in 0..self.det.rows {
            for col in 0..self.det.cols {
                let dir = self.ray_dir(frame, row, col);
                let mut acc = 0.0;
                trace_ray(&self.grid, frame.src, dir, |idx, w| acc += w * x[idx]);
                out[row * self.det.cols + col] = acc;
            }
        }
    }

    fn adjoint_view(&self, frame: &ViewFrame, y: &[f64], out: &mut [f64]) {
        for row in 0..self.det.rows {
            for col in 0..self.det.cols {
                let val = y[row * self.det.cols + col];
                if val == 0.0 {
                    continue;
                }
                let dir = self.ray_dir(frame, row, col);
                trace_ray(&self.grid, frame.src, dir, |idx, w| out[idx] += w * val);
            }
        }
    }

    /// `A x`, flattened view-major.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.grid.len());
        let npx = self.det.n_pixels();
        let mut out = vec![0.0; self.sinogram_len()];
        if npx == 0 {
            return out;
        }
        out.par_chunks_mut(npx)
            .zip(self.frames.par_iter())
            .for_each(|(img, frame)| self.forward_view(frame, x, img));
        out
    }

    /// Forward projection of a single view.
    pub fn forward_single(&self, view: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.det.n_pixels()];
        self.forward_view(&self.frames[view], x, &mut out);
        out
    }

    /// `A^T y`.
    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.sinogram_len());
        let npx = self.det.n_pixels();
        let chunks: Vec<(usize, usize)> = (0..self.frames.len())
            .step_by(BACKPROJECT_CHUNK)
            .map(|s| (s, (s + BACKPROJECT_CHUNK).min(self.frames.len())))
            .collect();
        let partials: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|&(s, e)| {
                let mut acc = vec![0.0; self.grid.len()];
                for v in s..e {
                    self.adjoint_view(&self.frames[v], &y[v * npx..(v + 1) * npx], &mut acc);
                }
                acc
            })
            .collect();
        let mut iter = partials.into_iter();
        let mut out = iter.next().unwrap_or_else(|| vec![0.0; self.grid.len()]);
        for p in iter {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }
}

/// Line integrals of `vol` for every pose; one detector image per pose.
pub fn forward_project(vol: &Field, poses: &[ConeBeamPose], det: &DetectorSpec) -> Result<Sinogram> {
    if vol.grid.is_empty() {
        return Err(Error::DimensionMismatch("empty volume".into()));
    }
    let proj = JosephProjector::new(vol.grid, *det, poses)?;
    Ok(Sinogram {
        n_views: poses.len(),
        rows: det.rows,
        cols: det.cols,
        data: proj.forward(&vol.data),
    })
}

/// Exact transpose of [`forward_project`].
pub fn back_project(sino: &Sinogram, poses: &[ConeBeamPose], det: &DetectorSpec, grid: Grid) -> Result<Field> {
    if sino.n_views != poses.len() || sino.rows != det.rows || sino.cols != det.cols {
        return Err(Error::DimensionMismatch(format!(
            "sinogram {}x{}x{} vs {} poses on a {}x{} detector",
            sino.n_views,
            sino.rows,
            sino.cols,
            poses.len(),
            det.rows,
            det.cols
        )));
    }
    let proj = JosephProjector::new(grid, *det, poses)?;
    Field::from_vec(grid, proj.adjoint(&sino.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::direction;

    fn small_det() -> DetectorSpec {
        DetectorSpec {
            rows: 24,
            cols: 24,
            pixel_pitch: 4.0,
            source_to_object: 200.0,
            source_to_detector: 400.0,
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let g = Grid::cube(16, 1.5).unwrap();
        let poses = [ConeBeamPose::from_angles(0.3, 0.2, 0.0)];
        let s = forward_project(&Field::zeros(g), &poses, &small_det()).unwrap();
        assert!(s.data.iter().all(|v| *v == 0.0));
        let b = back_project(&s, &poses, &small_det(), g).unwrap();
        assert!(b.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn source_inside_volume_is_rejected() {
        let g = Grid::cube(200, 2.0).unwrap();
        let poses = [ConeBeamPose::from_angles(0.0, 0.0, 0.0)];
        assert!(matches!(
            forward_project(&Field::zeros(g), &poses, &small_det()),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn batch_equals_single_views() {
        let g = Grid::cube(12, 2.0).unwrap();
        let data = (0..g.len()).map(|i| ((i * 7919) % 13) as f64).collect();
        let vol = Field::from_vec(g, data).unwrap();
        let poses: Vec<_> = (0..5)
            .map(|i| ConeBeamPose::from_direction(&direction(0.4 * i as f64, 1.3 * i as f64), 0.0))
            .collect();
        let all = forward_project(&vol, &poses, &small_det()).unwrap();
        for (v, p) in poses.iter().enumerate() {
            let one = forward_project(&vol, std::slice::from_ref(p), &small_det()).unwrap();
            assert_eq!(one.data, all.view(v));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = Grid::cube(8, 1.0).unwrap();
        let poses = [ConeBeamPose::from_angles(0.0, 0.0, 0.0)];
        let s = Sinogram::zeros(2, 24, 24);
        assert!(back_project(&s, &poses, &small_det(), g).is_err());
    }

    #[test]
    fn push_and_select_views() {
        let mut s = Sinogram::zeros(0, 2, 2);
        s.push_view(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        s.push_view(&[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert!(s.push_view(&[1.0]).is_err());
        assert_eq!(s.select(&[1]).data, vec![5.0, 6.0, 7.0, 8.0]);
    }
}
