//! Voxel grids, scalar fields on them, labeled attenuation volumes, and the
//! raw + JSON sidecar volume format.
//!
//! Grids are isotropic and centered on the origin. Voxel `(i, j, k)` has its
//! center at `((i - (nx-1)/2) * spacing, ...)` millimetres, and linear
//! storage is x-fastest.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Voxel edge length in mm.
    pub spacing: f64,
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: f64) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!("grid dims {dims:?} must be positive")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidConfig(format!("grid spacing {spacing} must be positive")));
        }
        Ok(Self { dims, spacing })
    }

    pub fn cube(n: usize, spacing: f64) -> Result<Self> {
        Self::new([n; 3], spacing)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Continuous voxel-index coordinate of the grid center along each axis.
    pub fn center_index(&self) -> [f64; 3] {
        self.dims.map(|d| (d as f64 - 1.0) / 2.0)
    }

    pub fn voxel_center_mm(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let c = self.center_index();
        [
            (i as f64 - c[0]) * self.spacing,
            (j as f64 - c[1]) * self.spacing,
            (k as f64 - c[2]) * self.spacing,
        ]
    }

    pub fn mm_to_index(&self, p: [f64; 3]) -> [f64; 3] {
        let c = self.center_index();
        [
            p[0] / self.spacing + c[0],
            p[1] / self.spacing + c[1],
            p[2] / self.spacing + c[2],
        ]
    }

    pub fn index_to_mm(&self, q: [f64; 3]) -> [f64; 3] {
        let c = self.center_index();
        [
            (q[0] - c[0]) * self.spacing,
            (q[1] - c[1]) * self.spacing,
            (q[2] - c[2]) * self.spacing,
        ]
    }

    /// Physical half extents of the grid box (voxel faces, not centers).
    pub fn half_extent_mm(&self) -> [f64; 3] {
        self.dims.map(|d| d as f64 * self.spacing / 2.0)
    }

    /// Radius of the sphere circumscribing the grid box.
    pub fn bounding_radius_mm(&self) -> f64 {
        let h = self.half_extent_mm();
        (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt()
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing.powi(3)
    }
}

/// Axis-aligned box in mm. Membership is half-open: `min <= p < max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Box3 {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] < self.max[a])
    }

    pub fn union(&self, other: &Box3) -> Box3 {
        Box3 {
            min: [0, 1, 2].map(|a| self.min[a].min(other.min[a])),
            max: [0, 1, 2].map(|a| self.max[a].max(other.max[a])),
        }
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| (self.max[a] - self.min[a]).max(0.0)).product()
    }

    /// Linear indices of the voxels of `grid` whose centers lie in the box.
    pub fn voxels(&self, grid: &Grid) -> Vec<usize> {
        let mut out = Vec::new();
        let range = |a: usize| {
            let lo = grid.mm_to_index(self.min)[a].ceil().max(0.0) as usize;
            let hi = (grid.mm_to_index(self.max)[a].ceil().max(0.0) as usize).min(grid.dims[a]);
            lo..hi
        };
        let (rx, ry, rz) = (range(0), range(1), range(2));
        for k in rz {
            for j in ry.clone() {
                for i in rx.clone() {
                    if self.contains(grid.voxel_center_mm(i, j, k)) {
                        out.push(grid.index(i, j, k));
                    }
                }
            }
        }
        out
    }
}

/// A scalar field on a grid; the shape shared by volumes, back-projections
/// and reconstructions.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            data: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "field has {} values, grid {:?} needs {}",
                data.len(),
                grid.dims,
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.index(i, j, k)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Trilinear interpolation at continuous voxel-index coordinates; zero
    /// outside the grid.
    pub fn sample_trilinear(&self, q: [f64; 3]) -> f64 {
        let d = self.grid.dims;
        let base = q.map(|v| v.floor());
        let frac = [q[0] - base[0], q[1] - base[1], q[2] - base[2]];
        let mut acc = 0.0;
        for corner in 0..8 {
            let off = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            let mut inside = true;
            for a in 0..3 {
                let c = base[a] as i64 + off[a] as i64;
                if c < 0 || c >= d[a] as i64 {
                    inside = false;
                    break;
                }
                idx[a] = c as usize;
                w *= if off[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if inside && w != 0.0 {
                acc += w * self.at(idx[0], idx[1], idx[2]);
            }
        }
        acc
    }

    pub fn write_raw(&self, path: &Path) -> Result<()> {
        write_f32_raw(path, &self.data)
    }

    /// Writes `<stem>.raw` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let raw = dir.join(format!("{stem}.raw"));
        self.write_raw(&raw)?;
        let meta = VolumeMetadata {
            dims: self.grid.dims,
            spacing_mm: self.grid.spacing,
            data_file: format!("{stem}.raw"),
            labels_file: None,
            regions: None,
            attenuation: None,
        };
        let json = dir.join(format!("{stem}.json"));
        serde_json::to_writer_pretty(BufWriter::new(File::create(&json)?), &meta)?;
        Ok(json)
    }

    /// Loads a field from a JSON sidecar written by [`save`](Self::save) or
    /// [`MaterialVolume::save`].
    pub fn load(sidecar: &Path) -> Result<Self> {
        let meta: VolumeMetadata = serde_json::from_reader(File::open(sidecar)?)?;
        let grid = Grid::new(meta.dims, meta.spacing_mm)?;
        let dir = sidecar.parent().unwrap_or(Path::new("."));
        let data = read_f32_raw(&dir.join(&meta.data_file), grid.len())?;
        Field::from_vec(grid, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Air = 0,
    Holder = 1,
    CalMarker = 2,
    Sample = 3,
    Absorber = 4,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Air,
        Label::Holder,
        Label::CalMarker,
        Label::Sample,
        Label::Absorber,
    ];

    pub fn from_u8(v: u8) -> Result<Self> {
        Label::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown label code {v}")))
    }
}

/// Attenuation value per label, in the sample's arbitrary units per mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttenuationTable {
    pub holder: f64,
    pub marker: f64,
    pub sample: f64,
    pub absorber: f64,
}

impl Default for AttenuationTable {
    fn default() -> Self {
        Self {
            holder: 0.5,
            marker: 7.0,
            sample: 1.5,
            absorber: 7.0,
        }
    }
}

impl AttenuationTable {
    pub fn value(&self, label: Label) -> f64 {
        match label {
            Label::Air => 0.0,
            Label::Holder => self.holder,
            Label::CalMarker => self.marker,
            Label::Sample => self.sample,
            Label::Absorber => self.absorber,
        }
    }
}

/// Named bounding regions (mm) used by segmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    pub holder: Box3,
    pub markers: Vec<Box3>,
    pub sample: Box3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialVolume {
    pub mu: Field,
    pub labels: Vec<Label>,
    pub attenuation: AttenuationTable,
    pub regions: RegionTable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeMetadata {
    pub dims: [usize; 3],
    pub spacing_mm: f64,
    pub data_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation: Option<AttenuationTable>,
}

impl MaterialVolume {
    pub fn grid(&self) -> &Grid {
        &self.mu.grid
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }

    pub fn label_volume_mm3(&self, label: Label) -> f64 {
        self.count_label(label) as f64 * self.grid().voxel_volume_mm3()
    }

    /// Voxels of `label` with at least one face neighbor of another label or
    /// on the grid boundary.
    pub fn shell_count(&self, label: Label) -> usize {
        let g = self.grid();
        let [nx, ny, nz] = g.dims;
        let mut n = 0;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if self.labels[g.index(i, j, k)] != label {
                        continue;
                    }
                    let mut edge = i == 0 || j == 0 || k == 0 || i + 1 == nx || j + 1 == ny || k + 1 == nz;
                    if !edge {
                        edge = [
                            g.index(i - 1, j, k),
                            g.index(i + 1, j, k),
                            g.index(i, j - 1, k),
                            g.index(i, j + 1, k),
                            g.index(i, j, k - 1),
                            g.index(i, j, k + 1),
                        ]
                        .iter()
                        .any(|&q| self.labels[q] != label);
                    }
                    if edge {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    /// Writes `<stem>.raw` (f32 LE, x-fastest), `<stem>.labels.raw` (u8) and
    /// `<stem>.json` into `dir`. Returns the paths written.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let raw = dir.join(format!("{stem}.raw"));
        let labels = dir.join(format!("{stem}.labels.raw"));
        let json = dir.join(format!("{stem}.json"));
        self.mu.write_raw(&raw)?;
        let bytes: Vec<u8> = self.labels.iter().map(|l| *l as u8).collect();
        File::create(&labels)?.write_all(&bytes)?;
        let meta = VolumeMetadata {
            dims: self.grid().dims,
            spacing_mm: self.grid().spacing,
            data_file: format!("{stem}.raw"),
            labels_file: Some(format!("{stem}.labels.raw")),
            regions: Some(self.regions.clone()),
            attenuation: Some(self.attenuation),
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(&json)?), &meta)?;
        Ok(vec![raw, labels, json])
    }

    pub fn load(sidecar: &Path) -> Result<Self> {
        let meta: VolumeMetadata = serde_json::from_reader(File::open(sidecar)?)?;
        let mu = Field::load(sidecar)?;
        let dir = sidecar.parent().unwrap_or(Path::new("."));
        let labels_file = meta
            .labels_file
            .ok_or_else(|| Error::Parse("sidecar has no labels file".into()))?;
        let mut bytes = Vec::new();
        File::open(dir.join(labels_file))?.read_to_end(&mut bytes)?;
        if bytes.len() != mu.grid.len() {
            return Err(Error::DimensionMismatch("label file size".into()));
        }
        let labels = bytes.into_iter().map(Label::from_u8).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mu,
            labels,
            attenuation: meta
                .attenuation
                .ok_or_else(|| Error::Parse("sidecar has no attenuation table".into()))?,
            regions: meta
                .regions
                .ok_or_else(|| Error::Parse("sidecar has no regions".into()))?,
        })
    }
}

pub fn write_f32_raw(path: &Path, data: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in data {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_f32_raw(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != expected * 4 {
        return Err(Error::DimensionMismatch(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            expected * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}
