//! The two test samples and the sample holder with calibration markers,
//! voxelized into labeled attenuation volumes.
//!
//! Sample 1: a 22 x 18 x 30 mm cuboid with a 7 mm bore, stacked under a
//! 32 mm diameter, 30 mm tall cylinder with two 6 mm bores, and a
//! 4 x 30 x 50 mm absorber plate standing beside the stack.
//!
//! Sample 2: an open box holding a 6 x 3 x 10 mm cuboid with a 1 mm-padded
//! cuboid hole, a 6 mm cylinder (15 mm tall, 2 mm bore), a 3 mm cylinder
//! (5 mm tall, 0.8 mm bore), and a central 1 x 12 x 12 mm absorber plate.
//!
//! Voxels are labeled by center containment; solids are half-open in z and
//! in the box axes, and cylinders use a strict radial test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{AttenuationTable, Box3, Field, Grid, Label, MaterialVolume, RegionTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Solid {
    Cuboid { min: [f64; 3], max: [f64; 3] },
    /// Cylinder with its axis along z.
    CylinderZ { center: [f64; 2], radius: f64, z_min: f64, z_max: f64 },
    Sphere { center: [f64; 3], radius: f64 },
}

impl Solid {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            Solid::Cuboid { min, max } => Box3::new(min, max).contains(p),
            Solid::CylinderZ { center, radius, z_min, z_max } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                p[2] >= z_min && p[2] < z_max && dx * dx + dy * dy < radius * radius
            }
            Solid::Sphere { center, radius } => {
                let d: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
                d < radius * radius
            }
        }
    }

    pub fn bounds(&self) -> Box3 {
        match *self {
            Solid::Cuboid { min, max } => Box3::new(min, max),
            Solid::CylinderZ { center, radius, z_min, z_max } => Box3::new(
                [center[0] - radius, center[1] - radius, z_min],
                [center[0] + radius, center[1] + radius, z_max],
            ),
            Solid::Sphere { center, radius } => Box3::new(
                center.map(|c| c - radius),
                center.map(|c| c + radius),
            ),
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Solid::Cuboid { min, max } => Box3::new(min, max).volume(),
            Solid::CylinderZ { radius, z_min, z_max, .. } => {
                std::f64::consts::PI * radius * radius * (z_max - z_min).max(0.0)
            }
            Solid::Sphere { radius, .. } => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
        }
    }
}

/// A solid with holes removed from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleObject {
    pub name: String,
    pub solid: Solid,
    #[serde(default)]
    pub holes: Vec<Solid>,
}

impl SampleObject {
    fn new(name: &str, solid: Solid, holes: Vec<Solid>) -> Self {
        Self {
            name: name.into(),
            solid,
            holes,
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.solid.contains(p) && !self.holes.iter().any(|h| h.contains(p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSpec {
    /// Cylindrical holder body below the sample.
    pub body: Solid,
    pub markers: Vec<Solid>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub sample_id: u8,
    pub grid: Grid,
    pub attenuation: AttenuationTable,
    pub objects: Vec<SampleObject>,
    /// Absorber plate; `None` or a zero-thickness plate yields no absorber.
    pub absorber: Option<Solid>,
    pub holder: HolderSpec,
}

/// Free placement parameters the sample descriptions leave open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleLayout {
    /// Gap between the sample-1 stack and its absorber plate (mm).
    pub plate_gap_mm: f64,
    /// Absorber plate thickness (mm); 4 for sample 1, 1 for sample 2.
    pub absorber_thickness_mm: f64,
}

impl SampleLayout {
    pub fn default_for(sample_id: u8) -> Self {
        Self {
            plate_gap_mm: 5.0,
            absorber_thickness_mm: if sample_id == 2 { 1.0 } else { 4.0 },
        }
    }
}

impl PhantomSpec {
    /// Default desk-scale grid for a sample: 96^3 voxels of 1 mm (sample 1)
    /// or 0.5 mm (sample 2).
    pub fn default_grid(sample_id: u8) -> Grid {
        let spacing = if sample_id == 2 { 0.5 } else { 1.0 };
        Grid::cube(96, spacing).expect("valid grid")
    }

    pub fn for_sample(sample_id: u8, grid: Grid, layout: SampleLayout) -> Result<Self> {
        match sample_id {
            1 => Ok(Self::sample_one(grid, layout)),
            2 => Ok(Self::sample_two(grid, layout)),
            other => Err(Error::InvalidConfig(format!("unknown sample id {other}; expected 1 or 2"))),
        }
    }

    pub fn sample_one(grid: Grid, layout: SampleLayout) -> Self {
        // Stack axis at x = -4.5 so that stack + gap + plate is centered.
        let cx = -4.5;
        let cube = SampleObject::new(
            "cuboid",
            Solid::Cuboid {
                min: [cx - 11.0, -9.0, -30.0],
                max: [cx + 11.0, 9.0, 0.0],
            },
            vec![Solid::CylinderZ { center: [cx, 0.0], radius: 3.5, z_min: -30.0, z_max: 0.0 }],
        );
        let cylinder = SampleObject::new(
            "cylinder",
            Solid::CylinderZ { center: [cx, 0.0], radius: 16.0, z_min: 0.0, z_max: 30.0 },
            vec![
                Solid::CylinderZ { center: [cx, -8.0], radius: 3.0, z_min: 0.0, z_max: 30.0 },
                Solid::CylinderZ { center: [cx, 8.0], radius: 3.0, z_min: 0.0, z_max: 30.0 },
            ],
        );
        let plate_x = cx + 16.0 + layout.plate_gap_mm;
        let absorber = Solid::Cuboid {
            min: [plate_x, -15.0, -30.0],
            max: [plate_x + layout.absorber_thickness_mm, 15.0, 20.0],
        };
        let holder = HolderSpec {
            body: Solid::CylinderZ { center: [0.0, 0.0], radius: 22.0, z_min: -43.0, z_max: -30.0 },
            markers: [(-11.5, -11.5), (11.5, -11.5), (-11.5, 11.5), (11.5, 11.5)]
                .iter()
                .map(|&(x, y)| Solid::Sphere { center: [x, y, -36.5], radius: 3.5 })
                .collect(),
        };
        Self {
            sample_id: 1,
            grid,
            attenuation: AttenuationTable::default(),
            objects: vec![cube, cylinder],
            absorber: Some(absorber),
            holder,
        }
    }

    pub fn sample_two(grid: Grid, layout: SampleLayout) -> Self {
        let open_box = SampleObject::new(
            "box",
            Solid::Cuboid { min: [-14.0, -10.0, -12.0], max: [14.0, 10.0, 6.0] },
            vec![Solid::Cuboid { min: [-13.0, -9.0, -11.0], max: [13.0, 9.0, 6.0] }],
        );
        let cuboid = SampleObject::new(
            "cuboid",
            Solid::Cuboid { min: [-10.0, 3.0, -11.0], max: [-4.0, 6.0, -1.0] },
            vec![Solid::Cuboid { min: [-9.0, 4.0, -11.0], max: [-5.0, 5.0, -1.0] }],
        );
        let big_cyl = SampleObject::new(
            "cylinder_large",
            Solid::CylinderZ { center: [-7.0, -4.0], radius: 3.0, z_min: -11.0, z_max: 4.0 },
            vec![Solid::CylinderZ { center: [-7.0, -4.0], radius: 1.0, z_min: -11.0, z_max: 4.0 }],
        );
        let small_cyl = SampleObject::new(
            "cylinder_small",
            Solid::CylinderZ { center: [6.0, 0.0], radius: 1.5, z_min: -11.0, z_max: -6.0 },
            vec![Solid::CylinderZ { center: [6.0, 0.0], radius: 0.4, z_min: -11.0, z_max: -6.0 }],
        );
        let t = layout.absorber_thickness_mm;
        let absorber = Solid::Cuboid {
            min: [-t / 2.0, -6.0, -11.0],
            max: [t / 2.0, 6.0, 1.0],
        };
        let holder = HolderSpec {
            body: Solid::CylinderZ { center: [0.0, 0.0], radius: 12.0, z_min: -20.0, z_max: -12.0 },
            markers: [(-6.25, -6.25), (6.25, -6.25), (-6.25, 6.25), (6.25, 6.25)]
                .iter()
                .map(|&(x, y)| Solid::Sphere { center: [x, y, -16.25], radius: 1.75 })
                .collect(),
        };
        Self {
            sample_id: 2,
            grid,
            attenuation: AttenuationTable::default(),
            objects: vec![open_box, cuboid, big_cyl, small_cyl],
            absorber: Some(absorber),
            holder,
        }
    }

    pub fn without_absorber(mut self) -> Self {
        self.absorber = None;
        self
    }

    fn sample_bounds(&self) -> Option<Box3> {
        self.objects
            .iter()
            .map(|o| o.solid.bounds())
            .chain(self.absorber.map(|a| a.bounds()))
            .reduce(|a, b| a.union(&b))
    }

    pub fn regions(&self) -> RegionTable {
        RegionTable {
            holder: self.holder.body.bounds(),
            markers: self.holder.markers.iter().map(|m| m.bounds()).collect(),
            sample: self.sample_bounds().unwrap_or(Box3::new([0.0; 3], [0.0; 3])),
        }
    }

    fn check_fits(&self) -> Result<()> {
        let margin = 2.0 * self.grid.spacing;
        let half = self.grid.half_extent_mm();
        let all = self
            .objects
            .iter()
            .map(|o| ("sample object", o.solid.bounds()))
            .chain(self.absorber.map(|a| ("absorber", a.bounds())))
            .chain(std::iter::once(("holder", self.holder.body.bounds())))
            .chain(self.holder.markers.iter().map(|m| ("marker", m.bounds())));
        for (what, b) in all {
            for a in 0..3 {
                if b.min[a] < -half[a] + margin || b.max[a] > half[a] - margin {
                    return Err(Error::SolidsExceedGrid(format!(
                        "{what} spans [{}, {}] mm on axis {a}, grid allows [{}, {}] with a 2-voxel margin",
                        b.min[a],
                        b.max[a],
                        -half[a] + margin,
                        half[a] - margin
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Voxelizes the sample objects and the absorber plate. The absorber takes
/// precedence where it touches an object.
pub fn build_sample(spec: &PhantomSpec) -> Result<MaterialVolume> {
    spec.check_fits()?;
    let grid = spec.grid;
    let mut labels = vec![Label::Air; grid.len()];
    let [nx, ny, nz] = grid.dims;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = grid.voxel_center_mm(i, j, k);
                let idx = grid.index(i, j, k);
                if spec.absorber.is_some_and(|a| a.contains(p)) {
                    labels[idx] = Label::Absorber;
                } else if spec.objects.iter().any(|o| o.contains(p)) {
                    labels[idx] = Label::Sample;
                }
            }
        }
    }
    Ok(finish(spec, labels))
}

/// Adds the holder body (low attenuation) and its calibration marker spheres
/// (high attenuation) below the sample.
pub fn attach_holder(volume: MaterialVolume, spec: &PhantomSpec) -> Result<MaterialVolume> {
    let grid = *volume.grid();
    if grid != spec.grid {
        return Err(Error::DimensionMismatch("holder spec grid differs from the volume grid".into()));
    }
    let sample_bottom = spec.sample_bounds().map(|b| b.min[2]).unwrap_or(f64::INFINITY);
    if spec.holder.body.bounds().max[2] > sample_bottom {
        return Err(Error::Overlap("holder must lie below the sample".into()));
    }
    let mut labels = volume.labels;
    for idx in 0..grid.len() {
        let [i, j, k] = grid.coords(idx);
        let p = grid.voxel_center_mm(i, j, k);
        let in_marker = spec.holder.markers.iter().any(|m| m.contains(p));
        let in_body = spec.holder.body.contains(p);
        if !(in_marker || in_body) {
            continue;
        }
        if labels[idx] != Label::Air {
            return Err(Error::Overlap(format!("holder overlaps {:?} voxel at {p:?} mm", labels[idx])));
        }
        labels[idx] = if in_marker { Label::CalMarker } else { Label::Holder };
    }
    Ok(finish(spec, labels))
}

/// Sample plus holder.
pub fn build_phantom(spec: &PhantomSpec) -> Result<MaterialVolume> {
    attach_holder(build_sample(spec)?, spec)
}

fn finish(spec: &PhantomSpec, labels: Vec<Label>) -> MaterialVolume {
    let mu = labels.iter().map(|&l| spec.attenuation.value(l)).collect();
    MaterialVolume {
        mu: Field::from_vec(spec.grid, mu).expect("sizes match"),
        labels,
        attenuation: spec.attenuation,
        regions: spec.regions(),
    }
}
