//! Conjugate gradient on the normal equations of the Tikhonov-regularized
//! weighted least-squares problem
//!
//! ```text
//! min_x |W^(1/2) (A x - b)|^2 + lambda |x|^2
//! (A^T W A + lambda I) x = A^T W b
//! ```
//!
//! run for a fixed number of iterations from a zero start. The iteration is
//! organized as CGLS (residual recomputed from the data side each step),
//! which is CG on the normal equations without forming them.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConeBeamPose, DetectorSpec};
use crate::projector::{JosephProjector, Sinogram};
use crate::volume::{Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    Fixed { lambda: f64 },
    /// `scale` times the mean diagonal of `A^T A`, estimated with random
    /// probe vectors.
    RelativeToDiagonal { scale: f64, probes: usize },
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::RelativeToDiagonal { scale: 1e-4, probes: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconConfig {
    pub grid: Grid,
    pub regularization: Regularization,
    pub iterations: usize,
    /// Per-ray weights, flattened like the sinogram. `None` means identity.
    pub weights: Option<Vec<f64>>,
}

impl ReconConfig {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            regularization: Regularization::default(),
            iterations: 30,
            weights: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("reconstruction needs at least one iteration".into()));
        }
        match self.regularization {
            Regularization::Fixed { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                Err(Error::InvalidConfig(format!("lambda {lambda} must be finite and >= 0")))
            }
            Regularization::RelativeToDiagonal { scale, probes } if !(scale >= 0.0) || probes == 0 => {
                Err(Error::InvalidConfig("relative regularization needs scale >= 0 and probes >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub volume: Field,
    /// `sqrt(|W^(1/2)(b - A x_k)|^2 + lambda |x_k|^2)` for k = 0..=iterations.
    pub residuals: Vec<f64>,
    pub lambda: f64,
}

impl Reconstruction {
    /// CSV `iter,residual_norm`.
    pub fn write_residuals_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,residual_norm")?;
        for (i, r) in self.residuals.iter().enumerate() {
            writeln!(w, "{i},{r}")?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rademacher probe vectors for estimating the mean diagonal of `A^T A`.
pub struct ProbeSet {
    vectors: Vec<Vec<f64>>,
}

/// Seed of the probe vectors used by automatic regularization.
pub const PROBE_SEED: u64 = 0x5eed;

impl ProbeSet {
    pub fn new(n: usize, probes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..probes)
            .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
            .collect();
        Self { vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `sum_p |A_v z_p|^2` for every view `v` of `proj`.
    pub fn view_energies(&self, proj: &JosephProjector) -> Vec<f64> {
        let npx = proj.detector().n_pixels();
        let mut e = vec![0.0; proj.n_views()];
        for z in &self.vectors {
            let img = proj.forward(z);
            for (ev, view) in e.iter_mut().zip(img.chunks(npx.max(1))) {
                *ev += dot(view, view);
            }
        }
        e
    }

    /// Hutchinson estimate of `trace(A^T A) / n` from per-view energies.
    pub fn mean_diagonal(&self, energies: &[f64]) -> f64 {
        let n = self.vectors.first().map_or(1, Vec::len);
        energies.iter().sum::<f64>() / (self.vectors.len().max(1) * n.max(1)) as f64
    }
}

pub fn mean_diagonal_estimate(proj: &JosephProjector, probes: usize, seed: u64) -> f64 {
    let set = ProbeSet::new(proj.grid().len(), probes, seed);
    set.mean_diagonal(&set.view_energies(proj))
}

pub fn reconstruct(
    sino: &Sinogram,
    poses: &[ConeBeamPose],
    det: &DetectorSpec,
    cfg: &ReconConfig,
) -> Result<Reconstruction> {
    cfg.validate()?;
    if sino.n_views != poses.len() || sino.rows != det.rows || sino.cols != det.cols {
        return Err(Error::DimensionMismatch(format!(
            "sinogram {}x{}x{} does not match {} poses on a {}x{} detector",
            sino.n_views,
            sino.rows,
            sino.cols,
            poses.len(),
            det.rows,
            det.cols
        )));
    }
    if !sino.data.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("sinogram"));
    }
    let proj = JosephProjector::new(cfg.grid, *det, poses)?;
    let weights = match &cfg.weights {
        Some(w) if w.len() != sino.data.len() => {
            return Err(Error::DimensionMismatch("ray weights must match the sinogram".into()))
        }
        Some(w) if !w.iter().all(|v| v.is_finite() && *v >= 0.0) => {
            return Err(Error::NonFinite("ray weights"))
        }
        other => other.as_deref(),
    };
    let lambda = match cfg.regularization {
        Regularization::Fixed { lambda } => lambda,
        Regularization::RelativeToDiagonal { scale, probes } => {
            scale * mean_diagonal_estimate(&proj, probes, PROBE_SEED)
        }
    };
    Ok(cgls(&proj, &sino.data, weights, lambda, cfg.iterations))
}

fn apply_weights(w: Option<&[f64]>, v: &mut [f64]) {
    if let Some(w) = w {
        for (x, wi) in v.iter_mut().zip(w) {
            *x *= wi;
        }
    }
}

fn cgls(proj: &JosephProjector, b: &[f64], w: Option<&[f64]>, lambda: f64, iterations: usize) -> Reconstruction {
    let n = proj.grid().len();
    let mut x = vec![0.0; n];
    // data residual e = b - A x
    let mut e = b.to_vec();
    let objective = |e: &[f64], x: &[f64]| {
        let data = match w {
            Some(w) => e.iter().zip(w).map(|(v, wi)| wi * v * v).sum::<f64>(),
            None => dot(e, e),
        };
        (data + lambda * dot(x, x)).sqrt()
    };
    let mut residuals = vec![objective(&e, &x)];

    let mut we = e.clone();
    apply_weights(w, &mut we);
    let mut r = proj.adjoint(&we);
    let mut p = r.clone();
    let mut gamma = dot(&r, &r);

    for _ in 0..iterations {
        if gamma == 0.0 {
            residuals.push(*residuals.last().unwrap());
            continue;
        }
        let q = proj.forward(&p);
        let mut wq = q.clone();
        apply_weights(w, &mut wq);
        let denom = dot(&q, &wq) + lambda * dot(&p, &p);
        if denom <= 0.0 {
            residuals.push(*residuals.last().unwrap());
            continue;
        }
        let alpha = gamma / denom;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ei, qi) in e.iter_mut().zip(&q) {
            *ei -= alpha * qi;
        }
        residuals.push(objective(&e, &x));

        we.copy_from_slice(&e);
        apply_weights(w, &mut we);
        r = proj.adjoint(&we);
        for (ri, xi) in r.iter_mut().zip(&x) {
            *ri -= lambda * xi;
        }
        let gamma_new = dot(&r, &r);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Reconstruction {
        volume: Field::from_vec(*proj.grid(), x).expect("sizes match"),
        residuals,
        lambda,
    }
}
