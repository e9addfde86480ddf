//! Monte-Carlo point generators.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{flower_radius, norm, DomainBox, InterfaceShape, LevelSetInterface, Region};
use crate::rng::{keyed_rng, SamplerId};

/// Points of one dimension stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            coords: Vec::with_capacity(dim * n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.coords.extend_from_slice(x);
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// Reorder points by a permutation (`order[k]` is the source index).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.dim, order.len());
        for &i in order {
            out.push(self.get(i));
        }
        out
    }
}

/// Interface sample set with per-point normals.
///
/// Points are drawn from a parametrisation with total parameter measure
/// `param_measure`; `jacobians[k]` is the surface element at point `k`, so
/// `param_measure · jacobians[k] / N` is an unbiased quadrature weight.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSamples {
    pub points: PointCloud,
    pub normals: PointCloud,
    pub jacobians: Vec<f64>,
    pub param_measure: f64,
}

impl InterfaceSamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arclength-corrected quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.jacobians.iter().map(|j| self.param_measure * j / n).collect()
    }

    /// Estimate of |Γ| from the sample: the sum of the corrected weights.
    pub fn measure_estimate(&self) -> f64 {
        self.weights().iter().sum()
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            points: self.points.permuted(order),
            normals: self.normals.permuted(order),
            jacobians: order.iter().map(|&i| self.jacobians[i]).collect(),
            param_measure: self.param_measure,
        }
    }
}

/// The four point classes used by one loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub inner_points: PointCloud,
    pub outer_points: PointCloud,
    pub interface: InterfaceSamples,
    pub boundary_points: PointCloud,
    pub seed: u64,
    pub epoch_created: usize,
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        self.inner_points.dim()
    }

    pub fn region_points(&self, region: Region) -> &PointCloud {
        match region {
            Region::Inside => &self.inner_points,
            Region::Outside => &self.outer_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    pub domain_total: usize,
    pub n_interface: usize,
    pub n_boundary: usize,
    /// Points drawn directly inside the ball before the box draw (sphere
    /// interfaces only; 0 disables).
    pub min_inner: usize,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.domain_total == 0 || self.n_interface == 0 || self.n_boundary == 0 {
            return Err(Error::InvalidParameter("sample counts must be >= 1".into()));
        }
        if self.min_inner > self.domain_total {
            return Err(Error::InvalidParameter(
                "min_inner cannot exceed domain_total".into(),
            ));
        }
        Ok(())
    }

    /// Default ball share: one tenth of the domain points, rounded down.
    pub fn default_min_inner(domain_total: usize) -> usize {
        domain_total / 10
    }
}

/// Uniform box points split by region.
pub fn sample_domain_split(
    geom: &LevelSetInterface,
    total: usize,
    seed: u64,
    epoch: usize,
) -> (PointCloud, PointCloud) {
    let d = geom.dim();
    let mut inner = PointCloud::new(d);
    let mut outer = PointCloud::new(d);
    let mut rng = keyed_rng(seed, epoch as u64, SamplerId::Domain);
    let mut x = vec![0.0; d];
    for _ in 0..total {
        geom.domain.sample_point(&mut rng, &mut x);
        match geom.region(&x) {
            Region::Inside => inner.push(&x),
            Region::Outside => outer.push(&x),
        }
    }
    (inner, outer)
}

/// `min_inner` uniform ball points followed by `total - min_inner` box points
/// split by region, so `N₁ >= min_inner`.
pub fn sample_domain_with_ball(
    geom: &LevelSetInterface,
    total: usize,
    min_inner: usize,
    seed: u64,
    epoch: usize,
) -> Result<(PointCloud, PointCloud)> {
    let InterfaceShape::Sphere { radius } = geom.shape else {
        return Err(Error::InvalidParameter(
            "ball-augmented sampling needs a spherical interface".into(),
        ));
    };
    let min_inner = min_inner.min(total);
    let ball = sample_ball_dropped_coords(geom.dim(), radius, min_inner, seed, epoch)?;
    let (box_inner, outer) = sample_domain_split(geom, total - min_inner, seed, epoch);
    let mut inner = PointCloud::with_capacity(geom.dim(), ball.len() + box_inner.len());
    // radius < box half-width, but rounding can land a point on φ = 0
    for p in ball.iter().chain(box_inner.iter()) {
        if geom.region(p) == Region::Inside {
            inner.push(p);
        }
    }
    Ok((inner, outer))
}

/// θ uniform on (0, 2π) mapped onto the flower curve.
///
/// Jacobians are the arclength speeds √(r² + r'²).
pub fn sample_flower_interface(n: usize, seed: u64, epoch: usize) -> Result<InterfaceSamples> {
    let geom = LevelSetInterface::flower();
    let mut rng = keyed_rng(seed, epoch as u64, SamplerId::Interface);
    let mut points = PointCloud::with_capacity(2, n);
    let mut normals = PointCloud::with_capacity(2, n);
    let mut jacobians = Vec::with_capacity(n);
    for _ in 0..n {
        let theta: f64 = 2.0 * PI * rng.random::<f64>();
        let (p, speed) = flower_point(theta);
        normals.push(&geom.normal_at(&p)?);
        points.push(&p);
        jacobians.push(speed);
    }
    Ok(InterfaceSamples {
        points,
        normals,
        jacobians,
        param_measure: 2.0 * PI,
    })
}

/// Point on the flower at polar angle θ and the arclength speed there.
pub fn flower_point(theta: f64) -> ([f64; 2], f64) {
    let (r, dr) = flower_radius(theta);
    ([r * theta.cos(), r * theta.sin()], (r * r + dr * dr).sqrt())
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 1e-300 {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

/// Uniform points on the origin-centred sphere of radius `radius` in R^d.
pub fn sample_sphere_surface(
    d: usize,
    radius: f64,
    n: usize,
    seed: u64,
    epoch: usize,
) -> Result<InterfaceSamples> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "sphere sampling needs d >= 2, got {d}"
        )));
    }
    let mut rng = keyed_rng(seed, epoch as u64, SamplerId::Interface);
    let mut points = PointCloud::with_capacity(d, n);
    let mut normals = PointCloud::with_capacity(d, n);
    let mut u = vec![0.0; d];
    let mut p = vec![0.0; d];
    for _ in 0..n {
        random_direction(&mut rng, &mut u);
        for (pi, ui) in p.iter_mut().zip(&u) {
            *pi = radius * ui;
        }
        points.push(&p);
        normals.push(&u);
    }
    let dd = d as f64;
    let surface = 2.0 * PI.powf(dd / 2.0) * radius.powf(dd - 1.0)
        / statrs::function::gamma::gamma(dd / 2.0);
    Ok(InterfaceSamples {
        points,
        normals,
        jacobians: vec![1.0; n],
        param_measure: surface,
    })
}

/// Uniform points in the d-ball: uniform on the (d+2)-sphere, last two
/// coordinates dropped.
pub fn sample_ball_dropped_coords(
    d: usize,
    radius: f64,
    n: usize,
    seed: u64,
    epoch: usize,
) -> Result<PointCloud> {
    if d == 0 {
        return Err(Error::InvalidParameter("ball sampling needs d >= 1".into()));
    }
    let mut rng = keyed_rng(seed, epoch as u64, SamplerId::Ball);
    let mut out = PointCloud::with_capacity(d, n);
    let mut u = vec![0.0; d + 2];
    let mut p = vec![0.0; d];
    for _ in 0..n {
        random_direction(&mut rng, &mut u);
        for (pi, ui) in p.iter_mut().zip(&u) {
            *pi = radius * ui;
        }
        out.push(&p);
    }
    Ok(out)
}

/// Uniform points on the boundary of a cube: a face uniformly among the 2d
/// faces, then uniform within it.
pub fn sample_cube_boundary(domain: &DomainBox, n: usize, seed: u64, epoch: usize) -> Result<PointCloud> {
    if domain.cube_side().is_none() {
        return Err(Error::InvalidParameter(
            "boundary sampler needs equal side lengths".into(),
        ));
    }
    let d = domain.dim();
    let mut rng = keyed_rng(seed, epoch as u64, SamplerId::Boundary);
    let mut out = PointCloud::with_capacity(d, n);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        let face = rng.random_range(0..2 * d);
        domain.sample_point(&mut rng, &mut x);
        let axis = face / 2;
        x[axis] = if face % 2 == 0 {
            domain.lower[axis]
        } else {
            domain.upper[axis]
        };
        out.push(&x);
    }
    Ok(out)
}

/// Interface samples for either interface shape.
pub fn sample_interface(geom: &LevelSetInterface, n: usize, seed: u64, epoch: usize) -> Result<InterfaceSamples> {
    match geom.shape {
        InterfaceShape::Flower => sample_flower_interface(n, seed, epoch),
        InterfaceShape::Sphere { radius } => sample_sphere_surface(geom.dim(), radius, n, seed, epoch),
    }
}

/// Draw a full batch for one resampling period.
pub fn draw_batch(geom: &LevelSetInterface, plan: &SamplingPlan, seed: u64, epoch: usize) -> Result<SampleBatch> {
    plan.validate()?;
    let (inner_points, outer_points) = if plan.min_inner > 0 {
        sample_domain_with_ball(geom, plan.domain_total, plan.min_inner, seed, epoch)?
    } else {
        sample_domain_split(geom, plan.domain_total, seed, epoch)
    };
    Ok(SampleBatch {
        inner_points,
        outer_points,
        interface: sample_interface(geom, plan.n_interface, seed, epoch)?,
        boundary_points: sample_cube_boundary(&geom.domain, plan.n_boundary, seed, epoch)?,
        seed,
        epoch_created: epoch,
    })
}
