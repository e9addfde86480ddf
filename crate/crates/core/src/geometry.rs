//! Level-set description of the domain and interface.
//!
//! Ω is an axis-aligned box, Ω₁ = {φ < 0}, Ω₂ = {φ ≥ 0} and Γ = {φ = 0}.
//! The unit normal on Γ is ∇φ/|∇φ| and points from Ω₁ into Ω₂.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::{keyed_rng, SamplerId};

/// Interface-membership tolerance on |φ|.
pub const INTERFACE_TOL: f64 = 1e-9;

/// Below this |∇φ| the normal is undefined.
pub const DEGENERATE_GRAD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "inner")]
    Inside,
    #[serde(rename = "outer")]
    Outside,
}

impl Region {
    pub fn index(self) -> usize {
        match self {
            Region::Inside => 1,
            Region::Outside => 2,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Inside => "inner",
            Region::Outside => "outer",
        })
    }
}

/// Axis-aligned box `Π [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    /// Total (d-1)-measure of the faces.
    pub fn boundary_measure(&self) -> f64 {
        let sides: Vec<f64> = self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect();
        if sides.len() == 1 {
            return 2.0;
        }
        (0..sides.len())
            .map(|i| {
                2.0 * sides
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, s)| s)
                    .product::<f64>()
            })
            .sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
    }

    /// Side length if every side is equal.
    pub fn cube_side(&self) -> Option<f64> {
        let first = self.upper[0] - self.lower[0];
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| u - l == first)
            .then_some(first)
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *o = self.lower[i] + (self.upper[i] - self.lower[i]) * u;
        }
    }
}

/// Shape of the zero level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceShape {
    /// Polar curve `r = 1/2 + sin(5θ)/7` centred at the origin (2D only).
    Flower,
    /// Origin-centred (hyper)sphere.
    Sphere { radius: f64 },
}

/// Polar radius of the flower curve and its θ-derivative.
pub fn flower_radius(theta: f64) -> (f64, f64) {
    (
        0.5 + (5.0 * theta).sin() / 7.0,
        (5.0 / 7.0) * (5.0 * theta).cos(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryMeasures {
    pub omega1: f64,
    pub omega2: f64,
    pub gamma: f64,
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetInterface {
    pub shape: InterfaceShape,
    pub domain: DomainBox,
}

impl LevelSetInterface {
    pub fn flower() -> Self {
        Self {
            shape: InterfaceShape::Flower,
            domain: DomainBox::cube(2, -1.0, 1.0),
        }
    }

    pub fn sphere(radius: f64, domain: DomainBox) -> Result<Self> {
        if !(radius > 0.0) || domain.dim() < 2 {
            return Err(Error::InvalidParameter(format!(
                "sphere needs radius > 0 and d >= 2 (radius {radius}, d {})",
                domain.dim()
            )));
        }
        let fits = domain
            .lower
            .iter()
            .zip(&domain.upper)
            .all(|(l, u)| *l < -radius && *u > radius);
        if !fits {
            return Err(Error::InvalidParameter(
                "sphere must lie strictly inside the domain box".into(),
            ));
        }
        Ok(Self {
            shape: InterfaceShape::Sphere { radius },
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        match self.shape {
            InterfaceShape::Flower => {
                let r = x[0].hypot(x[1]);
                r - flower_radius(x[1].atan2(x[0])).0
            }
            InterfaceShape::Sphere { radius } => norm(x) - radius,
        }
    }

    pub fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        match self.shape {
            InterfaceShape::Flower => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let r = r2.sqrt();
                let (_, dr) = flower_radius(x[1].atan2(x[0]));
                // ∇r = x/r, ∇θ = (-x₂, x₁)/r²
                vec![x[0] / r + dr * x[1] / r2, x[1] / r - dr * x[0] / r2]
            }
            InterfaceShape::Sphere { .. } => {
                let r = norm(x);
                x.iter().map(|v| v / r).collect()
            }
        }
    }

    /// Region of a point known to lie in the box. φ = 0 counts as outside.
    #[inline]
    pub fn region(&self, x: &[f64]) -> Region {
        if self.phi(x) < 0.0 {
            Region::Inside
        } else {
            Region::Outside
        }
    }

    pub fn classify(&self, x: &[f64]) -> Result<Region> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(self.region(x))
    }

    /// ∇φ/|∇φ| without checking that `x` lies on Γ.
    pub fn normal_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.grad_phi(x);
        let n = norm(&g);
        if !(n >= DEGENERATE_GRAD) {
            return Err(Error::DegenerateLevelSet {
                point: x.to_vec(),
                norm: n,
            });
        }
        g.iter_mut().for_each(|v| *v /= n);
        Ok(g)
    }

    /// Unit normal at an interface point, pointing from Ω₁ into Ω₂.
    pub fn unit_normal(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let phi = self.phi(x);
        if !(phi.abs() <= INTERFACE_TOL) {
            return Err(Error::NotOnInterface {
                point: x.to_vec(),
                phi,
            });
        }
        self.normal_at(x)
    }

    /// Closed-form measures of Ω₁, Ω₂, Γ and ∂Ω.
    pub fn analytic_measures(&self) -> GeometryMeasures {
        let box_volume = self.domain.volume();
        let boundary = self.domain.boundary_measure();
        let (omega1, gamma_measure) = match self.shape {
            InterfaceShape::Flower => (51.0 * PI / 196.0, flower_perimeter()),
            InterfaceShape::Sphere { radius } => {
                let d = self.dim() as f64;
                (ball_volume(self.dim(), radius), {
                    2.0 * PI.powf(d / 2.0) * radius.powf(d - 1.0) / gamma(d / 2.0)
                })
            }
        };
        GeometryMeasures {
            omega1,
            omega2: box_volume - omega1,
            gamma: gamma_measure,
            boundary,
        }
    }

    /// Hit-or-miss estimate of the measure of `region` (`None` = whole box).
    ///
    /// Returns `(|box|·p̂, |box|·√(p̂(1-p̂)/N))`.
    pub fn hit_or_miss_measure(&self, region: Option<Region>, samples: usize, seed: u64) -> (f64, f64) {
        let samples = samples.max(1);
        let mut rng = keyed_rng(seed, 0, SamplerId::HitOrMiss);
        let mut x = vec![0.0; self.dim()];
        let mut hits = 0usize;
        for _ in 0..samples {
            self.domain.sample_point(&mut rng, &mut x);
            if region.is_none_or(|r| self.region(&x) == r) {
                hits += 1;
            }
        }
        let n = samples as f64;
        let p = hits as f64 / n;
        let vol = self.domain.volume();
        (vol * p, vol * (p * (1.0 - p) / n).sqrt())
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Volume of the d-ball of the given radius.
pub fn ball_volume(d: usize, radius: f64) -> f64 {
    let d = d as f64;
    PI.powf(d / 2.0) * radius.powf(d) / gamma(d / 2.0 + 1.0)
}

/// Arc length of the flower curve, ∫₀^{2π} √(r² + r'²) dθ.
///
/// Periodic integrand, so the trapezoidal rule converges geometrically.
pub fn flower_perimeter() -> f64 {
    const NODES: usize = 1 << 14;
    let h = 2.0 * PI / NODES as f64;
    (0..NODES)
        .map(|k| {
            let (r, dr) = flower_radius(k as f64 * h);
            (r * r + dr * dr).sqrt()
        })
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> LevelSetInterface {
        LevelSetInterface::sphere(0.5, DomainBox::cube(2, -1.0, 1.0)).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(circle().classify(&[0.0, 0.0]).unwrap(), Region::Inside);
        assert_eq!(circle().classify(&[0.9, 0.9]).unwrap(), Region::Outside);
        assert_eq!(circle().classify(&[0.5, 0.0]).unwrap(), Region::Outside);
        // flower: r(π/2) = 1/2 + 1/7 > 0.6
        let f = LevelSetInterface::flower();
        assert_eq!(f.classify(&[0.0, 0.6]).unwrap(), Region::Inside);
        assert!(matches!(
            circle().classify(&[1.5, 0.0]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn normals_on_circle_and_sphere() {
        assert_eq!(circle().unit_normal(&[0.5, 0.0]).unwrap(), vec![1.0, 0.0]);
        let s = LevelSetInterface::sphere(0.4, DomainBox::cube(3, -0.5, 0.5)).unwrap();
        assert_eq!(s.unit_normal(&[0.0, 0.0, 0.4]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(matches!(
            s.unit_normal(&[0.0, 0.0, 0.3]),
            Err(Error::NotOnInterface { .. })
        ));
    }

    #[test]
    fn flower_normal_matches_finite_difference_gradient() {
        let f = LevelSetInterface::flower();
        let x = [0.5, 0.0];
        let n = f.unit_normal(&x).unwrap();
        assert!(n[0] > 0.0 && n[1] < 0.0);
        let h = 1e-6;
        let fd: Vec<f64> = (0..2)
            .map(|j| {
                let mut p = x;
                let mut m = x;
                p[j] += h;
                m[j] -= h;
                (f.phi(&p) - f.phi(&m)) / (2.0 * h)
            })
            .collect();
        let fd_norm = norm(&fd);
        for j in 0..2 {
            assert!((n[j] - fd[j] / fd_norm).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_gradient_is_rejected() {
        let s = circle();
        assert!(matches!(
            s.normal_at(&[0.0, 0.0]),
            Err(Error::DegenerateLevelSet { .. })
        ));
    }

    #[test]
    fn sphere_measures() {
        let s = LevelSetInterface::sphere(0.4, DomainBox::cube(3, -0.5, 0.5)).unwrap();
        let m = s.analytic_measures();
        assert!((m.omega1 - 4.0 / 3.0 * PI * 0.064).abs() < 1e-12);
        assert!((m.omega1 - 0.26808).abs() < 1e-5);
        assert!((m.gamma - 4.0 * PI * 0.16).abs() < 1e-12);
        assert_eq!(m.boundary, 6.0);
        assert!((m.omega1 + m.omega2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flower_measures() {
        let m = LevelSetInterface::flower().analytic_measures();
        assert_eq!(m.omega1 + m.omega2, 4.0);
        assert!((m.omega1 - 0.817_455_231).abs() < 1e-8);
        assert_eq!(m.boundary, 8.0);
        assert!(m.gamma > 2.0 * PI * (0.5 - 1.0 / 7.0));
        // the trapezoid rule has converged
        let coarse: f64 = {
            let nodes = 1 << 10;
            let h = 2.0 * PI / nodes as f64;
            (0..nodes)
                .map(|k| {
                    let (r, dr) = flower_radius(k as f64 * h);
                    (r * r + dr * dr).sqrt()
                })
                .sum::<f64>()
                * h
        };
        assert!((coarse - m.gamma).abs() < 1e-12);
    }

    #[test]
    fn hit_or_miss_whole_box_is_exact() {
        let (est, se) = circle().hit_or_miss_measure(None, 1000, 3);
        assert_eq!(est, 4.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn hit_or_miss_circle_area() {
        let (est, se) = circle().hit_or_miss_measure(Some(Region::Inside), 1_000_000, 11);
        assert!((est - PI * 0.25).abs() <= 3.0 * se, "{est} ± {se}");
    }

    #[test]
    fn classify_agrees_with_phi_sign() {
        let f = LevelSetInterface::flower();
        let mut rng = keyed_rng(1, 0, SamplerId::Verification);
        let mut x = [0.0; 2];
        for _ in 0..10_000 {
            f.domain.sample_point(&mut rng, &mut x);
            let phi = f.phi(&x);
            if phi.abs() > 1e-9 {
                let expect = if phi < 0.0 { Region::Inside } else { Region::Outside };
                assert_eq!(f.classify(&x).unwrap(), expect);
            }
        }
    }

    #[test]
    fn normals_have_unit_length() {
        let f = LevelSetInterface::flower();
        for k in 0..1000 {
            let theta = k as f64 * 0.00628318;
            let (r, _) = flower_radius(theta);
            let x = [r * theta.cos(), r * theta.sin()];
            let n = f.normal_at(&x).unwrap();
            assert!((norm(&n) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hit_or_miss_stderr_shrinks_like_root_two() {
        // ratio of mean stderr at N and 2N over repeats
        let f = LevelSetInterface::flower();
        let reps = 20;
        let mean_se = |n: usize| {
            (0..reps)
                .map(|s| f.hit_or_miss_measure(Some(Region::Inside), n, 100 + s).1)
                .sum::<f64>()
                / reps as f64
        };
        let ratio = mean_se(20_000) / mean_se(40_000);
        assert!((ratio - 2f64.sqrt()).abs() < 0.05 * 2f64.sqrt(), "{ratio}");
    }
}
