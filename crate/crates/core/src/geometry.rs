//! Fracture geometry: the reference hyperplane, aperture profiles on either
//! side of it, the interface normals they induce, and the aperture-aware
//! jump and average operators used by the reduced models.
//!
//! The solver works in two space dimensions. The fracture hyperplane is a
//! line `{ x : n·x = offset }` with unit normal `n` pointing into the second
//! bulk domain and unit tangent `τ`. A point is written in frame coordinates
//! `(η, t)` with `x = (offset + η) n + t τ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];
pub type Tensor = [[f64; 2]; 2];

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn mat_vec(k: &Tensor, v: Point) -> Point {
    [k[0][0] * v[0] + k[0][1] * v[1], k[1][0] * v[0] + k[1][1] * v[1]]
}

/// Orthonormal frame attached to the fracture hyperplane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractureFrame {
    normal: Point,
    tangent: Point,
    offset: f64,
    t_range: (f64, f64),
}

impl FractureFrame {
    /// Builds a frame, checking that `(normal, tangent)` is orthonormal.
    pub fn new(normal: Point, tangent: Point, offset: f64, t_range: (f64, f64)) -> Result<Self> {
        let tol = 1e-12;
        if (norm(normal) - 1.0).abs() > tol || (norm(tangent) - 1.0).abs() > tol {
            return Err(Error::InvalidParameter {
                name: "frame",
                reason: "normal and tangent must be unit vectors".into(),
            });
        }
        if dot(normal, tangent).abs() > tol {
            return Err(Error::InvalidParameter {
                name: "frame",
                reason: "normal and tangent must be orthogonal".into(),
            });
        }
        if !(t_range.0 < t_range.1) {
            return Err(Error::InvalidParameter {
                name: "frame",
                reason: format!("empty tangential range {:?}", t_range),
            });
        }
        Ok(Self {
            normal,
            tangent,
            offset,
            t_range,
        })
    }

    /// The vertical fracture `{x1 = offset}` crossing the unit square, with
    /// `n = e1` and `τ = e2`, so that `t = x2`.
    pub fn vertical(offset: f64) -> Self {
        Self {
            normal: [1.0, 0.0],
            tangent: [0.0, 1.0],
            offset,
            t_range: (0.0, 1.0),
        }
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn tangent(&self) -> Point {
        self.tangent
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    pub fn gamma_length(&self) -> f64 {
        self.t_range.1 - self.t_range.0
    }

    /// Frame coordinates `(η, t)` of a point.
    pub fn coords(&self, x: Point) -> (f64, f64) {
        (dot(self.normal, x) - self.offset, dot(self.tangent, x))
    }

    /// Cartesian point with frame coordinates `(η, t)`.
    pub fn point(&self, eta: f64, t: f64) -> Point {
        let a = self.offset + eta;
        [
            a * self.normal[0] + t * self.tangent[0],
            a * self.normal[1] + t * self.tangent[1],
        ]
    }

    pub(crate) fn check_t(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.t_range;
        let slack = 1e-12 * (hi - lo);
        if !t.is_finite() || t < lo - slack || t > hi + slack {
            return Err(Error::OutsideFracture { t, lo, hi });
        }
        Ok(())
    }
}

/// Orthogonal projection onto the fracture hyperplane.
pub fn project_to_gamma(x: Point, frame: &FractureFrame) -> Point {
    let (eta, _) = frame.coords(x);
    let n = frame.normal();
    [x[0] - eta * n[0], x[1] - eta * n[1]]
}

/// How the two half-apertures of a sinusoidal profile relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// `d2 = d0 - ½ d0 sin(..)`: constant total aperture, serpentine fracture.
    Antisymmetric,
    /// `d2 = d1`: fracture symmetric about the hyperplane, varying total aperture.
    Symmetric,
}

type Scalar1d = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied half-apertures and their tangential derivatives.
pub struct CustomAperture {
    pub d1: Scalar1d,
    pub d2: Scalar1d,
    pub slope1: Scalar1d,
    pub slope2: Scalar1d,
}

#[derive(Clone)]
pub enum ApertureKind {
    Constant {
        d1: f64,
        d2: f64,
    },
    Sinusoidal {
        d0: f64,
        frequency: f64,
        phase: f64,
        symmetry: Symmetry,
    },
    Custom(Arc<CustomAperture>),
}

impl fmt::Debug for ApertureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { d1, d2 } => write!(f, "Constant {{ d1: {d1}, d2: {d2} }}"),
            Self::Sinusoidal {
                d0,
                frequency,
                phase,
                symmetry,
            } => write!(
                f,
                "Sinusoidal {{ d0: {d0}, frequency: {frequency}, phase: {phase}, symmetry: {symmetry:?} }}"
            ),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Half-apertures and their derivatives along `t` at one point of the fracture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApertureSample {
    pub d1: f64,
    pub d2: f64,
    pub slope1: f64,
    pub slope2: f64,
}

impl ApertureSample {
    pub fn d(&self) -> f64 {
        self.d1 + self.d2
    }

    pub fn slope(&self) -> f64 {
        self.slope1 + self.slope2
    }
}

/// Aperture description of a single fracture along its reference hyperplane.
#[derive(Clone, Debug)]
pub struct ApertureProfile {
    kind: ApertureKind,
    min_aperture: f64,
}

impl ApertureProfile {
    pub fn constant(d1: f64, d2: f64) -> Self {
        Self {
            kind: ApertureKind::Constant { d1, d2 },
            min_aperture: 0.0,
        }
    }

    /// `d1 = d0 + ½ d0 sin(ω t + φ)` and `d2 = d0 ∓ ½ d0 sin(ω t + φ)`.
    pub fn sinusoidal(d0: f64, frequency: f64, phase: f64, symmetry: Symmetry) -> Self {
        Self {
            kind: ApertureKind::Sinusoidal {
                d0,
                frequency,
                phase,
                symmetry,
            },
            min_aperture: 0.0,
        }
    }

    /// Sinusoidal profile with the default frequency `8π` and zero phase.
    pub fn serpentine(d0: f64, symmetry: Symmetry) -> Self {
        Self::sinusoidal(d0, 8.0 * PI, 0.0, symmetry)
    }

    pub fn custom(custom: CustomAperture) -> Self {
        Self {
            kind: ApertureKind::Custom(Arc::new(custom)),
            min_aperture: 0.0,
        }
    }

    /// Sets the threshold `d_min` that the total aperture must exceed.
    pub fn with_min_aperture(mut self, d_min: f64) -> Self {
        self.min_aperture = d_min;
        self
    }

    pub fn kind(&self) -> &ApertureKind {
        &self.kind
    }

    pub fn min_aperture(&self) -> f64 {
        self.min_aperture
    }

    /// True when both half-apertures are constant, so every gradient term vanishes.
    pub fn is_gradient_free(&self) -> bool {
        matches!(self.kind, ApertureKind::Constant { .. })
    }

    /// Unchecked evaluation; used at quadrature points inside assembly.
    pub fn sample(&self, t: f64) -> ApertureSample {
        match &self.kind {
            ApertureKind::Constant { d1, d2 } => ApertureSample {
                d1: *d1,
                d2: *d2,
                slope1: 0.0,
                slope2: 0.0,
            },
            ApertureKind::Sinusoidal {
                d0,
                frequency,
                phase,
                symmetry,
            } => {
                let arg = frequency * t + phase;
                let wave = 0.5 * d0 * arg.sin();
                let dwave = 0.5 * d0 * frequency * arg.cos();
                let sign = match symmetry {
                    Symmetry::Antisymmetric => -1.0,
                    Symmetry::Symmetric => 1.0,
                };
                ApertureSample {
                    d1: d0 + wave,
                    d2: d0 + sign * wave,
                    slope1: dwave,
                    slope2: sign * dwave,
                }
            }
            ApertureKind::Custom(c) => ApertureSample {
                d1: (c.d1)(t),
                d2: (c.d2)(t),
                slope1: (c.slope1)(t),
                slope2: (c.slope2)(t),
            },
        }
    }
}

/// Checked aperture evaluation with gradients as vectors in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApertureEval {
    pub d1: f64,
    pub d2: f64,
    pub d: f64,
    pub grad_d1: Point,
    pub grad_d2: Point,
}

pub fn eval_aperture(profile: &ApertureProfile, frame: &FractureFrame, t: f64) -> Result<ApertureEval> {
    frame.check_t(t)?;
    let s = profile.sample(t);
    let d = s.d();
    if !(d > profile.min_aperture()) {
        return Err(Error::ApertureTooSmall {
            t,
            d,
            d_min: profile.min_aperture(),
        });
    }
    let tau = frame.tangent();
    Ok(ApertureEval {
        d1: s.d1,
        d2: s.d2,
        d,
        grad_d1: [s.slope1 * tau[0], s.slope1 * tau[1]],
        grad_d2: [s.slope2 * tau[0], s.slope2 * tau[1]],
    })
}

/// Unit normals of the two fracture walls, each pointing into its bulk domain.
pub fn interface_normals(profile: &ApertureProfile, frame: &FractureFrame, t: f64) -> Result<(Point, Point)> {
    let a = eval_aperture(profile, frame, t)?;
    let n = frame.normal();
    let g1 = a.grad_d1;
    let g2 = a.grad_d2;
    let s1 = (1.0 + dot(g1, g1)).sqrt();
    let s2 = (1.0 + dot(g2, g2)).sqrt();
    let n1 = [(-n[0] - g1[0]) / s1, (-n[1] - g1[1]) / s1];
    let n2 = [(n[0] - g2[0]) / s2, (n[1] - g2[1]) / s2];
    Ok((n1, n2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Scalar,
    Vector,
}

/// Jump and average across the fracture of traces taken on the two walls.
///
/// Scalar traces: `[f] = f2 - f1`, `{f} = (f1 + f2)/2`. Vector traces are
/// projected onto the wall directions `n + ∇d1` and `n - ∇d2`, so the result
/// carries the geometry of the fracture.
pub fn continuous_jump_avg(
    trace1: &[f64],
    trace2: &[f64],
    profile: &ApertureProfile,
    frame: &FractureFrame,
    t: f64,
    kind: TraceKind,
) -> Result<(f64, f64)> {
    let expected = match kind {
        TraceKind::Scalar => 1,
        TraceKind::Vector => 2,
    };
    for tr in [trace1, trace2] {
        if tr.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: tr.len(),
            });
        }
    }
    match kind {
        TraceKind::Scalar => Ok((trace2[0] - trace1[0], 0.5 * (trace1[0] + trace2[0]))),
        TraceKind::Vector => {
            let a = eval_aperture(profile, frame, t)?;
            let n = frame.normal();
            let w1 = [n[0] + a.grad_d1[0], n[1] + a.grad_d1[1]];
            let w2 = [n[0] - a.grad_d2[0], n[1] - a.grad_d2[1]];
            let f1 = dot([trace1[0], trace1[1]], w1);
            let f2 = dot([trace2[0], trace2[1]], w2);
            Ok((f1 - f2, 0.5 * (f1 + f2)))
        }
    }
}

/// Symmetric 2×2 permeability tensor field on a bulk subdomain.
#[derive(Clone)]
pub enum TensorField {
    Constant(Tensor),
    Function(Arc<dyn Fn(Point) -> Tensor + Send + Sync>),
}

impl TensorField {
    pub fn isotropic(k: f64) -> Self {
        Self::Constant([[k, 0.0], [0.0, k]])
    }

    pub fn at(&self, x: Point) -> Tensor {
        match self {
            Self::Constant(k) => *k,
            Self::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(k) => write!(f, "Constant({k:?})"),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Scalar field on the fracture, parameterized by `t`.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ScalarField {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Function(f) => f(t),
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Bulk, fracture, and effective interface permeabilities plus the coupling
/// parameter `ξ`.
#[derive(Clone, Debug)]
pub struct PermeabilityData {
    pub bulk1: TensorField,
    pub bulk2: TensorField,
    /// Permeability inside the fracture; only used by the full-dimensional model.
    pub fracture: Option<TensorField>,
    /// Tangential effective permeability `K_Γ` (a 1×1 tensor in 2D).
    pub gamma_tangential: ScalarField,
    /// Normal effective permeability `K_Γ^⊥`.
    pub gamma_perp: ScalarField,
    pub xi: f64,
}

impl PermeabilityData {
    /// Isotropic bulk permeability `k_bulk` and isotropic fracture
    /// permeability `k_fracture`, whose transversal means are `k_fracture`.
    pub fn isotropic(k_bulk: f64, k_fracture: f64, xi: f64) -> Self {
        Self {
            bulk1: TensorField::isotropic(k_bulk),
            bulk2: TensorField::isotropic(k_bulk),
            fracture: Some(TensorField::isotropic(k_fracture)),
            gamma_tangential: ScalarField::Constant(k_fracture),
            gamma_perp: ScalarField::Constant(k_fracture),
            xi,
        }
    }

    /// Checks `ξ > ½` and that constant tensors are symmetric positive definite.
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.5) || !self.xi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "xi",
                reason: format!("coupling parameter must satisfy xi > 1/2, got {}", self.xi),
            });
        }
        let mut fields = vec![("K1", &self.bulk1), ("K2", &self.bulk2)];
        if let Some(kf) = &self.fracture {
            fields.push(("Kf", kf));
        }
        for (name, field) in fields {
            if let TensorField::Constant(k) = field {
                check_spd(name, k)?;
            }
        }
        for (name, field) in [("K_gamma", &self.gamma_tangential), ("K_gamma_perp", &self.gamma_perp)] {
            if let ScalarField::Constant(v) = field {
                if !(*v > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "permeability",
                        reason: format!("{name} must be positive, got {v}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// `β_Γ = 4 K_Γ^⊥ / ((2ξ - 1) d)`.
    pub fn beta(&self, t: f64, d: f64) -> f64 {
        4.0 * self.gamma_perp.at(t) / ((2.0 * self.xi - 1.0) * d)
    }
}

fn check_spd(name: &str, k: &Tensor) -> Result<()> {
    let scale = k[0][0].abs().max(k[1][1].abs()).max(1.0);
    if (k[0][1] - k[1][0]).abs() > 1e-12 * scale {
        return Err(Error::InvalidParameter {
            name: "permeability",
            reason: format!("{name} is not symmetric"),
        });
    }
    let (lo, _) = eigen_bounds(k);
    if !(lo > 0.0) {
        return Err(Error::InvalidParameter {
            name: "permeability",
            reason: format!("{name} is not positive definite"),
        });
    }
    Ok(())
}

/// Smallest and largest eigenvalue of a symmetric 2×2 tensor.
pub(crate) fn eigen_bounds(k: &Tensor) -> (f64, f64) {
    let tr = 0.5 * (k[0][0] + k[1][1]);
    let diff = 0.5 * (k[0][0] - k[1][1]);
    let r = (diff * diff + k[0][1] * k[0][1]).sqrt();
    (tr - r, tr + r)
}

/// Outcome of the sufficient coercivity check for the reduced model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wellposedness {
    pub lhs: f64,
    pub satisfied: bool,
    pub kappa_ratio: f64,
    pub d_max: f64,
    pub d_min: f64,
    pub grad_d_sup: f64,
    pub grad_diff_sup: f64,
}

/// Default sampling density for the sup-norms, in points per unit length.
pub const WELLPOSEDNESS_SAMPLES_PER_UNIT: usize = 1024;

/// Evaluates `(κmax/κmin)² (D/d_min) [(2ξ-1)‖∇d‖²∞ + ‖∇d1-∇d2‖²∞]` by
/// sampling the fracture and compares it against 16.
pub fn check_wellposedness(
    profile: &ApertureProfile,
    perm: &PermeabilityData,
    frame: &FractureFrame,
    samples_per_unit: usize,
) -> Result<Wellposedness> {
    if samples_per_unit == 0 {
        return Err(Error::InvalidParameter {
            name: "samples_per_unit",
            reason: "must be positive".into(),
        });
    }
    let (lo, hi) = frame.t_range();
    let n = ((hi - lo) * samples_per_unit as f64).ceil().max(1.0) as usize;
    let mut kappa_min = f64::INFINITY;
    let mut kappa_max = 0.0f64;
    let mut d_min = f64::INFINITY;
    let mut d_max = 0.0f64;
    let mut grad_d_sup = 0.0f64;
    let mut grad_diff_sup = 0.0f64;
    for i in 0..=n {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let s = profile.sample(t);
        let kt = perm.gamma_tangential.at(t);
        let kp = perm.gamma_perp.at(t);
        for (field, v) in [
            ("d1", s.d1),
            ("d2", s.d2),
            ("grad_d1", s.slope1),
            ("grad_d2", s.slope2),
            ("K_gamma", kt),
            ("K_gamma_perp", kp),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { field, t });
            }
        }
        kappa_min = kappa_min.min(kt).min(kp);
        kappa_max = kappa_max.max(kt).max(kp);
        d_min = d_min.min(s.d());
        d_max = d_max.max(s.d());
        grad_d_sup = grad_d_sup.max(s.slope().abs());
        grad_diff_sup = grad_diff_sup.max((s.slope1 - s.slope2).abs());
    }
    if !(d_min > 0.0) {
        return Err(Error::ApertureTooSmall {
            t: f64::NAN,
            d: d_min,
            d_min: profile.min_aperture(),
        });
    }
    if !(kappa_min > 0.0) {
        return Err(Error::InvalidParameter {
            name: "permeability",
            reason: "effective fracture permeability must be positive".into(),
        });
    }
    let kappa_ratio = kappa_max / kappa_min;
    let lhs = kappa_ratio * kappa_ratio
        * (d_max / d_min)
        * ((2.0 * perm.xi - 1.0) * grad_d_sup * grad_d_sup + grad_diff_sup * grad_diff_sup);
    Ok(Wellposedness {
        lhs,
        satisfied: lhs < 16.0,
        kappa_ratio,
        d_max,
        d_min,
        grad_d_sup,
        grad_diff_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asym(d0: f64) -> ApertureProfile {
        ApertureProfile::serpentine(d0, Symmetry::Antisymmetric)
    }

    #[test]
    fn serpentine_values_at_reference_points() {
        let frame = FractureFrame::vertical(0.5);
        let a = eval_aperture(&asym(0.1), &frame, 0.0).unwrap();
        assert!((a.d1 - 0.1).abs() < 1e-15 && (a.d2 - 0.1).abs() < 1e-15);
        assert!((a.d - 0.2).abs() < 1e-15);
        let a = eval_aperture(&asym(0.1), &frame, 1.0 / 16.0).unwrap();
        assert!((a.d1 - 0.15).abs() < 1e-14);
        assert!((a.d2 - 0.05).abs() < 1e-14);
        assert!((a.d - 0.2).abs() < 1e-14);
    }

    #[test]
    fn constant_profile_has_zero_gradients() {
        let frame = FractureFrame::vertical(0.5);
        let a = eval_aperture(&ApertureProfile::constant(0.3, 0.2), &frame, 0.4).unwrap();
        assert_eq!(a.grad_d1, [0.0, 0.0]);
        assert_eq!(a.grad_d2, [0.0, 0.0]);
    }

    #[test]
    fn rejects_points_outside_fracture_and_thin_apertures() {
        let frame = FractureFrame::vertical(0.5);
        assert!(matches!(
            eval_aperture(&asym(0.1), &frame, 1.5),
            Err(Error::OutsideFracture { .. })
        ));
        let closed = ApertureProfile::constant(0.1, -0.1);
        assert!(matches!(
            eval_aperture(&closed, &frame, 0.5),
            Err(Error::ApertureTooSmall { .. })
        ));
        // Individually negative half-apertures are allowed.
        let shifted = ApertureProfile::constant(-0.05, 0.1);
        assert!(eval_aperture(&shifted, &frame, 0.5).is_ok());
        let strict = ApertureProfile::constant(0.01, 0.01).with_min_aperture(0.05);
        assert!(eval_aperture(&strict, &frame, 0.5).is_err());
    }

    #[test]
    fn flat_walls_have_axis_normals() {
        let frame = FractureFrame::vertical(0.5);
        let (n1, n2) = interface_normals(&ApertureProfile::constant(0.1, 0.2), &frame, 0.3).unwrap();
        assert_eq!(n1, [-1.0, 0.0]);
        assert_eq!(n2, [1.0, 0.0]);
    }

    #[test]
    fn serpentine_normals_at_origin() {
        // At t = 0 the slope of d1 is 4π d0 and the slope of d2 is -4π d0.
        let frame = FractureFrame::vertical(0.5);
        let (n1, n2) = interface_normals(&asym(0.1), &frame, 0.0).unwrap();
        let g = 4.0 * PI * 0.1;
        let s = (1.0 + g * g).sqrt();
        assert!((n1[0] + 1.0 / s).abs() < 1e-15);
        assert!((n1[1] + g / s).abs() < 1e-15);
        assert!((n2[0] - 1.0 / s).abs() < 1e-15);
        assert!((n2[1] - g / s).abs() < 1e-15);
        assert!((norm(n1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jump_and_average_examples() {
        let frame = FractureFrame::vertical(0.5);
        let flat = ApertureProfile::constant(0.1, 0.1);
        let (j, a) = continuous_jump_avg(&[1.0], &[3.0], &flat, &frame, 0.5, TraceKind::Scalar).unwrap();
        assert_eq!((j, a), (2.0, 2.0));
        let n = frame.normal();
        let (j, a) = continuous_jump_avg(&n, &n, &flat, &frame, 0.5, TraceKind::Vector).unwrap();
        assert_eq!((j, a), (0.0, 1.0));
        // ∇d1 = -∇d2 = g: both projections equal n·n + n·g.
        let g = 0.7;
        let custom = ApertureProfile::custom(CustomAperture {
            d1: Box::new(move |t| 0.2 + g * t),
            d2: Box::new(move |t| 0.2 - g * t),
            slope1: Box::new(move |_| g),
            slope2: Box::new(move |_| -g),
        });
        let f = [0.3, -0.4];
        let (j, a) = continuous_jump_avg(&f, &f, &custom, &frame, 0.1, TraceKind::Vector).unwrap();
        assert!(j.abs() < 1e-15);
        assert!((a - (0.3 - 0.4 * g)).abs() < 1e-15);
        assert!(matches!(
            continuous_jump_avg(&[1.0, 2.0], &[1.0], &flat, &frame, 0.5, TraceKind::Vector),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let frame = FractureFrame::vertical(0.5);
        assert_eq!(project_to_gamma([0.5, 0.3], &frame), [0.5, 0.3]);
        assert_eq!(project_to_gamma([0.5 + 0.2, 0.3], &frame), [0.5, 0.3]);
        let tilted = FractureFrame::new([0.6, 0.8], [-0.8, 0.6], 0.1, (-1.0, 1.0)).unwrap();
        let x = [0.37, -0.21];
        let p = project_to_gamma(x, &tilted);
        assert!(tilted.coords(p).0.abs() < 1e-15);
        assert!((tilted.coords(p).1 - tilted.coords(x).1).abs() < 1e-15);
        let pp = project_to_gamma(p, &tilted);
        assert!((pp[0] - p[0]).abs() < 1e-15 && (pp[1] - p[1]).abs() < 1e-15);
    }

    #[test]
    fn frame_rejects_non_orthonormal_basis() {
        assert!(FractureFrame::new([1.0, 0.0], [0.6, 0.8], 0.0, (0.0, 1.0)).is_err());
        assert!(FractureFrame::new([2.0, 0.0], [0.0, 1.0], 0.0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn wellposedness_constant_profile_is_zero() {
        let frame = FractureFrame::vertical(0.5);
        let perm = PermeabilityData::isotropic(1.0, 0.5, 2.0 / 3.0);
        let w = check_wellposedness(&ApertureProfile::constant(0.1, 0.1), &perm, &frame, 1024).unwrap();
        assert_eq!(w.lhs, 0.0);
        assert!(w.satisfied);
    }

    #[test]
    fn wellposedness_scales_with_squared_permeability_ratio() {
        let frame = FractureFrame::vertical(0.5);
        let mut perm = PermeabilityData::isotropic(1.0, 1.0, 2.0 / 3.0);
        let profile = ApertureProfile::serpentine(0.05, Symmetry::Symmetric);
        let base = check_wellposedness(&profile, &perm, &frame, 1024).unwrap();
        perm.gamma_perp = ScalarField::Constant(2.0);
        let doubled = check_wellposedness(&profile, &perm, &frame, 1024).unwrap();
        assert!((doubled.lhs / base.lhs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn wellposedness_rejects_non_finite_samples() {
        let frame = FractureFrame::vertical(0.5);
        let perm = PermeabilityData::isotropic(1.0, 1.0, 2.0 / 3.0);
        let bad = ApertureProfile::custom(CustomAperture {
            d1: Box::new(|t| if t > 0.5 { f64::NAN } else { 0.1 }),
            d2: Box::new(|_| 0.1),
            slope1: Box::new(|_| 0.0),
            slope2: Box::new(|_| 0.0),
        });
        assert!(matches!(
            check_wellposedness(&bad, &perm, &frame, 64),
            Err(Error::NonFiniteSample { field: "d1", .. })
        ));
    }

    #[test]
    fn xi_must_exceed_one_half() {
        assert!(PermeabilityData::isotropic(1.0, 1.0, 0.5).validate().is_err());
        assert!(PermeabilityData::isotropic(1.0, 1.0, 0.51).validate().is_ok());
        let mut p = PermeabilityData::isotropic(1.0, 1.0, 0.7);
        p.bulk1 = TensorField::Constant([[1.0, 0.2], [0.1, 1.0]]);
        assert!(p.validate().is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn symmetry() -> impl Strategy<Value = Symmetry> {
        prop_oneof![Just(Symmetry::Antisymmetric), Just(Symmetry::Symmetric)]
    }

    proptest! {
        #[test]
        fn wall_normals_are_unit_and_face_their_bulk(
            d0 in 1e-3f64..0.2, freq in 0.0f64..40.0, phase in 0.0f64..6.3, sym in symmetry(), t in 0.0f64..1.0,
        ) {
            let frame = FractureFrame::vertical(0.5);
            let profile = ApertureProfile::sinusoidal(d0, freq, phase, sym);
            let (n1, n2) = interface_normals(&profile, &frame, t).unwrap();
            prop_assert!((norm(n1) - 1.0).abs() < 1e-14);
            prop_assert!((norm(n2) - 1.0).abs() < 1e-14);
            prop_assert!(n1[0] < 0.0 && n2[0] > 0.0);
        }

        #[test]
        fn slopes_match_finite_differences(
            d0 in 1e-3f64..0.2, freq in 0.0f64..40.0, phase in 0.0f64..6.3, sym in symmetry(), t in 0.01f64..0.99,
        ) {
            let profile = ApertureProfile::sinusoidal(d0, freq, phase, sym);
            let h = 1e-6;
            let (a, b) = (profile.sample(t + h), profile.sample(t - h));
            let s = profile.sample(t);
            let scale = d0 * (1.0 + freq);
            prop_assert!(((a.d1 - b.d1) / (2.0 * h) - s.slope1).abs() < 1e-6 * scale);
            prop_assert!(((a.d2 - b.d2) / (2.0 * h) - s.slope2).abs() < 1e-6 * scale);
        }

        #[test]
        fn flat_walls_reduce_to_classical_jump_and_average(
            d1 in 1e-3f64..0.2, d2 in 1e-3f64..0.2, t in 0.0f64..1.0,
            u in prop::array::uniform2(-5.0f64..5.0), v in prop::array::uniform2(-5.0f64..5.0),
        ) {
            let frame = FractureFrame::vertical(0.5);
            let profile = ApertureProfile::constant(d1, d2);
            let (j, a) = continuous_jump_avg(&u, &v, &profile, &frame, t, TraceKind::Vector).unwrap();
            prop_assert!((j - (u[0] - v[0])).abs() < 1e-14);
            prop_assert!((a - 0.5 * (u[0] + v[0])).abs() < 1e-14);
            // Equal traces have no jump, and their average is the trace itself.
            let (j, a) = continuous_jump_avg(&[u[0]], &[u[0]], &profile, &frame, t, TraceKind::Scalar).unwrap();
            prop_assert_eq!(j, 0.0);
            prop_assert_eq!(a, u[0]);
        }

        #[test]
        fn projection_is_idempotent(x in prop::array::uniform2(-2.0f64..2.0), angle in 0.0f64..6.3, c in -1.0f64..1.0) {
            let n = [angle.cos(), angle.sin()];
            let frame = FractureFrame::new(n, [-n[1], n[0]], c, (-5.0, 5.0)).unwrap();
            let p = project_to_gamma(x, &frame);
            let q = project_to_gamma(p, &frame);
            prop_assert!(frame.coords(p).0.abs() < 1e-12);
            prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        }

        #[test]
        fn constant_apertures_are_always_wellposed(d1 in 1e-3f64..0.2, d2 in 1e-3f64..0.2, kf in 0.1f64..10.0) {
            let frame = FractureFrame::vertical(0.5);
            let perm = PermeabilityData::isotropic(1.0, kf, 2.0 / 3.0);
            let w = check_wellposedness(&ApertureProfile::constant(d1, d2), &perm, &frame, 64).unwrap();
            prop_assert_eq!(w.lhs, 0.0);
            prop_assert!(w.satisfied);
        }
    }
}
