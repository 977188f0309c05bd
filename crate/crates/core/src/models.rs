//! End-to-end runs: problem presets, mesh and space construction, assembly,
//! solve, and typed solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::{info, warn};
use serde::Deserialize;

use crate::assembly::{assemble_full, assemble_reduced, AssemblyOptions, BulkData, ReducedData};
use crate::error::{Error, Result};
use crate::geometry::{
    check_wellposedness, ApertureProfile, FractureFrame, PermeabilityData, Point, Symmetry, Wellposedness,
    WELLPOSEDNESS_SAMPLES_PER_UNIT,
};
use crate::mesh::{build_bulk_mesh, build_interface_grid, facet_point, InterfaceGrid, Mesh, MeshMode, PointLocator};
use crate::solver::{solve, SolveReport, SolverMethod};
use crate::space::{DgSpace, InterfaceSpace};
use crate::sparse::SparseSystem;

/// The full-dimensional model and the four reduced variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelVariant {
    Full,
    I,
    IR,
    II,
    IIR,
}

impl ModelVariant {
    pub const REDUCED: [ModelVariant; 4] = [Self::I, Self::IR, Self::II, Self::IIR];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::I => "I",
            Self::IR => "I-R",
            Self::II => "II",
            Self::IIR => "II-R",
        }
    }

    /// Bulk domains flattened onto the reference line.
    pub fn uses_rectified_bulk(self) -> bool {
        matches!(self, Self::IR | Self::IIR)
    }

    /// Aperture-gradient terms in the fracture transport equation.
    pub fn transport_gradients(self) -> bool {
        matches!(self, Self::I | Self::IR)
    }

    /// Aperture-gradient factors in the coupling conditions. They enter the
    /// discrete problem through the curved bulk geometry.
    pub fn coupling_gradients(self) -> bool {
        matches!(self, Self::I | Self::II)
    }

    pub fn mesh_mode(self) -> MeshMode {
        match self {
            Self::Full => MeshMode::Full,
            Self::I | Self::II => MeshMode::CurvedReduced,
            Self::IR | Self::IIR => MeshMode::Rectified,
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "I" => Ok(Self::I),
            "I-R" => Ok(Self::IR),
            "II" => Ok(Self::II),
            "II-R" => Ok(Self::IIR),
            _ => Err(Error::InvalidParameter {
                name: "variant",
                reason: format!("unknown model variant `{s}` (expected full, I, I-R, II, II-R)"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetName {
    /// Serpentine fracture, constant total aperture, flow across the fracture.
    PerpAsym,
    /// Symmetric fracture of varying aperture, flow across the fracture.
    PerpSym,
    /// Symmetric fracture, flow along the fracture.
    Tangential,
    /// Homogeneous medium with a smooth exact solution.
    Manufactured,
    Custom,
}

impl PresetName {
    pub fn name(self) -> &'static str {
        match self {
            Self::PerpAsym => "perp-asym",
            Self::PerpSym => "perp-sym",
            Self::Tangential => "tangential",
            Self::Manufactured => "manufactured",
            Self::Custom => "custom",
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perp-asym" => Ok(Self::PerpAsym),
            "perp-sym" => Ok(Self::PerpSym),
            "tangential" => Ok(Self::Tangential),
            "manufactured" => Ok(Self::Manufactured),
            "custom" => Ok(Self::Custom),
            _ => Err(Error::InvalidParameter {
                name: "preset",
                reason: format!("unknown preset `{s}`"),
            }),
        }
    }
}

/// Dirichlet data on the outer boundary, from a closed set of expressions.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryData {
    /// `1 - x1`
    LinearX1,
    /// `4 x1 (1 - x1)(1 - x2)`
    Tangential,
    /// `a0 + a1 x1 + a2 x2`
    Affine([f64; 3]),
    Constant(f64),
    /// `sin(π x1) cos(π x2)`, the exact solution of the manufactured problem.
    SinCos,
}

impl BoundaryData {
    pub fn eval(&self, x: Point) -> f64 {
        match *self {
            Self::LinearX1 => 1.0 - x[0],
            Self::Tangential => 4.0 * x[0] * (1.0 - x[0]) * (1.0 - x[1]),
            Self::Affine([a0, a1, a2]) => a0 + a1 * x[0] + a2 * x[1],
            Self::Constant(c) => c,
            Self::SinCos => (PI * x[0]).sin() * (PI * x[1]).cos(),
        }
    }
}

/// Bulk source term.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Zero,
    /// `2π² sin(π x1) cos(π x2)`, matching [`BoundaryData::SinCos`] for `K = I`.
    SinCos,
}

impl Source {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::SinCos => 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
        }
    }
}

/// How the fracture pressure is prescribed at the fracture tips.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaBoundary {
    /// Outer boundary data evaluated on the reference line.
    #[default]
    Trace,
    /// Outer boundary data averaged across the fracture width at the tip.
    Averaged,
}

/// A complete problem description: data, geometry, and permeabilities.
#[derive(Clone, Debug)]
pub struct Problem {
    pub preset: PresetName,
    pub boundary: BoundaryData,
    pub source: Source,
    pub perm: PermeabilityData,
    pub profile: ApertureProfile,
    pub frame: FractureFrame,
    pub gamma_boundary: GammaBoundary,
    /// Exact fracture pressure, when known in closed form.
    pub exact_interface: Option<f64>,
}

pub const DEFAULT_XI: f64 = 2.0 / 3.0;

impl Problem {
    /// One of the built-in problems with aperture scale `d0`.
    pub fn preset(name: PresetName, d0: f64) -> Result<Self> {
        if !(d0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "d0",
                reason: format!("aperture scale must be positive, got {d0}"),
            });
        }
        let frame = FractureFrame::vertical(0.5);
        let base = |boundary, k_f: f64, symmetry| Self {
            preset: name,
            boundary,
            source: Source::Zero,
            perm: PermeabilityData::isotropic(1.0, k_f, DEFAULT_XI),
            profile: ApertureProfile::serpentine(d0, symmetry),
            frame,
            gamma_boundary: GammaBoundary::Trace,
            exact_interface: None,
        };
        Ok(match name {
            PresetName::PerpAsym => base(BoundaryData::LinearX1, 0.5, Symmetry::Antisymmetric),
            PresetName::PerpSym => Self {
                exact_interface: Some(0.5),
                ..base(BoundaryData::LinearX1, 0.5, Symmetry::Symmetric)
            },
            PresetName::Tangential => base(BoundaryData::Tangential, 2.0, Symmetry::Symmetric),
            PresetName::Manufactured => Self {
                source: Source::SinCos,
                profile: ApertureProfile::constant(d0, d0),
                ..base(BoundaryData::SinCos, 1.0, Symmetry::Symmetric)
            },
            PresetName::Custom => {
                return Err(Error::InvalidParameter {
                    name: "preset",
                    reason: "custom problems are built from a configuration".into(),
                })
            }
        })
    }

    /// Fracture pressure prescribed at the tip with tangential coordinate `t`.
    pub fn gamma_boundary_value(&self, t: f64) -> f64 {
        let g = |eta: f64| self.boundary.eval(self.frame.point(eta, t));
        match self.gamma_boundary {
            GammaBoundary::Trace => g(0.0),
            GammaBoundary::Averaged => {
                let a = self.profile.sample(t);
                let rule = crate::quadrature::gauss_legendre(8);
                rule.iter().map(|(s, w)| w * g(-a.d1 + s * a.d())).sum()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// `None` picks LU for reduced systems and CG for full systems.
    pub method: Option<SolverMethod>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: None,
            tol: 1e-10,
            max_iter: 50_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discretization {
    pub h: f64,
    pub bulk_degree: usize,
    pub interface_degree: usize,
    /// Element layers across the fracture in the full-dimensional mesh.
    pub fracture_layers: usize,
    /// Bulk mesh for reduced runs; `None` uses the one the variant prescribes.
    pub reduced_mesh: Option<MeshMode>,
    pub assembly: AssemblyOptions,
    pub solver: SolverSettings,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            h: 1.0 / 64.0,
            bulk_degree: 1,
            interface_degree: 1,
            fracture_layers: 4,
            reduced_mesh: None,
            assembly: AssemblyOptions::default(),
            solver: SolverSettings::default(),
        }
    }
}

/// Pressure of the full-dimensional model.
#[derive(Clone, Debug)]
pub struct FullSolution {
    pub mesh: Mesh,
    pub space: DgSpace,
    pub coeffs: Vec<f64>,
    pub report: SolveReport,
    locator: PointLocator,
}

impl FullSolution {
    pub fn new(mesh: Mesh, space: DgSpace, coeffs: Vec<f64>, report: SolveReport) -> Self {
        let locator = PointLocator::new(&mesh);
        Self {
            mesh,
            space,
            coeffs,
            report,
            locator,
        }
    }

    pub fn locator(&self) -> &PointLocator {
        &self.locator
    }

    /// Pressure at `x`, taken from the first element containing it.
    pub fn eval(&self, x: Point) -> Result<f64> {
        let (e, _) = self
            .locator
            .locate(&self.mesh, x)
            .ok_or(Error::PointNotFound { x: x[0], y: x[1] })?;
        Ok(self.eval_in(e, x))
    }

    pub fn eval_in(&self, e: usize, x: Point) -> f64 {
        self.space.eval(&self.mesh, &self.coeffs, e, x)
    }
}

/// Bulk and fracture pressures of a reduced model.
#[derive(Clone, Debug)]
pub struct ReducedSolution {
    pub variant: ModelVariant,
    pub mesh: Mesh,
    pub grid: InterfaceGrid,
    pub bulk_space: DgSpace,
    pub iface_space: InterfaceSpace,
    /// Bulk coefficients followed by fracture coefficients.
    pub coeffs: Vec<f64>,
    pub report: SolveReport,
    pub wellposedness: Wellposedness,
    pub profile: ApertureProfile,
    pub perm: PermeabilityData,
    pub frame: FractureFrame,
    locator: PointLocator,
}

impl ReducedSolution {
    pub fn bulk_coeffs(&self) -> &[f64] {
        &self.coeffs[..self.bulk_space.n_dofs()]
    }

    pub fn interface_coeffs(&self) -> &[f64] {
        &self.coeffs[self.bulk_space.n_dofs()..]
    }

    /// Fracture pressure and its `t`-derivative.
    pub fn interface_value(&self, t: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.frame.t_range();
        let e = self.grid.find(t).ok_or(Error::OutsideFracture { t, lo, hi })?;
        Ok(self.iface_space.eval(&self.grid, self.interface_coeffs(), e, t))
    }

    pub fn pressure_gamma(&self, t: f64) -> Result<f64> {
        Ok(self.interface_value(t)?.0)
    }

    /// Bulk pressure restricted to wall `side` (1 or 2) at `t`.
    pub fn bulk_trace(&self, side: usize, t: f64) -> Result<f64> {
        if !(side == 1 || side == 2) {
            return Err(Error::InvalidParameter {
                name: "side",
                reason: format!("wall index must be 1 or 2, got {side}"),
            });
        }
        let (lo, hi) = self.frame.t_range();
        let e = self.grid.find(t).ok_or(Error::OutsideFracture { t, lo, hi })?;
        let f = self.grid.elements[e].facets[side - 1];
        let el = self.mesh.facets[f].left;
        let x = facet_point(&self.mesh, &self.frame, f, t);
        Ok(self.bulk_space.eval(&self.mesh, self.bulk_coeffs(), el, x))
    }

    /// Bulk pressure at `x`.
    pub fn eval_bulk(&self, x: Point) -> Result<f64> {
        let (e, _) = self
            .locator
            .locate(&self.mesh, x)
            .ok_or(Error::PointNotFound { x: x[0], y: x[1] })?;
        Ok(self.bulk_space.eval(&self.mesh, self.bulk_coeffs(), e, x))
    }
}

/// Tangential effective velocity `u_Γ · τ` in the fracture:
/// `−K_Γ ((d p_Γ)' − p1 d1' − p2 d2')`, without the wall terms for variants
/// that drop aperture gradients from the transport equation.
pub fn effective_velocity(sol: &ReducedSolution, t: f64) -> Result<f64> {
    let (p, dp) = sol.interface_value(t)?;
    let a = sol.profile.sample(t);
    let mut flux = a.slope() * p + a.d() * dp;
    if sol.variant.transport_gradients() {
        flux -= sol.bulk_trace(1, t)? * a.slope1 + sol.bulk_trace(2, t)? * a.slope2;
    }
    Ok(-sol.perm.gamma_tangential.at(t) * flux)
}

fn boundary_fn(problem: &Problem) -> impl Fn(Point) -> f64 + '_ {
    move |x| problem.boundary.eval(x)
}

fn source_fn(problem: &Problem) -> impl Fn(Point) -> f64 + '_ {
    move |x| problem.source.eval(x)
}

fn solve_system(system: &SparseSystem, settings: &SolverSettings, symmetric_default: bool) -> Result<(Vec<f64>, SolveReport)> {
    let method = settings.method.unwrap_or(if symmetric_default {
        SolverMethod::Cg
    } else {
        SolverMethod::DirectLu
    });
    match solve(system, method, settings.tol, settings.max_iter) {
        Err(Error::NotConverged { iterations, residual, .. }) if settings.method.is_none() => {
            warn!("{method} stopped after {iterations} iterations at residual {residual:e}; falling back to direct LU");
            solve(system, SolverMethod::DirectLu, settings.tol, settings.max_iter)
        }
        other => other,
    }
}

/// Assembles the full-dimensional system on the fracture-resolving mesh.
pub fn full_system(problem: &Problem, disc: &Discretization) -> Result<(Mesh, DgSpace, SparseSystem)> {
    let mesh = build_bulk_mesh(&problem.profile, &problem.frame, MeshMode::Full, disc.h, disc.fracture_layers)?;
    let space = DgSpace::uniform(&mesh, disc.bulk_degree)?;
    let g = boundary_fn(problem);
    let q = source_fn(problem);
    let data = BulkData {
        perm: &problem.perm,
        source: &q,
        boundary: &g,
    };
    let system = assemble_full(&mesh, &space, &data, &disc.assembly)?;
    Ok((mesh, space, system))
}

/// Full-dimensional model on a mesh that resolves the fracture.
pub fn run_full(problem: &Problem, disc: &Discretization) -> Result<FullSolution> {
    let mesh = build_bulk_mesh(&problem.profile, &problem.frame, MeshMode::Full, disc.h, disc.fracture_layers)?;
    run_full_on(problem, disc, mesh)
}

/// Full-dimensional model on a given mesh. Elements tagged as fracture use
/// the fracture permeability.
pub fn run_full_on(problem: &Problem, disc: &Discretization, mesh: Mesh) -> Result<FullSolution> {
    let space = DgSpace::uniform(&mesh, disc.bulk_degree)?;
    let g = boundary_fn(problem);
    let q = source_fn(problem);
    let data = BulkData {
        perm: &problem.perm,
        source: &q,
        boundary: &g,
    };
    let system = assemble_full(&mesh, &space, &data, &disc.assembly)?;
    let (coeffs, report) = solve_system(&system, &disc.solver, true)?;
    info!(
        "full model: {} dofs, {} in {} iterations, residual {:e}",
        system.n_dofs(),
        report.method,
        report.iterations,
        report.residual
    );
    Ok(FullSolution::new(mesh, space, coeffs, report))
}

/// Mesh, fracture grid, spaces and assembled system of a reduced model.
pub struct ReducedSetup {
    pub mesh: Mesh,
    pub grid: InterfaceGrid,
    pub bulk_space: DgSpace,
    pub iface_space: InterfaceSpace,
    pub system: SparseSystem,
}

/// Assembles a reduced variant on the mesh kind it prescribes, or on
/// `mode` when given (accepted only for profiles without gradients).
/// `disc.reduced_mesh` is ignored here.
pub fn reduced_system(
    problem: &Problem,
    variant: ModelVariant,
    disc: &Discretization,
    mode: Option<MeshMode>,
) -> Result<ReducedSetup> {
    if variant == ModelVariant::Full {
        return Err(Error::VariantMeshMismatch {
            variant: variant.name().into(),
            mode: "reduced".into(),
        });
    }
    let mode = mode.unwrap_or(variant.mesh_mode());
    let mesh = build_bulk_mesh(&problem.profile, &problem.frame, mode, disc.h, disc.fracture_layers)?;
    let grid = build_interface_grid(&mesh, &problem.frame)?;
    let bulk_space = DgSpace::uniform(&mesh, disc.bulk_degree)?;
    let iface_space = InterfaceSpace::uniform(&grid, disc.interface_degree)?;
    let g = boundary_fn(problem);
    let q = source_fn(problem);
    let q_gamma = |_: f64| 0.0;
    let g_gamma = |t: f64| problem.gamma_boundary_value(t);
    let data = ReducedData {
        bulk: BulkData {
            perm: &problem.perm,
            source: &q,
            boundary: &g,
        },
        profile: &problem.profile,
        frame: &problem.frame,
        source_gamma: &q_gamma,
        boundary_gamma: &g_gamma,
    };
    let system = assemble_reduced(&mesh, &grid, &bulk_space, &iface_space, &data, variant, &disc.assembly)?;
    Ok(ReducedSetup {
        mesh,
        grid,
        bulk_space,
        iface_space,
        system,
    })
}

pub fn run_reduced(problem: &Problem, variant: ModelVariant, disc: &Discretization) -> Result<ReducedSolution> {
    run_reduced_on(problem, variant, disc, disc.reduced_mesh)
}

pub fn run_reduced_on(
    problem: &Problem,
    variant: ModelVariant,
    disc: &Discretization,
    mode: Option<MeshMode>,
) -> Result<ReducedSolution> {
    let wellposedness = check_wellposedness(
        &problem.profile,
        &problem.perm,
        &problem.frame,
        WELLPOSEDNESS_SAMPLES_PER_UNIT,
    )?;
    if !wellposedness.satisfied {
        warn!(
            "variant {variant}: sufficient wellposedness condition violated (lhs = {:.4} >= 16)",
            wellposedness.lhs
        );
    }
    let setup = reduced_system(problem, variant, disc, mode)?;
    let (coeffs, report) = solve_system(&setup.system, &disc.solver, false)?;
    info!(
        "variant {variant}: {} bulk + {} fracture dofs, {} in {} iterations, residual {:e}",
        setup.system.n_bulk, setup.system.n_interface, report.method, report.iterations, report.residual
    );
    let locator = PointLocator::new(&setup.mesh);
    Ok(ReducedSolution {
        variant,
        mesh: setup.mesh,
        grid: setup.grid,
        bulk_space: setup.bulk_space,
        iface_space: setup.iface_space,
        coeffs,
        report,
        wellposedness,
        profile: problem.profile.clone(),
        perm: problem.perm.clone(),
        frame: problem.frame,
        locator,
    })
}

/// Arc-wrapped closure type used by custom problem data.
pub type SharedFn<A> = Arc<dyn Fn(A) -> f64 + Send + Sync>;
