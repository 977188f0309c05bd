//! Experiment configuration files.
//!
//! The format is TOML. Top-level keys select the problem and the sweep;
//! optional sections tune the discretization, the solver, the output and,
//! for custom problems, the problem data:
//!
//! ```toml
//! preset = "perp-asym"            # perp-asym | perp-sym | tangential | manufactured | custom
//! variants = ["I", "I-R", "II", "II-R"]
//! d0 = [1e-1, 1e-2, 1e-3]
//! h = 0.015625
//! xi = 0.6666666666666666         # must exceed 1/2
//! reference = "numerical"         # numerical | exact
//! gamma_boundary = "trace"        # trace | averaged
//!
//! [discretization]
//! bulk_degree = 1
//! interface_degree = 1
//! fracture_layers = 4
//! mu0_bulk = 10.0
//! mu0_gamma = 10.0
//! penalty_length = "facet-height" # facet-height | max-edge
//! # quad_order = 8
//! convention = "consistent"       # consistent | printed
//! # mesh = "rectified"            # curved | rectified, only for constant apertures
//!
//! [solver]
//! # method = "direct-lu"          # direct-lu | cg | bicgstab; default by model
//! tol = 1e-10
//! max_iter = 50000
//!
//! [output]
//! dir = "out"
//! dump_fields = false
//! dump_matrices = false
//!
//! [problem]                       # required for preset = "custom"
//! boundary = "linear-x1"          # linear-x1 | tangential | sin-cos | { affine = [a0, a1, a2] } | { constant = c }
//! source = "zero"                 # zero | sin-cos
//! k_bulk = 1.0
//! k_fracture = 0.5
//! # k_gamma = 0.5                 # defaults to k_fracture
//! # k_perp = 0.5                  # defaults to k_fracture
//! aperture = "sinusoidal"         # sinusoidal | constant
//! symmetry = "antisymmetric"      # antisymmetric | symmetric
//! # frequency = 25.132741228718345
//! # phase = 0.0
//! # exact_interface = 0.5
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::assembly::{AssemblyOptions, Convention, PenaltyLength};
use crate::error::{Error, Result};
use crate::geometry::{ApertureKind, ApertureProfile, ScalarField, Symmetry, TensorField};
use crate::mesh::MeshMode;
use crate::models::{
    BoundaryData, Discretization, GammaBoundary, ModelVariant, PresetName, Problem, SolverSettings, Source, DEFAULT_XI,
};
use crate::postproc::ReferenceKind;
use crate::solver::SolverMethod;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Spanned<String>,
    variants: Option<Vec<Spanned<String>>>,
    d0: Option<Spanned<Vec<f64>>>,
    h: Option<Spanned<f64>>,
    xi: Option<Spanned<f64>>,
    reference: Option<Spanned<String>>,
    gamma_boundary: Option<GammaBoundary>,
    #[serde(default)]
    discretization: RawDiscretization,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
    problem: Option<Spanned<RawProblem>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiscretization {
    bulk_degree: Option<Spanned<usize>>,
    interface_degree: Option<Spanned<usize>>,
    fracture_layers: Option<Spanned<usize>>,
    mu0_bulk: Option<Spanned<f64>>,
    mu0_gamma: Option<Spanned<f64>>,
    penalty_length: Option<PenaltyLength>,
    quad_order: Option<usize>,
    convention: Option<Convention>,
    mesh: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    method: Option<SolverMethod>,
    tol: Option<Spanned<f64>>,
    max_iter: Option<Spanned<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    #[serde(default)]
    dump_fields: bool,
    #[serde(default)]
    dump_matrices: bool,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum ApertureShape {
    Sinusoidal,
    Constant,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum RawSymmetry {
    Antisymmetric,
    Symmetric,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    boundary: Option<BoundaryData>,
    source: Option<Source>,
    k_bulk: Option<Spanned<f64>>,
    k_fracture: Option<Spanned<f64>>,
    k_gamma: Option<Spanned<f64>>,
    k_perp: Option<Spanned<f64>>,
    aperture: Option<ApertureShape>,
    symmetry: Option<RawSymmetry>,
    frequency: Option<Spanned<f64>>,
    phase: Option<f64>,
    exact_interface: Option<f64>,
}

/// Problem data from the `[problem]` section, overriding a preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemOverrides {
    pub boundary: Option<BoundaryData>,
    pub source: Option<Source>,
    pub k_bulk: Option<f64>,
    pub k_fracture: Option<f64>,
    pub k_gamma: Option<f64>,
    pub k_perp: Option<f64>,
    pub constant_aperture: Option<bool>,
    pub symmetry: Option<Symmetry>,
    pub frequency: Option<f64>,
    pub phase: Option<f64>,
    pub exact_interface: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub dump_fields: bool,
    pub dump_matrices: bool,
}

/// A validated experiment description with all defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: PresetName,
    pub variants: Vec<ModelVariant>,
    pub d0: Vec<f64>,
    pub xi: f64,
    pub reference: ReferenceKind,
    pub gamma_boundary: GammaBoundary,
    pub disc: Discretization,
    pub output: OutputConfig,
    pub problem: ProblemOverrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: PresetName::PerpAsym,
            variants: ModelVariant::REDUCED.to_vec(),
            d0: vec![0.1],
            xi: DEFAULT_XI,
            reference: ReferenceKind::Numerical,
            gamma_boundary: GammaBoundary::Trace,
            disc: Discretization::default(),
            output: OutputConfig::default(),
            problem: ProblemOverrides::default(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        Error::Config {
            line: line_of(self.text, span.start),
            message: message.into(),
        }
    }

    fn positive(&self, v: &Spanned<f64>, key: &str) -> Result<f64> {
        let x = *v.get_ref();
        if !(x > 0.0 && x.is_finite()) {
            return Err(self.err(v.span(), format!("`{key}` must be positive, got {x}")));
        }
        Ok(x)
    }

    fn degree(&self, v: &Spanned<usize>, key: &str) -> Result<usize> {
        let k = *v.get_ref();
        if !(1..=crate::space::MAX_DEGREE).contains(&k) {
            return Err(self.err(
                v.span(),
                format!("`{key}` must lie in 1..={}, got {k}", crate::space::MAX_DEGREE),
            ));
        }
        Ok(k)
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let cx = Ctx { text };
    let mut cfg = ExperimentConfig {
        preset: raw
            .preset
            .get_ref()
            .parse()
            .map_err(|e: Error| cx.err(raw.preset.span(), e.to_string()))?,
        ..Default::default()
    };
    if let Some(vs) = &raw.variants {
        let mut out = Vec::with_capacity(vs.len());
        for v in vs {
            let parsed: ModelVariant = v.get_ref().parse().map_err(|e: Error| cx.err(v.span(), e.to_string()))?;
            if parsed == ModelVariant::Full {
                return Err(cx.err(v.span(), "`full` is the reference model, not a reduced variant"));
            }
            if out.contains(&parsed) {
                return Err(cx.err(v.span(), format!("variant {parsed} listed twice")));
            }
            out.push(parsed);
        }
        if out.is_empty() {
            return Err(Error::Config {
                line: 1,
                message: "`variants` must not be empty".into(),
            });
        }
        cfg.variants = out;
    }
    if let Some(d0) = &raw.d0 {
        if d0.get_ref().is_empty() {
            return Err(cx.err(d0.span(), "`d0` must not be empty"));
        }
        if let Some(bad) = d0.get_ref().iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(cx.err(d0.span(), format!("aperture scales in `d0` must be positive, got {bad}")));
        }
        cfg.d0 = d0.get_ref().clone();
    }
    if let Some(h) = &raw.h {
        let v = cx.positive(h, "h")?;
        if v > 1.0 {
            return Err(cx.err(h.span(), format!("`h` must not exceed 1, got {v}")));
        }
        cfg.disc.h = v;
    }
    if let Some(xi) = &raw.xi {
        let v = *xi.get_ref();
        if !(v > 0.5 && v <= 1.0) {
            return Err(cx.err(xi.span(), format!("`xi` must satisfy 1/2 < xi <= 1, got {v}")));
        }
        cfg.xi = v;
    }
    if let Some(r) = &raw.reference {
        cfg.reference = match r.get_ref().as_str() {
            "numerical" => ReferenceKind::Numerical,
            "exact" => ReferenceKind::Exact(f64::NAN),
            other => return Err(cx.err(r.span(), format!("unknown reference `{other}` (numerical | exact)"))),
        };
    }
    if let Some(g) = raw.gamma_boundary {
        cfg.gamma_boundary = g;
    }

    let d = &raw.discretization;
    if let Some(k) = &d.bulk_degree {
        cfg.disc.bulk_degree = cx.degree(k, "bulk_degree")?;
    }
    if let Some(k) = &d.interface_degree {
        cfg.disc.interface_degree = cx.degree(k, "interface_degree")?;
    }
    if let Some(n) = &d.fracture_layers {
        if *n.get_ref() == 0 {
            return Err(cx.err(n.span(), "`fracture_layers` must be at least 1"));
        }
        cfg.disc.fracture_layers = *n.get_ref();
    }
    let mut assembly = AssemblyOptions::default();
    if let Some(m) = &d.mu0_bulk {
        assembly.mu0_bulk = cx.positive(m, "mu0_bulk")?;
    }
    if let Some(m) = &d.mu0_gamma {
        assembly.mu0_gamma = cx.positive(m, "mu0_gamma")?;
    }
    if let Some(l) = d.penalty_length {
        assembly.penalty_length = l;
    }
    assembly.quad_order = d.quad_order;
    if let Some(c) = d.convention {
        assembly.convention = c;
    }
    cfg.disc.assembly = assembly;

    let s = &raw.solver;
    let mut solver = SolverSettings {
        method: s.method,
        ..Default::default()
    };
    if let Some(t) = &s.tol {
        let v = *t.get_ref();
        if !(v > 0.0 && v < 1.0) {
            return Err(cx.err(t.span(), format!("`tol` must lie in (0, 1), got {v}")));
        }
        solver.tol = v;
    }
    if let Some(m) = &s.max_iter {
        if *m.get_ref() == 0 {
            return Err(cx.err(m.span(), "`max_iter` must be at least 1"));
        }
        solver.max_iter = *m.get_ref();
    }
    cfg.disc.solver = solver;

    cfg.output = OutputConfig {
        dir: raw.output.dir.clone(),
        dump_fields: raw.output.dump_fields,
        dump_matrices: raw.output.dump_matrices,
    };

    if let Some(p) = &raw.problem {
        let span = p.span();
        let p = p.get_ref();
        let pos = |v: &Option<Spanned<f64>>, key| v.as_ref().map(|v| cx.positive(v, key)).transpose();
        cfg.problem = ProblemOverrides {
            boundary: p.boundary,
            source: p.source,
            k_bulk: pos(&p.k_bulk, "k_bulk")?,
            k_fracture: pos(&p.k_fracture, "k_fracture")?,
            k_gamma: pos(&p.k_gamma, "k_gamma")?,
            k_perp: pos(&p.k_perp, "k_perp")?,
            constant_aperture: p.aperture.map(|a| a == ApertureShape::Constant),
            symmetry: p.symmetry.map(|s| match s {
                RawSymmetry::Antisymmetric => Symmetry::Antisymmetric,
                RawSymmetry::Symmetric => Symmetry::Symmetric,
            }),
            frequency: pos(&p.frequency, "frequency")?,
            phase: p.phase,
            exact_interface: p.exact_interface,
        };
        if cfg.preset == PresetName::Custom && p.boundary.is_none() {
            return Err(cx.err(span, "custom problems need `boundary` in [problem]"));
        }
    } else if cfg.preset == PresetName::Custom {
        return Err(cx.err(raw.preset.span(), "preset `custom` needs a [problem] section"));
    }

    if let ReferenceKind::Exact(_) = cfg.reference {
        let c = cfg.base_problem(cfg.d0[0])?.exact_interface;
        match c {
            Some(c) => cfg.reference = ReferenceKind::Exact(c),
            None => {
                return Err(cx.err(
                    raw.reference.as_ref().unwrap().span(),
                    "reference `exact` needs a problem with a known fracture pressure (perp-sym or `exact_interface`)",
                ))
            }
        }
    }

    if let Some(m) = &d.mesh {
        let mode = match m.get_ref().as_str() {
            "curved" => MeshMode::CurvedReduced,
            "rectified" => MeshMode::Rectified,
            other => return Err(cx.err(m.span(), format!("unknown mesh `{other}` (curved | rectified)"))),
        };
        let gradient_free = cfg.base_problem(cfg.d0[0])?.profile.is_gradient_free();
        if let Some(v) = cfg.variants.iter().find(|v| v.mesh_mode() != mode && !gradient_free) {
            return Err(cx.err(
                m.span(),
                format!("variant {v} cannot run on a {} mesh with a varying aperture", mode.name()),
            ));
        }
        cfg.disc.reduced_mesh = Some(mode);
    }
    Ok(cfg)
}

impl ExperimentConfig {
    fn base_problem(&self, d0: f64) -> Result<Problem> {
        let o = &self.problem;
        let mut p = match self.preset {
            PresetName::Custom => {
                let mut p = Problem::preset(PresetName::PerpAsym, d0)?;
                p.preset = PresetName::Custom;
                p
            }
            name => Problem::preset(name, d0)?,
        };
        if let Some(b) = o.boundary {
            p.boundary = b;
        }
        if let Some(s) = o.source {
            p.source = s;
        }
        let symmetry = o.symmetry.unwrap_or(match p.profile.kind() {
            ApertureKind::Sinusoidal { symmetry, .. } => *symmetry,
            _ => Symmetry::Symmetric,
        });
        let constant = o
            .constant_aperture
            .unwrap_or(p.profile.is_gradient_free() && o.frequency.is_none());
        p.profile = if constant {
            ApertureProfile::constant(d0, d0)
        } else {
            ApertureProfile::sinusoidal(
                d0,
                o.frequency.unwrap_or(8.0 * std::f64::consts::PI),
                o.phase.unwrap_or(0.0),
                symmetry,
            )
        };
        if let Some(k) = o.k_bulk {
            p.perm.bulk1 = TensorField::isotropic(k);
            p.perm.bulk2 = TensorField::isotropic(k);
        }
        if let Some(k) = o.k_fracture {
            p.perm.fracture = Some(TensorField::isotropic(k));
            p.perm.gamma_tangential = ScalarField::Constant(k);
            p.perm.gamma_perp = ScalarField::Constant(k);
        }
        if let Some(k) = o.k_gamma {
            p.perm.gamma_tangential = ScalarField::Constant(k);
        }
        if let Some(k) = o.k_perp {
            p.perm.gamma_perp = ScalarField::Constant(k);
        }
        if o.exact_interface.is_some() {
            p.exact_interface = o.exact_interface;
        }
        Ok(p)
    }

    /// The problem for aperture scale `d0`, with all overrides applied.
    pub fn make_problem(&self, d0: f64) -> Result<Problem> {
        let mut p = self.base_problem(d0)?;
        p.perm.xi = self.xi;
        p.gamma_boundary = self.gamma_boundary;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of_err(text: &str) -> (usize, String) {
        match parse_config_str(text) {
            Err(Error::Config { line, message }) => (line, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gives_defaults() {
        let cfg = parse_config_str("preset = \"perp-asym\"\n").unwrap();
        let def = ExperimentConfig::default();
        assert_eq!(cfg, def);
        assert_eq!(cfg.variants.len(), 4);
        assert_eq!(cfg.disc.h, 1.0 / 64.0);
        let p = cfg.make_problem(0.1).unwrap();
        assert_eq!(p.perm.xi, 2.0 / 3.0);
        assert_eq!(p.boundary, BoundaryData::LinearX1);
    }

    #[test]
    fn xi_at_one_half_is_rejected_with_its_line() {
        let (line, msg) = line_of_err("preset = \"perp-asym\"\n\nxi = 0.5\n");
        assert_eq!(line, 3);
        assert!(msg.contains("1/2 < xi"), "{msg}");
    }

    #[test]
    fn duplicate_and_unknown_keys_are_rejected() {
        let (line, _) = line_of_err("preset = \"perp-asym\"\nh = 0.1\nh = 0.2\n");
        assert_eq!(line, 3);
        let (line, msg) = line_of_err("preset = \"perp-asym\"\n[solver]\ntoll = 1e-8\n");
        assert_eq!(line, 3);
        assert!(msg.contains("toll"), "{msg}");
    }

    #[test]
    fn type_mismatch_is_reported() {
        let (line, _) = line_of_err("preset = \"perp-asym\"\nh = \"small\"\n");
        assert_eq!(line, 2);
    }

    #[test]
    fn variant_on_the_wrong_mesh_is_rejected_before_solving() {
        let text = "preset = \"perp-asym\"\nvariants = [\"I\"]\n[discretization]\nmesh = \"rectified\"\n";
        let (line, msg) = line_of_err(text);
        assert_eq!(line, 4);
        assert!(msg.contains("variant I"), "{msg}");
        let ok = "preset = \"manufactured\"\nvariants = [\"I\", \"II-R\"]\n[discretization]\nmesh = \"rectified\"\n";
        assert_eq!(parse_config_str(ok).unwrap().disc.reduced_mesh, Some(MeshMode::Rectified));
    }

    #[test]
    fn custom_problems_need_boundary_data() {
        assert!(parse_config_str("preset = \"custom\"\n").is_err());
        let text = "preset = \"custom\"\n[problem]\nboundary = { affine = [1.0, -1.0, 0.0] }\nk_fracture = 2.0\naperture = \"constant\"\n";
        let cfg = parse_config_str(text).unwrap();
        let p = cfg.make_problem(0.01).unwrap();
        assert_eq!(p.boundary.eval([0.25, 0.0]), 0.75);
        assert!(p.profile.is_gradient_free());
        assert_eq!(p.perm.gamma_perp.at(0.0), 2.0);
    }

    #[test]
    fn exact_reference_requires_a_known_pressure() {
        let cfg = parse_config_str("preset = \"perp-sym\"\nreference = \"exact\"\n").unwrap();
        assert_eq!(cfg.reference, ReferenceKind::Exact(0.5));
        let (line, _) = line_of_err("preset = \"perp-asym\"\nreference = \"exact\"\n");
        assert_eq!(line, 2);
    }

    #[test]
    fn full_sections_parse() {
        let text = r#"
preset = "tangential"
variants = ["I", "II"]
d0 = [1e-1, 1e-2]
h = 0.125
gamma_boundary = "averaged"

[discretization]
bulk_degree = 2
interface_degree = 2
fracture_layers = 2
mu0_bulk = 20.0
convention = "printed"

[solver]
method = "bicgstab"
tol = 1e-9
max_iter = 100

[output]
dir = "runs/t"
dump_fields = true
"#;
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.variants, vec![ModelVariant::I, ModelVariant::II]);
        assert_eq!(cfg.d0, vec![0.1, 0.01]);
        assert_eq!(cfg.disc.bulk_degree, 2);
        assert_eq!(cfg.disc.assembly.mu0_bulk, 20.0);
        assert_eq!(cfg.disc.assembly.convention, Convention::Printed);
        assert_eq!(cfg.disc.solver.method, Some(SolverMethod::BiCgStab));
        assert_eq!(cfg.output.dir.as_deref(), Some(Path::new("runs/t")));
        assert!(cfg.output.dump_fields);
        assert_eq!(cfg.make_problem(0.1).unwrap().gamma_boundary, GammaBoundary::Averaged);
    }
}
