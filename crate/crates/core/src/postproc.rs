//! Comparison quantities: the fracture-averaged reference pressure, L2
//! errors on the fracture, aperture sweeps and field dumps.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use faer::linalg::solvers::Solve;
use faer::Mat;
use log::{info, warn};

use crate::error::{Error, Result};
use crate::geometry::{ApertureProfile, FractureFrame, Point};
use crate::mesh::{barycentric, InterfaceGrid, Mesh};
use crate::models::{run_full, run_reduced, Discretization, FullSolution, ModelVariant, Problem, ReducedSolution};
use crate::quadrature::{gauss_legendre, segment_rule, triangle_rule};
use crate::space::{eval_triangle_basis, DgSpace, ElementMap};

/// A scalar field on the fracture parameterized by `t`.
pub trait InterfaceField {
    fn value(&self, t: f64) -> Result<f64>;
}

impl InterfaceField for ReducedSolution {
    fn value(&self, t: f64) -> Result<f64> {
        self.pressure_gamma(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantField(pub f64);

impl InterfaceField for ConstantField {
    fn value(&self, _t: f64) -> Result<f64> {
        Ok(self.0)
    }
}

/// Wraps a closure as an [`InterfaceField`].
pub struct FnField<F>(pub F);

impl<F: Fn(f64) -> f64> InterfaceField for FnField<F> {
    fn value(&self, t: f64) -> Result<f64> {
        Ok((self.0)(t))
    }
}

pub const DEFAULT_AVERAGING_POINTS: usize = 16;

/// Full-dimensional pressure averaged across the fracture width,
/// `(1/d) ∫_{−d1}^{d2} p(η, t) dη`, cached per evaluation point.
pub struct ReferenceAverage<'a> {
    full: &'a FullSolution,
    profile: &'a ApertureProfile,
    frame: &'a FractureFrame,
    rule: crate::quadrature::Rule<f64>,
    cache: Mutex<HashMap<u64, f64>>,
}

pub fn average_across_fracture<'a>(
    full: &'a FullSolution,
    profile: &'a ApertureProfile,
    frame: &'a FractureFrame,
    n_quad: usize,
) -> Result<ReferenceAverage<'a>> {
    if n_quad == 0 {
        return Err(Error::InvalidParameter {
            name: "n_quad",
            reason: "need at least one quadrature point".into(),
        });
    }
    Ok(ReferenceAverage {
        full,
        profile,
        frame,
        rule: gauss_legendre(n_quad),
        cache: Mutex::new(HashMap::new()),
    })
}

impl ReferenceAverage<'_> {
    /// Parameter intervals `[s0, s1] ⊂ [0, 1]` of the segment `a + s (b − a)`
    /// inside each element, without overlaps.
    fn pieces(&self, t: f64, a: Point, b: Point) -> Result<Vec<(f64, f64, usize)>> {
        let mesh = &self.full.mesh;
        let mut raw = Vec::new();
        for e in self.full.locator().candidates(a, b) {
            let p = mesh.element_vertices(e);
            let la = barycentric(p, a);
            let lb = barycentric(p, b);
            let (mut s0, mut s1) = (0.0f64, 1.0f64);
            for k in 0..3 {
                let (u, v) = (la[k], lb[k] - la[k]);
                // u + s v >= 0
                if v.abs() < 1e-15 {
                    if u < -1e-12 {
                        s1 = -1.0;
                    }
                } else if v > 0.0 {
                    s0 = s0.max(-u / v);
                } else {
                    s1 = s1.min(-u / v);
                }
            }
            if s1 - s0 > 1e-12 {
                raw.push((s0, s1, e));
            }
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)));
        let mut out = Vec::with_capacity(raw.len());
        let mut covered = 0.0f64;
        for (s0, s1, e) in raw {
            if s0 > covered + 1e-9 {
                return Err(Error::SegmentOutsideFracture {
                    t,
                    reason: format!("gap in mesh coverage at s = {covered:.6}"),
                });
            }
            let lo = s0.max(covered);
            if s1 - lo > 1e-12 {
                out.push((lo, s1, e));
                covered = s1;
            }
        }
        if covered < 1.0 - 1e-9 {
            return Err(Error::SegmentOutsideFracture {
                t,
                reason: format!("mesh coverage ends at s = {covered:.6}"),
            });
        }
        Ok(out)
    }

    fn compute(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.frame.t_range();
        if !(t >= lo && t <= hi) {
            return Err(Error::SegmentOutsideFracture {
                t,
                reason: format!("t outside [{lo}, {hi}]"),
            });
        }
        let ap = self.profile.sample(t);
        let a = self.frame.point(-ap.d1, t);
        let b = self.frame.point(ap.d2, t);
        let mut sum = 0.0;
        for (s0, s1, e) in self.pieces(t, a, b)? {
            for (s, w) in self.rule.iter() {
                let u = s0 + s * (s1 - s0);
                let x = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])];
                sum += w * (s1 - s0) * self.full.eval_in(e, x);
            }
        }
        Ok(sum)
    }
}

impl InterfaceField for ReferenceAverage<'_> {
    fn value(&self, t: f64) -> Result<f64> {
        let key = t.to_bits();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.compute(t)?;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

/// `‖a − b‖_{L2(Γ)}` by Gauss quadrature of the given order on every
/// element of `grid`.
pub fn l2_error_gamma(a: &dyn InterfaceField, b: &dyn InterfaceField, grid: &InterfaceGrid, order: usize) -> Result<f64> {
    let rule = segment_rule(order);
    let mut sum = 0.0;
    for el in &grid.elements {
        let len = el.length();
        for (s, w) in rule.iter() {
            let t = el.t0 + s * len;
            let diff = a.value(t)? - b.value(t)?;
            sum += w * len * diff * diff;
        }
    }
    Ok(sum.sqrt())
}

/// Default quadrature order for fracture errors.
pub const ERROR_QUAD_ORDER: usize = 10;

/// Element-wise L2 projection of `f` onto `space`.
pub fn project(mesh: &Mesh, space: &DgSpace, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let mut coeffs = vec![0.0; space.n_dofs()];
    for e in 0..mesh.n_elements() {
        let k = space.degree(e);
        let rule = triangle_rule(2 * k + 4);
        let map = ElementMap::of(mesh, e);
        let dofs = space.dofs(e);
        let n = dofs.len();
        let mut mass = Mat::<f64>::zeros(n, n);
        let mut rhs = Mat::<f64>::zeros(n, 1);
        let mut v = [0.0; 10];
        let mut g = [[0.0; 2]; 10];
        for (xi, w) in rule.iter() {
            eval_triangle_basis(k, xi, &mut v, &mut g);
            let fx = f(map.to_phys(xi));
            for i in 0..n {
                for j in 0..n {
                    mass[(i, j)] += w * v[i] * v[j];
                }
                rhs[(i, 0)] += w * fx * v[i];
            }
        }
        let sol = mass.partial_piv_lu().solve(&rhs);
        for (i, gi) in dofs.enumerate() {
            coeffs[gi] = sol[(i, 0)];
        }
    }
    coeffs
}

/// `‖p_h − p‖_{L2(Ω)}` of a full-dimensional solution.
pub fn l2_error_bulk(sol: &FullSolution, exact: &dyn Fn(Point) -> f64) -> f64 {
    let mut sum = 0.0;
    for e in 0..sol.mesh.n_elements() {
        let rule = triangle_rule(2 * sol.space.degree(e) + 4);
        let map = ElementMap::of(&sol.mesh, e);
        for (xi, w) in rule.iter() {
            let x = map.to_phys(xi);
            let d = sol.eval_in(e, x) - exact(x);
            sum += w * map.det * d * d;
        }
    }
    sum.sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub d0: f64,
    pub variant: ModelVariant,
    /// `None` when the run failed.
    pub l2_error: Option<f64>,
    pub bulk_dofs: usize,
    pub iface_dofs: usize,
    pub residual: f64,
    pub failure: Option<String>,
}

/// Error rows keyed uniquely by `(d0, variant)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorTable {
    rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ErrorRow) -> Result<()> {
        if let Some(e) = row.l2_error {
            if !(e >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "l2_error",
                    reason: format!("errors must be nonnegative, got {e}"),
                });
            }
        }
        if self.get(row.d0, row.variant).is_some() {
            return Err(Error::InvalidParameter {
                name: "row",
                reason: format!("duplicate row for d0 = {}, variant {}", row.d0, row.variant),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ErrorRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, d0: f64, variant: ModelVariant) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.d0 == d0 && r.variant == variant)
    }

    pub fn error(&self, d0: f64, variant: ModelVariant) -> Option<f64> {
        self.get(d0, variant).and_then(|r| r.l2_error)
    }

    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.failure.is_some())
    }

    /// Errors of one variant in row order, skipping failed runs.
    pub fn series(&self, variant: ModelVariant) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.variant == variant)
            .filter_map(|r| r.l2_error.map(|e| (r.d0, e)))
            .collect()
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "d0,variant,l2_error,bulk_dofs,iface_dofs,residual")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:e},{},{:e},{},{},{:e}",
                r.d0,
                r.variant,
                r.l2_error.unwrap_or(f64::NAN),
                r.bulk_dofs,
                r.iface_dofs,
                r.residual
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log(error)` against `log(d0)`.
pub fn loglog_slope(series: &[(f64, f64)]) -> Option<f64> {
    if series.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// What the reduced fracture pressures are compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ReferenceKind {
    /// Full-dimensional run averaged across the fracture.
    #[default]
    Numerical,
    /// A known constant fracture pressure.
    Exact(f64),
}

/// Callbacks for every solution produced by a sweep.
pub trait SweepObserver {
    fn full(&mut self, _d0: f64, _sol: &FullSolution) {}
    fn reduced(&mut self, _d0: f64, _sol: &ReducedSolution, _error: f64) {}
    fn failed(&mut self, _d0: f64, _variant: ModelVariant, _err: &Error) {}
}

impl SweepObserver for () {}

/// For each `d0`: one reference, then one reduced run and error per variant.
/// Failed runs become rows without an error; the table is always returned.
pub fn aperture_sweep(
    make_problem: &dyn Fn(f64) -> Result<Problem>,
    variants: &[ModelVariant],
    d0_list: &[f64],
    disc: &Discretization,
    reference: ReferenceKind,
    observer: &mut dyn SweepObserver,
) -> Result<ErrorTable> {
    if let Some(d0) = d0_list.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "d0",
            reason: format!("aperture scales must be positive, got {d0}"),
        });
    }
    if let Some(v) = variants.iter().find(|v| **v == ModelVariant::Full) {
        return Err(Error::InvalidParameter {
            name: "variants",
            reason: format!("variant {v} is the reference, not a reduced model"),
        });
    }
    let distinct: BTreeSet<_> = variants.iter().collect();
    if distinct.len() != variants.len() {
        return Err(Error::InvalidParameter {
            name: "variants",
            reason: "variants must be distinct".into(),
        });
    }
    let mut table = ErrorTable::new();
    for &d0 in d0_list {
        let fail_all = |table: &mut ErrorTable, observer: &mut dyn SweepObserver, err: &Error| -> Result<()> {
            for &v in variants {
                observer.failed(d0, v, err);
                table.push(failed_row(d0, v, err))?;
            }
            Ok(())
        };
        let problem = match make_problem(d0) {
            Ok(p) => p,
            Err(err) => {
                warn!("d0 = {d0:e}: problem setup failed: {err}");
                fail_all(&mut table, observer, &err)?;
                continue;
            }
        };
        let full = match reference {
            ReferenceKind::Numerical => match run_full(&problem, disc) {
                Ok(f) => {
                    observer.full(d0, &f);
                    Some(f)
                }
                Err(err) => {
                    warn!("d0 = {d0:e}: reference run failed: {err}");
                    fail_all(&mut table, observer, &err)?;
                    continue;
                }
            },
            ReferenceKind::Exact(_) => None,
        };
        let averaged = match &full {
            Some(f) => Some(average_across_fracture(
                f,
                &problem.profile,
                &problem.frame,
                DEFAULT_AVERAGING_POINTS,
            )?),
            None => None,
        };
        let exact = match reference {
            ReferenceKind::Exact(c) => ConstantField(c),
            ReferenceKind::Numerical => ConstantField(f64::NAN),
        };
        let reference_field: &dyn InterfaceField = match &averaged {
            Some(a) => a,
            None => &exact,
        };
        for &v in variants {
            let outcome = run_reduced(&problem, v, disc).and_then(|sol| {
                let err = l2_error_gamma(&sol, reference_field, &sol.grid, ERROR_QUAD_ORDER)?;
                Ok((sol, err))
            });
            match outcome {
                Ok((sol, err)) => {
                    info!("d0 = {d0:e}, variant {v}: L2 error on the fracture {err:e}");
                    observer.reduced(d0, &sol, err);
                    table.push(ErrorRow {
                        d0,
                        variant: v,
                        l2_error: Some(err),
                        bulk_dofs: sol.bulk_space.n_dofs(),
                        iface_dofs: sol.iface_space.n_dofs(),
                        residual: sol.report.residual,
                        failure: None,
                    })?;
                }
                Err(err) => {
                    warn!("d0 = {d0:e}, variant {v}: run failed: {err}");
                    observer.failed(d0, v, &err);
                    table.push(failed_row(d0, v, &err))?;
                }
            }
        }
    }
    Ok(table)
}

fn failed_row(d0: f64, variant: ModelVariant, err: &Error) -> ErrorRow {
    let residual = match err {
        Error::NotConverged { residual, .. } => *residual,
        _ => f64::NAN,
    };
    ErrorRow {
        d0,
        variant,
        l2_error: None,
        bulk_dofs: 0,
        iface_dofs: 0,
        residual,
        failure: Some(err.to_string()),
    }
}

/// Barycentric sample points per element in field dumps.
const SAMPLE_POINTS: [[f64; 3]; 4] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Interior sample points per fracture element in field dumps.
const GAMMA_SAMPLES: usize = 4;

/// A solution whose fields can be dumped.
#[derive(Clone, Copy)]
pub enum Fields<'a> {
    Full(&'a FullSolution),
    Reduced(&'a ReducedSolution),
}

/// Fields read back from a dump.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldDump {
    pub vertices: Vec<Point>,
    /// Subdomain name, vertex ids, degree and coefficients per element.
    pub elements: Vec<(String, [usize; 3], usize, Vec<f64>)>,
    /// `(element, point, value)`.
    pub samples: Vec<(usize, Point, f64)>,
    /// `(t, p_Γ(t))`, increasing in `t`; empty for full solutions.
    pub interface: Vec<(f64, f64)>,
}

/// Paths written by [`write_fields`] for a prefix.
pub fn field_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let mut bulk = prefix.as_os_str().to_owned();
    bulk.push(".bulk.txt");
    let mut gamma = prefix.as_os_str().to_owned();
    gamma.push(".gamma.txt");
    (bulk.into(), gamma.into())
}

/// Writes `<prefix>.bulk.txt` and, for reduced solutions,
/// `<prefix>.gamma.txt`.
///
/// Bulk format: `vertices N` then `x y` lines; `elements M` then
/// `tag v0 v1 v2 degree c0 c1 …` lines; `samples S` then `e x y value`
/// lines. Fracture format: `t value` lines with increasing `t`.
pub fn write_fields(fields: Fields<'_>, prefix: &Path) -> Result<Vec<PathBuf>> {
    let (mesh, space, coeffs) = match fields {
        Fields::Full(s) => (&s.mesh, &s.space, &s.coeffs[..]),
        Fields::Reduced(s) => (&s.mesh, &s.bulk_space, s.bulk_coeffs()),
    };
    let (bulk_path, gamma_path) = field_paths(prefix);
    let mut out = BufWriter::new(fs::File::create(&bulk_path)?);
    writeln!(out, "vertices {}", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
    }
    writeln!(out, "elements {}", mesh.n_elements())?;
    for e in 0..mesh.n_elements() {
        let [a, b, c] = mesh.elements[e];
        write!(out, "{} {a} {b} {c} {}", mesh.tags[e].name(), space.degree(e))?;
        for i in space.dofs(e) {
            write!(out, " {:.17e}", coeffs[i])?;
        }
        writeln!(out)?;
    }
    writeln!(out, "samples {}", mesh.n_elements() * SAMPLE_POINTS.len())?;
    for e in 0..mesh.n_elements() {
        let p = mesh.element_vertices(e);
        for lam in SAMPLE_POINTS {
            let x = [
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ];
            writeln!(out, "{e} {:.17e} {:.17e} {:.17e}", x[0], x[1], space.eval(mesh, coeffs, e, x))?;
        }
    }
    out.flush()?;
    let mut written = vec![bulk_path];
    if let Fields::Reduced(s) = fields {
        let mut out = BufWriter::new(fs::File::create(&gamma_path)?);
        for el in &s.grid.elements {
            for i in 0..GAMMA_SAMPLES {
                let t = el.t0 + (i as f64 + 0.5) / GAMMA_SAMPLES as f64 * el.length();
                writeln!(out, "{:.17e} {:.17e}", t, s.pressure_gamma(t)?)?;
            }
        }
        out.flush()?;
        written.push(gamma_path);
    }
    Ok(written)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.ok_or_else(|| parse_err(line, "missing number"))?
        .parse()
        .map_err(|e| parse_err(line, format!("bad number: {e}")))
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    tok.ok_or_else(|| parse_err(line, "missing integer"))?
        .parse()
        .map_err(|e| parse_err(line, format!("bad integer: {e}")))
}

/// Reads the files written by [`write_fields`]; the fracture file is
/// optional.
pub fn read_fields(prefix: &Path) -> Result<FieldDump> {
    let (bulk_path, gamma_path) = field_paths(prefix);
    let mut dump = FieldDump::default();
    let content = fs::read_to_string(bulk_path)?;
    let mut it = content.lines().enumerate();
    let mut section = |name: &str| -> Result<Vec<(usize, String)>> {
        let (i, line) = it.next().ok_or_else(|| parse_err(0, format!("missing `{name}` header")))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(name) {
            return Err(parse_err(i + 1, format!("expected `{name}` header")));
        }
        let n = parse_usize(toks.next(), i + 1)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (j, l) = it.next().ok_or_else(|| parse_err(i + 1, format!("truncated `{name}` section")))?;
            out.push((j + 1, l.to_string()));
        }
        Ok(out)
    };
    for (ln, l) in section("vertices")? {
        let mut toks = l.split_whitespace();
        dump.vertices.push([parse_f64(toks.next(), ln)?, parse_f64(toks.next(), ln)?]);
    }
    for (ln, l) in section("elements")? {
        let mut toks = l.split_whitespace();
        let tag = toks.next().ok_or_else(|| parse_err(ln, "missing tag"))?.to_string();
        let v = [
            parse_usize(toks.next(), ln)?,
            parse_usize(toks.next(), ln)?,
            parse_usize(toks.next(), ln)?,
        ];
        let k = parse_usize(toks.next(), ln)?;
        let coeffs = toks
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(ln, format!("bad number: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        dump.elements.push((tag, v, k, coeffs));
    }
    for (ln, l) in section("samples")? {
        let mut toks = l.split_whitespace();
        let e = parse_usize(toks.next(), ln)?;
        let x = [parse_f64(toks.next(), ln)?, parse_f64(toks.next(), ln)?];
        dump.samples.push((e, x, parse_f64(toks.next(), ln)?));
    }
    if gamma_path.exists() {
        for (i, l) in fs::read_to_string(gamma_path)?.lines().enumerate() {
            let mut toks = l.split_whitespace();
            dump.interface.push((parse_f64(toks.next(), i + 1)?, parse_f64(toks.next(), i + 1)?));
        }
    }
    Ok(dump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ApertureProfile, FractureFrame};
    use crate::mesh::{build_bulk_mesh, MeshMode};
    use crate::solver::{SolveReport, SolverMethod};

    fn report() -> SolveReport {
        SolveReport {
            method: SolverMethod::DirectLu,
            iterations: 1,
            residual: 0.0,
        }
    }

    fn projected(profile: &ApertureProfile, k: usize, f: &dyn Fn(Point) -> f64) -> FullSolution {
        let frame = FractureFrame::vertical(0.5);
        let mesh = build_bulk_mesh(profile, &frame, MeshMode::Full, 0.125, 3).unwrap();
        let space = DgSpace::uniform(&mesh, k).unwrap();
        let coeffs = project(&mesh, &space, f);
        FullSolution::new(mesh, space, coeffs, report())
    }

    #[test]
    fn averages_of_simple_fields() {
        let frame = FractureFrame::vertical(0.5);
        let sym = ApertureProfile::constant(0.05, 0.05);
        let c = projected(&sym, 1, &|_| 0.3);
        let avg = average_across_fracture(&c, &sym, &frame, 16).unwrap();
        assert!((avg.value(0.37).unwrap() - 0.3).abs() < 1e-13);

        let eta = |x: Point| x[0] - 0.5;
        let odd = projected(&sym, 1, &eta);
        let avg = average_across_fracture(&odd, &sym, &frame, 16).unwrap();
        assert!(avg.value(0.61).unwrap().abs() < 1e-13);

        let asym = ApertureProfile::constant(0.03, 0.08);
        let lin = projected(&asym, 1, &eta);
        let avg = average_across_fracture(&lin, &asym, &frame, 16).unwrap();
        assert!((avg.value(0.2).unwrap() - (0.08 - 0.03) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn averaging_is_exact_for_cubic_profiles_on_curved_fractures() {
        let frame = FractureFrame::vertical(0.5);
        let profile = ApertureProfile::serpentine(0.1, crate::geometry::Symmetry::Symmetric);
        let f = |x: Point| {
            let e = x[0] - 0.5;
            1.0 + e - 2.0 * e * e + 3.0 * e * e * e
        };
        let sol = projected(&profile, 3, &f);
        let avg = average_across_fracture(&sol, &profile, &frame, 16).unwrap();
        for t in [0.01, 0.33, 0.5, 0.77] {
            let a = profile.sample(t);
            let prim = |e: f64| e + e * e / 2.0 - 2.0 * e.powi(3) / 3.0 + 0.75 * e.powi(4);
            let exact = (prim(a.d2) - prim(-a.d1)) / a.d();
            assert!((avg.value(t).unwrap() - exact).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn averaging_outside_the_fracture_fails() {
        let frame = FractureFrame::vertical(0.5);
        let profile = ApertureProfile::constant(0.05, 0.05);
        let sol = projected(&profile, 1, &|_| 1.0);
        let avg = average_across_fracture(&sol, &profile, &frame, 4).unwrap();
        assert!(matches!(avg.value(1.5), Err(Error::SegmentOutsideFracture { .. })));
    }

    fn unit_grid(n: usize) -> InterfaceGrid {
        use crate::mesh::{EdgeKind, InterfaceEdge, InterfaceElement};
        let elements = (0..n)
            .map(|i| InterfaceElement {
                t0: i as f64 / n as f64,
                t1: (i + 1) as f64 / n as f64,
                facets: [0, 0],
            })
            .collect();
        let edges = (0..=n)
            .map(|i| InterfaceEdge {
                t: i as f64 / n as f64,
                kind: if i == 0 || i == n { EdgeKind::Boundary } else { EdgeKind::Interior },
                left: (i > 0).then(|| i - 1),
                right: (i < n).then_some(i),
            })
            .collect();
        InterfaceGrid { elements, edges }
    }

    #[test]
    fn l2_error_examples() {
        let grid = unit_grid(5);
        let a = FnField(|t: f64| t.sin());
        assert_eq!(l2_error_gamma(&a, &a, &grid, 8).unwrap(), 0.0);
        let c = l2_error_gamma(&ConstantField(0.25), &ConstantField(-0.5), &grid, 4).unwrap();
        assert!((c - 0.75).abs() < 1e-14);
        let x = l2_error_gamma(&FnField(|t: f64| t), &ConstantField(0.0), &grid, 4).unwrap();
        assert!((x - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn table_rejects_duplicates_and_writes_nan_for_failures() {
        let mut t = ErrorTable::new();
        let row = ErrorRow {
            d0: 0.1,
            variant: ModelVariant::I,
            l2_error: Some(1e-3),
            bulk_dofs: 10,
            iface_dofs: 4,
            residual: 1e-12,
            failure: None,
        };
        t.push(row.clone()).unwrap();
        assert!(t.push(row.clone()).is_err());
        assert!(t
            .push(ErrorRow {
                l2_error: Some(-1.0),
                variant: ModelVariant::II,
                ..row.clone()
            })
            .is_err());
        t.push(failed_row(0.1, ModelVariant::IIR, &Error::Singular("x".into()))).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "d0,variant,l2_error,bulk_dofs,iface_dofs,residual");
        assert_eq!(lines[1], "1e-1,I,1e-3,10,4,1e-12");
        assert!(lines[2].starts_with("1e-1,II-R,NaN"));
        assert!(t.has_failures());
    }

    #[test]
    fn slopes() {
        let s: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3].iter().map(|&d: &f64| (d, 3.0 * d * d)).collect();
        assert!((loglog_slope(&s).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&s[..1]).is_none());
    }

    #[test]
    fn field_dump_round_trip() {
        let profile = ApertureProfile::constant(0.05, 0.05);
        let sol = projected(&profile, 2, &|x| x[0] * x[1] + 0.3);
        let dir = std::env::temp_dir().join(format!("fracdg-fields-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let prefix = dir.join("full");
        let files = write_fields(Fields::Full(&sol), &prefix).unwrap();
        assert_eq!(files.len(), 1);
        let dump = read_fields(&prefix).unwrap();
        assert_eq!(dump.vertices, sol.mesh.vertices);
        assert_eq!(dump.elements.len(), sol.mesh.n_elements());
        assert!(dump.interface.is_empty());
        for (e, x, v) in &dump.samples {
            assert!((sol.eval_in(*e, *x) - v).abs() < 1e-12);
        }
        let c = projected(&profile, 1, &|_| 2.5);
        write_fields(Fields::Full(&c), &prefix).unwrap();
        let dump = read_fields(&prefix).unwrap();
        assert!(dump.samples.iter().all(|s| (s.2 - 2.5).abs() < 1e-13));
        fs::remove_dir_all(&dir).unwrap();
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn averaging_is_exact_for_eta_polynomials(
                c in prop::array::uniform3(-2.0f64..2.0), d0 in 0.01f64..0.1, t in 0.0f64..1.0,
            ) {
                let frame = FractureFrame::vertical(0.5);
                let profile = ApertureProfile::serpentine(d0, crate::geometry::Symmetry::Antisymmetric);
                let f = move |x: Point| {
                    let e = x[0] - 0.5;
                    c[0] + c[1] * e + c[2] * e * e
                };
                let sol = projected(&profile, 2, &f);
                let avg = average_across_fracture(&sol, &profile, &frame, 8).unwrap();
                let a = profile.sample(t);
                let prim = |e: f64| c[0] * e + c[1] * e * e / 2.0 + c[2] * e.powi(3) / 3.0;
                let exact = (prim(a.d2) - prim(-a.d1)) / a.d();
                prop_assert!((avg.value(t).unwrap() - exact).abs() < 1e-11);
            }

            #[test]
            fn interface_error_is_a_metric(
                a in prop::array::uniform3(-3.0f64..3.0),
                b in prop::array::uniform3(-3.0f64..3.0),
                c in prop::array::uniform3(-3.0f64..3.0),
                n in 1usize..12,
            ) {
                let field = |p: [f64; 3]| FnField(move |t: f64| p[0] + p[1] * t + p[2] * (7.0 * t).sin());
                let (fa, fb, fc) = (field(a), field(b), field(c));
                let grid = unit_grid(n);
                let ab = l2_error_gamma(&fa, &fb, &grid, ERROR_QUAD_ORDER).unwrap();
                let ba = l2_error_gamma(&fb, &fa, &grid, ERROR_QUAD_ORDER).unwrap();
                let ac = l2_error_gamma(&fa, &fc, &grid, ERROR_QUAD_ORDER).unwrap();
                let cb = l2_error_gamma(&fc, &fb, &grid, ERROR_QUAD_ORDER).unwrap();
                prop_assert_eq!(ab, ba);
                prop_assert!(ab <= ac + cb + 1e-12);
                prop_assert_eq!(l2_error_gamma(&fa, &fa, &grid, ERROR_QUAD_ORDER).unwrap(), 0.0);
            }
        }
    }
}
