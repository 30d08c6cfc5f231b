//! Command-line front end: parses system definition files, dispatches the
//! symbolic and numeric analyses, and emits human-readable text plus an
//! optional machine-readable JSON report.
//!
//! Exit codes: 0 all checks pass, 1 some check failed, 2 input error,
//! 3 no failures but at least one check was inconclusive.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use poissonkit::catalog;
use poissonkit::expr::{Context, Expr, Verdict, parse_in};
use poissonkit::field::VectorField;
use poissonkit::focus::{CenterVerdict, ComplexSystem, Subst};
use poissonkit::numeric::{
    BumpTest, PiecewiseExpr, PiecewiseField, integrate, integrate_piecewise,
    invariant_curve_check, measure_preservation_check, weak_multiplier_residual,
};
use poissonkit::poisson::{
    StructureMatrix, cross_product_field, structure_matrix_3d, verify_poisson,
};
use poissonkit::reduce::restrict_to_level;

// ---------------------------------------------------------------------------
// Report.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Check {
    name: String,
    status: &'static str, // "pass" | "fail" | "inconclusive" | "info"
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

#[derive(Serialize)]
struct Report {
    command: String,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    timing_ms: f64,
}

impl Report {
    fn new(command: String) -> Self {
        Report {
            command,
            checks: Vec::new(),
            seed: None,
            timing_ms: 0.0,
        }
    }

    fn push(&mut self, name: impl Into<String>, status: &'static str) {
        self.checks.push(Check {
            name: name.into(),
            status,
            value: None,
            tolerance: None,
            detail: None,
        });
    }

    fn push_verdict(&mut self, name: impl Into<String>, v: Verdict) {
        self.push(name, verdict_status(v));
    }

    fn push_value(
        &mut self,
        name: impl Into<String>,
        value: f64,
        tolerance: f64,
        ok: bool,
    ) {
        self.checks.push(Check {
            name: name.into(),
            status: if ok { "pass" } else { "fail" },
            value: Some(value),
            tolerance: Some(tolerance),
            detail: None,
        });
    }

    fn push_info(&mut self, name: impl Into<String>, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            status: "info",
            value: None,
            tolerance: None,
            detail: Some(detail),
        });
    }

    fn exit_code(&self) -> ExitCode {
        let mut any_inconclusive = false;
        for c in &self.checks {
            match c.status {
                "fail" => return ExitCode::from(1),
                "inconclusive" => any_inconclusive = true,
                _ => {}
            }
        }
        if any_inconclusive {
            ExitCode::from(3)
        } else {
            ExitCode::SUCCESS
        }
    }
}

fn verdict_status(v: Verdict) -> &'static str {
    match v {
        Verdict::True => "pass",
        Verdict::False => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

// ---------------------------------------------------------------------------
// System definition files.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct PiecesFile {
    gamma: String,
    plus: Vec<String>,
    minus: Vec<String>,
}

#[derive(Deserialize)]
struct SpecFile {
    vars: Vec<String>,
    #[serde(default)]
    params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    field: Vec<String>,
    #[serde(default)]
    pieces: Option<PiecesFile>,
    #[serde(default)]
    known: BTreeMap<String, String>,
}

enum LoadedField {
    Smooth(VectorField),
    Piecewise(PiecewiseField),
}

struct LoadedSpec {
    ctx: Arc<Context>,
    field: LoadedField,
    /// Identity for free parameters, the fixed rational for the others.
    param_subs: Vec<Expr>,
    /// Fixed parameter values as floats; None for free parameters.
    param_values: Vec<Option<f64>>,
    known: BTreeMap<String, Expr>,
}

/// Parses "p/q", an integer, or a finite decimal into an exact rational.
fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    // Finite decimal: digits '.' digits.
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int_part, frac_part) = body.split_once('.')?;
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || frac_part.is_empty()
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let den = BigInt::from(10).pow(frac_part.len() as u32);
    Some(BigRational::new(digits * BigInt::from(sign), den))
}

impl LoadedSpec {
    fn load(path: &str) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read `{path}`: {e}"))?;
        let file: SpecFile = serde_json::from_str(&text)
            .map_err(|e| format!("`{path}` is not a valid system file: {e}"))?;
        let vars: Vec<&str> = file.vars.iter().map(String::as_str).collect();
        let param_names: Vec<&str> = file.params.keys().map(String::as_str).collect();
        let ctx = Context::new(vars, param_names);

        let mut param_subs: Vec<Expr> =
            (0..ctx.nparams()).map(|i| Expr::param(&ctx, i)).collect();
        let mut param_values: Vec<Option<f64>> = vec![None; ctx.nparams()];
        for (name, value) in &file.params {
            let idx = ctx.param_index(name).unwrap();
            let as_str = match value {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(format!("parameter `{name}`: unsupported value {other}")),
            };
            if as_str == "free" {
                continue;
            }
            let r = parse_rational(&as_str)
                .ok_or_else(|| format!("parameter `{name}`: `{as_str}` is not rational"))?;
            param_values[idx] = Some(poissonkit::coeff::rat_to_f64(&r));
            param_subs[idx] = Expr::constant(&ctx, r);
        }

        let vars_id: Vec<Expr> = (0..ctx.nvars()).map(|i| Expr::var(&ctx, i)).collect();
        let fix = |e: Expr| e.substitute(&ctx, &vars_id, &param_subs);
        let parse_comp = |src: &String| -> Result<Expr, String> {
            parse_in(src, &ctx)
                .map(&fix)
                .map_err(|e| format!("in `{src}`: {e}"))
        };

        let field = if let Some(pieces) = &file.pieces {
            let gamma = parse_comp(&pieces.gamma)?;
            let mk = |comps: &[String]| -> Result<VectorField, String> {
                let parsed = comps.iter().map(parse_comp).collect::<Result<Vec<_>, _>>()?;
                VectorField::new(&ctx, parsed).map_err(|e| e.to_string())
            };
            LoadedField::Piecewise(PiecewiseField::new(
                gamma,
                mk(&pieces.plus)?,
                mk(&pieces.minus)?,
            ))
        } else {
            let comps = file.field.iter().map(parse_comp).collect::<Result<Vec<_>, _>>()?;
            LoadedField::Smooth(VectorField::new(&ctx, comps).map_err(|e| e.to_string())?)
        };

        let mut known = BTreeMap::new();
        for (name, src) in &file.known {
            known.insert(name.clone(), parse_comp(src)?);
        }

        Ok(LoadedSpec {
            ctx,
            field,
            param_subs,
            param_values,
            known,
        })
    }

    fn smooth(&self) -> Result<&VectorField, String> {
        match &self.field {
            LoadedField::Smooth(f) => Ok(f),
            LoadedField::Piecewise(_) => {
                Err("this command needs a smooth field, but the file defines pieces".into())
            }
        }
    }

    /// Parses an expression over this system's names with fixed parameters
    /// substituted.
    fn parse(&self, src: &str) -> Result<Expr, String> {
        let e = parse_in(src, &self.ctx).map_err(|e| format!("in `{src}`: {e}"))?;
        let vars_id: Vec<Expr> = (0..self.ctx.nvars()).map(|i| Expr::var(&self.ctx, i)).collect();
        Ok(e.substitute(&self.ctx, &vars_id, &self.param_subs))
    }

    /// All parameter values as floats; numeric commands require every
    /// parameter to be fixed.
    fn params_f64(&self) -> Result<Vec<f64>, String> {
        self.param_values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    format!(
                        "parameter `{}` is free; numeric commands need a fixed value",
                        self.ctx.params()[i]
                    )
                })
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Command-line grammar.
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "poissonkit",
    about = "Symbolic and numeric analysis of conservative and Poisson systems"
)]
struct Cli {
    /// Write the machine-readable report as JSON to this file.
    #[arg(long, global = true)]
    json: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a multiplier, a first integral, or divergence-freeness.
    Check(CheckArgs),
    /// Restrict a 3D field to the level sets of a first integral.
    Reduce(ReduceArgs),
    /// Compute focus quantities of a planar (or reduced) family.
    Focus(FocusArgs),
    /// Build or verify Poisson structure data.
    Poisson(PoissonArgs),
    /// Monte-Carlo check that the flow preserves the measure dx/V.
    Measure(MeasureArgs),
    /// Distributional multiplier residuals for a piecewise field.
    Weak(WeakArgs),
    /// Integrate a trajectory and print the endpoint and events.
    Simulate(SimulateArgs),
    /// Inspect the built-in example systems.
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct CheckArgs {
    spec: String,
    /// Verify this expression as an inverse Jacobi multiplier.
    #[arg(long, allow_hyphen_values = true)]
    multiplier: Option<String>,
    /// Verify this expression as a first integral.
    #[arg(long, allow_hyphen_values = true)]
    integral: Option<String>,
    /// Verify that the field is divergence free.
    #[arg(long)]
    divfree: bool,
}

#[derive(Args)]
struct ReduceArgs {
    spec: String,
    /// First integral whose level sets carry the reduction.
    #[arg(long, allow_hyphen_values = true)]
    integral: String,
    /// Truncation order of the series data.
    #[arg(long, default_value_t = 6)]
    order: u32,
}

#[derive(Args)]
struct FocusArgs {
    spec: String,
    /// Number of focus quantities to compute.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// For a 3D system: reduce along this first integral before complexifying.
    #[arg(long, allow_hyphen_values = true)]
    integral: Option<String>,
    /// Truncation order for the reduction step.
    #[arg(long, default_value_t = 8)]
    order: u32,
    /// Parameter substitutions, e.g. "B1=0,C=1/2" (values rational or
    /// another parameter name).
    #[arg(long)]
    subs: Option<String>,
}

#[derive(Args)]
struct PoissonArgs {
    #[command(subcommand)]
    action: PoissonAction,
}

#[derive(Subcommand)]
enum PoissonAction {
    /// Check antisymmetry, Jacobi, field match, and Casimirs.
    Verify(PoissonVerifyArgs),
    /// Build a field and structure matrix from two scalars and a factor.
    Build(PoissonBuildArgs),
}

#[derive(Args)]
struct PoissonVerifyArgs {
    spec: String,
    /// Take the structure matrix, Hamiltonian, and Casimir from this
    /// catalog entry (its predicates are applied).
    #[arg(long)]
    catalog: Option<String>,
    /// JSON file {"upper": ["J12","J13","J23"]} with the strict upper
    /// triangle of the structure matrix.
    #[arg(long, short = 'j')]
    j: Option<String>,
    /// Hamiltonian expression.
    #[arg(long, allow_hyphen_values = true)]
    hamiltonian: Option<String>,
    /// Casimir expressions (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    casimir: Vec<String>,
}

#[derive(Args)]
struct PoissonBuildArgs {
    spec: String,
    #[arg(long, allow_hyphen_values = true)]
    h1: String,
    #[arg(long, allow_hyphen_values = true)]
    h2: String,
    #[arg(long, allow_hyphen_values = true)]
    eta: String,
}

#[derive(Args)]
struct MeasureArgs {
    spec: String,
    /// Inverse Jacobi multiplier defining the measure dx/V.
    #[arg(long)]
    multiplier: String,
    /// Sampling region, one "lo,hi" pair per variable separated by ';'.
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    boxr: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Runge-Kutta tolerance.
    #[arg(long, default_value_t = 1e-10)]
    rk_tol: f64,
    /// Maximum admissible relative drift.
    #[arg(long, default_value_t = 1e-5)]
    max_drift: f64,
}

#[derive(Args)]
struct WeakArgs {
    spec: String,
    /// Branch of the candidate multiplier acting where gamma > 0.
    #[arg(long, allow_hyphen_values = true)]
    w_plus: String,
    /// Branch of the candidate multiplier acting where gamma < 0.
    #[arg(long, allow_hyphen_values = true)]
    w_minus: String,
    /// Region "lo,hi;lo,hi" in which bump supports are placed.
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    boxr: String,
    #[arg(long, default_value_t = 10)]
    bumps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    quad_tol: f64,
    /// Maximum admissible |residual|.
    #[arg(long, default_value_t = 1e-6)]
    max_residual: f64,
    /// Also check that the switching curve is invariant.
    #[arg(long)]
    check_curve: bool,
}

#[derive(Args)]
struct SimulateArgs {
    spec: String,
    /// Initial point "x1,x2,...".
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct CatalogArgs {
    #[command(subcommand)]
    action: CatalogAction,
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Print all entry names.
    List,
    /// Print the field, known objects, and predicates of one entry.
    Show { name: String },
}

// ---------------------------------------------------------------------------
// Helpers.
// ---------------------------------------------------------------------------

fn parse_box(s: &str, dim: usize) -> Result<Vec<(f64, f64)>, String> {
    let pairs: Vec<(f64, f64)> = s
        .split(';')
        .map(|pair| {
            let (lo, hi) = pair
                .split_once(',')
                .ok_or_else(|| format!("bad box component `{pair}` (want lo,hi)"))?;
            let lo: f64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
            let hi: f64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
            if lo >= hi {
                return Err(format!("empty box component `{pair}`"));
            }
            Ok((lo, hi))
        })
        .collect::<Result<_, String>>()?;
    if pairs.len() != dim {
        return Err(format!("box has {} components, the system has {dim} variables", pairs.len()));
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

fn cmd_check(args: &CheckArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let field = spec.smooth()?;
    let mut requested = false;
    if let Some(src) = &args.multiplier {
        requested = true;
        let v = spec.parse(src)?;
        let verdict = field
            .is_inverse_jacobi_multiplier(&v)
            .map_err(|e| e.to_string())?;
        report.push_verdict(format!("multiplier {src}"), verdict);
        println!("multiplier {src}: {verdict:?}");
    }
    if let Some(src) = &args.integral {
        requested = true;
        let f = spec.parse(src)?;
        let verdict = field.is_first_integral(&f).map_err(|e| e.to_string())?;
        report.push_verdict(format!("first integral {src}"), verdict);
        println!("first integral {src}: {verdict:?}");
    }
    if args.divfree {
        requested = true;
        let verdict = field.is_divergence_free().map_err(|e| e.to_string())?;
        report.push_verdict("divergence free", verdict);
        println!("divergence free: {verdict:?}");
    }
    if !requested {
        // Fall back to the file's stored objects: names containing
        // "multiplier" are checked as such, everything else as a first
        // integral.
        for (name, e) in &spec.known {
            let verdict = if name.contains("multiplier") {
                field.is_inverse_jacobi_multiplier(e).map_err(|e| e.to_string())?
            } else {
                field.is_first_integral(e).map_err(|e| e.to_string())?
            };
            report.push_verdict(format!("known {name}"), verdict);
            println!("known {name}: {verdict:?}");
            requested = true;
        }
    }
    if !requested {
        return Err(
            "nothing to check: pass --multiplier, --integral, or --divfree, \
             or store `known` objects in the file"
                .into(),
        );
    }
    Ok(())
}

fn cmd_reduce(args: &ReduceArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let field = spec.smooth()?;
    let d = spec.parse(&args.integral)?;
    let family = restrict_to_level(field, &d, args.order).map_err(|e| e.to_string())?;
    let phi = family.level().render();
    println!("phi = {phi}");
    report.push_info("phi", phi);
    let names = family.names().to_vec();
    for (i, comp) in family.components().iter().enumerate() {
        let rendered = comp.render(&names);
        println!("Z{} = {rendered}", i + 1);
        report.push_info(format!("Z{}", i + 1), rendered);
    }
    report.push("reduction computed", "pass");
    Ok(())
}

fn parse_subs(src: &str) -> Result<Vec<(String, Subst)>, String> {
    src.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| format!("bad substitution `{item}` (want name=value)"))?;
            let value = value.trim();
            let subst = match parse_rational(value) {
                Some(r) => Subst::Rat(r),
                None => Subst::Param(value.to_string()),
            };
            Ok((name.trim().to_string(), subst))
        })
        .collect()
}

fn cmd_focus(args: &FocusArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let field = spec.smooth()?;
    let system = match &args.integral {
        Some(src) => {
            let d = spec.parse(src)?;
            let family =
                restrict_to_level(field, &d, args.order).map_err(|e| e.to_string())?;
            ComplexSystem::from_planar_family(&family).map_err(|e| e.to_string())?
        }
        None => ComplexSystem::from_field(field).map_err(|e| e.to_string())?,
    };
    let subs = match &args.subs {
        Some(s) => parse_subs(s)?,
        None => Vec::new(),
    };
    let subs_ref: Vec<(&str, Subst)> = subs
        .into_iter()
        .map(|(n, s)| (Box::leak(n.into_boxed_str()) as &str, s))
        .collect();
    let (focus_report, verdict) = system
        .center_conditions_check(&subs_ref, args.k)
        .map_err(|e| e.to_string())?;
    for (j, g) in focus_report.quantities.iter().enumerate() {
        let rendered = g.render(&focus_report.names);
        println!("g{} = {rendered}", j + 1);
        report.push_info(format!("g{}", j + 1), rendered);
    }
    let summary = match verdict {
        CenterVerdict::ConsistentWithCenterToOrder(k) => {
            format!("all of g1..g{k} vanish identically")
        }
        CenterVerdict::FocusCertified(j) => format!("g{j} is not identically zero"),
    };
    println!("{summary}");
    report.push_info("summary", summary);
    report.push("focus quantities computed", "pass");
    Ok(())
}

#[derive(Deserialize)]
struct UpperFile {
    upper: Vec<String>,
}

fn cmd_poisson(args: &PoissonArgs, report: &mut Report) -> Result<(), String> {
    match &args.action {
        PoissonAction::Verify(v) => cmd_poisson_verify(v, report),
        PoissonAction::Build(b) => cmd_poisson_build(b, report),
    }
}

fn cmd_poisson_verify(args: &PoissonVerifyArgs, report: &mut Report) -> Result<(), String> {
    let (j, h, field, casimirs): (StructureMatrix, Expr, VectorField, Vec<Expr>) =
        if let Some(name) = &args.catalog {
            let entry = catalog::get(name).map_err(|e| e.to_string())?;
            let ctx = entry.context();
            let field = entry
                .smooth_field()
                .ok_or("catalog entry has a piecewise field")?
                .clone();
            let j = entry
                .known_matrix("structure")
                .or_else(|| entry.known_matrix("structure_d"))
                .ok_or("catalog entry has no stored structure matrix")?
                .clone();
            let h = entry
                .known_scalar("hamiltonian")
                .or_else(|| entry.known_scalar("hamiltonian_d"))
                .ok_or("catalog entry has no stored Hamiltonian")?
                .clone();
            let casimirs: Vec<Expr> = entry
                .known_scalar("first_integral_1")
                .or_else(|| entry.known_scalar("level_d"))
                .cloned()
                .into_iter()
                .collect();
            // Apply the first predicate, if any: stored objects are valid
            // under the entry's parameter condition.
            if let Some(pred) = entry.predicates.first() {
                let subs = entry.predicate_substitution(pred.name).unwrap();
                let vars_id: Vec<Expr> =
                    (0..ctx.nvars()).map(|i| Expr::var(&ctx, i)).collect();
                let sub_e = |e: &Expr| e.substitute(&ctx, &vars_id, &subs);
                let field = VectorField::new(
                    &ctx,
                    field.components().iter().map(sub_e).collect(),
                )
                .map_err(|e| e.to_string())?;
                let entries = (0..j.dim())
                    .map(|r| (0..j.dim()).map(|c| sub_e(j.entry(r, c))).collect())
                    .collect();
                (
                    StructureMatrix::new(&ctx, entries),
                    sub_e(&h),
                    field,
                    casimirs.iter().map(sub_e).collect(),
                )
            } else {
                (j, h, field, casimirs)
            }
        } else {
            let spec = LoadedSpec::load(&args.spec)?;
            let field = spec.smooth()?.clone();
            let jfile = args.j.as_ref().ok_or("pass --catalog or -j FILE")?;
            let text = std::fs::read_to_string(jfile)
                .map_err(|e| format!("cannot read `{jfile}`: {e}"))?;
            let upper: UpperFile = serde_json::from_str(&text)
                .map_err(|e| format!("`{jfile}`: {e}"))?;
            let entries = upper
                .upper
                .iter()
                .map(|s| spec.parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let j = StructureMatrix::from_upper(&spec.ctx, &entries);
            let h = spec.parse(
                args.hamiltonian
                    .as_ref()
                    .ok_or("pass --hamiltonian with -j")?,
            )?;
            let casimirs = args
                .casimir
                .iter()
                .map(|s| spec.parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            (j, h, field, casimirs)
        };

    let cert = verify_poisson(&j, &h, &field, &casimirs).map_err(|e| e.to_string())?;
    report.push_verdict("antisymmetry", cert.antisymmetry);
    report.push_verdict("jacobi identity", cert.jacobi);
    report.push_verdict("field match", cert.field_match);
    for (i, c) in cert.casimirs.iter().enumerate() {
        report.push_verdict(format!("casimir {}", i + 1), *c);
    }
    println!(
        "antisymmetry: {:?}\njacobi: {:?}\nfield match: {:?}\ncasimirs: {:?}",
        cert.antisymmetry, cert.jacobi, cert.field_match, cert.casimirs
    );
    Ok(())
}

fn cmd_poisson_build(args: &PoissonBuildArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let h1 = spec.parse(&args.h1)?;
    let h2 = spec.parse(&args.h2)?;
    let eta = spec.parse(&args.eta)?;
    let field = cross_product_field(&h1, &h2, &eta).map_err(|e| e.to_string())?;
    let j = structure_matrix_3d(&h2, &eta).map_err(|e| e.to_string())?;
    for (i, c) in field.components().iter().enumerate() {
        println!("Y{} = {c}", i + 1);
        report.push_info(format!("Y{}", i + 1), c.to_string());
    }
    for r in 0..3 {
        for c in (r + 1)..3 {
            println!("J{}{} = {}", r + 1, c + 1, j.entry(r, c));
            report.push_info(format!("J{}{}", r + 1, c + 1), j.entry(r, c).to_string());
        }
    }
    let cert = verify_poisson(&j, &h1, &field, &[h2]).map_err(|e| e.to_string())?;
    report.push_verdict("built structure certifies", cert.overall());
    Ok(())
}

fn cmd_measure(args: &MeasureArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let field = spec.smooth()?;
    let params = spec.params_f64()?;
    let v = spec.parse(&args.multiplier)?;
    let region = parse_box(&args.boxr, spec.ctx.nvars())?;
    let drift = measure_preservation_check(
        field,
        &v,
        &region,
        args.t,
        args.samples,
        args.rk_tol,
        args.seed,
        &params,
    )
    .map_err(|e| e.to_string())?;
    let ok = drift.abs() <= args.max_drift;
    println!(
        "relative drift over t={} with {} samples (seed {}): {drift:.3e} (max {:.1e}) -> {}",
        args.t,
        args.samples,
        args.seed,
        args.max_drift,
        if ok { "PASS" } else { "FAIL" }
    );
    report.seed = Some(args.seed);
    report.push_value("measure drift", drift, args.max_drift, ok);
    Ok(())
}

fn cmd_weak(args: &WeakArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let pf = match &spec.field {
        LoadedField::Piecewise(pf) => pf,
        LoadedField::Smooth(_) => {
            return Err("this command needs a piecewise field (`pieces` in the file)".into());
        }
    };
    let params = spec.params_f64()?;
    let w = PiecewiseExpr {
        gamma: pf.gamma().clone(),
        plus: spec.parse(&args.w_plus)?,
        minus: spec.parse(&args.w_minus)?,
    };
    let region = parse_box(&args.boxr, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut max_residual: f64 = 0.0;
    for i in 0..args.bumps {
        let min_w = region.iter().map(|(lo, hi)| hi - lo).fold(f64::MAX, f64::min);
        let radius = min_w * rng.gen_range(0.1..0.3);
        let cx = rng.gen_range(region[0].0 + radius..region[0].1 - radius);
        let cy = rng.gen_range(region[1].0 + radius..region[1].1 - radius);
        let bump = BumpTest {
            center: [cx, cy],
            radius,
        };
        let r = weak_multiplier_residual(pf, &w, &bump, args.quad_tol, &params)
            .map_err(|e| e.to_string())?;
        println!(
            "bump {} at ({cx:.4}, {cy:.4}) r={radius:.4}: residual {:.3e}",
            i + 1,
            r
        );
        max_residual = max_residual.max(r.abs());
    }
    let ok = max_residual <= args.max_residual;
    println!(
        "max |residual| = {max_residual:.3e} (max {:.1e}) -> {}",
        args.max_residual,
        if ok { "PASS" } else { "FAIL" }
    );
    report.seed = Some(args.seed);
    report.push_value("max weak residual", max_residual, args.max_residual, ok);
    if args.check_curve {
        let invariant = invariant_curve_check(
            &[pf.plus(), pf.minus()],
            pf.gamma(),
            &region,
            256,
            &params,
        )
        .map_err(|e| e.to_string())?;
        println!("switching curve invariant: {invariant}");
        report.push(
            "switching curve invariant",
            if invariant { "pass" } else { "fail" },
        );
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, report: &mut Report) -> Result<(), String> {
    let spec = LoadedSpec::load(&args.spec)?;
    let params = spec.params_f64()?;
    let x0: Vec<f64> = args
        .x0
        .split(',')
        .map(|s| s.trim().parse().map_err(|e| format!("`{s}`: {e}")))
        .collect::<Result<_, String>>()?;
    if x0.len() != spec.ctx.nvars() {
        return Err(format!(
            "x0 has {} coordinates, the system has {} variables",
            x0.len(),
            spec.ctx.nvars()
        ));
    }
    let traj = match &spec.field {
        LoadedField::Smooth(f) => {
            integrate(f, &x0, args.t, args.tol, &params).map_err(|e| e.to_string())?
        }
        LoadedField::Piecewise(pf) => {
            integrate_piecewise(pf, &x0, args.t, args.tol, &params).map_err(|e| e.to_string())?
        }
    };
    let end = traj.final_state().to_vec();
    println!(
        "t = {}: x = [{}], {} events, {} steps",
        args.t,
        end.iter()
            .map(|v| format!("{v:.12}"))
            .collect::<Vec<_>>()
            .join(", "),
        traj.events.len(),
        traj.times.len()
    );
    report.push_info(
        "endpoint",
        end.iter().map(|v| format!("{v:.12}")).collect::<Vec<_>>().join(","),
    );
    report.push_info("events", traj.events.len().to_string());
    report.push("trajectory integrated", "pass");
    Ok(())
}

fn cmd_catalog(args: &CatalogArgs, report: &mut Report) -> Result<(), String> {
    match &args.action {
        CatalogAction::List => {
            for name in catalog::names() {
                let entry = catalog::get(name).map_err(|e| e.to_string())?;
                println!("{name}: {}", entry.summary);
                report.push_info(name.to_string(), entry.summary.to_string());
            }
            report.push("catalog listed", "pass");
        }
        CatalogAction::Show { name } => {
            let entry = catalog::get(name).map_err(|e| e.to_string())?;
            println!("{}: {}", entry.name, entry.summary);
            let ctx = entry.context();
            println!("vars: {}", ctx.vars().join(", "));
            if !ctx.params().is_empty() {
                println!("params: {}", ctx.params().join(", "));
            }
            match &entry.field {
                catalog::FieldKind::Smooth(f) => {
                    for (v, c) in ctx.vars().iter().zip(f.components()) {
                        println!("  d{v}/dt = {c}");
                    }
                }
                catalog::FieldKind::Piecewise(pf) => {
                    println!("  switching curve: {} = 0", pf.gamma());
                    for (v, c) in ctx.vars().iter().zip(pf.plus().components()) {
                        println!("  d{v}/dt = {c}   (where gamma > 0)");
                    }
                    for (v, c) in ctx.vars().iter().zip(pf.minus().components()) {
                        println!("  d{v}/dt = {c}   (where gamma < 0)");
                    }
                }
            }
            for k in &entry.known {
                match &k.value {
                    catalog::KnownValue::Scalar(e) => {
                        println!("known {}: {e}   -- {}", k.name, k.note);
                        report.push_info(k.name.to_string(), e.to_string());
                    }
                    catalog::KnownValue::Matrix(m) => {
                        let mut parts = Vec::new();
                        for r in 0..m.dim() {
                            for c in (r + 1)..m.dim() {
                                parts.push(format!("J{}{} = {}", r + 1, c + 1, m.entry(r, c)));
                            }
                        }
                        println!("known {}: {}   -- {}", k.name, parts.join(", "), k.note);
                        report.push_info(k.name.to_string(), parts.join(", "));
                    }
                }
            }
            for p in &entry.predicates {
                println!("predicate {}: {}", p.name, p.description);
            }
            report.push("entry shown", "pass");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = Report::new(argv[1..].join(" "));

    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, &mut report),
        Command::Reduce(a) => cmd_reduce(a, &mut report),
        Command::Focus(a) => cmd_focus(a, &mut report),
        Command::Poisson(a) => cmd_poisson(a, &mut report),
        Command::Measure(a) => cmd_measure(a, &mut report),
        Command::Weak(a) => cmd_weak(a, &mut report),
        Command::Simulate(a) => cmd_simulate(a, &mut report),
        Command::Catalog(a) => cmd_catalog(a, &mut report),
    };

    if let Err(msg) = result {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }

    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(path) = &cli.json {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = std::fs::write(path, json) {
            eprintln!("error: cannot write `{path}`: {e}");
            return ExitCode::from(2);
        }
    }
    report.exit_code()
}
