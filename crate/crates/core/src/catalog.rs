//! Built-in registry of example systems with their known multipliers, first
//! integrals, Hamiltonians, structure matrices, and parameter predicates.
//! Every stored object is re-verified by the test suite against the
//! corresponding certification operation.

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::coeff::rat_int;
use crate::expr::{Context, Expr, ExprError, parse_in};
use crate::field::VectorField;
use crate::numeric::PiecewiseField;
use crate::poisson::StructureMatrix;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Parse(#[from] crate::expr::ParseError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

#[derive(Clone, Debug)]
pub enum FieldKind {
    Smooth(VectorField),
    Piecewise(PiecewiseField),
}

#[derive(Clone, Debug)]
pub enum KnownValue {
    Scalar(Expr),
    Matrix(StructureMatrix),
}

/// A named closed-form object attached to an entry, with a note stating what
/// it is and on which branch or region it is valid.
#[derive(Clone, Debug)]
pub struct KnownObject {
    pub name: &'static str,
    pub value: KnownValue,
    pub note: &'static str,
}

/// A named parameter condition, stored as the substitution that enforces it.
#[derive(Clone, Debug)]
pub struct Predicate {
    pub name: &'static str,
    pub description: &'static str,
    /// Parameter-name / replacement-expression pairs (parsed in the entry's
    /// context) that realize the condition.
    pub substitution: Vec<(&'static str, &'static str)>,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub field: FieldKind,
    pub known: Vec<KnownObject>,
    pub predicates: Vec<Predicate>,
}

impl CatalogEntry {
    pub fn known_scalar(&self, name: &str) -> Option<&Expr> {
        self.known.iter().find(|k| k.name == name).and_then(|k| match &k.value {
            KnownValue::Scalar(e) => Some(e),
            _ => None,
        })
    }

    pub fn known_matrix(&self, name: &str) -> Option<&StructureMatrix> {
        self.known.iter().find(|k| k.name == name).and_then(|k| match &k.value {
            KnownValue::Matrix(m) => Some(m),
            _ => None,
        })
    }

    pub fn smooth_field(&self) -> Option<&VectorField> {
        match &self.field {
            FieldKind::Smooth(f) => Some(f),
            _ => None,
        }
    }

    pub fn piecewise_field(&self) -> Option<&PiecewiseField> {
        match &self.field {
            FieldKind::Piecewise(f) => Some(f),
            _ => None,
        }
    }

    /// Parameter-substitution map for a named predicate, as expressions in
    /// the entry context (identity for unconstrained parameters).
    pub fn predicate_substitution(&self, name: &str) -> Option<Vec<Expr>> {
        let pred = self.predicates.iter().find(|p| p.name == name)?;
        let ctx = self.context();
        let mut subs: Vec<Expr> = (0..ctx.nparams()).map(|i| Expr::param(&ctx, i)).collect();
        for (pname, repl) in &pred.substitution {
            let idx = ctx.param_index(pname).expect("predicate names a known parameter");
            subs[idx] = parse_in(repl, &ctx).expect("predicate expression parses");
        }
        Some(subs)
    }

    pub fn context(&self) -> std::sync::Arc<Context> {
        match &self.field {
            FieldKind::Smooth(f) => f.ctx().clone(),
            FieldKind::Piecewise(f) => f.ctx().clone(),
        }
    }
}

pub fn names() -> Vec<&'static str> {
    vec![
        "lotka-volterra-3d",
        "zero-hopf-example-1",
        "zero-hopf-example-2",
        "zero-hopf-example-3",
        "isochronous-loud",
        "focus-not-poisson",
        "berrone-giacomini-3d",
        "nonsmooth-oscillator",
        "quadratic-foliation-family",
    ]
}

pub fn get(name: &str) -> Result<CatalogEntry, CatalogError> {
    match name {
        "lotka-volterra-3d" => lotka_volterra(),
        "zero-hopf-example-1" => zero_hopf_1(),
        "zero-hopf-example-2" => zero_hopf_2(),
        "zero-hopf-example-3" => zero_hopf_3(),
        "isochronous-loud" => isochronous(),
        "focus-not-poisson" => focus_not_poisson(),
        "berrone-giacomini-3d" => berrone_giacomini(),
        "nonsmooth-oscillator" => nonsmooth_oscillator(),
        "quadratic-foliation-family" => quadratic_foliation(),
        other => Err(CatalogError::UnknownName(other.to_string())),
    }
}

fn scalar(
    ctx: &std::sync::Arc<Context>,
    name: &'static str,
    expr: &str,
    note: &'static str,
) -> Result<KnownObject, CatalogError> {
    Ok(KnownObject {
        name,
        value: KnownValue::Scalar(parse_in(expr, ctx)?),
        note,
    })
}

fn matrix3(
    ctx: &std::sync::Arc<Context>,
    name: &'static str,
    upper: [&str; 3],
    note: &'static str,
) -> Result<KnownObject, CatalogError> {
    let entries = [
        parse_in(upper[0], ctx)?,
        parse_in(upper[1], ctx)?,
        parse_in(upper[2], ctx)?,
    ];
    Ok(KnownObject {
        name,
        value: KnownValue::Matrix(StructureMatrix::from_upper(ctx, &entries)),
        note,
    })
}

fn lotka_volterra() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2", "x3"],
        &["a", "b", "c", "l1", "l2", "l3"],
        &[
            "x1*(l1 + c*x2 + x3)",
            "x2*(l2 + x1 + a*x3)",
            "x3*(l3 + b*x1 + x2)",
        ],
    )?;
    let ctx = field.ctx().clone();
    let known = vec![
        scalar(
            &ctx,
            "multiplier",
            "x1*x2*x3",
            "inverse Jacobi multiplier, valid for all parameters on the open positive octant",
        )?,
        scalar(
            &ctx,
            "first_integral_1",
            "exp(log(x1)/c + b*log(x2) - log(x3))",
            "Casimir x1^(1/c) x2^b / x3 on x_i > 0; requires the `integrable` predicate",
        )?,
        scalar(
            &ctx,
            "first_integral_2",
            "-x1 + c*x2 - a*c*x3 - l2*log(x1) + l1*log(x2)",
            "second independent first integral; requires the `integrable` predicate",
        )?,
        scalar(
            &ctx,
            "hamiltonian",
            "a*b*x1 + x2 - a*x3 + l3*log(x2) - l2*log(x3)",
            "Hamiltonian paired with the stored structure matrix; requires `integrable`",
        )?,
        matrix3(
            &ctx,
            "structure",
            ["c*x1*x2", "b*c*x1*x3", "-x2*x3"],
            "Poisson structure with Casimir first_integral_1; requires `integrable`",
        )?,
    ];
    Ok(CatalogEntry {
        name: "lotka-volterra-3d",
        summary: "three-species predator-prey system with an invariant volume x1 x2 x3",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![Predicate {
            name: "integrable",
            description: "a b c = -1 and l3 = l2 b - l1 a b",
            substitution: vec![("c", "-1/(a*b)"), ("l3", "l2*b - l1*a*b")],
        }],
    })
}

fn zero_hopf_1() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2", "x3"],
        &["a", "b", "c", "d"],
        &["-x2", "x1 + a*x1^2 + b*x1*x3", "c*x1*x2 + d*x2*x3"],
    )?;
    let ctx = field.ctx().clone();
    let known = vec![
        scalar(
            &ctx,
            "level_d0",
            "x3 + c/2*x1^2",
            "first integral whose level sets carry the reduction; d = 0 branch",
        )?,
        scalar(
            &ctx,
            "level_d",
            "c/d^2 + (-c/d^2 + (c/d)*x1 + x3)*exp(d*x1)",
            "first integral whose level sets carry the reduction; d != 0 branch",
        )?,
        scalar(
            &ctx,
            "hamiltonian_d0",
            "-12*x2^2 - x1^2*(8*a*x1 + 3*(4 + b*c*x1^2 + 4*b*x3))",
            "Hamiltonian (up to a constant factor) paired with eta_d0; d = 0 branch",
        )?,
        scalar(
            &ctx,
            "hamiltonian_d",
            "b*c*(-6 + d^2*x1^2*(3 + 2*d*x1)) - d^4*(x1^2*(3 + 2*a*x1) + 3*x2^2) \
             + 6*b*d^2*(1 + d*x1)*x3",
            "Hamiltonian (up to a constant factor) paired with eta_d; d != 0 branch",
        )?,
        scalar(
            &ctx,
            "eta_d0",
            "-1/24",
            "scale factor: the field equals eta_d0 * (grad level_d0 x grad hamiltonian_d0)",
        )?,
        scalar(
            &ctx,
            "eta_d",
            "-exp(-d*x1)/(6*d^4)",
            "scale factor: the field equals eta_d * (grad level_d x grad hamiltonian_d)",
        )?,
        matrix3(
            &ctx,
            "structure_d0",
            ["1/24", "0", "c*x1/24"],
            "structure matrix for hamiltonian_d0 with Casimir level_d0; d = 0 branch",
        )?,
        matrix3(
            &ctx,
            "structure_d",
            [
                "1/(6*d^4)",
                "0",
                "(c*x1 + d*x3)/(6*d^4)",
            ],
            "structure matrix for hamiltonian_d with Casimir level_d; d != 0 branch",
        )?,
    ];
    Ok(CatalogEntry {
        name: "zero-hopf-example-1",
        summary: "cubic-in-parameters family with a zero-Hopf point and explicit Poisson data",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![Predicate {
            name: "d0",
            description: "d = 0 branch of the closed forms",
            substitution: vec![("d", "0")],
        }],
    })
}

fn zero_hopf_2() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2", "x3"],
        &["B1", "B2", "C"],
        &[
            "-x2 - C*x1*x2 + B1*(x1^2 + x2^2)*(-x1^2 + x3)",
            "x1 + B2*x1*x2*(-x1^2 + x3)",
            "2*x1*(-x2 - C*x1*x2 + B1*(x1^2 + x2^2)*(-x1^2 + x3))",
        ],
    )?;
    let ctx = field.ctx().clone();
    let known = vec![scalar(
        &ctx,
        "level",
        "x3 - x1^2",
        "first integral whose level sets carry the planar quadratic reduction",
    )?];
    Ok(CatalogEntry {
        name: "zero-hopf-example-2",
        summary: "quintic family whose reduced quadratic system has Bautin-type center strata",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![
            Predicate {
                name: "center-first",
                description: "B1 = 0: first center stratum of the reduced family",
                substitution: vec![("B1", "0")],
            },
            Predicate {
                name: "center-second",
                description: "C = 0: second center stratum of the reduced family",
                substitution: vec![("C", "0")],
            },
            Predicate {
                name: "hamiltonian-reduced",
                description: "C = 0 and B2 = -2 B1: the reduced family is divergence-free",
                substitution: vec![("C", "0"), ("B2", "-2*B1")],
            },
        ],
    })
}

fn zero_hopf_3() -> Result<CatalogEntry, CatalogError> {
    let p = "-x2 + A*x1^2 + B*x1*x2 + C*x2^3 + x1^3*x3 - x1^3*x2^2 - x1^5";
    let q = "x1 + E*x2^2 - x1^3*x2 - x1*x2^3 + x1*x2*x3 + x1^2*x3 - x1^4 - x1^2*x2^2";
    let third = format!("2*(x1*({p}) + x2*({q}))");
    let field = VectorField::from_strs(
        &["x1", "x2", "x3"],
        &["A", "B", "C", "E"],
        &[p, q, third.as_str()],
    )?;
    let ctx = field.ctx().clone();
    // The focus quantity lives on the reduced planar family, so it carries an
    // extra parameter h (the level value) that the 3D field does not have.
    let aux = Context::new(Vec::<&str>::new(), vec!["A", "B", "C", "E", "h"]);
    let known = vec![
        scalar(
            &ctx,
            "level",
            "x3 - x1^2 - x2^2",
            "first integral whose level sets carry the planar cubic reduction",
        )?,
        scalar(
            &aux,
            "first_focus_quantity",
            "(A*B + (3 - 2*A - E)*h - h^2)/4",
            "first focus quantity of the reduced family as a polynomial in the level value h",
        )?,
    ];
    Ok(CatalogEntry {
        name: "zero-hopf-example-3",
        summary: "sixth-degree family whose reduction never has a center at the origin",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![],
    })
}

fn isochronous() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2"],
        &[],
        &["-x2 - 4/3*x1^2", "x1*(1 - 16/3*x2)"],
    )?;
    let ctx = field.ctx().clone();
    let v = parse_in("(3 - 16*x2)*(9 - 24*x2 + 32*x1^2)", &ctx)?;
    let known = vec![
        KnownObject {
            name: "multiplier",
            value: KnownValue::Scalar(v.clone()),
            note: "inverse Jacobi multiplier; zero set is one line and one parabola",
        },
        KnownObject {
            name: "structure",
            value: KnownValue::Matrix(StructureMatrix::from_upper(&ctx, &[v])),
            note: "planar structure matrix V [[0,1],[-1,0]], singular on the zero set",
        },
        scalar(
            &ctx,
            "hamiltonian_region3",
            "(log(3 - 16*x2) - 2*log(18 + 64*x1^2 - 48*x2))/384",
            "Hamiltonian on the region below the line 3 - 16 x2 = 0",
        )?,
        scalar(
            &ctx,
            "hamiltonian_region12",
            "(log(16*x2 - 3) - 2*log(18 + 64*x1^2 - 48*x2))/384",
            "Hamiltonian branch valid where 3 - 16 x2 < 0 (above the line)",
        )?,
    ];
    Ok(CatalogEntry {
        name: "isochronous-loud",
        summary: "quadratic isochronous center with a factored polynomial multiplier",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![],
    })
}

fn focus_not_poisson() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2"],
        &["mu"],
        &["-x2 + mu*x1", "x1 + mu*x2"],
    )?;
    let ctx = field.ctx().clone();
    let known = vec![scalar(
        &ctx,
        "multiplier",
        "x1^2 + x2^2",
        "non-negative inverse Jacobi multiplier; for mu != 0 the origin is a focus, \
         so the system is conservative but admits no analytic first integral there",
    )?];
    Ok(CatalogEntry {
        name: "focus-not-poisson",
        summary: "linear focus that is conservative yet not a Poisson system",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![],
    })
}

fn berrone_giacomini() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2", "x3"],
        &[],
        &[
            "(-x2 + x1*(1 - x1^2 - x2^2))/2",
            "(x1 + x2*(1 - x1^2 - x2^2))/2",
            "x3",
        ],
    )?;
    let ctx = field.ctx().clone();
    let known = vec![
        scalar(
            &ctx,
            "multiplier",
            "(x1^2 + x2^2)^2",
            "non-negative inverse Jacobi multiplier in all of space",
        )?,
        scalar(
            &ctx,
            "multiplier_2",
            "x3*(x1^2 + x2^2)*(1 - x1^2 - x2^2)",
            "second, sign-changing inverse Jacobi multiplier",
        )?,
        scalar(
            &ctx,
            "first_integral",
            "x3*(1 - x1^2 - x2^2)/(x1^2 + x2^2)",
            "ratio of the two multipliers; not defined at the origin",
        )?,
    ];
    Ok(CatalogEntry {
        name: "berrone-giacomini-3d",
        summary: "conservative 3D system that is not Poisson near the origin",
        field: FieldKind::Smooth(field),
        known,
        predicates: vec![],
    })
}

fn nonsmooth_oscillator() -> Result<CatalogEntry, CatalogError> {
    let plus = VectorField::from_strs(&["x", "y"], &["eps"], &["-1", "2*x + eps*y"])?;
    let minus = VectorField::from_strs(&["x", "y"], &["eps"], &["1", "2*x + eps*y"])?;
    let ctx = plus.ctx().clone();
    let gamma = parse_in("y", &ctx)?;
    let known = vec![
        scalar(
            &ctx,
            "multiplier_plus",
            "exp(-eps*x)",
            "classical inverse Jacobi multiplier of the branch acting on y > 0",
        )?,
        scalar(
            &ctx,
            "multiplier_minus",
            "exp(eps*x)",
            "classical inverse Jacobi multiplier of the branch acting on y < 0",
        )?,
    ];
    Ok(CatalogEntry {
        name: "nonsmooth-oscillator",
        summary: "harmonic oscillator with signum restoring force and an eps perturbation",
        field: FieldKind::Piecewise(PiecewiseField::new(gamma, plus, minus)),
        known,
        predicates: vec![Predicate {
            name: "unperturbed",
            description: "eps = 0: the piecewise multiplier is globally continuous",
            substitution: vec![("eps", "0")],
        }],
    })
}

fn quadratic_foliation() -> Result<CatalogEntry, CatalogError> {
    let field = VectorField::from_strs(
        &["x1", "x2", "x3"],
        &["a0", "a1", "a2", "b0", "b1", "c0", "c1", "c2", "c3", "c4", "c5"],
        &[
            "-x2",
            "x1 + a0*x1^2 + a1*x1*x3 + a2*x3^2 + x2*(b0*x1 + b1*x3)",
            "c0*x1^2 + c1*x2^2 + c2*x3^2 + c3*x1*x2 + c4*x1*x3 + c5*x2*x3",
        ],
    )?;
    Ok(CatalogEntry {
        name: "quadratic-foliation-family",
        summary: "quadratic zero-Hopf family classified by periodic-orbit foliation conditions",
        field: FieldKind::Smooth(field),
        known: vec![],
        predicates: vec![Predicate {
            name: "divergence-free",
            description: "b0 + c4 = b1 + 2 c2 = c5 = 0",
            substitution: vec![("c4", "-b0"), ("c2", "-b1/2"), ("c5", "0")],
        }],
    })
}

// ---------------------------------------------------------------------------
// Foliation classification of the quadratic family.
// ---------------------------------------------------------------------------

/// Rational parameter assignment for `quadratic-foliation-family`.
#[derive(Clone, Debug, Default)]
pub struct FoliationParams {
    pub a0: BigRational,
    pub a1: BigRational,
    pub a2: BigRational,
    pub b0: BigRational,
    pub b1: BigRational,
    pub c0: BigRational,
    pub c1: BigRational,
    pub c2: BigRational,
    pub c3: BigRational,
    pub c4: BigRational,
    pub c5: BigRational,
}

impl FoliationParams {
    pub fn from_i64(vals: [i64; 11]) -> Self {
        let r = rat_int;
        FoliationParams {
            a0: r(vals[0]),
            a1: r(vals[1]),
            a2: r(vals[2]),
            b0: r(vals[3]),
            b1: r(vals[4]),
            c0: r(vals[5]),
            c1: r(vals[6]),
            c2: r(vals[7]),
            c3: r(vals[8]),
            c4: r(vals[9]),
            c5: r(vals[10]),
        }
    }

    pub fn as_f64_vec(&self) -> Vec<f64> {
        [
            &self.a0, &self.a1, &self.a2, &self.b0, &self.b1, &self.c0, &self.c1, &self.c2,
            &self.c3, &self.c4, &self.c5,
        ]
        .iter()
        .map(|r| crate::coeff::rat_to_f64(r))
        .collect()
    }
}

/// Structural classes under which a neighborhood of the origin is foliated
/// by periodic orbits; `None` when no condition holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoliationClass {
    A,
    B,
    C,
    D,
    E,
    None,
}

/// Whether the family member is divergence-free.
pub fn divergence_free_condition(p: &FoliationParams) -> bool {
    (&p.b0 + &p.c4).is_zero()
        && (&p.b1 + &p.c2 + &p.c2).is_zero()
        && p.c5.is_zero()
}

/// Classifies a parameter point against the five structural foliation
/// conditions. The more constrained classes are tested first so that
/// degenerate members (for example a pure c3 x1 x2 vertical component) land
/// in the smallest class that contains them.
pub fn foliation_conditions(p: &FoliationParams) -> FoliationClass {
    let z = |r: &BigRational| r.is_zero();
    // (C): f = x1, g = b0 x1, F with c1 = -c0, c2 = 0 and the quartic
    // constraint b0 c0 c4 - c0 c4^2 - c3 c4 c5 + c0 c5^2 = 0.
    if z(&p.a0) && z(&p.a1) && z(&p.a2) && z(&p.b1) && (&p.c1 + &p.c0).is_zero() && z(&p.c2) {
        let constraint = &p.b0 * &p.c0 * &p.c4 - &p.c0 * &p.c4 * &p.c4 - &p.c3 * &p.c4 * &p.c5
            + &p.c0 * &p.c5 * &p.c5;
        if constraint.is_zero() {
            return FoliationClass::C;
        }
    }
    // (D): f = x1 + a1 x1 x3, g = b0 x1, F = c3 x1 x2 + c4 x1 x3.
    if z(&p.a0) && z(&p.a2) && z(&p.b1) && z(&p.c0) && z(&p.c1) && z(&p.c2) && z(&p.c5) {
        return FoliationClass::D;
    }
    // The remaining classes all require g = 0 and F = c3 x1 x2 + c5 x2 x3.
    if z(&p.b0) && z(&p.b1) && z(&p.c0) && z(&p.c1) && z(&p.c2) && z(&p.c4) {
        // (A): f = x1 + a0 x1^2 + a1 x1 x3.
        if z(&p.a2) {
            return FoliationClass::A;
        }
        // (B): f = x1 + a0 x1^2 + a2 x3^2.
        if z(&p.a1) {
            return FoliationClass::B;
        }
        // (E): f = x1 + a1 x1 x3 + a2 x3^2.
        if z(&p.a0) {
            return FoliationClass::E;
        }
    }
    FoliationClass::None
}

/// A divergence-free member satisfying none of the foliation conditions:
/// the witness showing that strict conservativeness does not imply a generic
/// Poisson structure in dimension three.
pub fn foliation_counterexample() -> FoliationParams {
    // a0 = a1 = a2 = 1, b0 = 1, c4 = -1, everything else zero.
    FoliationParams::from_i64([1, 1, 1, 1, 0, 0, 0, 0, 0, -1, 0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Verdict;
    use crate::poisson::verify_poisson;

    fn subst_field(f: &VectorField, subs: &[Expr]) -> VectorField {
        let ctx = f.ctx();
        let vars: Vec<Expr> = (0..ctx.nvars()).map(|i| Expr::var(ctx, i)).collect();
        VectorField::new(
            ctx,
            f.components()
                .iter()
                .map(|c| c.substitute(ctx, &vars, subs))
                .collect(),
        )
        .unwrap()
    }

    fn subst_expr(e: &Expr, subs: &[Expr]) -> Expr {
        let ctx = e.ctx();
        let vars: Vec<Expr> = (0..ctx.nvars()).map(|i| Expr::var(ctx, i)).collect();
        e.substitute(ctx, &vars, subs)
    }

    #[test]
    fn registry_is_complete() {
        for name in names() {
            let entry = get(name).unwrap();
            assert_eq!(entry.name, name);
        }
        assert!(matches!(
            get("no-such-system"),
            Err(CatalogError::UnknownName(_))
        ));
    }

    #[test]
    fn lotka_volterra_objects_verify() {
        let e = get("lotka-volterra-3d").unwrap();
        let f = e.smooth_field().unwrap();
        let v = e.known_scalar("multiplier").unwrap();
        // The volume multiplier needs no parameter condition.
        assert_eq!(f.is_inverse_jacobi_multiplier(v).unwrap(), Verdict::True);

        let subs = e.predicate_substitution("integrable").unwrap();
        let f = subst_field(f, &subs);
        for name in ["first_integral_1", "first_integral_2", "hamiltonian"] {
            let i = subst_expr(e.known_scalar(name).unwrap(), &subs);
            assert_eq!(f.is_first_integral(&i).unwrap(), Verdict::True, "{name}");
        }
    }

    #[test]
    fn lotka_volterra_structure_certifies() {
        let e = get("lotka-volterra-3d").unwrap();
        let subs = e.predicate_substitution("integrable").unwrap();
        let f = subst_field(e.smooth_field().unwrap(), &subs);
        let ctx = f.ctx();
        let j = e.known_matrix("structure").unwrap();
        let entries: Vec<Vec<Expr>> = (0..3)
            .map(|i| (0..3).map(|k| subst_expr(j.entry(i, k), &subs)).collect())
            .collect();
        let j = StructureMatrix::new(ctx, entries);
        let h = subst_expr(e.known_scalar("hamiltonian").unwrap(), &subs);
        let casimir = subst_expr(e.known_scalar("first_integral_1").unwrap(), &subs);
        let cert = verify_poisson(&j, &h, &f, &[casimir]).unwrap();
        assert!(cert.is_valid(), "certificate: {cert:?}");
    }

    #[test]
    fn zero_hopf_1_branches_verify() {
        let e = get("zero-hopf-example-1").unwrap();
        let f = e.smooth_field().unwrap();

        // d = 0 branch: substitute and certify.
        let subs = e.predicate_substitution("d0").unwrap();
        let f0 = subst_field(f, &subs);
        let d0 = subst_expr(e.known_scalar("level_d0").unwrap(), &subs);
        let h0 = subst_expr(e.known_scalar("hamiltonian_d0").unwrap(), &subs);
        assert_eq!(f0.is_first_integral(&d0).unwrap(), Verdict::True);
        let j0 = e.known_matrix("structure_d0").unwrap();
        let entries: Vec<Vec<Expr>> = (0..3)
            .map(|i| (0..3).map(|k| subst_expr(j0.entry(i, k), &subs)).collect())
            .collect();
        let j0 = StructureMatrix::new(f0.ctx(), entries);
        let cert = verify_poisson(&j0, &h0, &f0, &[d0]).unwrap();
        assert!(cert.is_valid(), "d = 0 certificate: {cert:?}");

        // d != 0 branch: fully symbolic in all four parameters.
        let d = e.known_scalar("level_d").unwrap();
        let h = e.known_scalar("hamiltonian_d").unwrap();
        assert_eq!(f.is_first_integral(d).unwrap(), Verdict::True);
        let j = e.known_matrix("structure_d").unwrap();
        let cert = verify_poisson(j, h, f, &[d.clone()]).unwrap();
        assert!(cert.is_valid(), "d != 0 certificate: {cert:?}");
    }

    #[test]
    fn zero_hopf_2_reduced_divergence_predicate() {
        // The reduced family is divergence-free exactly on the
        // hamiltonian-reduced stratum: div = -C x2 + (2 B1 + B2) h x1.
        let ctx = Context::new(
            vec!["x1", "x2"],
            vec!["B1", "B2", "C", "h"],
        );
        let zh = VectorField::new(
            &ctx,
            vec![
                parse_in("-x2 - C*x1*x2 + B1*h*(x1^2 + x2^2)", &ctx).unwrap(),
                parse_in("x1 + B2*h*x1*x2", &ctx).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(zh.divergence().is_zero().unwrap(), Verdict::False);
        let mut subs: Vec<Expr> = (0..4).map(|i| Expr::param(&ctx, i)).collect();
        subs[2] = Expr::int(&ctx, 0); // C = 0
        subs[1] = parse_in("-2*B1", &ctx).unwrap(); // B2 = -2 B1
        let vars: Vec<Expr> = (0..2).map(|i| Expr::var(&ctx, i)).collect();
        let dv = zh.divergence().substitute(&ctx, &vars, &subs);
        assert_eq!(dv.is_zero().unwrap(), Verdict::True);
    }

    #[test]
    fn isochronous_objects_verify() {
        let e = get("isochronous-loud").unwrap();
        let f = e.smooth_field().unwrap();
        let v = e.known_scalar("multiplier").unwrap();
        assert_eq!(f.is_inverse_jacobi_multiplier(v).unwrap(), Verdict::True);
        for name in ["hamiltonian_region3", "hamiltonian_region12"] {
            let h = e.known_scalar(name).unwrap();
            assert_eq!(f.is_first_integral(h).unwrap(), Verdict::True, "{name}");
        }
    }

    #[test]
    fn focus_not_poisson_multiplier_verifies() {
        let e = get("focus-not-poisson").unwrap();
        let f = e.smooth_field().unwrap();
        let v = e.known_scalar("multiplier").unwrap();
        assert_eq!(f.is_inverse_jacobi_multiplier(v).unwrap(), Verdict::True);
    }

    #[test]
    fn berrone_giacomini_objects_verify() {
        let e = get("berrone-giacomini-3d").unwrap();
        let f = e.smooth_field().unwrap();
        for name in ["multiplier", "multiplier_2"] {
            let v = e.known_scalar(name).unwrap();
            assert_eq!(
                f.is_inverse_jacobi_multiplier(v).unwrap(),
                Verdict::True,
                "{name}"
            );
        }
        let i = e.known_scalar("first_integral").unwrap();
        assert_eq!(f.is_first_integral(i).unwrap(), Verdict::True);
    }

    #[test]
    fn oscillator_branch_multipliers_verify() {
        let e = get("nonsmooth-oscillator").unwrap();
        let pf = e.piecewise_field().unwrap();
        let vp = e.known_scalar("multiplier_plus").unwrap();
        let vm = e.known_scalar("multiplier_minus").unwrap();
        assert_eq!(pf.plus().is_inverse_jacobi_multiplier(vp).unwrap(), Verdict::True);
        assert_eq!(pf.minus().is_inverse_jacobi_multiplier(vm).unwrap(), Verdict::True);
    }

    #[test]
    fn foliation_classification() {
        // f = x1, g = 0, F = c3 x1 x2: smallest matching class is (C).
        let p = FoliationParams::from_i64([0, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0]);
        assert_eq!(foliation_conditions(&p), FoliationClass::C);

        // Representative members of each class.
        assert_eq!(
            foliation_conditions(&FoliationParams::from_i64([2, 3, 0, 0, 0, 0, 0, 0, 1, 0, 1])),
            FoliationClass::A
        );
        assert_eq!(
            foliation_conditions(&FoliationParams::from_i64([2, 0, 3, 0, 0, 0, 0, 0, 1, 0, 1])),
            FoliationClass::B
        );
        assert_eq!(
            foliation_conditions(&FoliationParams::from_i64([0, 5, 0, 7, 0, 0, 0, 0, 2, 3, 0])),
            FoliationClass::D
        );
        assert_eq!(
            foliation_conditions(&FoliationParams::from_i64([0, 2, 3, 0, 0, 0, 0, 0, 1, 0, 1])),
            FoliationClass::E
        );
        // Class (C) with a nontrivial quartic constraint: c0 = c4 = 1,
        // b0 = 1, c1 = -1, c3 = c5 = 0 gives b0 c0 c4 - c0 c4^2 = 0.
        assert_eq!(
            foliation_conditions(&FoliationParams::from_i64([0, 0, 0, 1, 0, 1, -1, 0, 0, 1, 0])),
            FoliationClass::C
        );
        // Same but with the constraint violated.
        assert_eq!(
            foliation_conditions(&FoliationParams::from_i64([0, 0, 0, 2, 0, 1, -1, 0, 0, 1, 0])),
            FoliationClass::None
        );

        // Generic parameters match nothing.
        let generic = FoliationParams::from_i64([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]);
        assert_eq!(foliation_conditions(&generic), FoliationClass::None);
    }

    #[test]
    fn counterexample_witness_is_divergence_free_but_unfoliated() {
        let w = foliation_counterexample();
        assert!(divergence_free_condition(&w));
        assert_eq!(foliation_conditions(&w), FoliationClass::None);

        // Verify div = 0 symbolically on the actual field member.
        let e = get("quadratic-foliation-family").unwrap();
        let f = e.smooth_field().unwrap();
        let ctx = f.ctx();
        let vals = w.as_f64_vec();
        let subs: Vec<Expr> = vals
            .iter()
            .map(|&v| Expr::constant(ctx, rat_int(v as i64)))
            .collect();
        let vars: Vec<Expr> = (0..3).map(|i| Expr::var(ctx, i)).collect();
        let dv = f.divergence().substitute(ctx, &vars, &subs);
        assert_eq!(dv.is_zero().unwrap(), Verdict::True);
    }
}
