//! Vector-field calculus: Lie derivatives, divergence, multiplier
//! certification, transport of multipliers under diffeomorphisms, and
//! numeric singularity classification.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

use crate::expr::{Context, Expr, ExprError, Verdict};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("expected {expected} components for {expected} variables, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("multiplier candidate is identically zero")]
    ZeroMultiplier,
    #[error("expression does not share the field's variable/parameter context")]
    ContextMismatch,
    #[error("map has no stored inverse and no recognized closed-form inverse")]
    NoClosedFormInverse,
    #[error("point is not singular: component {index} evaluates to {value:e}")]
    NotSingular { index: usize, value: f64 },
    #[error("point/parameter vector length does not match the context")]
    BadPoint,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A field `Y = sum_i f_i d/dx_i` with expression components over a shared
/// variable/parameter context.
#[derive(Clone, Debug)]
pub struct VectorField {
    ctx: Arc<Context>,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(ctx: &Arc<Context>, components: Vec<Expr>) -> Result<Self, FieldError> {
        if components.len() != ctx.nvars() {
            return Err(FieldError::Arity {
                expected: ctx.nvars(),
                found: components.len(),
            });
        }
        if components.iter().any(|c| !Arc::ptr_eq(c.ctx(), ctx)) {
            return Err(FieldError::ContextMismatch);
        }
        Ok(VectorField {
            ctx: Arc::clone(ctx),
            components,
        })
    }

    /// Parses one component per variable from source text.
    pub fn from_strs(
        vars: &[&str],
        params: &[&str],
        components: &[&str],
    ) -> Result<Self, FieldError> {
        let ctx = Context::new(vars.to_vec(), params.to_vec());
        let comps = components
            .iter()
            .map(|s| crate::expr::parse_in(s, &ctx))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ExprError::from)?;
        VectorField::new(&ctx, comps)
    }

    pub fn ctx(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    /// Directional derivative `Y(f) = sum_i f_i df/dx_i`.
    pub fn lie_derivative(&self, f: &Expr) -> Expr {
        let terms = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| c.mul(&f.diff(i)))
            .collect();
        Expr::sum(&self.ctx, terms)
    }

    pub fn divergence(&self) -> Expr {
        let terms = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| c.diff(i))
            .collect();
        Expr::sum(&self.ctx, terms)
    }

    pub fn is_first_integral(&self, f: &Expr) -> Result<Verdict, ExprError> {
        self.lie_derivative(f).is_zero()
    }

    /// Checks the defining relation `Y(V) = V div Y`. Rejects `V = 0`, which
    /// satisfies the relation vacuously but defines no measure.
    pub fn is_inverse_jacobi_multiplier(&self, v: &Expr) -> Result<Verdict, FieldError> {
        if v.is_zero()? == Verdict::True {
            return Err(FieldError::ZeroMultiplier);
        }
        let residual = self.lie_derivative(v).sub(&v.mul(&self.divergence()));
        Ok(residual.is_zero()?)
    }

    /// Divergence-free test, computed both directly and as the multiplier
    /// relation with `V = 1`; the two routes must agree.
    pub fn is_divergence_free(&self) -> Result<Verdict, FieldError> {
        let direct = self.divergence().is_zero()?;
        let via_unit = self.is_inverse_jacobi_multiplier(&Expr::int(&self.ctx, 1))?;
        debug_assert_eq!(direct, via_unit);
        Ok(direct)
    }

    pub fn eval(&self, point: &[f64], params: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.components
            .iter()
            .map(|c| c.eval(point, params))
            .collect()
    }

    /// Jacobian matrix of the components, evaluated numerically.
    pub fn jacobian_at(&self, point: &[f64], params: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            for j in 0..n {
                m[(i, j)] = c.diff(j).eval(point, params)?;
            }
        }
        Ok(m)
    }

    pub fn classify_singularity(
        &self,
        point: &[f64],
        params: &[f64],
    ) -> Result<SingularityInfo, FieldError> {
        if point.len() != self.dim() || params.len() != self.ctx.nparams() {
            return Err(FieldError::BadPoint);
        }
        let values = self.eval(point, params)?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| v.abs() >= 1e-12) {
            return Ok(SingularityInfo {
                point: point.to_vec(),
                eigenvalues: vec![],
                classification: Classification::Regular,
                residual: Some((index, value)),
            });
        }
        let jac = self.jacobian_at(point, params)?;
        let eigenvalues: Vec<Complex<f64>> = jac.complex_eigenvalues().iter().copied().collect();
        let classification = classify_eigenvalues(&eigenvalues);
        Ok(SingularityInfo {
            point: point.to_vec(),
            eigenvalues,
            classification,
            residual: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// Not an equilibrium: some component is nonzero at the point.
    Regular,
    /// Eigenvalues {0, +iw, -iw} with w != 0.
    ZeroHopf,
    /// One zero eigenvalue plus real eigenvalues of opposite signs.
    ZeroSaddle,
    Other,
}

#[derive(Clone, Debug)]
pub struct SingularityInfo {
    pub point: Vec<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub classification: Classification,
    /// For a regular point: which component was nonzero, and its value.
    pub residual: Option<(usize, f64)>,
}

// Scale-aware comparisons: a real part counts as zero when
// |Re| < 1e-9 (1 + |lambda|), a whole eigenvalue when |lambda| < 1e-9.
fn classify_eigenvalues(eigs: &[Complex<f64>]) -> Classification {
    let is_zero = |l: &Complex<f64>| l.norm() < 1e-9;
    let re_zero = |l: &Complex<f64>| l.re.abs() < 1e-9 * (1.0 + l.norm());
    if eigs.len() == 3 {
        let zeros: Vec<_> = eigs.iter().filter(|l| is_zero(l)).collect();
        let rest: Vec<_> = eigs.iter().filter(|l| !is_zero(l)).collect();
        if zeros.len() == 1 && rest.len() == 2 {
            let (a, b) = (rest[0], rest[1]);
            if re_zero(a) && re_zero(b) && (a.im + b.im).abs() < 1e-9 * (1.0 + a.norm()) {
                return Classification::ZeroHopf;
            }
            let real = |l: &Complex<f64>| l.im.abs() < 1e-9 * (1.0 + l.norm());
            if real(a) && real(b) && a.re * b.re < 0.0 {
                return Classification::ZeroSaddle;
            }
        }
    }
    Classification::Other
}

/// A coordinate change `y = Phi(x)` with its Jacobian determinant cached and,
/// when available, a closed-form inverse.
#[derive(Clone, Debug)]
pub struct Diffeo {
    ctx: Arc<Context>,
    target: Vec<Expr>,
    inverse: Option<Vec<Expr>>,
    jacobian_det: Expr,
}

impl Diffeo {
    pub fn new(ctx: &Arc<Context>, target: Vec<Expr>) -> Result<Self, FieldError> {
        if target.len() != ctx.nvars() {
            return Err(FieldError::Arity {
                expected: ctx.nvars(),
                found: target.len(),
            });
        }
        if target.iter().any(|c| !Arc::ptr_eq(c.ctx(), ctx)) {
            return Err(FieldError::ContextMismatch);
        }
        let jacobian_det = det(ctx, &target);
        Ok(Diffeo {
            ctx: Arc::clone(ctx),
            target,
            inverse: None,
            jacobian_det,
        })
    }

    /// A map together with a caller-supplied inverse. The composition
    /// `inverse(target(x)) = x` is verified symbolically; a definite failure
    /// is rejected, an inconclusive zero test is accepted on the caller's
    /// word.
    pub fn with_inverse(
        ctx: &Arc<Context>,
        target: Vec<Expr>,
        inverse: Vec<Expr>,
    ) -> Result<Self, FieldError> {
        let mut d = Diffeo::new(ctx, target)?;
        if inverse.len() != ctx.nvars() {
            return Err(FieldError::Arity {
                expected: ctx.nvars(),
                found: inverse.len(),
            });
        }
        for i in 0..ctx.nvars() {
            let roundtrip = inverse[i].substitute(ctx, &d.target, &param_identity(ctx));
            if roundtrip.sub(&Expr::var(ctx, i)).is_zero()? == Verdict::False {
                return Err(FieldError::NoClosedFormInverse);
            }
        }
        d.inverse = Some(inverse);
        Ok(d)
    }

    pub fn identity(ctx: &Arc<Context>) -> Self {
        let target: Vec<_> = (0..ctx.nvars()).map(|i| Expr::var(ctx, i)).collect();
        let mut d = Diffeo::new(ctx, target.clone()).expect("identity is always well-formed");
        d.inverse = Some(target);
        d
    }

    /// The graph map `Phi = (x_1, ..., x_{n-1}, D)` used to flatten a level
    /// set `{D = h}`. Invertible in closed form when `dD/dx_n` is free of
    /// `x_n`, i.e. `D = A(x') + B(x') x_n`.
    pub fn graph_map(ctx: &Arc<Context>, d: &Expr) -> Result<Self, FieldError> {
        let n = ctx.nvars();
        let last = n - 1;
        let b = d.diff(last);
        if b.diff(last).is_zero()? != Verdict::True || b.is_zero()? == Verdict::True {
            return Err(FieldError::NoClosedFormInverse);
        }
        let mut at_zero: Vec<_> = (0..n).map(|i| Expr::var(ctx, i)).collect();
        at_zero[last] = Expr::int(ctx, 0);
        let params = param_identity(ctx);
        let a = d.substitute(ctx, &at_zero, &params);
        let mut target: Vec<_> = (0..n).map(|i| Expr::var(ctx, i)).collect();
        target[last] = d.clone();
        let mut inverse = target.clone();
        inverse[last] = Expr::var(ctx, last).sub(&a).div(&b);
        Diffeo::with_inverse(ctx, target, inverse)
    }

    pub fn ctx(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn target(&self) -> &[Expr] {
        &self.target
    }

    pub fn jacobian_det(&self) -> &Expr {
        &self.jacobian_det
    }

    pub fn inverse_exprs(&self) -> Option<&[Expr]> {
        self.inverse.as_deref()
    }
}

fn param_identity(ctx: &Arc<Context>) -> Vec<Expr> {
    (0..ctx.nparams()).map(|j| Expr::param(ctx, j)).collect()
}

fn det(ctx: &Arc<Context>, rows: &[Expr]) -> Expr {
    let n = rows.len();
    let entry = |i: usize, j: usize| rows[i].diff(j);
    match n {
        1 => entry(0, 0),
        2 => entry(0, 0)
            .mul(&entry(1, 1))
            .sub(&entry(0, 1).mul(&entry(1, 0))),
        3 => {
            let minor = |i0: usize, i1: usize, j0: usize, j1: usize| {
                entry(i0, j0)
                    .mul(&entry(i1, j1))
                    .sub(&entry(i0, j1).mul(&entry(i1, j0)))
            };
            entry(0, 0)
                .mul(&minor(1, 2, 1, 2))
                .sub(&entry(0, 1).mul(&minor(1, 2, 0, 2)))
                .add(&entry(0, 2).mul(&minor(1, 2, 0, 1)))
        }
        _ => {
            let _ = ctx;
            det_cofactor(rows, &(0..n).collect::<Vec<_>>())
        }
    }
}

// Laplace expansion along the first row; n stays tiny here.

fn det_cofactor(rows: &[Expr], cols: &[usize]) -> Expr {
    let ctx = rows[0].ctx().clone();
    let n = rows.len();
    if n == 1 {
        return rows[0].diff(cols[0]);
    }
    let mut acc = Expr::int(&ctx, 0);
    for (k, &j) in cols.iter().enumerate() {
        let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
        let cof = det_cofactor(&rows[1..], &rest);
        let term = rows[0].diff(j).mul(&cof);
        acc = if k % 2 == 0 {
            acc.add(&term)
        } else {
            acc.sub(&term)
        };
    }
    acc
}

/// Multiplier of the rescaled image field: `eta (V o Phi) / J_Phi`, read in
/// the target coordinates.
pub fn transform_multiplier(v: &Expr, phi: &Diffeo, eta: &Expr) -> Expr {
    let ctx = phi.ctx();
    let composed = v.substitute(ctx, phi.target(), &param_identity(ctx));
    eta.mul(&composed).div(phi.jacobian_det())
}

/// The rescaled image field `eta (DPhi . Y) o Phi^{-1}` in target
/// coordinates. Requires a closed-form inverse on the map.
pub fn pushforward(y: &VectorField, phi: &Diffeo, eta: &Expr) -> Result<VectorField, FieldError> {
    let ctx = phi.ctx();
    let inverse = phi
        .inverse_exprs()
        .ok_or(FieldError::NoClosedFormInverse)?;
    let params = param_identity(ctx);
    let n = ctx.nvars();
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let terms = (0..n)
            .map(|j| phi.target()[i].diff(j).mul(y.component(j)))
            .collect();
        let pushed = Expr::sum(ctx, terms).substitute(ctx, inverse, &params);
        comps.push(eta.mul(&pushed));
    }
    VectorField::new(ctx, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_in;

    fn rotation() -> VectorField {
        VectorField::from_strs(&["x1", "x2"], &[], &["-x2", "x1"]).unwrap()
    }

    fn lotka_volterra() -> VectorField {
        VectorField::from_strs(
            &["x1", "x2", "x3"],
            &["a", "b", "c", "l1", "l2", "l3"],
            &[
                "x1*(l1 + c*x2 + x3)",
                "x2*(l2 + x1 + a*x3)",
                "x3*(l3 + b*x1 + x2)",
            ],
        )
        .unwrap()
    }

    #[test]
    fn rotation_preserves_radius() {
        let y = rotation();
        let r2 = parse_in("x1^2 + x2^2", y.ctx()).unwrap();
        assert_eq!(y.is_first_integral(&r2).unwrap(), Verdict::True);
        assert_eq!(y.is_first_integral(&parse_in("x1", y.ctx()).unwrap()).unwrap(), Verdict::False);
        assert_eq!(y.is_divergence_free().unwrap(), Verdict::True);
    }

    #[test]
    fn lotka_volterra_multiplier_relation() {
        let y = lotka_volterra();
        let v = parse_in("x1*x2*x3", y.ctx()).unwrap();
        // Y(V) factors as V times an affine function of the state.
        let expected = v
            .mul(&parse_in("l1+l2+l3 + (1+b)*x1 + (1+c)*x2 + (1+a)*x3", y.ctx()).unwrap());
        let lie = y.lie_derivative(&v);
        assert_eq!(lie.sub(&expected).is_zero().unwrap(), Verdict::True);
        assert_eq!(y.is_inverse_jacobi_multiplier(&v).unwrap(), Verdict::True);
        assert_eq!(y.is_divergence_free().unwrap(), Verdict::False);
    }

    #[test]
    fn lotka_volterra_lie_matches_directional_derivative() {
        let y = lotka_volterra();
        let v = parse_in("x1*x2*x3", y.ctx()).unwrap();
        let lie = y.lie_derivative(&v);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..1.5)).collect();
            let p: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let symbolic = lie.eval(&x, &p).unwrap();
            // Central finite difference of V along the flow direction.
            let h = 1e-6;
            let f = y.eval(&x, &p).unwrap();
            let shift = |s: f64| {
                let pt: Vec<f64> = x.iter().zip(&f).map(|(xi, fi)| xi + s * fi).collect();
                v.eval(&pt, &p).unwrap()
            };
            let numeric = (shift(h) - shift(-h)) / (2.0 * h);
            assert!(
                (symbolic - numeric).abs() <= 1e-5 * (1.0 + symbolic.abs()),
                "lie derivative mismatch: {symbolic} vs {numeric}"
            );
        }
    }

    #[test]
    fn linear_focus_with_radial_multiplier() {
        let y = VectorField::from_strs(&["x1", "x2"], &["m"], &["-x2 + m*x1", "x1 + m*x2"]).unwrap();
        let v = parse_in("x1^2 + x2^2", y.ctx()).unwrap();
        let lie = y.lie_derivative(&v);
        let expected = parse_in("2*m*(x1^2 + x2^2)", y.ctx()).unwrap();
        assert_eq!(lie.sub(&expected).is_zero().unwrap(), Verdict::True);
        assert_eq!(y.is_inverse_jacobi_multiplier(&v).unwrap(), Verdict::True);
    }

    #[test]
    fn zero_multiplier_rejected() {
        let y = rotation();
        let zero = Expr::int(y.ctx(), 0);
        assert!(matches!(
            y.is_inverse_jacobi_multiplier(&zero),
            Err(FieldError::ZeroMultiplier)
        ));
    }

    #[test]
    fn hamiltonian_fields_are_divergence_free() {
        let ctx = Context::new(vec!["x1", "x2"], vec![]);
        let h = parse_in("x1^3 - 2*x1*x2 + x2^4 + 5*x1", &ctx).unwrap();
        let y = VectorField::new(&ctx, vec![h.diff(1).neg(), h.diff(0)]).unwrap();
        assert_eq!(y.is_divergence_free().unwrap(), Verdict::True);
    }

    #[test]
    fn multiplier_times_integral_is_multiplier() {
        let y = lotka_volterra();
        let v = parse_in("x1*x2*x3", y.ctx()).unwrap();
        // With the closing parameter relations, I2 is a first integral, so
        // V*I2 must again satisfy the multiplier relation.
        let ctx2 = Context::new(vec!["x1", "x2", "x3"], vec!["a", "b", "l1", "l2"]);
        let subs: Vec<Expr> = (0..3).map(|i| Expr::var(&ctx2, i)).collect();
        // c = -1/(a b), l3 = l2 b - l1 a b
        let c = parse_in("-1/(a*b)", &ctx2).unwrap();
        let l3 = parse_in("l2*b - l1*a*b", &ctx2).unwrap();
        let psubs = vec![
            Expr::param(&ctx2, 0),
            Expr::param(&ctx2, 1),
            c.clone(),
            Expr::param(&ctx2, 2),
            Expr::param(&ctx2, 3),
            l3,
        ];
        let yc = VectorField::new(
            &ctx2,
            y.components()
                .iter()
                .map(|e| e.substitute(&ctx2, &subs, &psubs))
                .collect(),
        )
        .unwrap();
        let i2 = parse_in(
            "-x1 + c*x2 - a*c*x3 - l2*log(x1) + l1*log(x2)",
            &Context::new(vec!["x1", "x2", "x3"], vec!["a", "b", "c", "l1", "l2", "l3"]),
        )
        .unwrap()
        .substitute(&ctx2, &subs, &psubs);
        assert_eq!(yc.is_first_integral(&i2).unwrap(), Verdict::True);
        let vc = v.substitute(&ctx2, &subs, &psubs);
        assert_eq!(
            yc.is_inverse_jacobi_multiplier(&vc.mul(&i2)).unwrap(),
            Verdict::True
        );
    }

    #[test]
    fn transform_by_identity_and_constant_jacobian() {
        let ctx = Context::new(vec!["x1", "x2"], vec![]);
        let v = parse_in("x1^2 + x2^2", &ctx).unwrap();
        let id = Diffeo::identity(&ctx);
        let one = Expr::int(&ctx, 1);
        let w = transform_multiplier(&v, &id, &one);
        assert_eq!(w.sub(&v).is_zero().unwrap(), Verdict::True);

        // Phi = (2 x1, 3 x2) has constant Jacobian 6.
        let phi = Diffeo::new(
            &ctx,
            vec![
                parse_in("2*x1", &ctx).unwrap(),
                parse_in("3*x2", &ctx).unwrap(),
            ],
        )
        .unwrap();
        let w = transform_multiplier(&one, &phi, &one);
        assert_eq!(
            w.sub(&parse_in("1/6", &ctx).unwrap()).is_zero().unwrap(),
            Verdict::True
        );
    }

    #[test]
    fn pushforward_identity_and_rotation_symmetry() {
        let y = rotation();
        let id = Diffeo::identity(y.ctx());
        let one = Expr::int(y.ctx(), 1);
        let z = pushforward(&y, &id, &one).unwrap();
        for i in 0..2 {
            assert_eq!(
                z.component(i).sub(y.component(i)).is_zero().unwrap(),
                Verdict::True
            );
        }

        // A rotation by angle with cos = 3/5, sin = 4/5 commutes with the
        // rotation field.
        let ctx = y.ctx();
        let target = vec![
            parse_in("3/5*x1 - 4/5*x2", ctx).unwrap(),
            parse_in("4/5*x1 + 3/5*x2", ctx).unwrap(),
        ];
        let inverse = vec![
            parse_in("3/5*x1 + 4/5*x2", ctx).unwrap(),
            parse_in("-4/5*x1 + 3/5*x2", ctx).unwrap(),
        ];
        let phi = Diffeo::with_inverse(ctx, target, inverse).unwrap();
        let z = pushforward(&y, &phi, &one).unwrap();
        for i in 0..2 {
            assert_eq!(
                z.component(i).sub(y.component(i)).is_zero().unwrap(),
                Verdict::True
            );
        }
    }

    #[test]
    fn graph_map_flattens_level_sets() {
        let ctx = Context::new(vec!["x1", "x2", "x3"], vec!["c"]);
        let d = parse_in("x3 + c/2*x1^2", &ctx).unwrap();
        let phi = Diffeo::graph_map(&ctx, &d).unwrap();
        assert_eq!(
            phi.jacobian_det()
                .sub(&Expr::int(&ctx, 1))
                .is_zero()
                .unwrap(),
            Verdict::True
        );
        // The third inverse component undoes D: x3 - c/2 x1^2.
        let inv = &phi.inverse_exprs().unwrap()[2];
        let expected = parse_in("x3 - c/2*x1^2", &ctx).unwrap();
        assert_eq!(inv.sub(&expected).is_zero().unwrap(), Verdict::True);

        // D depending nonlinearly on x3 has no closed-form graph inverse.
        let bad = parse_in("x3 + x3^2 + x1", &ctx).unwrap();
        assert!(matches!(
            Diffeo::graph_map(&ctx, &bad),
            Err(FieldError::NoClosedFormInverse)
        ));
    }

    #[test]
    fn transformed_multiplier_certifies_transformed_field() {
        // Y = rotation scaled radially, V = x1^2 + x2^2, Phi triangular.
        let ctx = Context::new(vec!["x1", "x2"], vec![]);
        let y = VectorField::new(
            &ctx,
            vec![
                parse_in("-x2", &ctx).unwrap(),
                parse_in("x1", &ctx).unwrap(),
            ],
        )
        .unwrap();
        let v = parse_in("x1^2 + x2^2", &ctx).unwrap();
        let target = vec![
            parse_in("x1", &ctx).unwrap(),
            parse_in("x2 + x1^2", &ctx).unwrap(),
        ];
        let inverse = vec![
            parse_in("x1", &ctx).unwrap(),
            parse_in("x2 - x1^2", &ctx).unwrap(),
        ];
        let phi = Diffeo::with_inverse(&ctx, target, inverse).unwrap();
        let one = Expr::int(&ctx, 1);
        // The multiplier transported to the source coordinates of Phi pairs
        // with the field pulled back by Phi^{-1}, i.e. pushed forward along
        // the inverse map.
        let w = transform_multiplier(&v, &phi, &one);
        let inv_phi = Diffeo::with_inverse(
            &ctx,
            phi.inverse_exprs().unwrap().to_vec(),
            phi.target().to_vec(),
        )
        .unwrap();
        let z = pushforward(&y, &inv_phi, &one).unwrap();
        assert_eq!(z.is_inverse_jacobi_multiplier(&w).unwrap(), Verdict::True);
    }

    #[test]
    fn classify_origin_equilibria() {
        // Linear expansion: eigenvalues {1,1,1}.
        let y = VectorField::from_strs(&["x1", "x2", "x3"], &[], &["x1", "x2", "x3"]).unwrap();
        let info = y.classify_singularity(&[0.0, 0.0, 0.0], &[]).unwrap();
        assert_eq!(info.classification, Classification::Other);

        // Zero-Hopf model at the origin.
        let y = VectorField::from_strs(
            &["x1", "x2", "x3"],
            &["a", "b", "c", "d"],
            &[
                "-x2",
                "x1 + a*x1^2 + b*x1*x3",
                "c*x1*x2 + d*x2*x3",
            ],
        )
        .unwrap();
        let info = y
            .classify_singularity(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0])
            .unwrap();
        assert_eq!(info.classification, Classification::ZeroHopf);

        // Off-equilibrium point reported as regular.
        let info = y
            .classify_singularity(&[0.0, 1.0, 0.0], &[1.0, 1.0, 1.0, 1.0])
            .unwrap();
        assert_eq!(info.classification, Classification::Regular);

        // Zero eigenvalue with a real saddle pair.
        let y = VectorField::from_strs(&["x1", "x2", "x3"], &[], &["x1", "-x2", "x3*x3"]).unwrap();
        let info = y.classify_singularity(&[0.0, 0.0, 0.0], &[]).unwrap();
        assert_eq!(info.classification, Classification::ZeroSaddle);
    }
}
