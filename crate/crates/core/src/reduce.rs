//! Reduction of a 3D field with a first integral `D` to the one-parameter
//! planar family living on the level sets `{D = h}`.
//!
//! The level variable `h` replaces `x3` in the series ring: all series here
//! live over `(x1, x2, h)` plus the symbolic parameters, with the three
//! leading variables graded for truncation.

use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

use crate::coeff::{rat_int, Coeff};
use crate::expr::{Expr, ExprError, Verdict};
use crate::field::VectorField;
use crate::poly::MultiPoly;
use crate::series::{SeriesError, TruncSeries};

pub const DEFAULT_ORDER: u32 = 8;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("expected a 3-dimensional system, got dimension {0}")]
    NotThreeDimensional(usize),
    #[error("D does not vanish at the origin")]
    NonzeroAtOrigin,
    #[error(
        "dD/dx3 at the origin is `{0}`; it must be a nonzero rational constant \
         (normalize the integral first if it depends on parameters)"
    )]
    DegenerateTransversal(String),
    #[error("D is not certified as a first integral (zero test: {0})")]
    NotFirstIntegral(Verdict),
    #[error("linear part is not in the normalized form (-x2, x1, 0): {0}")]
    LinearPartNotNormalized(String),
    #[error("level substitution does not annihilate D to the requested order")]
    LevelIdentityFailed,
    #[error("singularity branch is not monodromic: discriminant at h=0 is {0}")]
    NonMonodromic(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// The implicit solution `x3 = phi(x1, x2, h)` of `D(x1, x2, x3) = h`.
#[derive(Clone, Debug)]
pub struct LevelFunction {
    phi: TruncSeries<BigRational>,
    order: u32,
    source: Expr,
    names: Vec<String>,
}

impl LevelFunction {
    pub fn phi(&self) -> &TruncSeries<BigRational> {
        &self.phi
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    /// Variable names of the series ring: `x1, x2, h`, then parameters.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn render(&self) -> String {
        self.phi.render(&self.names)
    }
}

/// The planar family `Z_h` obtained by substituting `x3 = phi` into the
/// first two components.
#[derive(Clone, Debug)]
pub struct PlanarFamily {
    components: [TruncSeries<BigRational>; 2],
    level: LevelFunction,
}

impl PlanarFamily {
    pub fn components(&self) -> &[TruncSeries<BigRational>; 2] {
        &self.components
    }

    pub fn level(&self) -> &LevelFunction {
        &self.level
    }

    pub fn order(&self) -> u32 {
        self.level.order
    }

    pub fn names(&self) -> &[String] {
        &self.level.names
    }
}

/// Eigenvalue data `re(h) ± i·im(h)` of the Jacobian along the singularity
/// branch `(x1*(h), x2*(h))` of a reduced family.
#[derive(Clone, Debug)]
pub struct BranchEigenvalues {
    pub branch: [TruncSeries<BigRational>; 2],
    pub re: TruncSeries<BigRational>,
    pub im: TruncSeries<BigRational>,
}

fn series_var(template: &TruncSeries<BigRational>, idx: usize) -> TruncSeries<BigRational> {
    TruncSeries::var(template.nvars(), template.graded(), template.order(), idx)
}

/// Identity substitution list `(x1, x2, <slot>, params...)` with the third
/// graded slot replaced.
fn subs_with_third(
    template: &TruncSeries<BigRational>,
    third: TruncSeries<BigRational>,
) -> Vec<TruncSeries<BigRational>> {
    let mut subs: Vec<_> = (0..template.nvars())
        .map(|i| series_var(template, i))
        .collect();
    subs[2] = third;
    subs
}

pub fn implicit_level_function(d: &Expr, order: u32) -> Result<LevelFunction, ReduceError> {
    let ctx = d.ctx();
    if ctx.nvars() != 3 {
        return Err(ReduceError::NotThreeDimensional(ctx.nvars()));
    }
    let center = vec![rat_int(0); 3];
    let dser = d.taylor(&center, order)?;
    if !dser.poly().graded_part(3, 0).is_zero() {
        return Err(ReduceError::NonzeroAtOrigin);
    }
    // Transversality: dD/dx3 at the origin must be a nonzero rational, so
    // the only divisions below are by that constant.
    let slope = dser.deriv(2).constant_part();
    if !slope.is_constant() || slope.constant_term().is_zero() {
        let mut names = vec!["x1".to_string(), "x2".to_string(), "x3".to_string()];
        names.extend(ctx.params().iter().cloned());
        return Err(ReduceError::DegenerateTransversal(slope.render(&names)));
    }
    let c = slope.constant_term();
    let c_inv = rat_int(1) / &c;

    // Fixed-point iteration phi <- phi - (D(x1,x2,phi) - h)/c; each pass
    // gains at least one graded order.
    let h = series_var(&dser, 2);
    let mut phi = TruncSeries::zero(dser.nvars(), dser.graded(), order);
    for _ in 0..=order {
        let g = dser.compose(&subs_with_third(&dser, phi.clone())).sub(&h);
        if g.is_zero() {
            break;
        }
        phi = phi.sub(&g.scale(&c_inv));
    }
    let residual = dser.compose(&subs_with_third(&dser, phi.clone())).sub(&h);
    if !residual.is_zero() {
        return Err(ReduceError::LevelIdentityFailed);
    }
    let mut names = vec!["x1".to_string(), "x2".to_string(), "h".to_string()];
    names.extend(ctx.params().iter().cloned());
    Ok(LevelFunction {
        phi,
        order,
        source: d.clone(),
        names,
    })
}

pub fn restrict_to_level(
    y: &VectorField,
    d: &Expr,
    order: u32,
) -> Result<PlanarFamily, ReduceError> {
    if y.dim() != 3 {
        return Err(ReduceError::NotThreeDimensional(y.dim()));
    }
    let verdict = y.is_first_integral(d)?;
    if verdict != Verdict::True {
        return Err(ReduceError::NotFirstIntegral(verdict));
    }
    let level = implicit_level_function(d, order)?;
    let center = vec![rat_int(0); 3];
    let comps: Vec<_> = y
        .components()
        .iter()
        .map(|c| c.taylor(&center, order))
        .collect::<Result<_, _>>()?;
    check_linear_part(&comps)?;
    let subs = subs_with_third(&level.phi, level.phi.clone());
    let z1 = comps[0].compose(&subs);
    let z2 = comps[1].compose(&subs);
    // The reduced dynamics must stay on the level set: the Lie derivative
    // of D, restricted by the same substitution, vanishes as a series.
    let lie = y.lie_derivative(d).taylor(&center, order)?;
    if !lie.compose(&subs).is_zero() {
        return Err(ReduceError::LevelIdentityFailed);
    }
    Ok(PlanarFamily {
        components: [z1, z2],
        level,
    })
}

fn check_linear_part(comps: &[TruncSeries<BigRational>]) -> Result<(), ReduceError> {
    let nvars = comps[0].nvars();
    let lin = |i: usize, c: BigRational| {
        let mut e = vec![0u32; nvars];
        e[i] = 1;
        MultiPoly::monomial(nvars, e, c)
    };
    let expected = [lin(1, rat_int(-1)), lin(0, rat_int(1))];
    for (k, (comp, want)) in comps.iter().zip(&expected).enumerate() {
        if !comp.poly().graded_part(3, 0).is_zero() {
            return Err(ReduceError::LinearPartNotNormalized(format!(
                "component {} does not vanish at the origin",
                k + 1
            )));
        }
        if comp.poly().graded_part(3, 1) != *want {
            return Err(ReduceError::LinearPartNotNormalized(format!(
                "component {} has linear part different from {}",
                k + 1,
                if k == 0 { "-x2" } else { "x1" }
            )));
        }
    }
    Ok(())
}

pub fn branch_eigenvalues(z: &PlanarFamily, order: u32) -> Result<BranchEigenvalues, ReduceError> {
    let [z1, z2] = z.components();
    let z1 = z1.truncate(order);
    let z2 = z2.truncate(order);
    let template = &z1;

    // Newton with the constant Jacobian of the rotation linear part:
    // (x1, x2) <- (x1 - Z2, x2 + Z1); one extra order of accuracy per pass.
    let mut s1 = TruncSeries::zero(template.nvars(), template.graded(), order);
    let mut s2 = s1.clone();
    for _ in 0..=order {
        let mut subs: Vec<_> = (0..template.nvars())
            .map(|i| series_var(template, i))
            .collect();
        subs[0] = s1.clone();
        subs[1] = s2.clone();
        let f1 = z1.compose(&subs);
        let f2 = z2.compose(&subs);
        if f1.is_zero() && f2.is_zero() {
            break;
        }
        s1 = s1.sub(&f2);
        s2 = s2.add(&f1);
    }
    let mut subs: Vec<_> = (0..template.nvars())
        .map(|i| series_var(template, i))
        .collect();
    subs[0] = s1.clone();
    subs[1] = s2.clone();
    if !z1.compose(&subs).is_zero() || !z2.compose(&subs).is_zero() {
        return Err(ReduceError::NonMonodromic(
            "no series branch of singularities found".into(),
        ));
    }

    let at_branch = |e: &TruncSeries<BigRational>| e.compose(&subs);
    let a = at_branch(&z1.deriv(0));
    let b = at_branch(&z1.deriv(1));
    let c = at_branch(&z2.deriv(0));
    let dd = at_branch(&z2.deriv(1));
    let tr = a.add(&dd);
    let det = a.mul(&dd).sub(&b.mul(&c));

    // Monodromy at h = 0: trace zero, determinant a positive constant.
    let tr0 = tr.constant_part();
    let det0 = det.constant_part();
    if !tr0.is_zero() || !det0.is_constant() || !det0.constant_term().is_positive() {
        let names = z.names().to_vec();
        return Err(ReduceError::NonMonodromic(format!(
            "trace {} and determinant {} at h=0",
            tr0.render(&names),
            det0.render(&names)
        )));
    }
    let half = BigRational::new(1.into(), 2.into());
    let re = tr.scale(&half);
    let im = det.sub(&re.mul(&re)).sqrt()?;
    Ok(BranchEigenvalues {
        branch: [s1, s2],
        re,
        im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_in, Context};

    fn series_from(text: &str, names: &[&str], graded: usize, order: u32) -> TruncSeries<BigRational> {
        // Parse a polynomial in the series-ring variables to compare against.
        let ctx = Context::new(names.to_vec(), vec![]);
        let e = parse_in(text, &ctx).unwrap();
        let center = vec![rat_int(0); names.len()];
        let full = e.taylor(&center, order).unwrap();
        TruncSeries::new(full.poly().clone().truncate_graded(graded, order), graded, order)
    }

    #[test]
    fn linear_and_quadratic_levels() {
        let ctx = Context::new(vec!["x1", "x2", "x3"], vec!["c"]);
        let d = parse_in("x3 + c/2*x1^2", &ctx).unwrap();
        let lf = implicit_level_function(&d, 6).unwrap();
        let expected = series_from("h - c/2*x1^2", &["x1", "x2", "h", "c"], 3, 6);
        assert_eq!(*lf.phi(), expected);

        let d = parse_in("x3 - x1^2", &ctx).unwrap();
        let lf = implicit_level_function(&d, 6).unwrap();
        assert_eq!(*lf.phi(), series_from("h + x1^2", &["x1", "x2", "h", "c"], 3, 6));

        let d = parse_in("x3", &ctx).unwrap();
        let lf = implicit_level_function(&d, 6).unwrap();
        assert_eq!(*lf.phi(), series_from("h", &["x1", "x2", "h", "c"], 3, 6));
    }

    #[test]
    fn degenerate_levels_rejected() {
        let ctx = Context::new(vec!["x1", "x2", "x3"], vec!["c"]);
        let d = parse_in("x3^2 + x1", &ctx).unwrap();
        assert!(matches!(
            implicit_level_function(&d, 4),
            Err(ReduceError::DegenerateTransversal(_))
        ));
        // A parameter-dependent slope needs prior normalization.
        let d = parse_in("c*x3", &ctx).unwrap();
        assert!(matches!(
            implicit_level_function(&d, 4),
            Err(ReduceError::DegenerateTransversal(_))
        ));
        let d = parse_in("1 + x3", &ctx).unwrap();
        assert!(matches!(
            implicit_level_function(&d, 4),
            Err(ReduceError::NonzeroAtOrigin)
        ));
    }

    #[test]
    fn nonlinear_level_function_solves_identity() {
        let ctx = Context::new(vec!["x1", "x2", "x3"], vec![]);
        // Nonlinear in x3: the fixed-point loop has to work for its living.
        let d = parse_in("x3 + x3^2 + x1*x3 + x2^2", &ctx).unwrap();
        let lf = implicit_level_function(&d, 8).unwrap();
        // Spot-check the leading terms: phi = h - x2^2 - x1 h - h^2 + ...
        let p = lf.phi().poly();
        let coeff = |e: &[u32]| p.coeff(e);
        assert_eq!(coeff(&[0, 0, 1]), rat_int(1));
        assert_eq!(coeff(&[0, 2, 0]), rat_int(-1));
        assert_eq!(coeff(&[1, 0, 1]), rat_int(-1));
        assert_eq!(coeff(&[0, 0, 2]), rat_int(-1));
        // Order coherence: a higher-order run truncates to the same series.
        let lf10 = implicit_level_function(&d, 10).unwrap();
        assert_eq!(lf10.phi().truncate(8), *lf.phi());
    }

    #[test]
    fn lienard_type_reduction() {
        // (-x2, x1 + a x1^2 + b x1 x3, c x1 x2) preserves D = x3 + c/2 x1^2.
        let y = VectorField::from_strs(
            &["x1", "x2", "x3"],
            &["a", "b", "c"],
            &["-x2", "x1 + a*x1^2 + b*x1*x3", "c*x1*x2"],
        )
        .unwrap();
        let d = parse_in("x3 + c/2*x1^2", y.ctx()).unwrap();
        let z = restrict_to_level(&y, &d, 8).unwrap();
        let names = ["x1", "x2", "h", "a", "b", "c"];
        assert_eq!(z.components()[0], series_from("-x2", &names, 3, 8));
        assert_eq!(
            z.components()[1],
            series_from("x1 + a*x1^2 + b*x1*(h - c/2*x1^2)", &names, 3, 8)
        );

        // Eigenvalues along the branch: +-i sqrt(1 + b h).
        let eig = branch_eigenvalues(&z, 6).unwrap();
        assert!(eig.re.is_zero());
        let one_plus_bh = series_from("1 + b*h", &names, 3, 6);
        assert_eq!(eig.im.mul(&eig.im), one_plus_bh);
        assert!(eig.branch[0].is_zero() && eig.branch[1].is_zero());
    }

    #[test]
    fn quintic_family_reduction() {
        let y = VectorField::from_strs(
            &["x1", "x2", "x3"],
            &["B1", "B2", "C"],
            &[
                "-x2 - C*x1*x2 + B1*(x1^2+x2^2)*(-x1^2 + x3)",
                "x1 + B2*x1*x2*(-x1^2 + x3)",
                "2*x1*(-x2 - C*x1*x2 + B1*(x1^2+x2^2)*(-x1^2 + x3))",
            ],
        )
        .unwrap();
        let d = parse_in("x3 - x1^2", y.ctx()).unwrap();
        let z = restrict_to_level(&y, &d, 8).unwrap();
        let names = ["x1", "x2", "h", "B1", "B2", "C"];
        assert_eq!(
            z.components()[0],
            series_from("-x2 - C*x1*x2 + B1*h*(x1^2+x2^2)", &names, 3, 8)
        );
        assert_eq!(
            z.components()[1],
            series_from("x1 + B2*h*x1*x2", &names, 3, 8)
        );
        let eig = branch_eigenvalues(&z, 6).unwrap();
        assert!(eig.re.is_zero());
        assert_eq!(eig.im, series_from("1", &names, 3, 6));
    }

    #[test]
    fn trivial_level_is_identity_reduction() {
        let y = VectorField::from_strs(&["x1", "x2", "x3"], &[], &["-x2", "x1", "0"]).unwrap();
        let d = parse_in("x3", y.ctx()).unwrap();
        let z = restrict_to_level(&y, &d, 6).unwrap();
        let names = ["x1", "x2", "h"];
        assert_eq!(z.components()[0], series_from("-x2", &names, 3, 6));
        assert_eq!(z.components()[1], series_from("x1", &names, 3, 6));
        let eig = branch_eigenvalues(&z, 6).unwrap();
        assert!(eig.re.is_zero());
        assert_eq!(eig.im, series_from("1", &names, 3, 6));
    }

    #[test]
    fn unnormalized_linear_part_rejected() {
        let y = VectorField::from_strs(&["x1", "x2", "x3"], &[], &["x2", "-x1", "0"]).unwrap();
        let d = parse_in("x3", y.ctx()).unwrap();
        assert!(matches!(
            restrict_to_level(&y, &d, 4),
            Err(ReduceError::LinearPartNotNormalized(_))
        ));
        // Non-integral D is refused up front.
        let y = VectorField::from_strs(&["x1", "x2", "x3"], &[], &["-x2", "x1", "x3"]).unwrap();
        let d = parse_in("x3 + x1", y.ctx()).unwrap();
        assert!(matches!(
            restrict_to_level(&y, &d, 4),
            Err(ReduceError::NotFirstIntegral(_))
        ));
    }

    #[test]
    fn saddle_branch_is_rejected() {
        // Linear part normalized but the family turns real at order h:
        // Z = (-x2 + h x1, x1 + h x2) keeps eigenvalues h +- i, monodromic;
        // instead force det(0) <= 0 via a doctored family.
        let y = VectorField::from_strs(&["x1", "x2", "x3"], &[], &["-x2", "x1", "0"]).unwrap();
        let d = parse_in("x3", y.ctx()).unwrap();
        let mut z = restrict_to_level(&y, &d, 4).unwrap();
        // Tamper: swap the components so the linear part is a saddle.
        let flipped = z.components()[0].neg();
        z.components = [z.components()[1].clone(), flipped];
        assert!(matches!(
            branch_eigenvalues(&z, 4),
            Err(ReduceError::NonMonodromic(_))
        ));
    }
}
