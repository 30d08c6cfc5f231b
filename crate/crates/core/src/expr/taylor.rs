//! Taylor expansion of expression trees by structural series arithmetic.
//!
//! The resulting series lives in the polynomial ring over the state
//! variables (shifted to the center, graded) with the parameters carried as
//! extra ungraded polynomial variables. Divisions whose constant term
//! involves a parameter are rejected: the series engine stays in a pure
//! polynomial ring.

use num_rational::BigRational;

use super::{Expr, ExprError, Node};
use crate::series::TruncSeries;

type S = TruncSeries<BigRational>;

pub fn taylor(e: &Expr, center: &[BigRational], order: u32) -> Result<S, ExprError> {
    let ctx = e.ctx();
    assert_eq!(center.len(), ctx.nvars(), "center must give every state variable");
    let graded = ctx.nvars();
    let nvars = ctx.nvars() + ctx.nparams();
    expand(e, center, nvars, graded, order)
}

fn expand(e: &Expr, center: &[BigRational], nvars: usize, graded: usize, order: u32) -> Result<S, ExprError> {
    match e.node() {
        Node::Const(c) => Ok(S::constant(nvars, graded, order, c.clone())),
        Node::Var(i) => {
            let v = S::var(nvars, graded, order, *i);
            Ok(v.add(&S::constant(nvars, graded, order, center[*i].clone())))
        }
        Node::Param(j) => Ok(S::var(nvars, graded, order, graded + *j)),
        Node::Sum(ts) => {
            let mut acc = S::zero(nvars, graded, order);
            for t in ts {
                acc = acc.add(&expand(t, center, nvars, graded, order)?);
            }
            Ok(acc)
        }
        Node::Product(fs) => {
            let mut acc = S::constant(nvars, graded, order, num_traits::One::one());
            for f in fs {
                acc = acc.mul(&expand(f, center, nvars, graded, order)?);
            }
            Ok(acc)
        }
        Node::Quot(a, b) => {
            let sa = expand(a, center, nvars, graded, order)?;
            let sb = expand(b, center, nvars, graded, order)?;
            Ok(sa.div(&sb)?)
        }
        Node::IntPow(b, k) => {
            let sb = expand(b, center, nvars, graded, order)?;
            if *k >= 0 {
                Ok(sb.pow(*k as u32))
            } else {
                Ok(sb.inverse()?.pow((-*k) as u32))
            }
        }
        Node::Exp(u) => {
            let su = expand(u, center, nvars, graded, order)?;
            let c0 = su.constant_part();
            if !c0.is_zero() {
                return Err(ExprError::NotAnalytic(
                    "exp argument has a nonzero constant term at the center (non-rational value)".into(),
                ));
            }
            Ok(su.exp()?)
        }
        Node::Log(u) => {
            let su = expand(u, center, nvars, graded, order)?;
            Ok(su.log()?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use crate::expr::parse;
    use crate::poly::MultiPoly;

    fn zero_center(n: usize) -> Vec<BigRational> {
        vec![crate::coeff::rat_int(0); n]
    }

    #[test]
    fn exponential_series() {
        // taylor(exp(-d*x1), 0, 2) = 1 - d*x1 + d^2 x1^2 / 2
        let e = parse("exp(-d*x1)", &["x1"], &["d"]).unwrap();
        let s = e.taylor(&zero_center(1), 2).unwrap();
        // vars: [x1, d]
        let x1 = MultiPoly::<BigRational>::var(2, 0);
        let d = MultiPoly::<BigRational>::var(2, 1);
        let expect = MultiPoly::one(2)
            .sub(&d.mul(&x1))
            .add(&d.pow(2).mul(&x1.pow(2)).scale(&rat(1, 2)));
        assert_eq!(s.poly(), &expect);
    }

    #[test]
    fn polynomial_is_its_own_series() {
        // taylor(x3 + (c/2) x1^2, 0, 3) = itself
        let e = parse("x3 + c/2*x1^2", &["x1", "x2", "x3"], &["c"]).unwrap();
        let s = e.taylor(&zero_center(3), 3).unwrap();
        let x1 = MultiPoly::<BigRational>::var(4, 0);
        let x3 = MultiPoly::<BigRational>::var(4, 2);
        let c = MultiPoly::<BigRational>::var(4, 3);
        let expect = x3.add(&c.mul(&x1.pow(2)).scale(&rat(1, 2)));
        assert_eq!(s.poly(), &expect);
    }

    #[test]
    fn geometric_series() {
        let e = parse("1/(1+x1)", &["x1"], &[]).unwrap();
        let s = e.taylor(&zero_center(1), 2).unwrap();
        let x1 = MultiPoly::<BigRational>::var(1, 0);
        let expect = MultiPoly::one(1).sub(&x1).add(&x1.pow(2));
        assert_eq!(s.poly(), &expect);
    }

    #[test]
    fn singular_at_center() {
        let e = parse("1/x1", &["x1"], &[]).unwrap();
        assert!(e.taylor(&zero_center(1), 2).is_err());
        let e = parse("log(x1)", &["x1"], &[]).unwrap();
        assert!(e.taylor(&zero_center(1), 2).is_err());
    }

    #[test]
    fn residual_vanishes_to_order() {
        // taylor(e - series, center, order) = 0, non-trivial center
        let e = parse("exp(x1 - 1)*x1", &["x1"], &[]).unwrap();
        let center = vec![rat_int(1)];
        let s = e.taylor(&center, 5).unwrap();
        // rebuild the series as an expression in (x1 - 1) and subtract
        let ctx = e.ctx().clone();
        let x1 = crate::expr::Expr::var(&ctx, 0);
        let shifted = x1.sub(&crate::expr::Expr::int(&ctx, 1));
        let mut series_expr = crate::expr::Expr::int(&ctx, 0);
        for (exps, c) in s.poly().terms() {
            let term = crate::expr::Expr::constant(&ctx, c.clone()).mul(&shifted.int_pow(exps[0] as i64));
            series_expr = series_expr.add(&term);
        }
        let resid = e.sub(&series_expr);
        let rs = resid.taylor(&center, 5).unwrap();
        assert!(rs.is_zero());
    }

    #[test]
    fn truncation_consistency() {
        let e = parse("exp(x1*x2)/(1 + x1 + x2^2)", &["x1", "x2"], &[]).unwrap();
        let s6 = e.taylor(&zero_center(2), 6).unwrap();
        let s4 = e.taylor(&zero_center(2), 4).unwrap();
        assert_eq!(s6.truncate(4), s4);
    }
}
