//! Degree-truncated multivariate power series.
//!
//! A `TruncSeries` wraps a `MultiPoly` together with a truncation order.
//! Only the first `graded` variables count toward the degree; the remaining
//! variables (free parameters of the family under study) are carried along
//! untruncated. Ring operations truncate consistently: truncating inputs
//! first and then operating equals operating and then truncating.

use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

use crate::coeff::{rat_int, Coeff};
use crate::poly::MultiPoly;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series has no invertible constant term (graded-degree-0 part must be a nonzero rational constant)")]
    NonUnitConstant,
    #[error("series constant term must vanish for this operation")]
    NonzeroConstant,
    #[error("series constant term must be 1 for log")]
    LogConstantNotOne,
    #[error("constant term is not a perfect rational square")]
    NotASquare,
    #[error("incompatible series shapes")]
    ShapeMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncSeries<C: Coeff> {
    poly: MultiPoly<C>,
    graded: usize,
    order: u32,
}

impl<C: Coeff> TruncSeries<C> {
    pub fn new(poly: MultiPoly<C>, graded: usize, order: u32) -> Self {
        let poly = poly.truncate_graded(graded, order);
        TruncSeries { poly, graded, order }
    }

    pub fn zero(nvars: usize, graded: usize, order: u32) -> Self {
        TruncSeries { poly: MultiPoly::zero(nvars), graded, order }
    }

    pub fn constant(nvars: usize, graded: usize, order: u32, c: C) -> Self {
        TruncSeries { poly: MultiPoly::constant(nvars, c), graded, order }
    }

    pub fn var(nvars: usize, graded: usize, order: u32, idx: usize) -> Self {
        Self::new(MultiPoly::var(nvars, idx), graded, order)
    }

    pub fn poly(&self) -> &MultiPoly<C> {
        &self.poly
    }

    pub fn into_poly(self) -> MultiPoly<C> {
        self.poly
    }

    pub fn graded(&self) -> usize {
        self.graded
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.poly.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn check(&self, rhs: &Self) -> Result<(), SeriesError> {
        if self.graded != rhs.graded || self.order != rhs.order || self.nvars() != rhs.nvars() {
            Err(SeriesError::ShapeMismatch)
        } else {
            Ok(())
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.check(rhs).expect("series shape mismatch");
        TruncSeries { poly: self.poly.add(&rhs.poly), graded: self.graded, order: self.order }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.check(rhs).expect("series shape mismatch");
        TruncSeries { poly: self.poly.sub(&rhs.poly), graded: self.graded, order: self.order }
    }

    pub fn neg(&self) -> Self {
        TruncSeries { poly: self.poly.neg(), graded: self.graded, order: self.order }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.check(rhs).expect("series shape mismatch");
        Self::new(self.poly.mul(&rhs.poly), self.graded, self.order)
    }

    pub fn scale(&self, c: &C) -> Self {
        TruncSeries { poly: self.poly.scale(c), graded: self.graded, order: self.order }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.nvars(), self.graded, self.order, C::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn deriv(&self, idx: usize) -> Self {
        // Differentiation of a truncation loses the top order; the caller
        // keeps track of that where it matters.
        TruncSeries { poly: self.poly.deriv(idx), graded: self.graded, order: self.order }
    }

    /// Truncate to a lower order.
    pub fn truncate(&self, order: u32) -> Self {
        assert!(order <= self.order);
        TruncSeries { poly: self.poly.truncate_graded(self.graded, order), graded: self.graded, order }
    }

    /// Graded-degree-0 part (a polynomial in the parameter variables).
    pub fn constant_part(&self) -> MultiPoly<C> {
        self.poly.graded_part(self.graded, 0)
    }

    /// The constant part as a unit coefficient, if it is a pure constant.
    fn unit_constant(&self) -> Result<C, SeriesError> {
        let c0 = self.constant_part();
        if !c0.is_constant() {
            return Err(SeriesError::NonUnitConstant);
        }
        let c = c0.constant_term();
        if c.is_zero() {
            return Err(SeriesError::NonUnitConstant);
        }
        Ok(c)
    }

    /// Multiplicative inverse; requires a nonzero constant (parameter-free)
    /// constant term.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c = self.unit_constant()?;
        let cinv = C::one().div(&c);
        // self = c (1 - r), r of positive graded degree
        let one = Self::constant(self.nvars(), self.graded, self.order, C::one());
        let r = one.sub(&self.scale(&cinv));
        let mut acc = one.clone();
        let mut rp = one;
        for _ in 0..self.order {
            rp = rp.mul(&r);
            if rp.is_zero() {
                break;
            }
            acc = acc.add(&rp);
        }
        Ok(acc.scale(&cinv))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&rhs.inverse()?))
    }

    /// Series exponential; constant part must vanish.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.constant_part().is_zero() {
            return Err(SeriesError::NonzeroConstant);
        }
        let mut acc = Self::constant(self.nvars(), self.graded, self.order, C::one());
        let mut term = acc.clone();
        let mut fact = rat_int(1);
        for k in 1..=self.order {
            fact *= BigRational::from_integer(k.into());
            term = term.mul(self);
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term.scale(&C::from_rat(&(rat_int(1) / &fact))));
        }
        Ok(acc)
    }

    /// Series logarithm; constant part must be exactly 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        let c0 = self.constant_part();
        if !c0.is_constant() || c0.constant_term() != C::one() {
            return Err(SeriesError::LogConstantNotOne);
        }
        let one = Self::constant(self.nvars(), self.graded, self.order, C::one());
        let u = self.sub(&one);
        let mut acc = Self::zero(self.nvars(), self.graded, self.order);
        let mut up = one;
        let mut sign = true;
        for k in 1..=self.order {
            up = up.mul(&u);
            if up.is_zero() {
                break;
            }
            let coef = BigRational::new(if sign { 1.into() } else { (-1).into() }, k.into());
            acc = acc.add(&up.scale(&C::from_rat(&coef)));
            sign = !sign;
        }
        Ok(acc)
    }

    /// Substitute each variable by a series (constant parts of substitutes
    /// for graded variables must not introduce untruncated tails; the usual
    /// use substitutes series with vanishing constant part).
    pub fn compose(&self, subs: &[TruncSeries<C>]) -> Self {
        assert_eq!(subs.len(), self.nvars());
        let graded = subs[0].graded;
        let order = subs[0].order;
        let nvars = subs[0].nvars();
        let mut out = Self::zero(nvars, graded, order);
        for (e, c) in self.poly.terms() {
            let mut t = Self::constant(nvars, graded, order, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&subs[i].pow(k));
                }
            }
            out = out.add(&t);
        }
        out
    }

    pub fn render(&self, names: &[String]) -> String {
        self.poly.render(names)
    }
}

impl TruncSeries<BigRational> {
    /// Series square root; constant term must be a positive rational square.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let c0 = self.constant_part();
        if !c0.is_constant() {
            return Err(SeriesError::NotASquare);
        }
        let c = c0.constant_term();
        if !c.is_positive() {
            return Err(SeriesError::NotASquare);
        }
        let ns = c.numer().sqrt();
        let ds = c.denom().sqrt();
        let root = BigRational::new(ns.clone(), ds.clone());
        if &root * &root != c {
            return Err(SeriesError::NotASquare);
        }
        // Newton iteration s <- (s + self/s)/2 starting from the constant.
        let mut s = Self::constant(self.nvars(), self.graded, self.order, root);
        for _ in 0..(32 - self.order.leading_zeros() + 2) {
            let next = s.add(&self.div(&s)?).scale(&rat_int(1).div(&rat_int(2)));
            if next == s {
                break;
            }
            s = next;
        }
        Ok(s)
    }
}
