//! Sparse exact multivariate polynomials.
//!
//! Exponent vectors are stored densely per declared variable count; terms
//! live in a `BTreeMap` so iteration order (and hence printing and leading
//! terms) is deterministic. The map never stores a zero coefficient.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Signed;

use crate::coeff::Coeff;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly<C: Coeff> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, C>,
}

impl<C: Coeff> MultiPoly<C> {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn var(nvars: usize, idx: usize) -> Self {
        assert!(idx < nvars, "variable index out of range");
        let mut e = vec![0u32; nvars];
        e[idx] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, C::one());
        p
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, c: C) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// The constant term.
    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0; self.nvars])
    }

    /// True when the polynomial is a constant (possibly zero).
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    fn insert_add(&mut self, exps: Vec<u32>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                let s = existing.add(&c);
                if s.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *existing = s;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c.neg());
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_add(e, c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        let mut out = Self::zero(self.nvars);
        for (e, k) in &self.terms {
            let kc = k.mul(c);
            if !kc.is_zero() {
                out.terms.insert(e.clone(), kc);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative with respect to variable `idx`.
    pub fn deriv(&self, idx: usize) -> Self {
        assert!(idx < self.nvars);
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[idx] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[idx] -= 1;
            let k = C::from_rat(&BigRational::from_integer(e[idx].into()));
            out.insert_add(e2, c.mul(&k));
        }
        out
    }

    /// Total degree over the first `graded` variables; `None` for the zero
    /// polynomial.
    pub fn graded_degree(&self, graded: usize) -> Option<u32> {
        self.terms
            .keys()
            .map(|e| e[..graded].iter().sum::<u32>())
            .max()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.graded_degree(self.nvars)
    }

    /// Drop all terms whose degree in the first `graded` variables exceeds
    /// `order`.
    pub fn truncate_graded(&self, graded: usize, order: u32) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[..graded].iter().sum::<u32>() <= order {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Keep only terms of exact degree `deg` in the first `graded` variables.
    pub fn graded_part(&self, graded: usize, deg: u32) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[..graded].iter().sum::<u32>() == deg {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Reinterpret over a larger variable set (new variables appended).
    pub fn extend_vars(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        let mut out = Self::zero(nvars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.resize(nvars, 0);
            out.terms.insert(e2, c.clone());
        }
        out
    }

    /// Substitute variable `idx` by a constant.
    pub fn subst_const(&self, idx: usize, value: &C) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e[idx];
            let mut e2 = e.clone();
            e2[idx] = 0;
            let mut factor = C::one();
            for _ in 0..k {
                factor = factor.mul(value);
            }
            out.insert_add(e2, c.mul(&factor));
        }
        out
    }

    /// Substitute variable `from` by variable `to` (exponents merge).
    pub fn subst_var(&self, from: usize, to: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2[from];
            e2[from] = 0;
            e2[to] += k;
            out.insert_add(e2, c.clone());
        }
        out
    }

    /// Full substitution: variable `i` replaced by `subs[i]`. All `subs`
    /// share a common (possibly different) variable count.
    pub fn compose(&self, subs: &[MultiPoly<C>]) -> MultiPoly<C> {
        assert_eq!(subs.len(), self.nvars);
        let out_nvars = if subs.is_empty() { 0 } else { subs[0].nvars };
        let mut out = MultiPoly::zero(out_nvars);
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(out_nvars, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&subs[i].pow(k));
                }
            }
            out = out.add(&t);
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let d = f(c);
            if !d.is_zero() {
                out.terms.insert(e.clone(), d);
            }
        }
        out
    }

    /// Leading term under the lexicographic order on exponent vectors.
    pub fn leading(&self) -> Option<(&Vec<u32>, &C)> {
        self.terms.iter().next_back()
    }

    /// Exact division: `Some(q)` with `self = q * d` or `None`.
    pub fn try_exact_div(&self, d: &Self) -> Option<Self> {
        assert_eq!(self.nvars, d.nvars);
        if d.is_zero() {
            return None;
        }
        let (dlead_e, dlead_c) = d.leading().unwrap();
        let dlead_e = dlead_e.clone();
        let dlead_c = dlead_c.clone();
        let mut r = self.clone();
        let mut q = Self::zero(self.nvars);
        while let Some((rlead_e, rlead_c)) = r.leading() {
            let mut te = Vec::with_capacity(self.nvars);
            for (a, b) in rlead_e.iter().zip(&dlead_e) {
                if a < b {
                    return None;
                }
                te.push(a - b);
            }
            let tc = rlead_c.div(&dlead_c);
            let t = Self::monomial(self.nvars, te, tc);
            q = q.add(&t);
            r = r.sub(&t.mul(d));
        }
        Some(q)
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            let cs = c.render();
            if cs != "1" || e.iter().all(|&x| x == 0) {
                factors.push(cs);
            }
            for (i, &k) in e.iter().enumerate() {
                if k == 1 {
                    factors.push(names[i].clone());
                } else if k > 1 {
                    factors.push(format!("{}^{}", names[i], k));
                }
            }
            parts.push(factors.join("*"));
        }
        parts.join(" + ")
    }
}

impl MultiPoly<BigRational> {
    /// Rational content: positive gcd-like scalar `c` with `self = c * prim`
    /// where `prim` has coprime integer coefficients and positive leading
    /// coefficient. Returns `(c, prim)`; the zero polynomial yields itself.
    pub fn primitive(&self) -> (BigRational, MultiPoly<BigRational>) {
        use num_bigint::BigInt;
        use num_integer::Integer;
        use num_traits::{One, Zero};
        if self.is_zero() {
            return (<BigRational as One>::one(), self.clone());
        }
        let mut num_gcd = <BigInt as Zero>::zero();
        let mut den_lcm = <BigInt as One>::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut content = BigRational::new(num_gcd, den_lcm);
        let (lead_e, lead_c) = self.leading().unwrap();
        let _ = lead_e;
        if lead_c.is_negative() {
            content = -content;
        }
        let prim = self.scale(&(<BigRational as One>::one() / &content));
        (content, prim)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = crate::coeff::rat_to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                t *= point[i].powi(k as i32);
            }
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};

    fn p_xy() -> (MultiPoly<BigRational>, MultiPoly<BigRational>) {
        (MultiPoly::var(2, 0), MultiPoly::var(2, 1))
    }

    #[test]
    fn arithmetic_basics() {
        let (x, y) = p_xy();
        let s = x.add(&y).mul(&x.sub(&y));
        let expect = x.mul(&x).sub(&y.mul(&y));
        assert_eq!(s, expect);
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn derivative_and_degree() {
        let (x, y) = p_xy();
        // x^2*y + y^3
        let p = x.pow(2).mul(&y).add(&y.pow(3));
        assert_eq!(p.total_degree(), Some(3));
        let px = p.deriv(0);
        assert_eq!(px, x.mul(&y).scale(&rat_int(2)));
        let py = p.deriv(1);
        assert_eq!(py, x.pow(2).add(&y.pow(2).scale(&rat_int(3))));
    }

    #[test]
    fn exact_division() {
        let (x, y) = p_xy();
        let d = x.add(&y);
        let p = d.mul(&d).mul(&x.sub(&y.scale(&rat(3, 2))));
        let q = p.try_exact_div(&d).unwrap();
        assert_eq!(q.mul(&d), p);
        assert!(p.add(&MultiPoly::one(2)).try_exact_div(&d).is_none());
    }

    #[test]
    fn primitive_content() {
        let (x, y) = p_xy();
        let p = x.scale(&rat(-4, 3)).add(&y.scale(&rat(-2, 3)));
        let (c, prim) = p.primitive();
        assert_eq!(prim.scale(&c), p);
        // leading (lex) term is x, made positive
        assert_eq!(c, rat(-2, 3));
    }

    #[test]
    fn compose_substitutes() {
        let (x, y) = p_xy();
        let p = x.pow(2).add(&y);
        // x -> u+v, y -> u*v in a 2-var target space
        let u = MultiPoly::<BigRational>::var(2, 0);
        let v = MultiPoly::<BigRational>::var(2, 1);
        let q = p.compose(&[u.add(&v), u.mul(&v)]);
        assert_eq!(q, u.add(&v).pow(2).add(&u.mul(&v)));
    }
}
