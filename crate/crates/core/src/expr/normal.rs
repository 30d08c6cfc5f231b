//! Normalization of expressions to rational functions over the state
//! variables, parameters, and a canonicalized transcendental tower, plus the
//! three-valued zero test built on top of it.
//!
//! Every `exp`/`log` subexpression is replaced by a fresh indeterminate.
//! Arguments of `exp` nodes that normalize to polynomials are reduced
//! against a Q-linear basis, so products like `exp(u)*exp(-u)` collapse to
//! `1`. Log nodes are split linearly over explicit products, quotients and
//! integer powers. Anything beyond that is left to a numeric sampling
//! fallback: the test answers `True` only on an identically vanishing
//! numerator, `False` only with a numeric witness or a tower-free nonzero
//! numerator, and `Inconclusive` otherwise. Soundness over completeness.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Expr, ExprError, Node};
use crate::poly::MultiPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

impl Verdict {
    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::True => write!(f, "true"),
            Verdict::False => write!(f, "false"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

type RPoly = MultiPoly<BigRational>;

/// A quotient of polynomials over base variables plus tower symbols. The
/// denominator is never the zero polynomial.
#[derive(Debug, Clone)]
pub struct RatFun {
    pub num: RPoly,
    pub den: RPoly,
}

impl RatFun {
    fn from_poly(p: RPoly) -> RatFun {
        let n = p.nvars();
        RatFun { num: p, den: MultiPoly::one(n) }
    }

    fn align(&self, other: &RatFun) -> (RatFun, RatFun) {
        let n = self.num.nvars().max(other.num.nvars());
        (self.extend(n), other.extend(n))
    }

    fn extend(&self, nvars: usize) -> RatFun {
        RatFun { num: self.num.extend_vars(nvars), den: self.den.extend_vars(nvars) }
    }

    fn add(&self, other: &RatFun) -> RatFun {
        let (a, b) = self.align(other);
        RatFun {
            num: a.num.mul(&b.den).add(&b.num.mul(&a.den)),
            den: a.den.mul(&b.den),
        }
        .reduced()
    }

    fn mul(&self, other: &RatFun) -> RatFun {
        let (a, b) = self.align(other);
        RatFun { num: a.num.mul(&b.num), den: a.den.mul(&b.den) }.reduced()
    }

    fn recip(&self) -> Result<RatFun, ExprError> {
        if self.num.is_zero() {
            return Err(ExprError::ZeroDenominator);
        }
        Ok(RatFun { num: self.den.clone(), den: self.num.clone() })
    }

    fn pow(&self, k: i64) -> Result<RatFun, ExprError> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let n = k.unsigned_abs() as u32;
        Ok(RatFun { num: base.num.pow(n), den: base.den.pow(n) }.reduced())
    }

    /// Cheap canonical cleanup: constant denominators are folded into the
    /// numerator, exact divisions are cancelled, contents normalized.
    fn reduced(self) -> RatFun {
        let mut rf = self;
        if rf.num.is_zero() {
            let n = rf.num.nvars();
            return RatFun { num: rf.num, den: MultiPoly::one(n) };
        }
        if rf.den.is_constant() {
            let c = rf.den.constant_term();
            let n = rf.num.nvars();
            return RatFun {
                num: rf.num.scale(&(BigRational::one() / c)),
                den: MultiPoly::one(n),
            };
        }
        if let Some(q) = rf.num.try_exact_div(&rf.den) {
            let n = q.nvars();
            return RatFun { num: q, den: MultiPoly::one(n) };
        }
        let (cn, pn) = rf.num.primitive();
        let (cd, pd) = rf.den.primitive();
        rf = RatFun { num: pn.scale(&(cn / cd)), den: pd };
        rf
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SymKind {
    /// exp of a polynomial belonging to the Q-linear basis.
    ExpBasis(RPoly),
    /// exp of a canonical non-polynomial argument `q * num/den`.
    ExpKeyed { num: RPoly, den: RPoly, scale: BigRational },
    /// log of a canonical polynomial.
    LogPoly(RPoly),
    /// log of a rational constant (kept opaque; no factoring).
    LogConst(BigRational),
}

/// The transcendental tower accumulated during one normalization pass.
#[derive(Debug)]
pub struct Tower {
    base: usize,
    syms: Vec<SymKind>,
}

impl Tower {
    fn new(base: usize) -> Tower {
        Tower { base, syms: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    fn nvars(&self) -> usize {
        self.base + self.syms.len()
    }

    fn sym_var(&self, idx: usize) -> usize {
        self.base + idx
    }

    fn find(&self, kind: &SymKind) -> Option<usize> {
        self.syms.iter().position(|s| sym_eq(s, kind))
    }

    fn intern(&mut self, kind: SymKind) -> usize {
        if let Some(i) = self.find(&kind) {
            return i;
        }
        self.syms.push(kind);
        self.syms.len() - 1
    }

    /// Exp-basis polynomials, for linear reduction.
    fn exp_basis(&self) -> Vec<(usize, RPoly)> {
        self.syms
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                SymKind::ExpBasis(p) => Some((i, p.clone())),
                _ => None,
            })
            .collect()
    }
}

fn poly_eq(a: &RPoly, b: &RPoly) -> bool {
    let n = a.nvars().max(b.nvars());
    a.extend_vars(n) == b.extend_vars(n)
}

fn sym_eq(a: &SymKind, b: &SymKind) -> bool {
    match (a, b) {
        (SymKind::ExpBasis(p), SymKind::ExpBasis(q)) => poly_eq(p, q),
        (
            SymKind::ExpKeyed { num: n1, den: d1, scale: s1 },
            SymKind::ExpKeyed { num: n2, den: d2, scale: s2 },
        ) => s1 == s2 && poly_eq(n1, n2) && poly_eq(d1, d2),
        (SymKind::LogPoly(p), SymKind::LogPoly(q)) => poly_eq(p, q),
        (SymKind::LogConst(a), SymKind::LogConst(b)) => a == b,
        _ => false,
    }
}

/// Solve `sum q_i basis_i = target` over Q; `None` when not in the span.
fn solve_span(basis: &[RPoly], target: &RPoly) -> Option<Vec<BigRational>> {
    if basis.is_empty() {
        return if target.is_zero() { Some(vec![]) } else { None };
    }
    let nv = basis
        .iter()
        .map(|p| p.nvars())
        .chain(std::iter::once(target.nvars()))
        .max()
        .unwrap();
    let basis: Vec<RPoly> = basis.iter().map(|p| p.extend_vars(nv)).collect();
    let target = target.extend_vars(nv);
    let mut monos: BTreeSet<Vec<u32>> = BTreeSet::new();
    for p in basis.iter().chain(std::iter::once(&target)) {
        for (e, _) in p.terms() {
            monos.insert(e.clone());
        }
    }
    let ncols = basis.len();
    let mut rows: Vec<Vec<BigRational>> = monos
        .iter()
        .map(|m| {
            let mut row: Vec<BigRational> = basis.iter().map(|b| b.coeff(m)).collect();
            row.push(target.coeff(m));
            row
        })
        .collect();
    // Gaussian elimination
    let mut pivot_row = 0usize;
    let mut pivots = Vec::new();
    for col in 0..ncols {
        let Some(r) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, r);
        let inv = rows[pivot_row][col].clone().recip();
        for x in rows[pivot_row].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in 0..=ncols {
                    let delta = &rows[pivot_row][c] * &f;
                    rows[r][c] = &rows[r][c] - &delta;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    // consistency: remaining rows must have zero RHS
    for r in pivot_row..rows.len() {
        if !rows[r][ncols].is_zero() {
            return None;
        }
    }
    // free columns would mean a dependent basis; the tower only appends
    // independent polynomials, so pivots cover every column in practice.
    if pivots.len() != ncols {
        return None;
    }
    let mut sol = vec![BigRational::zero(); ncols];
    for (r, &col) in pivots.iter().enumerate() {
        sol[col] = rows[r][ncols].clone();
    }
    Some(sol)
}

struct Normalizer {
    tower: Tower,
}

impl Normalizer {
    fn base_poly(&self, idx: usize) -> RPoly {
        MultiPoly::var(self.tower.nvars(), idx)
    }

    fn normalize(&mut self, e: &Expr) -> Result<RatFun, ExprError> {
        let nbase = self.tower.base;
        match e.node() {
            Node::Const(c) => Ok(RatFun::from_poly(MultiPoly::constant(
                self.tower.nvars(),
                c.clone(),
            ))),
            Node::Var(i) => Ok(RatFun::from_poly(self.base_poly(*i))),
            Node::Param(j) => {
                let nv = e.ctx().nvars();
                let _ = nbase;
                Ok(RatFun::from_poly(self.base_poly(nv + *j)))
            }
            Node::Sum(ts) => {
                let mut acc = RatFun::from_poly(MultiPoly::zero(self.tower.nvars()));
                for t in ts {
                    let r = self.normalize(t)?;
                    acc = acc.add(&r);
                }
                Ok(acc)
            }
            Node::Product(fs) => {
                let mut acc = RatFun::from_poly(MultiPoly::one(self.tower.nvars()));
                for f in fs {
                    let r = self.normalize(f)?;
                    acc = acc.mul(&r);
                }
                Ok(acc)
            }
            Node::Quot(a, b) => {
                let rb = self.normalize(b)?.recip()?;
                let ra = self.normalize(a)?;
                Ok(ra.mul(&rb))
            }
            Node::IntPow(b, k) => self.normalize(b)?.pow(*k),
            Node::Exp(u) => {
                let ru = self.normalize(u)?;
                self.normalize_exp(&ru)
            }
            Node::Log(u) => self.normalize_log(u),
        }
    }

    fn sym_ratfun(&self, idx: usize, exponent: i64) -> RatFun {
        let v = MultiPoly::var(self.tower.nvars(), self.tower.sym_var(idx));
        let nv = v.nvars();
        if exponent >= 0 {
            RatFun { num: v.pow(exponent as u32), den: MultiPoly::one(nv) }
        } else {
            RatFun { num: MultiPoly::one(nv), den: v.pow((-exponent) as u32) }
        }
    }

    fn normalize_exp(&mut self, arg: &RatFun) -> Result<RatFun, ExprError> {
        if arg.num.is_zero() {
            return Ok(RatFun::from_poly(MultiPoly::one(self.tower.nvars())));
        }
        if arg.den.is_constant() {
            // polynomial argument: reduce against the Q-linear exp basis
            let c = arg.den.constant_term();
            let p = arg.num.scale(&(BigRational::one() / c));
            let basis = self.tower.exp_basis();
            let polys: Vec<RPoly> = basis.iter().map(|(_, p)| p.clone()).collect();
            if let Some(q) = solve_span(&polys, &p) {
                if q.iter().all(|x| x.is_integer()) {
                    let mut acc = RatFun::from_poly(MultiPoly::one(self.tower.nvars()));
                    for ((idx, _), qi) in basis.iter().zip(&q) {
                        let k = qi.numer().try_into().unwrap_or(0i64);
                        acc = acc.mul(&self.sym_ratfun(*idx, k));
                    }
                    return Ok(acc);
                }
                // in the span with fractional coordinates: keep a dedicated
                // keyed symbol (sound, possibly incomplete)
                let (cn, pn) = p.primitive();
                let idx = self.tower.intern(SymKind::ExpKeyed {
                    num: pn,
                    den: MultiPoly::one(p.nvars()),
                    scale: cn,
                });
                return Ok(self.sym_ratfun(idx, 1));
            }
            // independent: extend the basis
            let idx = self.tower.intern(SymKind::ExpBasis(p));
            return Ok(self.sym_ratfun(idx, 1));
        }
        // genuinely rational argument: canonical key with sign merging so
        // that exp(u) and exp(-u) share one symbol
        let (cn, pn) = arg.num.primitive();
        let (cd, pd) = arg.den.primitive();
        let scale = cn / cd;
        let (scale_abs, sign) = if scale.is_negative() {
            (-scale.clone(), -1i64)
        } else {
            (scale.clone(), 1i64)
        };
        if scale_abs.is_integer() {
            let k = sign * i64::try_from(scale_abs.numer().clone()).unwrap_or(1);
            let idx = self.tower.intern(SymKind::ExpKeyed {
                num: pn,
                den: pd,
                scale: BigRational::one(),
            });
            return Ok(self.sym_ratfun(idx, k));
        }
        let idx = self.tower.intern(SymKind::ExpKeyed { num: pn, den: pd, scale: scale_abs });
        Ok(self.sym_ratfun(idx, sign))
    }

    /// Split logs linearly over explicit products, quotients and integer
    /// powers before introducing symbols.
    fn normalize_log(&mut self, child: &Expr) -> Result<RatFun, ExprError> {
        match child.node() {
            Node::Product(fs) => {
                let mut acc = RatFun::from_poly(MultiPoly::zero(self.tower.nvars()));
                for f in fs {
                    let r = self.normalize_log(f)?;
                    acc = acc.add(&r);
                }
                Ok(acc)
            }
            Node::Quot(a, b) => {
                let ra = self.normalize_log(a)?;
                let rb = self.normalize_log(b)?;
                let minus_one = RatFun::from_poly(MultiPoly::constant(
                    self.tower.nvars(),
                    -BigRational::one(),
                ));
                Ok(ra.add(&rb.mul(&minus_one)))
            }
            Node::IntPow(b, k) => {
                let rb = self.normalize_log(b)?;
                let kk = RatFun::from_poly(MultiPoly::constant(
                    self.tower.nvars(),
                    BigRational::from_integer((*k).into()),
                ));
                Ok(rb.mul(&kk))
            }
            Node::Exp(u) => self.normalize(u),
            Node::Const(c) => {
                if c.is_zero() || c.is_negative() {
                    return Err(ExprError::Domain("log of non-positive constant".into()));
                }
                if c.is_one() {
                    return Ok(RatFun::from_poly(MultiPoly::zero(self.tower.nvars())));
                }
                let idx = self.tower.intern(SymKind::LogConst(c.clone()));
                Ok(self.sym_ratfun(idx, 1))
            }
            _ => {
                let rf = self.normalize(child)?;
                if rf.num.is_zero() {
                    return Err(ExprError::Domain("log of identically zero expression".into()));
                }
                let a = self.log_poly(rf.num)?;
                let b = self.log_poly(rf.den)?;
                let minus_one = RatFun::from_poly(MultiPoly::constant(
                    self.tower.nvars(),
                    -BigRational::one(),
                ));
                Ok(a.add(&b.mul(&minus_one)))
            }
        }
    }

    fn log_poly(&mut self, p: RPoly) -> Result<RatFun, ExprError> {
        if p.is_constant() {
            let c = p.constant_term();
            if c.is_one() {
                return Ok(RatFun::from_poly(MultiPoly::zero(self.tower.nvars())));
            }
            if c.is_zero() || c.is_negative() {
                return Err(ExprError::Domain("log of non-positive constant".into()));
            }
            let idx = self.tower.intern(SymKind::LogConst(c));
            return Ok(self.sym_ratfun(idx, 1));
        }
        let idx = self.tower.intern(SymKind::LogPoly(p));
        Ok(self.sym_ratfun(idx, 1))
    }
}

pub fn normalize_toplevel(e: &Expr) -> Result<(RatFun, Tower), ExprError> {
    let base = e.ctx().nvars() + e.ctx().nparams();
    let mut n = Normalizer { tower: Tower::new(base) };
    let rf = n.normalize(e)?;
    let rf = rf.extend(n.tower.nvars());
    Ok((rf, n.tower))
}

/// Three-valued zero test.
///
/// `True` iff the canonical numerator vanishes identically (sound and, for
/// tower-free expressions, complete). A nonzero tower-free numerator yields
/// `False`. Otherwise numeric sampling looks for a witness point; failing
/// that the verdict is `Inconclusive`.
pub fn is_zero(e: &Expr) -> Result<Verdict, ExprError> {
    let (rf, tower) = normalize_toplevel(e)?;
    if rf.num.is_zero() {
        return Ok(Verdict::True);
    }
    if tower.is_empty() {
        return Ok(Verdict::False);
    }
    // The numerator may involve tower symbols only through cancelled
    // positions; a numerator free of tower variables is still conclusive.
    let tower_free = rf
        .num
        .terms()
        .all(|(exps, _)| exps[tower.base..].iter().all(|&k| k == 0));
    if tower_free {
        return Ok(Verdict::False);
    }
    // numeric witness search
    let ctx = e.ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
    let mut valid = 0usize;
    for _ in 0..1000 {
        let vars: Vec<f64> = (0..ctx.nvars()).map(|_| rng.gen_range(0.2..1.8)).collect();
        let params: Vec<f64> = (0..ctx.nparams()).map(|_| rng.gen_range(0.2..1.8)).collect();
        match e.eval(&vars, &params) {
            Ok(v) => {
                if v.abs() > 1e-8 {
                    return Ok(Verdict::False);
                }
                valid += 1;
                if valid >= 100 {
                    break;
                }
            }
            Err(_) => continue,
        }
    }
    Ok(Verdict::Inconclusive)
}
