//! Closed expression trees over a declared set of state variables and free
//! parameters: rationals, sums, products, quotients, integer powers, exp and
//! log. Real powers with non-integer exponents are rewritten as
//! `exp(e*log(u))` at construction time so there is a single differentiation
//! rule for them.
//!
//! Values are immutable after construction (`Arc`-shared nodes); all
//! operations are pure.

mod normal;
mod parse;
mod taylor;

pub use normal::{RatFun, Verdict};
pub use parse::{parse, parse_in, ParseError};

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::coeff::{rat_int, rat_to_f64};

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("mismatched expression contexts")]
    ContextMismatch,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by an identically zero expression")]
    ZeroDenominator,
    #[error("{0}")]
    Series(#[from] crate::series::SeriesError),
    #[error("expression not analytic at expansion center: {0}")]
    NotAnalytic(String),
    #[error("unknown variable or parameter `{0}`")]
    UnknownName(String),
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// Declared state variables and free parameters of an expression family.
#[derive(Debug, PartialEq, Eq)]
pub struct Context {
    vars: Vec<String>,
    params: Vec<String>,
}

impl Context {
    pub fn new<S: Into<String>>(vars: Vec<S>, params: Vec<S>) -> Arc<Context> {
        Arc::new(Context {
            vars: vars.into_iter().map(Into::into).collect(),
            params: params.into_iter().map(Into::into).collect(),
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn nparams(&self) -> usize {
        self.params.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|v| v == name)
    }

    /// Names in normalization order: state variables then parameters.
    pub fn all_names(&self) -> Vec<String> {
        self.vars.iter().chain(self.params.iter()).cloned().collect()
    }
}

#[derive(Debug)]
pub enum Node {
    Const(BigRational),
    Var(usize),
    Param(usize),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quot(Expr, Expr),
    IntPow(Expr, i64),
    Exp(Expr),
    Log(Expr),
}

/// An immutable expression over a shared [`Context`].
#[derive(Debug, Clone)]
pub struct Expr {
    ctx: Arc<Context>,
    node: Arc<Node>,
}

impl Expr {
    fn mk(ctx: &Arc<Context>, node: Node) -> Expr {
        Expr { ctx: ctx.clone(), node: Arc::new(node) }
    }

    pub fn ctx(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn constant(ctx: &Arc<Context>, c: BigRational) -> Expr {
        Expr::mk(ctx, Node::Const(c))
    }

    pub fn int(ctx: &Arc<Context>, n: i64) -> Expr {
        Expr::constant(ctx, rat_int(n))
    }

    pub fn var(ctx: &Arc<Context>, idx: usize) -> Expr {
        assert!(idx < ctx.nvars());
        Expr::mk(ctx, Node::Var(idx))
    }

    pub fn param(ctx: &Arc<Context>, idx: usize) -> Expr {
        assert!(idx < ctx.nparams());
        Expr::mk(ctx, Node::Param(idx))
    }

    /// Look a name up among variables first, then parameters.
    pub fn name(ctx: &Arc<Context>, name: &str) -> Result<Expr, ExprError> {
        if let Some(i) = ctx.var_index(name) {
            Ok(Expr::var(ctx, i))
        } else if let Some(i) = ctx.param_index(name) {
            Ok(Expr::param(ctx, i))
        } else {
            Err(ExprError::UnknownName(name.to_string()))
        }
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match &*self.node {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.as_const(), Some(c) if c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self.as_const(), Some(c) if c.is_one())
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        Expr::sum(&self.ctx, vec![self.clone(), rhs.clone()])
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Expr {
        Expr::int(&self.ctx, -1).mul(self)
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        Expr::product(&self.ctx, vec![self.clone(), rhs.clone()])
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        if rhs.is_one_const() {
            return self.clone();
        }
        if self.is_zero_const() && !rhs.is_zero_const() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if !b.is_zero() {
                return Expr::constant(&self.ctx, a / b);
            }
        }
        Expr::mk(&self.ctx, Node::Quot(self.clone(), rhs.clone()))
    }

    /// Flattening, constant-folding sum constructor.
    pub fn sum(ctx: &Arc<Context>, terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut acc = BigRational::zero();
        for t in terms {
            match &*t.node {
                Node::Const(c) => acc += c,
                Node::Sum(inner) => {
                    for u in inner {
                        match &*u.node {
                            Node::Const(c) => acc += c,
                            _ => flat.push(u.clone()),
                        }
                    }
                }
                _ => flat.push(t.clone()),
            }
        }
        if !acc.is_zero() || flat.is_empty() {
            flat.insert(0, Expr::constant(ctx, acc));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::mk(ctx, Node::Sum(flat))
        }
    }

    /// Flattening, constant-folding product constructor with zero absorption.
    pub fn product(ctx: &Arc<Context>, factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut acc = BigRational::one();
        for f in factors {
            match &*f.node {
                Node::Const(c) => acc *= c,
                Node::Product(inner) => {
                    for u in inner {
                        match &*u.node {
                            Node::Const(c) => acc *= c,
                            _ => flat.push(u.clone()),
                        }
                    }
                }
                _ => flat.push(f.clone()),
            }
        }
        if acc.is_zero() {
            return Expr::constant(ctx, BigRational::zero());
        }
        if !acc.is_one() || flat.is_empty() {
            flat.insert(0, Expr::constant(ctx, acc));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::mk(ctx, Node::Product(flat))
        }
    }

    pub fn int_pow(&self, k: i64) -> Expr {
        match k {
            0 => Expr::int(&self.ctx, 1),
            1 => self.clone(),
            _ => {
                if let Some(c) = self.as_const() {
                    if !c.is_zero() || k > 0 {
                        let mut acc = BigRational::one();
                        for _ in 0..k.unsigned_abs() {
                            acc *= c;
                        }
                        if k < 0 {
                            acc = acc.recip();
                        }
                        return Expr::constant(&self.ctx, acc);
                    }
                }
                Expr::mk(&self.ctx, Node::IntPow(self.clone(), k))
            }
        }
    }

    pub fn exp(&self) -> Expr {
        if self.is_zero_const() {
            return Expr::int(&self.ctx, 1);
        }
        Expr::mk(&self.ctx, Node::Exp(self.clone()))
    }

    /// Logarithm; records an implicit positivity assumption on the child.
    pub fn log(&self) -> Expr {
        if self.is_one_const() {
            return Expr::int(&self.ctx, 0);
        }
        Expr::mk(&self.ctx, Node::Log(self.clone()))
    }

    /// Real power with an arbitrary exponent, rewritten as `exp(e*log(u))`
    /// unless the exponent is an integer constant.
    pub fn real_pow(&self, exponent: &Expr) -> Expr {
        if let Some(c) = exponent.as_const() {
            if c.is_integer() {
                if let Some(k) = c.numer().to_i64() {
                    return self.int_pow(k);
                }
            }
        }
        exponent.mul(&self.log()).exp()
    }

    /// Partial derivative with respect to state variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        let ctx = &self.ctx;
        match &*self.node {
            Node::Const(_) | Node::Param(_) => Expr::int(ctx, 0),
            Node::Var(i) => Expr::int(ctx, if *i == var { 1 } else { 0 }),
            Node::Sum(ts) => Expr::sum(ctx, ts.iter().map(|t| t.diff(var)).collect()),
            Node::Product(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let mut factors: Vec<Expr> = fs.to_vec();
                    factors[i] = f.diff(var);
                    terms.push(Expr::product(ctx, factors));
                }
                Expr::sum(ctx, terms)
            }
            Node::Quot(a, b) => {
                // (a/b)' = (a'b - ab')/b^2
                let num = a.diff(var).mul(b).sub(&a.mul(&b.diff(var)));
                num.div(&b.mul(b))
            }
            Node::IntPow(b, k) => {
                // d(b^k) = k b^(k-1) b'
                Expr::int(ctx, *k).mul(&b.int_pow(k - 1)).mul(&b.diff(var))
            }
            Node::Exp(u) => self.mul(&u.diff(var)),
            Node::Log(u) => u.diff(var).div(u),
        }
    }

    /// Substitute every variable and parameter by the given expressions
    /// (over a possibly different context).
    pub fn substitute(&self, target: &Arc<Context>, var_subs: &[Expr], param_subs: &[Expr]) -> Expr {
        assert_eq!(var_subs.len(), self.ctx.nvars());
        assert_eq!(param_subs.len(), self.ctx.nparams());
        match &*self.node {
            Node::Const(c) => Expr::constant(target, c.clone()),
            Node::Var(i) => var_subs[*i].clone(),
            Node::Param(i) => param_subs[*i].clone(),
            Node::Sum(ts) => Expr::sum(
                target,
                ts.iter().map(|t| t.substitute(target, var_subs, param_subs)).collect(),
            ),
            Node::Product(fs) => Expr::product(
                target,
                fs.iter().map(|f| f.substitute(target, var_subs, param_subs)).collect(),
            ),
            Node::Quot(a, b) => a
                .substitute(target, var_subs, param_subs)
                .div(&b.substitute(target, var_subs, param_subs)),
            Node::IntPow(b, k) => b.substitute(target, var_subs, param_subs).int_pow(*k),
            Node::Exp(u) => u.substitute(target, var_subs, param_subs).exp(),
            Node::Log(u) => u.substitute(target, var_subs, param_subs).log(),
        }
    }

    /// IEEE double evaluation at a point.
    pub fn eval(&self, vars: &[f64], params: &[f64]) -> Result<f64, ExprError> {
        assert_eq!(vars.len(), self.ctx.nvars());
        assert_eq!(params.len(), self.ctx.nparams());
        match &*self.node {
            Node::Const(c) => Ok(rat_to_f64(c)),
            Node::Var(i) => Ok(vars[*i]),
            Node::Param(i) => Ok(params[*i]),
            Node::Sum(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval(vars, params)?;
                }
                Ok(acc)
            }
            Node::Product(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval(vars, params)?;
                }
                Ok(acc)
            }
            Node::Quot(a, b) => {
                let d = b.eval(vars, params)?;
                if d == 0.0 {
                    return Err(ExprError::DivisionByZero);
                }
                Ok(a.eval(vars, params)? / d)
            }
            Node::IntPow(b, k) => {
                let v = b.eval(vars, params)?;
                if v == 0.0 && *k < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                Ok(v.powi(*k as i32))
            }
            Node::Exp(u) => Ok(u.eval(vars, params)?.exp()),
            Node::Log(u) => {
                let v = u.eval(vars, params)?;
                if v <= 0.0 {
                    return Err(ExprError::Domain(format!("log of non-positive value {v}")));
                }
                Ok(v.ln())
            }
        }
    }

    /// Three-valued zero test. See the module docs of [`normal`].
    pub fn is_zero(&self) -> Result<Verdict, ExprError> {
        normal::is_zero(self)
    }

    /// Normalize to a rational function over variables, parameters and
    /// canonicalized transcendental tower elements.
    pub fn normalize(&self) -> Result<(RatFun, normal::Tower), ExprError> {
        normal::normalize_toplevel(self)
    }

    /// Taylor expansion at a rational center, to the given total degree in
    /// the state variables. Parameters stay symbolic.
    pub fn taylor(
        &self,
        center: &[BigRational],
        order: u32,
    ) -> Result<crate::series::TruncSeries<BigRational>, ExprError> {
        taylor::taylor(self, center, order)
    }
}

fn needs_parens_in_product(e: &Expr) -> bool {
    matches!(&*e.node, Node::Sum(_)) || matches!(e.as_const(), Some(c) if c.is_negative())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Const(c) => {
                if c.denom().is_one() {
                    write!(f, "{}", c.numer())
                } else if c.is_negative() {
                    write!(f, "({}/{})", c.numer(), c.denom())
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())
                }
            }
            Node::Var(i) => write!(f, "{}", self.ctx.vars[*i]),
            Node::Param(i) => write!(f, "{}", self.ctx.params[*i]),
            Node::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    // Render a negative leading coefficient as subtraction so the
                    // output stays parseable ("a - 3*b", never "a + -3*b").
                    let negated = match &*t.node {
                        Node::Const(c) if c.is_negative() => Some(t.neg()),
                        Node::Product(fs) => match fs.first().map(|h| &*h.node) {
                            Some(Node::Const(c)) if c.is_negative() => Some(t.neg()),
                            _ => None,
                        },
                        _ => None,
                    };
                    match (i, negated) {
                        (0, None) => write!(f, "{t}")?,
                        (0, Some(n)) => write!(f, "-{n}")?,
                        (_, None) => write!(f, " + {t}")?,
                        (_, Some(n)) => write!(f, " - {n}")?,
                    }
                }
                Ok(())
            }
            Node::Product(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if needs_parens_in_product(x) && i > 0 {
                        write!(f, "({x})")?;
                    } else if matches!(&*x.node, Node::Sum(_)) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            Node::Quot(a, b) => {
                match &*a.node {
                    Node::Sum(_) | Node::Product(_) | Node::Quot(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, "/")?;
                match &*b.node {
                    Node::Const(c) if !c.is_negative() && c.denom().is_one() => write!(f, "{b}"),
                    Node::Var(_) | Node::Param(_) => write!(f, "{b}"),
                    _ => write!(f, "({b})"),
                }
            }
            Node::IntPow(b, k) => {
                match &*b.node {
                    Node::Var(_) | Node::Param(_) => write!(f, "{b}")?,
                    _ => write!(f, "({b})")?,
                }
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Node::Exp(u) => write!(f, "exp({u})"),
            Node::Log(u) => write!(f, "log({u})"),
        }
    }
}
