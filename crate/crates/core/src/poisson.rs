//! Poisson structures: the 3D cross-product construction with its structure
//! matrix, certificate verification (antisymmetry, Jacobi identity, field
//! match, Casimir annihilation), the planar structure carried by an inverse
//! Jacobi multiplier, Hamiltonian reconstruction by line integral, and
//! domain partition by the multiplier zero set.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Context, Expr, ExprError, Node, Verdict};
use crate::field::{FieldError, VectorField};

#[derive(Debug, Error)]
pub enum PoissonError {
    #[error("operation requires {expected} state variables, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("multiplier is identically zero")]
    ZeroMultiplier,
    #[error("closedness check div(Y/V) = 0 did not certify (zero test: {0})")]
    NotClosed(Verdict),
    #[error("integration path crosses the zero set of V near ({0}, {1})")]
    PathCrossesZeroSet(f64, f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// An antisymmetric matrix of expressions over a shared context.
#[derive(Clone, Debug)]
pub struct StructureMatrix {
    ctx: Arc<Context>,
    entries: Vec<Vec<Expr>>,
}

fn combine(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    match (a, b) {
        (False, _) | (_, False) => False,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => True,
    }
}

impl StructureMatrix {
    pub fn new(ctx: &Arc<Context>, entries: Vec<Vec<Expr>>) -> Self {
        let n = ctx.nvars();
        assert_eq!(entries.len(), n);
        assert!(entries.iter().all(|r| r.len() == n));
        StructureMatrix {
            ctx: Arc::clone(ctx),
            entries,
        }
    }

    /// Builds the full matrix from the strictly upper triangle, read row by
    /// row; the rest follows from antisymmetry.
    pub fn from_upper(ctx: &Arc<Context>, upper: &[Expr]) -> Self {
        let n = ctx.nvars();
        assert_eq!(upper.len(), n * (n - 1) / 2);
        let mut entries = vec![vec![Expr::int(ctx, 0); n]; n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let e = it.next().unwrap().clone();
                entries[i][j] = e.clone();
                entries[j][i] = e.neg();
            }
        }
        StructureMatrix::new(ctx, entries)
    }

    pub fn ctx(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    /// `J grad(f)` as a component list.
    pub fn apply_grad(&self, f: &Expr) -> Vec<Expr> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let terms = (0..n).map(|j| self.entries[i][j].mul(&f.diff(j))).collect();
                Expr::sum(&self.ctx, terms)
            })
            .collect()
    }

    pub fn check_antisymmetry(&self) -> Result<Verdict, ExprError> {
        let n = self.dim();
        let mut v = Verdict::True;
        for i in 0..n {
            for j in i..n {
                v = combine(v, self.entries[i][j].add(&self.entries[j][i]).is_zero()?);
            }
        }
        Ok(v)
    }

    /// The Jacobi identity
    /// `sum_l J_li d_l J_jk + J_lj d_l J_ki + J_lk d_l J_ij = 0`
    /// for every index triple.
    pub fn check_jacobi(&self) -> Result<Verdict, ExprError> {
        let n = self.dim();
        let mut v = Verdict::True;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let mut terms = Vec::new();
                    for l in 0..n {
                        terms.push(self.entries[l][i].mul(&self.entries[j][k].diff(l)));
                        terms.push(self.entries[l][j].mul(&self.entries[k][i].diff(l)));
                        terms.push(self.entries[l][k].mul(&self.entries[i][j].diff(l)));
                    }
                    v = combine(v, Expr::sum(&self.ctx, terms).is_zero()?);
                }
            }
        }
        Ok(v)
    }
}

/// Outcome of the four certificate checks. Valid only when every verdict is
/// `True`.
#[derive(Clone, Debug)]
pub struct PoissonCertificate {
    pub antisymmetry: Verdict,
    pub jacobi: Verdict,
    pub field_match: Verdict,
    pub casimirs: Vec<Verdict>,
}

impl PoissonCertificate {
    pub fn overall(&self) -> Verdict {
        let mut v = combine(
            combine(self.antisymmetry, self.jacobi),
            self.field_match,
        );
        for &c in &self.casimirs {
            v = combine(v, c);
        }
        v
    }

    pub fn is_valid(&self) -> bool {
        self.overall() == Verdict::True
    }
}

/// The field `eta (grad(H2) x grad(H1))`; `H1` and `H2` are first integrals
/// of the result and `eta` its inverse Jacobi multiplier.
pub fn cross_product_field(
    h1: &Expr,
    h2: &Expr,
    eta: &Expr,
) -> Result<VectorField, PoissonError> {
    let ctx = h1.ctx();
    if ctx.nvars() != 3 {
        return Err(PoissonError::Dimension {
            expected: 3,
            found: ctx.nvars(),
        });
    }
    let a: Vec<Expr> = (0..3).map(|i| h2.diff(i)).collect();
    let b: Vec<Expr> = (0..3).map(|i| h1.diff(i)).collect();
    let cross = vec![
        a[1].mul(&b[2]).sub(&a[2].mul(&b[1])),
        a[2].mul(&b[0]).sub(&a[0].mul(&b[2])),
        a[0].mul(&b[1]).sub(&a[1].mul(&b[0])),
    ];
    Ok(VectorField::new(
        ctx,
        cross.into_iter().map(|c| eta.mul(&c)).collect(),
    )?)
}

/// Structure matrix with Casimir `H2`: `J = eta * skew(grad H2)`, so that
/// `J grad(H1) = eta (grad H2 x grad H1)` and `J grad(H2) = 0`.
pub fn structure_matrix_3d(h2: &Expr, eta: &Expr) -> Result<StructureMatrix, PoissonError> {
    let ctx = h2.ctx();
    if ctx.nvars() != 3 {
        return Err(PoissonError::Dimension {
            expected: 3,
            found: ctx.nvars(),
        });
    }
    let d: Vec<Expr> = (0..3).map(|i| h2.diff(i).mul(eta)).collect();
    Ok(StructureMatrix::from_upper(
        ctx,
        &[d[2].neg(), d[1].clone(), d[0].neg()],
    ))
}

/// Runs the four checks for `xdot = J grad(H)` against a declared field and
/// Casimir list. Each check is three-valued.
pub fn verify_poisson(
    j: &StructureMatrix,
    h: &Expr,
    y: &VectorField,
    casimirs: &[Expr],
) -> Result<PoissonCertificate, PoissonError> {
    let antisymmetry = j.check_antisymmetry()?;
    let jacobi = j.check_jacobi()?;
    let jh = j.apply_grad(h);
    let mut field_match = Verdict::True;
    for (lhs, rhs) in jh.iter().zip(y.components()) {
        field_match = combine(field_match, lhs.sub(rhs).is_zero()?);
    }
    let mut cas = Vec::new();
    for c in casimirs {
        let jc = j.apply_grad(c);
        let mut v = Verdict::True;
        for comp in &jc {
            v = combine(v, comp.is_zero()?);
        }
        cas.push(v);
    }
    Ok(PoissonCertificate {
        antisymmetry,
        jacobi,
        field_match,
        casimirs: cas,
    })
}

/// Numeric functional-independence test: the gradients of `h1` and `h2`
/// span rank 2 at some sampled point of the box.
pub fn functionally_independent(
    h1: &Expr,
    h2: &Expr,
    boxr: &[(f64, f64)],
    params: &[f64],
    seed: u64,
) -> Result<bool, ExprError> {
    use rand::{Rng, SeedableRng};
    let ctx = h1.ctx();
    let n = ctx.nvars();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for _ in 0..200 {
        let x: Vec<f64> = boxr.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let g1: Result<Vec<f64>, _> = (0..n).map(|i| h1.diff(i).eval(&x, params)).collect();
        let g2: Result<Vec<f64>, _> = (0..n).map(|i| h2.diff(i).eval(&x, params)).collect();
        let (Ok(g1), Ok(g2)) = (g1, g2) else { continue };
        checked += 1;
        // Rank 2 iff some 2x2 minor is appreciably nonzero.
        let scale = g1.iter().chain(&g2).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let minor = g1[i] * g2[j] - g1[j] * g2[i];
                if minor.abs() > 1e-9 * scale * scale {
                    return Ok(true);
                }
            }
        }
        if checked >= 50 {
            break;
        }
    }
    Ok(false)
}

/// `J = V [[0, 1], [-1, 0]]`: the planar Poisson structure induced by an
/// inverse Jacobi multiplier on each sign region of `V`.
pub fn planar_structure_from_multiplier(v: &Expr) -> Result<StructureMatrix, PoissonError> {
    let ctx = v.ctx();
    if ctx.nvars() != 2 {
        return Err(PoissonError::Dimension {
            expected: 2,
            found: ctx.nvars(),
        });
    }
    if v.is_zero()? == Verdict::True {
        return Err(PoissonError::ZeroMultiplier);
    }
    Ok(StructureMatrix::from_upper(ctx, &[v.clone()]))
}

/// Hamiltonian value `H(target) - H(base)` for a planar field with
/// multiplier `V`, computed as the line integral of `(P dx2 - Q dx1)/V`
/// along an axis-parallel two-segment polyline. The 1-form must be closed:
/// `div(Y/V) = 0` is certified symbolically first.
pub fn hamiltonian_line_integral(
    y: &VectorField,
    v: &Expr,
    base: [f64; 2],
    target: [f64; 2],
    tol: f64,
    params: &[f64],
) -> Result<f64, PoissonError> {
    let ctx = y.ctx();
    if ctx.nvars() != 2 {
        return Err(PoissonError::Dimension {
            expected: 2,
            found: ctx.nvars(),
        });
    }
    let scaled = VectorField::new(
        ctx,
        y.components().iter().map(|c| c.div(v)).collect(),
    )?;
    let closed = scaled.divergence().is_zero()?;
    if closed != Verdict::True {
        return Err(PoissonError::NotClosed(closed));
    }

    // dH = (P dx2 - Q dx1)/V.
    let p_over_v = y.component(0).div(v);
    let q_over_v = y.component(1).div(v);

    // Two candidate corners; use the first whose segments avoid V = 0.
    let corners = [[target[0], base[1]], [base[0], target[1]]];
    let mut chosen = None;
    'corner: for corner in corners {
        for (a, b) in [(base, corner), (corner, target)] {
            if let Some(bad) = segment_hits_zero(v, a, b, params)? {
                if corner == corners[1] {
                    return Err(PoissonError::PathCrossesZeroSet(bad[0], bad[1]));
                }
                continue 'corner;
            }
        }
        chosen = Some(corner);
        break;
    }
    let corner = chosen.ok_or(PoissonError::PathCrossesZeroSet(base[0], base[1]))?;

    let mut total = 0.0;
    for (a, b) in [(base, corner), (corner, target)] {
        if a[1] == b[1] {
            // Horizontal: integrate -Q/V dx1.
            let f = |x: f64| q_over_v.eval(&[x, a[1]], params).map(|t| -t);
            total += adaptive_simpson(&f, a[0], b[0], tol / 2.0)?;
        } else {
            // Vertical: integrate P/V dx2.
            let f = |t: f64| p_over_v.eval(&[a[0], t], params);
            total += adaptive_simpson(&f, a[1], b[1], tol / 2.0)?;
        }
    }
    Ok(total)
}

fn segment_hits_zero(
    v: &Expr,
    a: [f64; 2],
    b: [f64; 2],
    params: &[f64],
) -> Result<Option<[f64; 2]>, ExprError> {
    let steps = 256;
    let scale = {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        1e-6 * (1.0 + len)
    };
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        if v.eval(&x, params)?.abs() < scale {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> Result<f64, ExprError>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, PoissonError> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> Result<f64, ExprError>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, PoissonError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let fm = f(0.5 * (a + b))?;
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Sign-sampled partition of a rectangle by the zero set of `V`.
#[derive(Clone, Debug)]
pub struct DomainPartition {
    /// Number of connected same-sign components found on the grid.
    pub regions: usize,
    /// Sign of `V` at each grid cell center, row-major (`-1`, `0`, `+1`).
    pub signs: Vec<i8>,
    /// Region label per cell (`usize::MAX` on the zero set).
    pub labels: Vec<usize>,
    pub grid: usize,
    /// Syntactic factor list of `V` (top-level product structure).
    pub factors: Vec<Expr>,
}

pub fn partition_domain(
    v: &Expr,
    boxr: [(f64, f64); 2],
    grid: usize,
    params: &[f64],
) -> Result<DomainPartition, PoissonError> {
    let (x0, x1) = boxr[0];
    let (y0, y1) = boxr[1];
    let mut signs = vec![0i8; grid * grid];
    let mut scale = 0.0f64;
    let mut values = vec![0.0f64; grid * grid];
    for iy in 0..grid {
        for ix in 0..grid {
            let x = x0 + (ix as f64 + 0.5) / grid as f64 * (x1 - x0);
            let y = y0 + (iy as f64 + 0.5) / grid as f64 * (y1 - y0);
            let val = v.eval(&[x, y], params)?;
            values[iy * grid + ix] = val;
            scale = scale.max(val.abs());
        }
    }
    let eps = 1e-12 * (1.0 + scale);
    for (s, &val) in signs.iter_mut().zip(&values) {
        *s = if val > eps {
            1
        } else if val < -eps {
            -1
        } else {
            0
        };
    }

    // Flood fill of same-sign 4-connected components.
    let mut labels = vec![usize::MAX; grid * grid];
    let mut regions = 0;
    let mut stack = Vec::new();
    for start in 0..grid * grid {
        if signs[start] == 0 || labels[start] != usize::MAX {
            continue;
        }
        let sign = signs[start];
        labels[start] = regions;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (iy, ix) = (idx / grid, idx % grid);
            let mut push = |ny: usize, nx: usize| {
                let nidx = ny * grid + nx;
                if labels[nidx] == usize::MAX && signs[nidx] == sign {
                    labels[nidx] = regions;
                    stack.push(nidx);
                }
            };
            if ix > 0 {
                push(iy, ix - 1);
            }
            if ix + 1 < grid {
                push(iy, ix + 1);
            }
            if iy > 0 {
                push(iy - 1, ix);
            }
            if iy + 1 < grid {
                push(iy + 1, ix);
            }
        }
        regions += 1;
    }

    let factors = match v.node() {
        Node::Product(fs) => fs.clone(),
        _ => vec![v.clone()],
    };
    Ok(DomainPartition {
        regions,
        signs,
        labels,
        grid,
        factors,
    })
}
