//! Numeric certification: adaptive trajectory integration with
//! switching-surface events, invariant-measure drift estimation by Liouville
//! transport, weak-multiplier residuals against compactly supported test
//! functions, and invariant-curve checks for piecewise fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Context, Expr, ExprError, Node, Verdict};
use crate::field::{FieldError, VectorField};

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("event count exceeded {0}; sliding-mode suspicion — not supported")]
    MaxEventsExceeded(usize),
    #[error("sliding mode at t = {0}: both branch fields point toward the switching curve")]
    SlidingMode(f64),
    #[error("trajectory left the guard box at t = {0}")]
    Escape(f64),
    #[error("multiplier not strictly positive on the sampled region")]
    NonPositiveMultiplier,
    #[error("quadrature did not converge to the requested tolerance")]
    QuadratureNonConvergence,
    #[error("initial point lies on the switching curve and neither side continues")]
    DegenerateStart,
    #[error("switching-curve gradient vanishes at a sampled curve point")]
    DegenerateGradient,
    #[error("no curve points found in the sampling box")]
    NoCurvePoints,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Planar field with two smooth branches separated by the zero set of `gamma`
/// (`plus` acts where `gamma > 0`, `minus` where `gamma < 0`).
#[derive(Clone, Debug)]
pub struct PiecewiseField {
    gamma: Expr,
    plus: VectorField,
    minus: VectorField,
}

impl PiecewiseField {
    pub fn new(gamma: Expr, plus: VectorField, minus: VectorField) -> Self {
        assert_eq!(plus.ctx().vars(), minus.ctx().vars());
        assert_eq!(plus.ctx().params(), minus.ctx().params());
        assert_eq!(gamma.ctx().vars(), plus.ctx().vars());
        PiecewiseField { gamma, plus, minus }
    }

    pub fn gamma(&self) -> &Expr {
        &self.gamma
    }

    pub fn plus(&self) -> &VectorField {
        &self.plus
    }

    pub fn minus(&self) -> &VectorField {
        &self.minus
    }

    pub fn ctx(&self) -> &Arc<Context> {
        self.plus.ctx()
    }
}

/// Scalar function with possibly discontinuous branches across the zero set
/// of `gamma`.
#[derive(Clone, Debug)]
pub struct PiecewiseExpr {
    pub gamma: Expr,
    pub plus: Expr,
    pub minus: Expr,
}

/// Compactly supported C-infinity test profile
/// `phi = exp(-1/(1 - r^2))` for `r = |x - center|/radius < 1`, zero outside.
#[derive(Clone, Copy, Debug)]
pub struct BumpTest {
    pub center: [f64; 2],
    pub radius: f64,
}

impl BumpTest {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let u = self.r2(x, y);
        if u >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u)).exp()
        }
    }

    /// Gradient of the profile; vanishes smoothly on the support boundary.
    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        let u = self.r2(x, y);
        if u >= 1.0 {
            return [0.0, 0.0];
        }
        let phi = (-1.0 / (1.0 - u)).exp();
        let dphi_du = -phi / ((1.0 - u) * (1.0 - u));
        let s = 2.0 / (self.radius * self.radius);
        [
            dphi_du * s * (x - self.center[0]),
            dphi_du * s * (y - self.center[1]),
        ]
    }

    fn r2(&self, x: f64, y: f64) -> f64 {
        let dx = (x - self.center[0]) / self.radius;
        let dy = (y - self.center[1]) / self.radius;
        dx * dx + dy * dy
    }
}

#[derive(Clone, Debug)]
pub struct Event {
    pub time: f64,
    pub state: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }
}

// ---------------------------------------------------------------------------
// Compiled expression evaluation (stack machine; parameters baked in).
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum Instr {
    Const(f64),
    Var(usize),
    AddN(usize),
    MulN(usize),
    Div,
    Powi(i32),
    Exp,
    Ln,
}

/// Expression flattened to postfix form for fast repeated evaluation with
/// fixed parameter values.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    prog: Vec<Instr>,
}

impl CompiledExpr {
    pub fn new(e: &Expr, params: &[f64]) -> Self {
        let mut prog = Vec::new();
        compile_node(e, params, &mut prog);
        CompiledExpr { prog }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for instr in &self.prog {
            match *instr {
                Instr::Const(c) => stack.push(c),
                Instr::Var(i) => stack.push(x[i]),
                Instr::AddN(n) => {
                    let mut acc = 0.0;
                    for _ in 0..n {
                        acc += stack.pop().unwrap();
                    }
                    stack.push(acc);
                }
                Instr::MulN(n) => {
                    let mut acc = 1.0;
                    for _ in 0..n {
                        acc *= stack.pop().unwrap();
                    }
                    stack.push(acc);
                }
                Instr::Div => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(a / b);
                }
                Instr::Powi(k) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powi(k));
                }
                Instr::Exp => {
                    let a = stack.pop().unwrap();
                    stack.push(a.exp());
                }
                Instr::Ln => {
                    let a = stack.pop().unwrap();
                    stack.push(a.ln());
                }
            }
        }
        stack.pop().unwrap()
    }
}

fn compile_node(e: &Expr, params: &[f64], prog: &mut Vec<Instr>) {
    match e.node() {
        Node::Const(c) => prog.push(Instr::Const(crate::coeff::rat_to_f64(c))),
        Node::Var(i) => prog.push(Instr::Var(*i)),
        Node::Param(i) => prog.push(Instr::Const(params[*i])),
        Node::Sum(ts) => {
            for t in ts {
                compile_node(t, params, prog);
            }
            prog.push(Instr::AddN(ts.len()));
        }
        Node::Product(fs) => {
            for f in fs {
                compile_node(f, params, prog);
            }
            prog.push(Instr::MulN(fs.len()));
        }
        Node::Quot(a, b) => {
            compile_node(a, params, prog);
            compile_node(b, params, prog);
            prog.push(Instr::Div);
        }
        Node::IntPow(a, k) => {
            compile_node(a, params, prog);
            prog.push(Instr::Powi(*k as i32));
        }
        Node::Exp(a) => {
            compile_node(a, params, prog);
            prog.push(Instr::Exp);
        }
        Node::Log(a) => {
            compile_node(a, params, prog);
            prog.push(Instr::Ln);
        }
    }
}

fn compile_field(y: &VectorField, params: &[f64]) -> Vec<CompiledExpr> {
    y.components()
        .iter()
        .map(|c| CompiledExpr::new(c, params))
        .collect()
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with adaptive step size.
// ---------------------------------------------------------------------------

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded step; returns the fifth-order state and the scaled error.
fn dp_step<F: Fn(&[f64], &mut [f64])>(f: &F, x: &[f64], h: f64, tol: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; 7];
    f(x, &mut k[0]);
    let mut tmp = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += DP_A[s - 1][j] * kj[i];
            }
            tmp[i] = x[i] + h * acc;
        }
        let (head, tail) = k.split_at_mut(s);
        let _ = head;
        f(&tmp, &mut tail[0]);
    }
    let mut x5 = vec![0.0; n];
    let mut err = 0.0f64;
    for i in 0..n {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for (j, kj) in k.iter().enumerate() {
            s5 += DP_B5[j] * kj[i];
            s4 += DP_B4[j] * kj[i];
        }
        x5[i] = x[i] + h * s5;
        let sc = tol + tol * x[i].abs().max(x5[i].abs());
        let d = h * (s5 - s4) / sc;
        err += d * d;
    }
    (x5, (err / n as f64).sqrt())
}

/// Advances the autonomous system to `t_end`, recording accepted steps.
/// `observe` sees every accepted state; `guard` may abort the run.
fn integrate_adaptive<F>(
    f: &F,
    x0: &[f64],
    t_end: f64,
    tol: f64,
    mut on_step: impl FnMut(f64, &[f64]) -> Result<(), NumericError>,
) -> Result<(), NumericError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut h = (t_end / 100.0).max(1e-6).min(t_end);
    on_step(0.0, &x)?;
    while t < t_end {
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(NumericError::StepSizeUnderflow(t));
        }
        h = h.min(t_end - t);
        let (xn, err) = dp_step(f, &x, h, tol);
        if err <= 1.0 {
            t += h;
            x = xn;
            on_step(t, &x)?;
        }
        let fac = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= fac;
    }
    Ok(())
}

/// Integrates a smooth field from `x0` for time `t_end` (local error per
/// step bounded by `tol`).
pub fn integrate(
    y: &VectorField,
    x0: &[f64],
    t_end: f64,
    tol: f64,
    params: &[f64],
) -> Result<Trajectory, NumericError> {
    let comps = compile_field(y, params);
    let f = |x: &[f64], dx: &mut [f64]| {
        for (d, c) in dx.iter_mut().zip(&comps) {
            *d = c.eval(x);
        }
    };
    let mut times = Vec::new();
    let mut states = Vec::new();
    integrate_adaptive(&f, x0, t_end, tol, |t, x| {
        times.push(t);
        states.push(x.to_vec());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        states,
        events: Vec::new(),
    })
}

const MAX_EVENTS: usize = 10_000;

/// Integrates a piecewise field with event localization: each sign change of
/// `gamma` is bisected in time to 1e-12, the crossing is recorded, and the
/// branch field is switched exactly at the event. Sliding configurations
/// (both branches pointing toward the curve) are reported, not handled.
pub fn integrate_piecewise(
    pf: &PiecewiseField,
    x0: &[f64],
    t_end: f64,
    tol: f64,
    params: &[f64],
) -> Result<Trajectory, NumericError> {
    let g = CompiledExpr::new(&pf.gamma, params);
    let n = pf.ctx().nvars();
    let grad_g: Vec<CompiledExpr> = (0..n)
        .map(|i| CompiledExpr::new(&pf.gamma.diff(i), params))
        .collect();
    let plus = compile_field(&pf.plus, params);
    let minus = compile_field(&pf.minus, params);

    let g0 = g.eval(x0);
    let mut side: i8 = if g0 > 0.0 {
        1
    } else if g0 < 0.0 {
        -1
    } else {
        // Start on the curve: pick the side whose field leaves the curve.
        let normal: Vec<f64> = grad_g.iter().map(|d| d.eval(x0)).collect();
        let mut dx = vec![0.0; n];
        let eval_normal = |comps: &[CompiledExpr], dx: &mut Vec<f64>| {
            for (d, c) in dx.iter_mut().zip(comps) {
                *d = c.eval(x0);
            }
            dx.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>()
        };
        if eval_normal(&plus, &mut dx) > 0.0 {
            1
        } else if eval_normal(&minus, &mut dx) < 0.0 {
            -1
        } else {
            return Err(NumericError::DegenerateStart);
        }
    };

    let field_for = |side: i8| if side > 0 { &plus } else { &minus };
    let eval_field = |side: i8, x: &[f64], dx: &mut [f64]| {
        for (d, c) in dx.iter_mut().zip(field_for(side)) {
            *d = c.eval(x);
        }
    };

    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut events = Vec::new();

    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut h = (t_end / 100.0).max(1e-8).min(t_end);
    while t < t_end {
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(NumericError::StepSizeUnderflow(t));
        }
        h = h.min(t_end - t);
        let s = side;
        let f = |y: &[f64], dy: &mut [f64]| eval_field(s, y, dy);
        let (xn, err) = dp_step(&f, &x, h, tol);
        if err <= 1.0 {
            let gn = g.eval(&xn);
            if gn as f64 * side as f64 >= 0.0 || gn == 0.0 {
                t += h;
                x = xn;
                times.push(t);
                states.push(x.clone());
            } else {
                // Bisect the crossing time within [0, h].
                let (mut lo, mut hi) = (0.0f64, h);
                let mut xe = xn.clone();
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    let (xm, _) = dp_step(&f, &x, mid, tol);
                    if g.eval(&xm) as f64 * side as f64 >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                        xe = xm;
                    }
                }
                let te = t + hi;
                // Transversality at the event: reject sliding.
                let normal: Vec<f64> = grad_g.iter().map(|d| d.eval(&xe)).collect();
                let mut dx = vec![0.0; n];
                eval_field(-side, &xe, &mut dx);
                let outgoing: f64 = dx.iter().zip(&normal).map(|(a, b)| a * b).sum();
                if outgoing as f64 * side as f64 >= 0.0 {
                    return Err(NumericError::SlidingMode(te));
                }
                events.push(Event {
                    time: te,
                    state: xe.clone(),
                });
                if events.len() > MAX_EVENTS {
                    return Err(NumericError::MaxEventsExceeded(MAX_EVENTS));
                }
                t = te;
                x = xe;
                side = -side;
                times.push(t);
                states.push(x.clone());
            }
        }
        let fac = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= fac;
    }
    Ok(Trajectory {
        times,
        states,
        events,
    })
}

/// Accumulated divergence integral along the trajectory from `x0`:
/// `int_0^t div Y(phi_s(x0)) ds`, computed as an extra integrated state.
pub fn divergence_accumulation(
    y: &VectorField,
    x0: &[f64],
    t_end: f64,
    tol: f64,
    params: &[f64],
) -> Result<f64, NumericError> {
    let comps = compile_field(y, params);
    let div = CompiledExpr::new(&y.divergence(), params);
    let n = x0.len();
    let f = |z: &[f64], dz: &mut [f64]| {
        for (d, c) in dz.iter_mut().zip(&comps) {
            *d = c.eval(&z[..n]);
        }
        dz[n] = div.eval(&z[..n]);
    };
    let mut z0 = x0.to_vec();
    z0.push(0.0);
    let mut last = 0.0;
    integrate_adaptive(&f, &z0, t_end, tol, |_, z| {
        last = z[n];
        Ok(())
    })?;
    Ok(last)
}

/// Relative drift of the invariant measure `dx / V` over time `t`:
/// Monte-Carlo samples of the region are transported by the flow, with the
/// image integral valued through the accumulated-divergence identity
/// `int_{phi_t(G)} dx/V = int_G exp(int_0^t div Y ds) / V(phi_t(x)) dx`.
#[allow(clippy::too_many_arguments)]
pub fn measure_preservation_check(
    y: &VectorField,
    v: &Expr,
    region: &[(f64, f64)],
    t: f64,
    samples: usize,
    tol: f64,
    seed: u64,
    params: &[f64],
) -> Result<f64, NumericError> {
    let n = y.ctx().nvars();
    assert_eq!(region.len(), n);
    let comps = compile_field(y, params);
    let div = CompiledExpr::new(&y.divergence(), params);
    let vc = CompiledExpr::new(v, params);

    // Guard box: generous dilation of the sampling region.
    let guard: Vec<(f64, f64)> = region
        .iter()
        .map(|&(lo, hi)| {
            let w = (hi - lo).max(1.0);
            (lo - 50.0 * w, hi + 50.0 * w)
        })
        .collect();

    let f = |z: &[f64], dz: &mut [f64]| {
        for (d, c) in dz.iter_mut().zip(&comps) {
            *d = c.eval(&z[..n]);
        }
        dz[n] = div.eval(&z[..n]);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut i0 = 0.0;
    let mut it = 0.0;
    for _ in 0..samples {
        let x0: Vec<f64> = region.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let v0 = vc.eval(&x0);
        if !(v0 > 0.0) {
            return Err(NumericError::NonPositiveMultiplier);
        }
        i0 += 1.0 / v0;
        if t == 0.0 {
            it += 1.0 / v0;
            continue;
        }
        let mut z0 = x0.clone();
        z0.push(0.0);
        let mut zt = z0.clone();
        integrate_adaptive(&f, &z0, t, tol, |time, z| {
            for (zi, &(lo, hi)) in z[..n].iter().zip(&guard) {
                if *zi < lo || *zi > hi {
                    return Err(NumericError::Escape(time));
                }
            }
            zt = z.to_vec();
            Ok(())
        })?;
        let vt = vc.eval(&zt[..n]);
        if !(vt > 0.0) {
            return Err(NumericError::NonPositiveMultiplier);
        }
        it += zt[n].exp() / vt;
    }
    Ok((it - i0).abs() / i0)
}

// ---------------------------------------------------------------------------
// Weak multiplier residual.
// ---------------------------------------------------------------------------

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
const K15_X: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_5,
    0.405_845_151_377_397_2,
    0.586_087_235_467_691_1,
    0.741_531_185_599_394_4,
    0.864_864_423_359_769_1,
    0.949_107_912_342_758_5,
    0.991_455_371_120_812_6,
];
const K15_W: [f64; 8] = [
    0.209_482_141_084_727_8,
    0.204_432_940_075_298_9,
    0.190_350_578_064_785_4,
    0.169_004_726_639_267_9,
    0.140_653_259_715_525_9,
    0.104_790_010_322_250_2,
    0.063_092_092_629_978_6,
    0.022_935_322_010_529_2,
];
const G7_W: [f64; 4] = [
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64, Option<f64>); 15] {
    // (node, kronrod weight, gauss weight if shared) scaled to [a, b].
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, None); 15];
    let mut idx = 0;
    for i in 0..8 {
        let gw = match i {
            0 => Some(G7_W[0] * hw),
            2 => Some(G7_W[1] * hw),
            4 => Some(G7_W[2] * hw),
            6 => Some(G7_W[3] * hw),
            _ => None,
        };
        if i == 0 {
            out[idx] = (c, K15_W[0] * hw, gw);
            idx += 1;
        } else {
            out[idx] = (c - hw * K15_X[i], K15_W[i] * hw, gw);
            idx += 1;
            out[idx] = (c + hw * K15_X[i], K15_W[i] * hw, gw);
            idx += 1;
        }
    }
    out
}

/// Tensor-product G7/K15 over a rectangle; returns (kronrod, |kronrod - gauss|).
fn gk2d(f: &dyn Fn(f64, f64) -> f64, cell: [f64; 4]) -> (f64, f64) {
    let nx = kronrod_nodes(cell[0], cell[1]);
    let ny = kronrod_nodes(cell[2], cell[3]);
    let mut k = 0.0;
    let mut g = 0.0;
    for &(x, kwx, gwx) in &nx {
        for &(y, kwy, gwy) in &ny {
            let v = f(x, y);
            k += kwx * kwy * v;
            if let (Some(gx), Some(gy)) = (gwx, gwy) {
                g += gx * gy * v;
            }
        }
    }
    (k, (k - g).abs())
}

// Degree-5 rule on a triangle: barycentric node groups and weights.
const TRI_W: [f64; 3] = [0.225, 0.132_394_152_788_506_18, 0.125_939_180_544_827_15];
const TRI_A: [f64; 2] = [0.470_142_064_105_115_05, 0.101_286_507_323_456_33];

fn tri_integrate(f: &dyn Fn(f64, f64) -> f64, p: [[f64; 2]; 3]) -> f64 {
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
            .abs();
    if area == 0.0 {
        return 0.0;
    }
    let at = |l: [f64; 3]| {
        (
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        )
    };
    let mut acc = {
        let (x, y) = at([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        TRI_W[0] * f(x, y)
    };
    for (group, &a) in TRI_A.iter().enumerate() {
        let b = 1.0 - 2.0 * a;
        for perm in [[a, a, b], [a, b, a], [b, a, a]] {
            let (x, y) = at(perm);
            acc += TRI_W[group + 1] * f(x, y);
        }
    }
    acc * area
}

fn bisect_edge(g: &dyn Fn(f64, f64) -> f64, mut a: [f64; 2], mut b: [f64; 2]) -> [f64; 2] {
    // Precondition: g changes sign between a and b.
    for _ in 0..60 {
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if g(a[0], a[1]) * g(m[0], m[1]) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Splits a small cell along the chord approximating the interface and
/// integrates each side with its own branch via triangulation.
fn interface_cell_integral(
    f: &dyn Fn(f64, f64, i8) -> f64,
    g: &dyn Fn(f64, f64) -> f64,
    cell: [f64; 4],
) -> Option<f64> {
    let corners = [
        [cell[0], cell[2]],
        [cell[1], cell[2]],
        [cell[1], cell[3]],
        [cell[0], cell[3]],
    ];
    let signs: Vec<f64> = corners.iter().map(|c| g(c[0], c[1])).collect();
    let mut crossings = Vec::new();
    for i in 0..4 {
        let j = (i + 1) % 4;
        if signs[i] * signs[j] < 0.0 {
            crossings.push((i, bisect_edge(g, corners[i], corners[j])));
        }
    }
    if crossings.len() != 2 {
        return None;
    }
    // Boundary polygon of the region containing corner k, split by the chord.
    let mut total = 0.0;
    for side_sign in [1.0f64, -1.0] {
        let mut poly: Vec<[f64; 2]> = Vec::new();
        for i in 0..4 {
            if signs[i] * side_sign > 0.0 {
                poly.push(corners[i]);
            }
            if let Some(&(_, pt)) = crossings.iter().find(|&&(e, _)| e == i) {
                poly.push(pt);
            }
        }
        if poly.len() < 3 {
            continue;
        }
        let branch: i8 = if side_sign > 0.0 { 1 } else { -1 };
        let fb = |x: f64, y: f64| f(x, y, branch);
        for k in 1..poly.len() - 1 {
            total += tri_integrate(&fb, [poly[0], poly[k], poly[k + 1]]);
        }
    }
    Some(total)
}

/// Adaptive piecewise quadrature of `f` over a rectangle: smooth cells use
/// tensor Gauss-Kronrod with the branch chosen by the sign of `g`; cells
/// straddling the zero set of `g` are subdivided until their diameter falls
/// below `min_diam` and then split along the local chord.
fn quad_piecewise(
    f: &dyn Fn(f64, f64, i8) -> f64,
    g: &dyn Fn(f64, f64) -> f64,
    domain: [f64; 4],
    tol: f64,
    min_diam: f64,
) -> Result<f64, NumericError> {
    struct Cell {
        rect: [f64; 4],
        tol: f64,
        depth: u32,
    }
    let mut stack = vec![Cell {
        rect: domain,
        tol,
        depth: 0,
    }];
    let mut total = 0.0;
    while let Some(c) = stack.pop() {
        let [x0, x1, y0, y1] = c.rect;
        if c.depth > 60 {
            return Err(NumericError::QuadratureNonConvergence);
        }
        // Sign scan on a 4x4 lattice including corners.
        let mut pos = false;
        let mut neg = false;
        for i in 0..4 {
            for j in 0..4 {
                let s = i as f64 / 3.0;
                let t = j as f64 / 3.0;
                // Convex combinations hit the cell corners exactly, so cells
                // whose edge lies on the curve are not treated as straddling.
                let v = g(x0 * (1.0 - s) + x1 * s, y0 * (1.0 - t) + y1 * t);
                pos |= v > 0.0;
                neg |= v < 0.0;
            }
        }
        let diam = (x1 - x0).hypot(y1 - y0);
        if pos && neg {
            if diam < min_diam {
                if let Some(v) = interface_cell_integral(f, g, c.rect) {
                    total += v;
                    continue;
                }
                if diam < 1e-2 * min_diam {
                    // Degenerate interface configuration (curve through a
                    // corner or tangency): the cell is tiny, so pointwise
                    // branch selection bounds the error by the cell area.
                    let fb = |x: f64, y: f64| {
                        f(x, y, if g(x, y) >= 0.0 { 1 } else { -1 })
                    };
                    total += gk2d(&fb, c.rect).0;
                    continue;
                }
            }
        } else {
            let branch: i8 = if pos { 1 } else { -1 };
            let fb = |x: f64, y: f64| f(x, y, branch);
            let (val, err) = gk2d(&fb, c.rect);
            if err <= c.tol || diam < 1e-9 * min_diam.max(1.0) {
                total += val;
                continue;
            }
        }
        let xm = 0.5 * (x0 + x1);
        let ym = 0.5 * (y0 + y1);
        for rect in [
            [x0, xm, y0, ym],
            [xm, x1, y0, ym],
            [x0, xm, ym, y1],
            [xm, x1, ym, y1],
        ] {
            stack.push(Cell {
                rect,
                tol: c.tol / 4.0,
                depth: c.depth + 1,
            });
        }
    }
    Ok(total)
}

/// Residual of the weak invariance identity
/// `int W [Y(phi) + 2 phi div Y] dx dy` over the support of the bump.
pub fn weak_multiplier_residual(
    field: &PiecewiseField,
    w: &PiecewiseExpr,
    phi: &BumpTest,
    quad_tol: f64,
    params: &[f64],
) -> Result<f64, NumericError> {
    let plus = compile_field(&field.plus, params);
    let minus = compile_field(&field.minus, params);
    let dplus = CompiledExpr::new(&field.plus.divergence(), params);
    let dminus = CompiledExpr::new(&field.minus.divergence(), params);
    let wplus = CompiledExpr::new(&w.plus, params);
    let wminus = CompiledExpr::new(&w.minus, params);
    let gam = CompiledExpr::new(&field.gamma, params);

    let integrand = |x: f64, y: f64, side: i8| -> f64 {
        let p = [x, y];
        let phi_v = phi.value(x, y);
        let grad = phi.grad(x, y);
        let (comps, div, wv) = if side > 0 {
            (&plus, &dplus, &wplus)
        } else {
            (&minus, &dminus, &wminus)
        };
        let yphi = comps[0].eval(&p) * grad[0] + comps[1].eval(&p) * grad[1];
        wv.eval(&p) * (yphi + 2.0 * phi_v * div.eval(&p))
    };
    let g = |x: f64, y: f64| gam.eval(&[x, y]);
    let domain = [
        phi.center[0] - phi.radius,
        phi.center[0] + phi.radius,
        phi.center[1] - phi.radius,
        phi.center[1] + phi.radius,
    ];
    quad_piecewise(&integrand, &g, domain, quad_tol, 1e-3 * phi.radius)
}

// ---------------------------------------------------------------------------
// Invariant curve check.
// ---------------------------------------------------------------------------

/// Whether the zero set of `gamma` is invariant for every given branch
/// field: the Lie derivative of `gamma` must vanish on the curve. When the
/// curve is solvable for a variable with constant coefficient the check is
/// symbolic; otherwise curve points are sampled in `boxr` and the derivative
/// bounded by 1e-10 there.
pub fn invariant_curve_check(
    fields: &[&VectorField],
    gamma: &Expr,
    boxr: &[(f64, f64)],
    samples: usize,
    params: &[f64],
) -> Result<bool, NumericError> {
    let ctx = gamma.ctx();
    let n = ctx.nvars();

    // Symbolic route: gamma linear in some variable with rational slope.
    for i in 0..n {
        let d = gamma.diff(i);
        let Some(c) = d.as_const() else { continue };
        if num_traits::Zero::is_zero(c) {
            continue;
        }
        let mut vars: Vec<Expr> = (0..n).map(|j| Expr::var(ctx, j)).collect();
        vars[i] = Expr::int(ctx, 0);
        let rest = gamma.substitute(ctx, &vars, &param_identity(ctx));
        vars[i] = rest.neg().div(&d);
        let mut ok = true;
        for f in fields {
            let lie = f.lie_derivative(gamma);
            let on_curve = lie.substitute(ctx, &vars, &param_identity(ctx));
            match on_curve.is_zero()? {
                Verdict::True => {}
                Verdict::False => return Ok(false),
                Verdict::Inconclusive => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(true);
        }
    }

    // Numeric route: locate curve points by bisection along random segments.
    let gc = CompiledExpr::new(gamma, params);
    let grads: Vec<CompiledExpr> = (0..n)
        .map(|i| Ok(CompiledExpr::new(&gamma.diff(i), params)))
        .collect::<Result<_, NumericError>>()?;
    let lies: Vec<CompiledExpr> = fields
        .iter()
        .map(|f| Ok(CompiledExpr::new(&f.lie_derivative(gamma), params)))
        .collect::<Result<_, NumericError>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut found = 0;
    let mut tries = 0;
    while found < samples && tries < 100 * samples {
        tries += 1;
        let a: Vec<f64> = boxr.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let b: Vec<f64> = boxr.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        if gc.eval(&a) * gc.eval(&b) >= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..80 {
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(p, q)| 0.5 * (p + q)).collect();
            if gc.eval(&lo) * gc.eval(&mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let pt = lo;
        let gnorm: f64 = grads.iter().map(|d| d.eval(&pt).powi(2)).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            return Err(NumericError::DegenerateGradient);
        }
        found += 1;
        for lie in &lies {
            if lie.eval(&pt).abs() > 1e-10 {
                return Ok(false);
            }
        }
    }
    if found == 0 {
        return Err(NumericError::NoCurvePoints);
    }
    Ok(true)
}

fn param_identity(ctx: &Arc<Context>) -> Vec<Expr> {
    (0..ctx.nparams()).map(|i| Expr::param(ctx, i)).collect()
}
