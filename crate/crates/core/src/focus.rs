//! Center-focus machinery: complexification of a planar family with
//! rotation linear part and exact computation of focus quantities.
//!
//! For `zdot = i z + F(z, w)` (with `w` the formal conjugate) a formal first
//! integral `H = z w + sum h_pq z^p w^q` is built degree by degree. The
//! non-resonant coefficients are forced; on the resonant diagonal the
//! obstruction `g_j` is read off from `X(H) = sum_j g_j (z w)^{j+1}`, with
//! the normalization `h_{j+1,j+1} = 0`.

use num_complex::Complex;
use num_rational::BigRational;
use thiserror::Error;

use crate::coeff::{gauss_conj, gauss_i, rat_int, rat_to_f64, Coeff, GaussRat};
use crate::expr::{Expr, ExprError};
use crate::poly::MultiPoly;
use crate::reduce::PlanarFamily;

pub const DEFAULT_K: usize = 3;

#[derive(Debug, Error)]
pub enum FocusError {
    #[error("component is not polynomial in the state variables")]
    NotPolynomial,
    #[error("linear part is not exactly (-x2, x1)")]
    WrongLinearPart,
    #[error("focus quantity g_{0} has a nonzero imaginary part")]
    RealityFailure(usize),
    #[error("unknown parameter `{0}` in substitution")]
    UnknownParameter(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `zdot = i z + F(z, w)` over the ring `[z, w, trailing...]`, where the
/// trailing variables are the level value and the real parameters.
#[derive(Clone, Debug)]
pub struct ComplexSystem {
    f: MultiPoly<GaussRat>,
    names: Vec<String>,
}

/// Focus quantities `g_1..g_k` as exact polynomials in the trailing
/// variables.
#[derive(Clone, Debug)]
pub struct FocusReport {
    pub quantities: Vec<MultiPoly<BigRational>>,
    /// Names of the trailing variables the quantities live over.
    pub names: Vec<String>,
}

impl FocusReport {
    pub fn all_vanish(&self) -> bool {
        self.quantities.iter().all(|g| g.is_zero())
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.quantities.iter().position(|g| !g.is_zero()).map(|j| j + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CenterVerdict {
    /// Every computed quantity vanishes identically.
    ConsistentWithCenterToOrder(usize),
    /// `g_j` is not identically zero for the given `j`.
    FocusCertified(usize),
}

/// A parameter substitution for center-condition checks.
#[derive(Clone, Debug)]
pub enum Subst {
    Rat(BigRational),
    Param(String),
}

fn conj_swap(f: &MultiPoly<GaussRat>) -> MultiPoly<GaussRat> {
    let n = f.nvars();
    let mut out = MultiPoly::zero(n);
    for (e, c) in f.terms() {
        let mut es = e.clone();
        es.swap(0, 1);
        out = out.add(&MultiPoly::monomial(n, es, gauss_conj(c)));
    }
    out
}

impl ComplexSystem {
    /// Complexifies a planar polynomial system `x1dot = P`, `x2dot = Q`
    /// given over the ring `[x1, x2, trailing...]`. The linear part must be
    /// exactly the rotation `(-x2, x1)`.
    pub fn complexify(
        p: &MultiPoly<BigRational>,
        q: &MultiPoly<BigRational>,
        names: &[String],
    ) -> Result<Self, FocusError> {
        let n = p.nvars();
        assert_eq!(q.nvars(), n);
        let lin = |i: usize, c: i64| {
            let mut e = vec![0u32; n];
            e[i] = 1;
            MultiPoly::monomial(n, e, rat_int(c))
        };
        if !p.graded_part(2, 0).is_zero()
            || !q.graded_part(2, 0).is_zero()
            || p.graded_part(2, 1) != lin(1, -1)
            || q.graded_part(2, 1) != lin(0, 1)
        {
            return Err(FocusError::WrongLinearPart);
        }
        let i_c = gauss_i();
        let to_c = |r: &MultiPoly<BigRational>| r.map_coeffs(|c| GaussRat::from_rat(c));
        let half = GaussRat::from_rat(&BigRational::new(1.into(), 2.into()));
        let half_i = i_c.mul(&half);
        // x1 = (z + w)/2, x2 = i (w - z)/2
        let z = MultiPoly::var(n, 0);
        let w = MultiPoly::var(n, 1);
        let mut subs: Vec<MultiPoly<GaussRat>> = (0..n).map(|i| MultiPoly::var(n, i)).collect();
        subs[0] = z.add(&w).scale(&half);
        subs[1] = w.sub(&z).scale(&half_i);
        let pc = to_c(p).compose(&subs);
        let qc = to_c(q).compose(&subs);
        let f = pc.add(&qc.scale(&i_c)).sub(&z.scale(&i_c));
        debug_assert!(f.graded_part(2, 0).is_zero() && f.graded_part(2, 1).is_zero());
        let mut full_names = vec!["z".to_string(), "w".to_string()];
        full_names.extend_from_slice(&names[2..]);
        Ok(ComplexSystem { f, names: full_names })
    }

    /// Complexifies a reduced level-set family, treating the level value
    /// `h` as a parameter.
    pub fn from_planar_family(z: &PlanarFamily) -> Result<Self, FocusError> {
        let names: Vec<String> = z.names().to_vec();
        Self::complexify(
            z.components()[0].poly(),
            z.components()[1].poly(),
            &names,
        )
    }

    /// Complexifies a planar vector field whose components are polynomial.
    pub fn from_field(y: &crate::field::VectorField) -> Result<Self, FocusError> {
        let mut polys = Vec::with_capacity(2);
        for c in y.components() {
            polys.push(expr_to_poly(c)?);
        }
        let mut names = vec![y.ctx().vars()[0].clone(), y.ctx().vars()[1].clone()];
        names.extend(y.ctx().params().iter().cloned());
        Self::complexify(&polys[0], &polys[1], &names)
    }

    pub fn f(&self) -> &MultiPoly<GaussRat> {
        &self.f
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The formal conjugate component: `wdot = -i w + conj(F)(w, z)`.
    pub fn f_conj(&self) -> MultiPoly<GaussRat> {
        conj_swap(&self.f)
    }

    /// Evaluates `zdot = i z + F(z, w)` numerically.
    pub fn eval_zdot(&self, z: Complex<f64>, w: Complex<f64>, trailing: &[f64]) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (e, c) in self.f.terms() {
            let mut t = Complex::new(rat_to_f64(&c.re), rat_to_f64(&c.im));
            t *= z.powu(e[0]);
            t *= w.powu(e[1]);
            for (k, &ek) in e[2..].iter().enumerate() {
                t *= trailing[k].powi(ek as i32);
            }
            acc += t;
        }
        Complex::new(0.0, 1.0) * z + acc
    }

    pub fn focus_quantities(&self, k: usize) -> Result<FocusReport, FocusError> {
        let n = self.f.nvars();
        let i_c = gauss_i();
        let z = MultiPoly::<GaussRat>::var(n, 0);
        let w = MultiPoly::<GaussRat>::var(n, 1);
        let fz = self.f.clone();
        let fw = self.f_conj();
        let comp_z = z.scale(&i_c).add(&fz);
        let comp_w = w.scale(&i_c).neg().add(&fw);

        let mut h = z.mul(&w);
        let mut quantities = vec![MultiPoly::<BigRational>::zero(n - 2); k];
        for m in 3..=(2 * k as u32 + 2) {
            let g = comp_z.mul(&h.deriv(0)).add(&comp_w.mul(&h.deriv(1)));
            let gm = g.graded_part(2, m);
            for (e, c) in gm.terms() {
                let (p, q) = (e[0], e[1]);
                if p == q {
                    // Resonant slot: the diagonal coefficient cannot be
                    // absorbed (h_pp = 0); it is the focus quantity.
                    let j = (p - 1) as usize;
                    if j == 0 || j > k {
                        continue;
                    }
                    if !c.im.is_zero() {
                        return Err(FocusError::RealityFailure(j));
                    }
                    let trailing: Vec<u32> = e[2..].to_vec();
                    quantities[j - 1] = quantities[j - 1]
                        .add(&MultiPoly::monomial(n - 2, trailing, c.re.clone()));
                } else {
                    // Solve i (p - q) h_pq + c = 0.
                    let denom = rat_int(p as i64 - q as i64);
                    let coeff = i_c.mul(c).scale_rat(&(rat_int(1) / &denom));
                    h = h.add(&MultiPoly::monomial(n, e.clone(), coeff));
                }
            }
        }
        Ok(FocusReport {
            quantities,
            names: self.names[2..].to_vec(),
        })
    }

    /// Substitutes trailing variables (by rationals or by other trailing
    /// variables) and reports whether all of `g_1..g_k` vanish identically.
    pub fn center_conditions_check(
        &self,
        subs: &[(&str, Subst)],
        k: usize,
    ) -> Result<(FocusReport, CenterVerdict), FocusError> {
        let n = self.f.nvars();
        let index = |name: &str| -> Result<usize, FocusError> {
            self.names[2..]
                .iter()
                .position(|s| s == name)
                .map(|j| j + 2)
                .ok_or_else(|| FocusError::UnknownParameter(name.to_string()))
        };
        let mut sub_polys: Vec<MultiPoly<GaussRat>> =
            (0..n).map(|i| MultiPoly::var(n, i)).collect();
        for (name, value) in subs {
            let i = index(name)?;
            sub_polys[i] = match value {
                Subst::Rat(r) => MultiPoly::constant(n, GaussRat::from_rat(r)),
                Subst::Param(other) => MultiPoly::var(n, index(other)?),
            };
        }
        let system = ComplexSystem {
            f: self.f.compose(&sub_polys),
            names: self.names.clone(),
        };
        let report = system.focus_quantities(k)?;
        let verdict = match report.first_nonzero() {
            None => CenterVerdict::ConsistentWithCenterToOrder(k),
            Some(j) => CenterVerdict::FocusCertified(j),
        };
        Ok((report, verdict))
    }
}

/// Extracts an exact polynomial over `[vars..., params...]` from an
/// expression, failing on any quotient or transcendental content.
pub fn expr_to_poly(e: &Expr) -> Result<MultiPoly<BigRational>, FocusError> {
    let (rf, tower) = e.normalize()?;
    if !tower.is_empty() || !rf.den.is_constant() {
        return Err(FocusError::NotPolynomial);
    }
    let base = e.ctx().nvars() + e.ctx().nparams();
    let c = rf.den.constant_term();
    Ok(rf.num.scale(&(rat_int(1) / &c)).extend_vars(base))
}

trait ScaleRat {
    fn scale_rat(&self, r: &BigRational) -> Self;
}

impl ScaleRat for GaussRat {
    fn scale_rat(&self, r: &BigRational) -> Self {
        Complex::new(&self.re * r, &self.im * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_in;
    use crate::field::VectorField;

    fn poly_from(text: &str, vars: &[&str], params: &[&str]) -> MultiPoly<BigRational> {
        let ctx = crate::expr::Context::new(vars.to_vec(), params.to_vec());
        expr_to_poly(&parse_in(text, &ctx).unwrap()).unwrap()
    }

    #[test]
    fn pure_rotation_has_no_quantities() {
        let y = VectorField::from_strs(&["x1", "x2"], &[], &["-x2", "x1"]).unwrap();
        let c = ComplexSystem::from_field(&y).unwrap();
        assert!(c.f().is_zero());
        let report = c.focus_quantities(3).unwrap();
        assert!(report.all_vanish());
    }

    #[test]
    fn complexified_flow_matches_real_flow() {
        let y = VectorField::from_strs(
            &["x1", "x2"],
            &["a"],
            &["-x2 + x1^2 + a*x2^2", "x1 + x1*x2"],
        )
        .unwrap();
        let c = ComplexSystem::from_field(&y).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let x1: f64 = rng.gen_range(-1.0..1.0);
            let x2: f64 = rng.gen_range(-1.0..1.0);
            let a: f64 = rng.gen_range(-1.0..1.0);
            let p = y.component(0).eval(&[x1, x2], &[a]).unwrap();
            let q = y.component(1).eval(&[x1, x2], &[a]).unwrap();
            let z = Complex::new(x1, x2);
            let w = Complex::new(x1, -x2);
            let zdot = c.eval_zdot(z, w, &[a]);
            assert!((zdot - Complex::new(p, q)).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_component_is_involutive() {
        let y = VectorField::from_strs(
            &["x1", "x2"],
            &["a", "b"],
            &["-x2 + a*x1^2", "x1 + b*x2^2"],
        )
        .unwrap();
        let c = ComplexSystem::from_field(&y).unwrap();
        assert_eq!(conj_swap(&c.f_conj()), *c.f());
    }

    #[test]
    fn sixth_degree_family_first_quantity() {
        // R = -x2 + A x1^2 + B x1 x2 + h x1^3 + C x2^3,
        // S = x1 + h x1^2 + h x1 x2 + E x2^2:
        // g1 = (1/4) [A B + (3 - 2A - E) h - h^2].
        let vars = ["x1", "x2"];
        let params = ["h", "A", "B", "C", "E"];
        let p = poly_from("-x2 + A*x1^2 + B*x1*x2 + h*x1^3 + C*x2^3", &vars, &params);
        let q = poly_from("x1 + h*x1^2 + h*x1*x2 + E*x2^2", &vars, &params);
        let names: Vec<String> = ["x1", "x2", "h", "A", "B", "C", "E"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = ComplexSystem::complexify(&p, &q, &names).unwrap();
        let report = c.focus_quantities(1).unwrap();
        let expected = poly_from(
            "1/4*(A*B + (3 - 2*A - E)*h - h^2)",
            &[],
            &["h", "A", "B", "C", "E"],
        );
        assert_eq!(report.quantities[0], expected);
    }

    #[test]
    fn quintic_family_center_conditions() {
        let vars = ["x1", "x2"];
        let params = ["h", "B1", "B2", "C"];
        let p = poly_from("-x2 - C*x1*x2 + B1*h*(x1^2+x2^2)", &vars, &params);
        let q = poly_from("x1 + B2*h*x1*x2", &vars, &params);
        let names: Vec<String> = ["x1", "x2", "h", "B1", "B2", "C"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = ComplexSystem::complexify(&p, &q, &names).unwrap();
        let generic = c.focus_quantities(1).unwrap();
        assert!(!generic.quantities[0].is_zero());

        let zero = Subst::Rat(rat_int(0));
        let (_, v) = c
            .center_conditions_check(&[("B1", zero.clone())], 2)
            .unwrap();
        assert_eq!(v, CenterVerdict::ConsistentWithCenterToOrder(2));
        let (_, v) = c.center_conditions_check(&[("C", zero)], 2).unwrap();
        assert_eq!(v, CenterVerdict::ConsistentWithCenterToOrder(2));
    }

    #[test]
    fn hamiltonian_perturbations_have_vanishing_quantities() {
        // Fields (-dH/dx2, dH/dx1) with H = (x1^2+x2^2)/2 + higher terms.
        let ctx = crate::expr::Context::new(vec!["x1", "x2"], vec![]);
        for h_text in [
            "(x1^2+x2^2)/2 + x1^3 - 2*x1*x2^2",
            "(x1^2+x2^2)/2 + x1^4/4 + x1*x2^3",
            "(x1^2+x2^2)/2 + 3*x1^2*x2 + x2^4",
        ] {
            let h = parse_in(h_text, &ctx).unwrap();
            let y = VectorField::new(&ctx, vec![h.diff(1).neg(), h.diff(0)]).unwrap();
            let c = ComplexSystem::from_field(&y).unwrap();
            let report = c.focus_quantities(2).unwrap();
            assert!(report.all_vanish(), "nonzero quantity for H = {h_text}");
        }
    }

    #[test]
    fn first_quantity_matches_real_lyapunov_scheme() {
        // System x1dot = -x2 + x1^2, x2dot = x1 + x1^2. Oracle: build
        // W = (x1^2+x2^2)/2 + W3 + W4 term by term in real coordinates so
        // that X(W) = eta2 (x1^2+x2^2)^2 + O(5), and compare signs/ratio.
        let y = VectorField::from_strs(&["x1", "x2"], &[], &["-x2 + x1^2", "x1 + x1^2"]).unwrap();
        let c = ComplexSystem::from_field(&y).unwrap();
        let report = c.focus_quantities(1).unwrap();
        let g1 = report.quantities[0].constant_term();
        assert!(!g1.is_zero());

        let eta2 = brute_force_eta2();
        // Focus quantities are meaningful up to a positive factor.
        let ratio = &g1 / &eta2;
        assert!(ratio.is_positive(), "g1 = {g1}, eta2 = {eta2}");
    }

    use num_traits::Signed;

    /// Solves for the classical first Lyapunov coefficient of
    /// (-x2 + x1^2, x1 + x1^2) by undetermined coefficients in real
    /// coordinates, with exact arithmetic throughout.
    fn brute_force_eta2() -> BigRational {
        // Monomial bases: cubics x^3, x^2 y, x y^2, y^3 and quartics
        // x^4 ... y^4 in the 2-variable ring.
        let n = 2usize;
        let p = poly_from("-x2 + x1^2", &["x1", "x2"], &[]);
        let q = poly_from("x1 + x1^2", &["x1", "x2"], &[]);
        let x_of = |w: &MultiPoly<BigRational>| p.mul(&w.deriv(0)).add(&q.mul(&w.deriv(1)));

        let mono = |a: u32, b: u32| MultiPoly::monomial(n, vec![a, b], rat_int(1));
        let w2 = mono(2, 0)
            .add(&mono(0, 2))
            .scale(&BigRational::new(1.into(), 2.into()));

        // Degree 3: rot(W3) = -(X(W2))_3, a 4x4 exact linear solve.
        let rot = |w: &MultiPoly<BigRational>| {
            mono(0, 1).neg().mul(&w.deriv(0)).add(&mono(1, 0).mul(&w.deriv(1)))
        };
        let cubics: Vec<(u32, u32)> = vec![(3, 0), (2, 1), (1, 2), (0, 3)];
        let rhs3 = x_of(&w2).graded_part(2, 3).neg();
        let w3 = solve_in_span(&cubics, &rot, &rhs3).expect("cubic stage is nonsingular");

        // Degree 4: rot(W4) + (X-rot applied to lower terms)_4 = eta2 r^4.
        // Project the defect onto the image of rot plus the span of r^4.
        let quartics: Vec<(u32, u32)> = vec![(4, 0), (3, 1), (2, 2), (1, 3), (0, 4)];
        let defect = x_of(&w2.add(&w3)).graded_part(2, 4);
        let r4 = mono(2, 0).add(&mono(0, 2)).pow(2);
        // Unknowns: 5 quartic coefficients and eta2; equations: 5 quartic
        // monomial matches for rot(W4) + eta2 r^4 = defect... sign: we want
        // X(W) = eta2 r^4, i.e. rot(W4) = eta2 r^4 - defect.
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        let mut rhs: Vec<BigRational> = Vec::new();
        for &(a, b) in &quartics {
            let mut row = Vec::new();
            for &(ca, cb) in &quartics {
                row.push(rot(&mono(ca, cb)).coeff(&[a, b]));
            }
            row.push(r4.coeff(&[a, b]).neg());
            rows.push(row);
            rhs.push(defect.coeff(&[a, b]).neg());
        }
        let sol = gaussian_solve(rows, rhs).expect("quartic stage is solvable");
        sol[5].clone()
    }

    fn solve_in_span(
        basis: &[(u32, u32)],
        op: &dyn Fn(&MultiPoly<BigRational>) -> MultiPoly<BigRational>,
        rhs: &MultiPoly<BigRational>,
    ) -> Option<MultiPoly<BigRational>> {
        let mono = |a: u32, b: u32| MultiPoly::monomial(2, vec![a, b], rat_int(1));
        let mut rows = Vec::new();
        let mut rvec = Vec::new();
        for &(a, b) in basis {
            let mut row = Vec::new();
            for &(ca, cb) in basis {
                row.push(op(&mono(ca, cb)).coeff(&[a, b]));
            }
            rows.push(row);
            rvec.push(rhs.coeff(&[a, b]));
        }
        let sol = gaussian_solve(rows, rvec)?;
        let mut out = MultiPoly::zero(2);
        for (c, &(a, b)) in sol.iter().zip(basis) {
            out = out.add(&MultiPoly::monomial(2, vec![a, b], c.clone()));
        }
        Some(out)
    }

    fn gaussian_solve(
        mut rows: Vec<Vec<BigRational>>,
        mut rhs: Vec<BigRational>,
    ) -> Option<Vec<BigRational>> {
        let nrows = rows.len();
        let ncols = rows[0].len();
        let mut pivot_of_col = vec![usize::MAX; ncols];
        let mut r = 0;
        for c in 0..ncols {
            let Some(pr) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, pr);
            rhs.swap(r, pr);
            let inv = rat_int(1) / &rows[r][c];
            for v in rows[r].iter_mut() {
                *v = &*v * &inv;
            }
            rhs[r] = &rhs[r] * &inv;
            for i in 0..nrows {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c].clone();
                    for j in 0..ncols {
                        let t = &rows[r][j] * &f;
                        rows[i][j] = &rows[i][j] - &t;
                    }
                    let t = &rhs[r] * &f;
                    rhs[i] = &rhs[i] - &t;
                }
            }
            pivot_of_col[c] = r;
            r += 1;
        }
        // Consistency of any leftover equations.
        for i in r..nrows {
            if !rhs[i].is_zero() {
                return None;
            }
        }
        let mut sol = vec![rat_int(0); ncols];
        for c in 0..ncols {
            if pivot_of_col[c] != usize::MAX {
                sol[c] = rhs[pivot_of_col[c]].clone();
            }
        }
        Some(sol)
    }
}
