//! Coefficient fields for exact polynomial arithmetic.
//!
//! Two fields are used throughout: `BigRational` (arbitrary-precision
//! rationals, the default coefficient field) and `GaussRat`, the Gaussian
//! rationals `Q(i)` that appear after complexifying a planar vector field.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Gaussian rational: `re + im*i` with exact rational parts.
pub type GaussRat = Complex<BigRational>;

/// Shorthand for an exact rational from an integer pair.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an exact integer rational.
pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Gaussian rational from rational real and imaginary parts.
pub fn gauss(re: BigRational, im: BigRational) -> GaussRat {
    Complex::new(re, im)
}

/// The imaginary unit in `Q(i)`.
pub fn gauss_i() -> GaussRat {
    Complex::new(rat_int(0), rat_int(1))
}

/// Coefficient field operations needed by the polynomial layer.
///
/// Everything is by-reference; `BigRational` clones are not free.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_rat(r: &BigRational) -> Self;
    /// Render for display inside a polynomial term.
    fn render(&self) -> String;
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_rat(r: &BigRational) -> Self {
        r.clone()
    }
    fn render(&self) -> String {
        if self.denom().is_one() {
            format!("{}", self.numer())
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Coeff for GaussRat {
    fn zero() -> Self {
        Complex::new(Zero::zero(), Zero::zero())
    }
    fn one() -> Self {
        Complex::new(One::one(), Zero::zero())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn add(&self, rhs: &Self) -> Self {
        Complex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Complex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Complex::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
    fn div(&self, rhs: &Self) -> Self {
        let norm = &rhs.re * &rhs.re + &rhs.im * &rhs.im;
        Complex::new(
            (&self.re * &rhs.re + &self.im * &rhs.im) / &norm,
            (&self.im * &rhs.re - &self.re * &rhs.im) / &norm,
        )
    }
    fn neg(&self) -> Self {
        Complex::new(-&self.re, -&self.im)
    }
    fn from_rat(r: &BigRational) -> Self {
        Complex::new(r.clone(), Zero::zero())
    }
    fn render(&self) -> String {
        if Zero::is_zero(&self.im) {
            Coeff::render(&self.re)
        } else if Zero::is_zero(&self.re) {
            format!("{}*i", Coeff::render(&self.im))
        } else {
            format!("({}{}{}*i)", Coeff::render(&self.re), if self.im.is_negative() { "" } else { "+" }, Coeff::render(&self.im))
        }
    }
}

/// Complex conjugate in `Q(i)`.
pub fn gauss_conj(c: &GaussRat) -> GaussRat {
    Complex::new(c.re.clone(), -&c.im)
}

/// f64 value of an exact rational.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    // Good enough for the magnitudes appearing here; BigRational has no
    // direct lossless conversion.
    let n = r.numer();
    let d = r.denom();
    let nf = n.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = d.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}
