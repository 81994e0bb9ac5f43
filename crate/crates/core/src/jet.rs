//! Truncated Taylor arithmetic in the two meridional coordinates `(r, θ)`.
//!
//! [`Jet`] carries a value with its gradient and Hessian, which is exactly what the
//! curvature and Weitzenböck computations need from the closed-form metrics.
//! [`Dual`] is the first-order truncation used for quantities that are themselves
//! built from first derivatives (Christoffel symbols, connection coefficients).

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Coordinate slot of `r` in gradients and Hessians.
pub const R: usize = 0;
/// Coordinate slot of `θ` in gradients and Hessians.
pub const THETA: usize = 1;

/// Value, gradient and Hessian of a scalar function of `(r, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Jet {
            v,
            d: [0.0; 2],
            dd: [[0.0; 2]; 2],
        }
    }

    /// Independent variable number `slot` evaluated at `v`.
    pub fn var(v: f64, slot: usize) -> Self {
        let mut j = Jet::constant(v);
        j.d[slot] = 1.0;
        j
    }

    /// Seeds for `(r, θ)` at a point.
    pub fn coordinates(r: f64, theta: f64) -> (Jet, Jet) {
        (Jet::var(r, R), Jet::var(theta, THETA))
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        let mut out = Jet::constant(f);
        for a in 0..2 {
            out.d[a] = df * self.d[a];
            for b in 0..2 {
                out.dd[a][b] = ddf * self.d[a] * self.d[b] + df * self.dd[a][b];
            }
        }
        out
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powf(self, p: f64) -> Self {
        let x = self.v;
        self.chain(
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
        )
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let x = self.v;
                let nf = n as f64;
                self.chain(
                    x.powi(n),
                    nf * x.powi(n - 1),
                    nf * (nf - 1.0) * x.powi(n - 2),
                )
            }
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.v;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    /// Drops the Hessian.
    pub fn to_dual(self) -> Dual {
        Dual {
            v: self.v,
            d: self.d,
        }
    }

    /// Partial derivative along `slot`, with its own gradient.
    pub fn partial(self, slot: usize) -> Dual {
        Dual {
            v: self.d[slot],
            d: self.dd[slot],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.d.iter().all(|x| x.is_finite())
            && self.dd.iter().flatten().all(|x| x.is_finite())
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for a in 0..2 {
            self.d[a] += o.d[a];
            for b in 0..2 {
                self.dd[a][b] += o.dd[a][b];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(mut self) -> Jet {
        self.v = -self.v;
        for a in 0..2 {
            self.d[a] = -self.d[a];
            for b in 0..2 {
                self.dd[a][b] = -self.dd[a][b];
            }
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for a in 0..2 {
            out.d[a] = self.d[a] * o.v + self.v * o.d[a];
            for b in 0..2 {
                out.dd[a][b] = self.dd[a][b] * o.v
                    + self.d[a] * o.d[b]
                    + self.d[b] * o.d[a]
                    + self.v * o.dd[a][b];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.v += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.v -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, o: f64) -> Jet {
        self.v *= o;
        for a in 0..2 {
            self.d[a] *= o;
            for b in 0..2 {
                self.dd[a][b] *= o;
            }
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self * (1.0 / o)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        o + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        -o + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        o.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

/// Value and gradient of a scalar function of `(r, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 2],
}

impl Dual {
    pub const ZERO: Dual = Dual {
        v: 0.0,
        d: [0.0; 2],
    };

    pub const fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; 2] }
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.v;
        Dual {
            v: inv,
            d: [-inv * inv * self.d[0], -inv * inv * self.d[1]],
        }
    }

    pub fn ln(self) -> Self {
        Dual {
            v: self.v.ln(),
            d: [self.d[0] / self.v, self.d[1] / self.v],
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: [-self.d[0], -self.d[1]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
            ],
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        self * o.recip()
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual {
            v: self.v * o,
            d: [self.d[0] * o, self.d[1] * o],
        }
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        o * self
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}
