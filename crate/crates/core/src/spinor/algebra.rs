use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::jet::{Dual, Jet};

/// Two complex components in an orthonormal frame.
pub type Spinor = Vector2<Complex64>;
/// Endomorphism of the spinor space.
pub type SpinMatrix = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn spinor(a: Complex64, b: Complex64) -> Spinor {
    Vector2::new(a, b)
}

pub fn real_spinor(a: f64, b: f64) -> Spinor {
    Vector2::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
}

/// Pauli matrices `σ₁, σ₂, σ₃`, 0-based.
pub fn pauli(k: usize) -> SpinMatrix {
    match k {
        0 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        1 => Matrix2::new(ZERO, -I, I, ZERO),
        2 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Clifford generators `γ_k = iσ_k`, 0-based. They satisfy `γᵢγⱼ + γⱼγᵢ = −2δᵢⱼ`.
pub fn gamma(k: usize) -> SpinMatrix {
    pauli(k) * I
}

/// The three generators, indexed from 0.
pub fn gammas() -> [SpinMatrix; 3] {
    [gamma(0), gamma(1), gamma(2)]
}

/// `γ_k ξ` for the frame vector `e_k`, `k ∈ {1, 2, 3}`.
pub fn clifford_mul(k: usize, xi: &Spinor) -> Spinor {
    assert!((1..=3).contains(&k), "Clifford index {k} must be 1, 2 or 3");
    gamma(k - 1) * xi
}

/// `‖ξ‖² = ξ¹ξ̄¹ + ξ²ξ̄²`.
pub fn norm_sqr(xi: &Spinor) -> f64 {
    xi[0].norm_sqr() + xi[1].norm_sqr()
}

/// `Re⟨ξ, η⟩`.
pub fn re_inner(xi: &Spinor, eta: &Spinor) -> f64 {
    (xi[0].conj() * eta[0] + xi[1].conj() * eta[1]).re
}

pub fn zero_spinor() -> Spinor {
    Vector2::new(ZERO, ZERO)
}

pub(crate) fn zero_matrix() -> SpinMatrix {
    Matrix2::new(ZERO, ZERO, ZERO, ZERO)
}

/// A spinor-valued function of `(r, θ)` with gradient and Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinorJet {
    pub v: Spinor,
    pub d: [Spinor; 2],
    pub dd: [[Spinor; 2]; 2],
}

/// A spinor-valued function of `(r, θ)` with gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinorDual {
    pub v: Spinor,
    pub d: [Spinor; 2],
}

impl SpinorJet {
    pub fn constant(v: Spinor) -> Self {
        let z = zero_spinor();
        SpinorJet {
            v,
            d: [z; 2],
            dd: [[z; 2]; 2],
        }
    }

    /// Assembles `(Re ξ¹ + i Im ξ¹, Re ξ² + i Im ξ²)` from four real jets.
    pub fn from_parts(parts: [Jet; 4]) -> Self {
        let c = |re: &Jet, im: &Jet, f: &dyn Fn(&Jet) -> f64| Complex64::new(f(re), f(im));
        let at = |f: &dyn Fn(&Jet) -> f64| {
            Vector2::new(c(&parts[0], &parts[1], f), c(&parts[2], &parts[3], f))
        };
        SpinorJet {
            v: at(&|j| j.v),
            d: [at(&|j| j.d[0]), at(&|j| j.d[1])],
            dd: [
                [at(&|j| j.dd[0][0]), at(&|j| j.dd[0][1])],
                [at(&|j| j.dd[1][0]), at(&|j| j.dd[1][1])],
            ],
        }
    }

    /// Product with a real scalar jet.
    pub fn scale(&self, u: Jet) -> Self {
        let mut out = SpinorJet::constant(self.v.scale(u.v));
        for a in 0..2 {
            out.d[a] = self.d[a].scale(u.v) + self.v.scale(u.d[a]);
            for b in 0..2 {
                out.dd[a][b] = self.dd[a][b].scale(u.v)
                    + self.d[a].scale(u.d[b])
                    + self.d[b].scale(u.d[a])
                    + self.v.scale(u.dd[a][b]);
            }
        }
        out
    }

    pub fn mul_complex(&self, c: Complex64) -> Self {
        SpinorJet {
            v: self.v * c,
            d: self.d.map(|x| x * c),
            dd: self.dd.map(|row| row.map(|x| x * c)),
        }
    }

    pub fn to_dual(&self) -> SpinorDual {
        SpinorDual {
            v: self.v,
            d: self.d,
        }
    }

    /// `∂_slot ξ` with its own gradient.
    pub fn partial(&self, slot: usize) -> SpinorDual {
        SpinorDual {
            v: self.d[slot],
            d: self.dd[slot],
        }
    }
}

impl Add for SpinorJet {
    type Output = SpinorJet;
    fn add(self, o: SpinorJet) -> SpinorJet {
        let mut out = self;
        out.v += o.v;
        for a in 0..2 {
            out.d[a] += o.d[a];
            for b in 0..2 {
                out.dd[a][b] += o.dd[a][b];
            }
        }
        out
    }
}

impl SpinorDual {
    pub fn zero() -> Self {
        SpinorDual {
            v: zero_spinor(),
            d: [zero_spinor(); 2],
        }
    }

    pub fn scale(&self, u: Dual) -> Self {
        SpinorDual {
            v: self.v.scale(u.v),
            d: [
                self.d[0].scale(u.v) + self.v.scale(u.d[0]),
                self.d[1].scale(u.v) + self.v.scale(u.d[1]),
            ],
        }
    }

    pub fn left_mul(&self, m: &SpinMatrix) -> Self {
        SpinorDual {
            v: m * self.v,
            d: [m * self.d[0], m * self.d[1]],
        }
    }
}

impl Add for SpinorDual {
    type Output = SpinorDual;
    fn add(self, o: SpinorDual) -> SpinorDual {
        SpinorDual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
        }
    }
}

impl Sub for SpinorDual {
    type Output = SpinorDual;
    fn sub(self, o: SpinorDual) -> SpinorDual {
        SpinorDual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
        }
    }
}

impl Mul<SpinorDual> for &SpinMatrix {
    type Output = SpinorDual;
    fn mul(self, o: SpinorDual) -> SpinorDual {
        o.left_mul(self)
    }
}
