//! su(1,1) algebra and SU(1,1) group arithmetic.
//!
//! Algebra elements are coefficient triples over the basis (K_x, K_y, K_z)
//! with brackets [K_x,K_y] = -K_z, [K_y,K_z] = K_x, [K_z,K_x] = K_y. In the
//! 2x2 realization K_x = sigma_y/2, K_y = -sigma_x/2, K_z = -i sigma_z/2,
//! so an element M = kx K_x + ky K_y + kz K_z squares to a multiple of the
//! identity: M^2 = (kappa/4) I with kappa = kx^2 + ky^2 - kz^2. That scalar
//! drives both the elliptic/hyperbolic/parabolic trichotomy and the closed
//! form of exp(tM).
//!
//! Two bilinear forms coexist and are deliberately kept separate: the
//! positive-definite inner product 2 Tr(M N') (' = conjugate transpose),
//! which is the Euclidean dot product of coefficients, and the signature
//! (2,1) classification form 2 Tr(M N) = m1 n1 + m2 n2 - m3 n3.
//!
//! Group elements are the pseudo-unitary matrices [[a, b], [b*, a*]] with
//! |a|^2 - |b|^2 = 1, stored as (x1, x2, x3, x4) where a = x1 + i x2 and
//! b = x3 - i x4.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative tolerance for the trichotomy decision near the light cone.
pub const CLASS_TOL: f64 = 1e-10;

/// Below this |kappa| the exp coefficients switch to their series form.
const KAPPA_SERIES: f64 = 1e-12;

/// Element of su(1,1), stored as coefficients over (K_x, K_y, K_z).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

/// Basis element K_x.
pub const K_X: AlgebraElement = AlgebraElement { kx: 1.0, ky: 0.0, kz: 0.0 };
/// Basis element K_y.
pub const K_Y: AlgebraElement = AlgebraElement { kx: 0.0, ky: 1.0, kz: 0.0 };
/// Basis element K_z.
pub const K_Z: AlgebraElement = AlgebraElement { kx: 0.0, ky: 0.0, kz: 1.0 };

impl AlgebraElement {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        AlgebraElement { kx, ky, kz }
    }

    pub fn zero() -> Self {
        AlgebraElement::default()
    }

    /// Euclidean coefficient norm, the square root of the inner product.
    pub fn norm(&self) -> f64 {
        inner_product(self, self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.kx.is_finite() && self.ky.is_finite() && self.kz.is_finite()
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement::new(s * self.kx, s * self.ky, s * self.kz)
    }

    pub fn add(&self, other: &AlgebraElement) -> Self {
        AlgebraElement::new(self.kx + other.kx, self.ky + other.ky, self.kz + other.kz)
    }

    pub fn sub(&self, other: &AlgebraElement) -> Self {
        AlgebraElement::new(self.kx - other.kx, self.ky - other.ky, self.kz - other.kz)
    }

    /// 2x2 complex realization kx K_x + ky K_y + kz K_z.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let h = 0.5;
        [
            [
                Complex64::new(0.0, -h * self.kz),
                Complex64::new(-h * self.ky, -h * self.kx),
            ],
            [
                Complex64::new(-h * self.ky, h * self.kx),
                Complex64::new(0.0, h * self.kz),
            ],
        ]
    }

    /// Recover coefficients from a 2x2 matrix in the su(1,1) form.
    pub fn from_matrix(m: &[[Complex64; 2]; 2]) -> Self {
        AlgebraElement::new(-2.0 * m[0][1].im, -2.0 * m[0][1].re, 2.0 * m[1][1].im)
    }
}

/// Positive-definite form 2 Tr(M N'), the coefficient dot product.
pub fn inner_product(m: &AlgebraElement, n: &AlgebraElement) -> f64 {
    m.kx * n.kx + m.ky * n.ky + m.kz * n.kz
}

/// Signature (2,1) classification form 2 Tr(M N) = m1 n1 + m2 n2 - m3 n3.
pub fn indefinite_form(m: &AlgebraElement, n: &AlgebraElement) -> f64 {
    m.kx * n.kx + m.ky * n.ky - m.kz * n.kz
}

/// Lie bracket [M, N] in coefficients.
pub fn commutator(m: &AlgebraElement, n: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::new(
        m.ky * n.kz - m.kz * n.ky,
        m.kz * n.kx - m.kx * n.kz,
        -(m.kx * n.ky - m.ky * n.kx),
    )
}

/// Trichotomy label of an algebra element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

/// Classification outcome carrying the raw form value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClassKind {
    pub kind: Kind,
    pub form_value: f64,
}

/// Classify by the sign of the indefinite form, with a scale-invariant
/// tolerance band around the light cone. The zero element is parabolic.
pub fn classify(m: &AlgebraElement) -> ClassKind {
    let form_value = indefinite_form(m, m);
    let tau = CLASS_TOL * inner_product(m, m).max(1.0);
    let kind = if form_value < -tau {
        Kind::Elliptic
    } else if form_value > tau {
        Kind::Hyperbolic
    } else {
        Kind::Parabolic
    };
    ClassKind { kind, form_value }
}

/// Element of SU(1,1): [[a, b], [b*, a*]] with a = x1+i x2, b = x3-i x4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl GroupElement {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        GroupElement { x1, x2, x3, x4 }
    }

    pub fn identity() -> Self {
        GroupElement::new(1.0, 0.0, 0.0, 0.0)
    }

    /// Signed defect of the pseudo-unitarity constraint |a|^2 - |b|^2 = 1.
    pub fn residual(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 - self.x3 * self.x3 - self.x4 * self.x4 - 1.0
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite() && self.x4.is_finite()
    }

    /// Reject elements further than `tol` from the group manifold.
    pub fn validate(&self, tol: f64) -> Result<(), crate::Error> {
        if !self.is_finite() {
            return Err(crate::Error::InvalidInput(
                "group element has non-finite coordinates".into(),
            ));
        }
        let r = self.residual().abs();
        if r > tol {
            return Err(crate::Error::InvalidInput(format!(
                "pseudo-unitarity residual {r:.3e} exceeds {tol:.1e}"
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> Complex64 {
        Complex64::new(self.x1, self.x2)
    }

    pub fn b(&self) -> Complex64 {
        Complex64::new(self.x3, -self.x4)
    }

    /// 2x2 complex realization.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.a(), self.b()], [self.b().conj(), self.a().conj()]]
    }
}

/// Group product X·Y in (x1..x4) coordinates.
pub fn group_mul(x: &GroupElement, y: &GroupElement) -> GroupElement {
    let a = x.a() * y.a() + x.b() * y.b().conj();
    let b = x.a() * y.b() + x.b() * y.a().conj();
    GroupElement::new(a.re, a.im, b.re, -b.im)
}

/// Group inverse; for pseudo-unitary matrices this negates x2, x3, x4.
pub fn group_inv(x: &GroupElement) -> GroupElement {
    GroupElement::new(x.x1, -x.x2, -x.x3, -x.x4)
}

/// Frobenius distance between the 2x2 realizations.
pub fn group_dist(x: &GroupElement, y: &GroupElement) -> f64 {
    let d1 = x.x1 - y.x1;
    let d2 = x.x2 - y.x2;
    let d3 = x.x3 - y.x3;
    let d4 = x.x4 - y.x4;
    // each of a, b appears twice in the matrix (once conjugated)
    (2.0 * (d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4)).sqrt()
}

/// Closed-form exp(tM). With kappa the indefinite form of M, the square
/// identity M^2 = (kappa/4) I gives exp(tM) = c I + s M where (c, s) are
/// cos/sinc at frequency sqrt(-kappa)/2 in the elliptic case and the
/// cosh/sinh analogue in the hyperbolic case. Both branches share one
/// series in kappa t^2 near the parabolic locus.
pub fn exp_element(m: &AlgebraElement, t: f64) -> GroupElement {
    let kappa = indefinite_form(m, m);
    let (c, s) = if kappa < -KAPPA_SERIES {
        let om = 0.5 * (-kappa).sqrt();
        ((om * t).cos(), (om * t).sin() / om)
    } else if kappa > KAPPA_SERIES {
        let om = 0.5 * kappa.sqrt();
        ((om * t).cosh(), (om * t).sinh() / om)
    } else {
        let z = kappa * t * t;
        (
            1.0 + z / 8.0 + z * z / 384.0,
            t * (1.0 + z / 24.0 + z * z / 1920.0),
        )
    };
    GroupElement::new(c, -0.5 * s * m.kz, -0.5 * s * m.ky, 0.5 * s * m.kx)
}

/// Conjugation X M X^{-1}, an algebra automorphism.
pub fn adjoint_action(x: &GroupElement, m: &AlgebraElement) -> AlgebraElement {
    let (a, b) = (x.a(), x.b());
    let mm = m.matrix();
    // X M X^{-1} with X^{-1} = [[a*, -b], [-b*, a]]
    let w01 = -(a * mm[0][0] + b * mm[1][0]) * b + (a * mm[0][1] + b * mm[1][1]) * a;
    let w11 = -(b.conj() * mm[0][0] + a.conj() * mm[1][0]) * b
        + (b.conj() * mm[0][1] + a.conj() * mm[1][1]) * a;
    AlgebraElement::new(-2.0 * w01.im, -2.0 * w01.re, 2.0 * w11.im)
}
