//! Constructive normal forms for the uncontrollable and locally
//! controllable regimes.
//!
//! A hyperbolic control direction is conjugated onto the K_y axis by a
//! rotation about K_z followed by a boost about K_x. In the regime where
//! A + uB is hyperbolic for every u, the same frame reduces the system to
//! the two parameters (epsilon, a): drift epsilon K_x + a K_z with the
//! control acting on K_y. In that frame (x1 - x4)^2 - (x2 - x3)^2 is
//! monotone along every trajectory, which is the trapping argument behind
//! the uncontrollability certificate. For elliptic control directions the
//! loop construction closes exp(epsilon (A + uB)) at the identity, the
//! sufficiency half of the small-time test.

use serde::{Deserialize, Serialize};

use crate::algebra::{
    adjoint_action, classify, commutator, exp_element, group_dist, group_mul, AlgebraElement,
    GroupElement, Kind, K_X, K_Z,
};
use crate::controllability::{omega_set, trace_polynomial};
use crate::Error;

/// Frame data conjugating a hyperbolic B onto the K_y axis:
/// adjoint_action(p, B) = scale * K_y with p = exp(beta K_x) exp(alpha K_z).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Normalization {
    pub alpha: f64,
    pub beta: f64,
    pub scale: f64,
    pub p: GroupElement,
}

/// Rotation and boost angles taking B to the K_y axis.
pub fn normalize_hyperbolic(b: &AlgebraElement) -> Result<Normalization, Error> {
    if !b.is_finite() {
        return Err(Error::InvalidInput(
            "normalize_hyperbolic: non-finite coefficients".into(),
        ));
    }
    let cls = classify(b);
    if cls.kind != Kind::Hyperbolic {
        return Err(Error::Precondition(
            "normalize_hyperbolic: classify(B) must be Hyperbolic".into(),
        ));
    }
    let scale = cls.form_value.sqrt();
    // alpha rotates (kx, ky) onto the ky axis, beta boosts away the kz part
    let alpha = b.kx.atan2(b.ky);
    let beta = (b.kz / scale).asinh();
    let p = group_mul(&exp_element(&K_X, beta), &exp_element(&K_Z, alpha));
    Ok(Normalization { alpha, beta, scale, p })
}

/// Canonical parameters of a single-input system in the all-hyperbolic
/// regime, together with the frame and scalings that undo the reduction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CanonicalSystem {
    /// Sign of the canonical drift along K_x; +1 or -1.
    pub epsilon: f64,
    /// Canonical K_z drift coefficient; always |a| < 1 in this regime.
    pub a: f64,
    /// Factor relating canonical time to original time.
    pub time_scale: f64,
    /// K_y drift component in the frame, absorbed into the control.
    pub control_offset: f64,
    /// Factor relating canonical controls to original controls.
    pub control_scale: f64,
    /// Group element implementing the frame change.
    pub frame: GroupElement,
}

/// Reduction to (epsilon, a) form. Requires B hyperbolic, an empty
/// elliptic set, and a non-parabolic bracket; each is checked by name.
pub fn reduce_single(a: &AlgebraElement, b: &AlgebraElement) -> Result<CanonicalSystem, Error> {
    if classify(b).kind != Kind::Hyperbolic {
        return Err(Error::Precondition(
            "reduce_single: classify(B) must be Hyperbolic".into(),
        ));
    }
    let omega = omega_set(a, b)?;
    if !omega.is_empty() {
        return Err(Error::Precondition(
            "reduce_single: omega_set(A, B) must be empty".into(),
        ));
    }
    if classify(&commutator(a, b)).kind == Kind::Parabolic {
        return Err(Error::Precondition(
            "reduce_single: [A, B] must not be parabolic".into(),
        ));
    }
    let norm = normalize_hyperbolic(b)?;
    let at = adjoint_action(&norm.p, a);
    let time_scale = at.kx.abs();
    if time_scale <= 0.0 {
        return Err(Error::Numerical(
            "reduce_single: frame drift has no K_x component".into(),
        ));
    }
    Ok(CanonicalSystem {
        epsilon: at.kx.signum(),
        a: at.kz / time_scale,
        time_scale,
        control_offset: at.ky,
        control_scale: norm.scale,
        frame: norm.p,
    })
}

/// The function trapped by canonical trajectories: (x1-x4)^2 - (x2-x3)^2.
pub fn monotone_value(x: &GroupElement) -> f64 {
    let d1 = x.x1 - x.x4;
    let d2 = x.x2 - x.x3;
    d1 * d1 - d2 * d2
}

/// Loop parameters for the local-controllability sufficiency test.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PeriodicControl {
    pub u: f64,
    pub n: u32,
    pub epsilon: f64,
}

/// Smallest winding number n >= 1 and matching control u > 0 with
/// exp(epsilon (A + uB)) = identity; needs an elliptic B.
pub fn periodic_control(
    a: &AlgebraElement,
    b: &AlgebraElement,
    epsilon: f64,
) -> Result<PeriodicControl, Error> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(
            "periodic_control: epsilon must be positive and finite".into(),
        ));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(
            "periodic_control: non-finite coefficients".into(),
        ));
    }
    if classify(b).kind != Kind::Elliptic {
        return Err(Error::Precondition(
            "periodic_control: classify(B) must be Elliptic".into(),
        ));
    }
    let (p2, p1, p0) = trace_polynomial(a, b);
    for n in 1..=64u32 {
        // period condition: q(u) = -(4 pi n / epsilon)^2
        let rhs = (4.0 * std::f64::consts::PI * n as f64 / epsilon).powi(2);
        let disc = p1 * p1 - 4.0 * p2 * (p0 + rhs);
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let u = ((-p1 + sq) / (2.0 * p2)).max((-p1 - sq) / (2.0 * p2));
        let loop_end = exp_element(&a.add(&b.scale(u)), epsilon);
        if group_dist(&loop_end, &GroupElement::identity()) < 1e-9 {
            return Ok(PeriodicControl { u, n, epsilon });
        }
    }
    Err(Error::Numerical(
        "periodic_control: no closing loop found up to n = 64".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{group_inv, indefinite_form, inner_product, K_Y};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normalize_axis_fixed() {
        let n = normalize_hyperbolic(&K_Y).unwrap();
        assert!(close(n.alpha, 0.0, 1e-15));
        assert!(close(n.beta, 0.0, 1e-15));
        assert!(close(n.scale, 1.0, 1e-15));
        assert!(group_dist(&n.p, &GroupElement::identity()) < 1e-15);
    }

    #[test]
    fn normalize_rotation_only() {
        let n = normalize_hyperbolic(&K_X).unwrap();
        assert!(close(n.alpha, std::f64::consts::FRAC_PI_2, 1e-15));
        assert!(close(n.beta, 0.0, 1e-15));
        let image = adjoint_action(&n.p, &K_X);
        assert!(image.sub(&K_Y).norm() < 1e-12);
    }

    #[test]
    fn normalize_general_hyperbolic() {
        let b = AlgebraElement::new(1.2, -0.7, 0.9);
        let n = normalize_hyperbolic(&b).unwrap();
        let image = adjoint_action(&n.p, &b);
        assert!(image.sub(&K_Y.scale(n.scale)).norm() < 1e-12 * b.norm());
        assert!(close(n.scale * n.scale, indefinite_form(&b, &b), 1e-12));
    }

    #[test]
    fn normalize_rejects_non_hyperbolic() {
        assert!(matches!(
            normalize_hyperbolic(&K_Z),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            normalize_hyperbolic(&K_X.add(&K_Z)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn reduce_plain_axes() {
        let c = reduce_single(&K_X, &K_Y).unwrap();
        assert_eq!(c.epsilon, 1.0);
        assert!(close(c.a, 0.0, 1e-15));
        assert!(close(c.time_scale, 1.0, 1e-15));
        assert!(close(c.control_scale, 1.0, 1e-15));
    }

    #[test]
    fn reduce_recovers_drift_in_frame() {
        let a = AlgebraElement::new(1.4, 0.3, 0.2);
        let b = AlgebraElement::new(0.2, 1.1, -0.3);
        let c = reduce_single(&a, &b).unwrap();
        assert!(c.a.abs() < 1.0);
        // the frame really maps the drift onto eps*ts*K_x + offset*K_y + a*ts*K_z
        let at = adjoint_action(&c.frame, &a);
        assert!(close(at.kx, c.epsilon * c.time_scale, 1e-12));
        assert!(close(at.ky, c.control_offset, 1e-12));
        assert!(close(at.kz, c.a * c.time_scale, 1e-12));
    }

    #[test]
    fn reduce_rejects_each_precondition() {
        // B not hyperbolic
        assert!(matches!(
            reduce_single(&K_X, &K_Z),
            Err(Error::Precondition(_))
        ));
        // omega nonempty
        assert!(matches!(
            reduce_single(&K_Z, &K_X),
            Err(Error::Precondition(_))
        ));
        // parabolic bracket: A = K_x + K_z has [A, K_y] parabolic
        assert!(matches!(
            reduce_single(&K_X.add(&K_Z), &K_Y),
            Err(Error::Precondition(_))
        ));
        // dependent pair propagates as such
        assert!(matches!(
            reduce_single(&K_Y.scale(3.0), &K_Y),
            Err(Error::DependentInputs(_))
        ));
    }

    #[test]
    fn monotone_value_identity() {
        assert_eq!(monotone_value(&GroupElement::identity()), 1.0);
    }

    #[test]
    fn periodic_control_axis_example() {
        let pc = periodic_control(&K_X, &K_Z, 1.0).unwrap();
        assert_eq!(pc.n, 1);
        let expected = (1.0 + 16.0 * std::f64::consts::PI.powi(2)).sqrt();
        assert!(close(pc.u, expected, 1e-12));
        let x = exp_element(&K_X.add(&K_Z.scale(pc.u)), 1.0);
        assert!(group_dist(&x, &GroupElement::identity()) < 1e-12);
    }

    #[test]
    fn periodic_control_rejects() {
        assert!(matches!(
            periodic_control(&K_X, &K_Y, 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            periodic_control(&K_X, &K_Z, 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn coeff() -> impl Strategy<Value = f64> {
            -5.0..5.0f64
        }

        fn element() -> impl Strategy<Value = AlgebraElement> {
            (coeff(), coeff(), coeff()).prop_map(|(x, y, z)| AlgebraElement::new(x, y, z))
        }

        fn hyperbolic() -> impl Strategy<Value = AlgebraElement> {
            element().prop_filter("hyperbolic", |b| classify(b).kind == Kind::Hyperbolic)
        }

        proptest! {
            #[test]
            fn normalization_lands_on_axis(b in hyperbolic()) {
                let n = normalize_hyperbolic(&b).unwrap();
                let image = adjoint_action(&n.p, &b);
                let target = K_Y.scale(n.scale);
                prop_assert!(image.sub(&target).norm() < 1e-10 * b.norm().max(1.0));
                prop_assert!(n.scale > 0.0);
                // frame is a genuine group element
                prop_assert!(n.p.residual().abs() < 1e-12);
            }

            #[test]
            fn reduction_parameters_in_range(a in element(), b in hyperbolic()) {
                match reduce_single(&a, &b) {
                    Ok(c) => {
                        prop_assert!(c.a.abs() < 1.0);
                        prop_assert!(c.epsilon == 1.0 || c.epsilon == -1.0);
                        prop_assert!(c.time_scale > 0.0);
                        prop_assert!(c.control_scale > 0.0);
                    }
                    Err(Error::Precondition(_)) | Err(Error::DependentInputs(_)) => {}
                    Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
                }
            }

            #[test]
            fn reduced_drift_is_exactly_framed(a in element(), b in hyperbolic()) {
                if let Ok(c) = reduce_single(&a, &b) {
                    let at = adjoint_action(&c.frame, &a);
                    let rebuilt = K_X.scale(c.epsilon * c.time_scale)
                        .add(&K_Y.scale(c.control_offset))
                        .add(&K_Z.scale(c.a * c.time_scale));
                    prop_assert!(at.sub(&rebuilt).norm() < 1e-10 * a.norm().max(1.0));
                }
            }

            #[test]
            fn frame_inverse_undoes(b in hyperbolic()) {
                let n = normalize_hyperbolic(&b).unwrap();
                let image = adjoint_action(&n.p, &b);
                let back = adjoint_action(&group_inv(&n.p), &image);
                prop_assert!(back.sub(&b).norm() < 1e-10 * b.norm().max(1.0));
            }

            #[test]
            fn periodic_loop_closes(a in element(), b in element(), eps in 0.1..2.0f64) {
                prop_assume!(classify(&b).kind == Kind::Elliptic);
                let pc = periodic_control(&a, &b, eps).unwrap();
                let x = exp_element(&a.add(&b.scale(pc.u)), eps);
                prop_assert!(group_dist(&x, &GroupElement::identity()) < 1e-9);
                prop_assert!(pc.n >= 1);
                // the loop element is elliptic by construction
                let m = a.add(&b.scale(pc.u));
                prop_assert!(indefinite_form(&m, &m) < 0.0);
            }

            #[test]
            fn inner_product_positive_definite_on_frames(b in hyperbolic()) {
                // sanity tie between the two forms on the normalized axis
                let n = normalize_hyperbolic(&b).unwrap();
                let image = adjoint_action(&n.p, &b);
                prop_assert!(inner_product(&image, &image) > 0.0);
            }
        }
    }
}
