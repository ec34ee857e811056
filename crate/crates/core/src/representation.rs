//! Truncated lowest-weight representation: ladder matrices on the first N
//! basis states, coherent states, and the consistency check tying the 2x2
//! group simulation to the N-dimensional propagation.
//!
//! The generator images are -i times Hermitian matrices, so truncated
//! propagators are exactly unitary; truncation shows up only through
//! boundary defects in the commutation relations (last index) and through
//! occupation leaking into the top states, which is monitored explicitly.
//! Coherent states carry a disc label zeta with |zeta| < 1; group elements
//! act on labels by a Moebius map, which is what the transition check
//! compares against.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{exp_element, group_mul, AlgebraElement, GroupElement};
use crate::simulator::ControlSchedule;
use crate::Error;

/// Occupation of the top two states above which results are rejected.
pub const LEAK_TOL: f64 = 1e-6;

/// Ladder and coordinate matrices of the weight-k representation cut to
/// dimension n.
#[derive(Clone, Debug)]
pub struct TruncatedRep {
    pub k: f64,
    pub n: usize,
    pub kp: Array2<f64>,
    pub km: Array2<f64>,
    pub kz: Array2<f64>,
    pub kx: Array2<Complex64>,
    pub ky: Array2<Complex64>,
}

/// Build the truncated matrices: kp raises with weight
/// sqrt((m+1)(m+2k)), km = kp^T, kz = diag(m+k).
pub fn build_rep(k: f64, n: usize) -> Result<TruncatedRep, Error> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput("build_rep: k must be positive and finite".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("build_rep: dimension n must be at least 2".into()));
    }
    let mut kp = Array2::<f64>::zeros((n, n));
    let mut kz = Array2::<f64>::zeros((n, n));
    for m in 0..n {
        kz[(m, m)] = m as f64 + k;
        if m + 1 < n {
            kp[(m + 1, m)] = ((m as f64 + 1.0) * (m as f64 + 2.0 * k)).sqrt();
        }
    }
    let km = kp.t().to_owned();
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    let kx = (&kp + &km).mapv(|v| Complex64::new(v, 0.0) * half);
    let ky = (&kp - &km).mapv(|v| Complex64::new(v, 0.0) * half_i);
    Ok(TruncatedRep { k, n, kp, km, kz, kx, ky })
}

fn to_complex(m: &Array2<f64>) -> Array2<Complex64> {
    m.mapv(|v| Complex64::new(v, 0.0))
}

/// kz^2 - kx^2 - ky^2; equals k(k-1) I on indices up to n-2, with a
/// defect confined to the last row and column by truncation.
pub fn casimir(rep: &TruncatedRep) -> Array2<Complex64> {
    let kz = to_complex(&rep.kz);
    &kz.dot(&kz) - &rep.kx.dot(&rep.kx) - &rep.ky.dot(&rep.ky)
}

/// Exact-arithmetic residuals of the defining relations on the truncation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RepCheck {
    /// max |([kz, kp] - kp)_ij| over all entries; zero in exact arithmetic.
    pub raising_residual: f64,
    /// max |([kp, km] + 2 kz)_mm| over m <= n-2.
    pub ladder_interior_residual: f64,
    /// max |(casimir - k(k-1))_ij| over the (n-1)-square interior block.
    pub casimir_interior_residual: f64,
}

pub fn check_rep(rep: &TruncatedRep) -> RepCheck {
    let n = rep.n;
    let comm_zp = &rep.kz.dot(&rep.kp) - &rep.kp.dot(&rep.kz);
    let mut raising = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            raising = raising.max((comm_zp[(i, j)] - rep.kp[(i, j)]).abs());
        }
    }
    let comm_pm = &rep.kp.dot(&rep.km) - &rep.km.dot(&rep.kp);
    let mut ladder = 0.0f64;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let target = if i == j { -2.0 * rep.kz[(i, i)] } else { 0.0 };
            ladder = ladder.max((comm_pm[(i, j)] - target).abs());
        }
    }
    let cas = casimir(rep);
    let value = rep.k * (rep.k - 1.0);
    let mut casres = 0.0f64;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let target = if i == j { value } else { 0.0 };
            casres = casres.max((cas[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    RepCheck {
        raising_residual: raising,
        ladder_interior_residual: ladder,
        casimir_interior_residual: casres,
    }
}

/// Image of an algebra element: -i (kx Kx + ky Ky + kz Kz), skew-Hermitian.
pub fn algebra_rep(rep: &TruncatedRep, m: &AlgebraElement) -> Array2<Complex64> {
    let mut h = Array2::<Complex64>::zeros((rep.n, rep.n));
    let minus_i = Complex64::new(0.0, -1.0);
    for i in 0..rep.n {
        for j in 0..rep.n {
            let v = rep.kx[(i, j)] * m.kx + rep.ky[(i, j)] * m.ky
                + Complex64::new(rep.kz[(i, j)] * m.kz, 0.0);
            h[(i, j)] = minus_i * v;
        }
    }
    h
}

/// Dense matrix exponential by scaling-and-squaring over a Taylor core.
pub fn expm(m: &Array2<Complex64>) -> Array2<Complex64> {
    let n = m.nrows();
    let mut norm = 0.0f64;
    for j in 0..n {
        let col: f64 = (0..n).map(|i| m[(i, j)].norm()).sum();
        norm = norm.max(col);
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let factor = Complex64::new(1.0 / 2f64.powi(squarings as i32), 0.0);
    let a = m.mapv(|v| v * factor);
    let mut out = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for j in 1..=40u32 {
        term = term.dot(&a).mapv(|v| v / Complex64::new(j as f64, 0.0));
        out = &out + &term;
        let worst = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if worst < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        out = out.dot(&out);
    }
    out
}

/// Disc label of the coherent state reached from alpha: tanh(|a|) a/|a|.
pub fn disc_label(alpha: Complex64) -> Complex64 {
    let r = alpha.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        alpha / r * r.tanh()
    }
}

/// Action of a group element on disc labels.
pub fn moebius_label(x: &GroupElement, zeta: Complex64) -> Complex64 {
    let a = Complex64::new(x.x1, x.x2);
    let b = Complex64::new(x.x3, -x.x4);
    (a * zeta + b) / (b.conj() * zeta + a.conj())
}

/// Analytic amplitudes of the normalized coherent state with label zeta,
/// cut to n entries: c_m = (1-|z|^2)^k z^m sqrt(G(m+2k)/(m! G(2k))).
pub fn coherent_amplitudes(zeta: Complex64, k: f64, n: usize) -> Vec<Complex64> {
    let r2 = zeta.norm_sqr();
    let mut out = Vec::with_capacity(n);
    let mut c = Complex64::new((1.0 - r2).powf(k), 0.0);
    for m in 0..n {
        out.push(c);
        c = c * zeta * ((m as f64 + 2.0 * k) / (m as f64 + 1.0)).sqrt();
    }
    out
}

/// Probability mass of the analytic state beyond the first n entries.
fn tail_mass(zeta_abs2: f64, k: f64, n: usize) -> f64 {
    let r = zeta_abs2;
    if r == 0.0 {
        return 0.0;
    }
    let mut w = (1.0 - r).powf(2.0 * k);
    for m in 0..n {
        w *= r * (m as f64 + 2.0 * k) / (m as f64 + 1.0);
    }
    let mut sum = 0.0;
    let mut m = n;
    while m < n + 200_000 {
        sum += w;
        w *= r * (m as f64 + 2.0 * k) / (m as f64 + 1.0);
        if w < sum * 1e-18 + 1e-300 {
            break;
        }
        m += 1;
    }
    sum
}

/// A coherent state built by the displacement exponential on the
/// truncation, with the analytic truncation deficit it carries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoherentState {
    pub alpha: Complex64,
    pub zeta: Complex64,
    pub k: f64,
    pub amplitudes: Vec<Complex64>,
    /// Mass of the ideal state lost beyond the truncation.
    pub deficit: f64,
}

/// Apply exp(alpha kp - conj(alpha) km) to the lowest state. Rejected when
/// the ideal state would put more than LEAK_TOL of its mass beyond n.
pub fn coherent_state(alpha: Complex64, k: f64, n: usize) -> Result<CoherentState, Error> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::InvalidInput("coherent_state: non-finite alpha".into()));
    }
    let rep = build_rep(k, n)?;
    let zeta = disc_label(alpha);
    let deficit = tail_mass(zeta.norm_sqr(), k, n);
    if deficit >= LEAK_TOL {
        return Err(Error::TruncationInsufficient(format!(
            "coherent_state: deficit {deficit:.3e} at n = {n}; increase the truncation"
        )));
    }
    let ac = alpha;
    let gen = to_complex(&rep.kp).mapv(|v| v * ac) - to_complex(&rep.km).mapv(|v| v * ac.conj());
    let u = expm(&gen);
    let amplitudes = u.column(0).to_vec();
    Ok(CoherentState { alpha, zeta, k, amplitudes, deficit })
}

/// Agreement report between the 2x2 group propagation and the truncated
/// N-dimensional propagation of the same schedule.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TransitionReport {
    /// Worst distance between the Moebius-transported label and the label
    /// extracted from the propagated amplitudes, over all boundaries.
    pub max_label_error: f64,
    /// Overlap squared of the final amplitudes with the analytic coherent
    /// state at the transported label.
    pub final_fidelity: f64,
    /// Worst occupation of the top two states seen along the run.
    pub max_boundary_occupation: f64,
}

/// Propagate the lowest state through the schedule in the representation
/// and compare labels and final state against the group-level prediction.
pub fn transition_check(
    a: &AlgebraElement,
    b: &AlgebraElement,
    schedule: &ControlSchedule,
    k: f64,
    n: usize,
) -> Result<TransitionReport, Error> {
    let rep = build_rep(k, n)?;
    schedule.validate(1)?;
    let mut psi = Array1::<Complex64>::zeros(n);
    psi[0] = Complex64::new(1.0, 0.0);
    let mut x = GroupElement::identity();
    let mut max_label_error = 0.0f64;
    let mut max_occ = 0.0f64;
    for seg in &schedule.segments {
        let el = a.add(&b.scale(seg.controls[0]));
        let h = algebra_rep(&rep, &el).mapv(|v| v * Complex64::new(seg.duration, 0.0));
        psi = expm(&h).dot(&psi);
        x = group_mul(&exp_element(&el, seg.duration), &x);
        let occ: f64 = psi.iter().skip(n - 2).map(|z| z.norm_sqr()).sum();
        max_occ = max_occ.max(occ);
        if occ > LEAK_TOL {
            return Err(Error::TruncationInsufficient(format!(
                "transition_check: boundary occupation {occ:.3e} exceeds {LEAK_TOL:.0e}"
            )));
        }
        if psi[0].norm() < 1e-8 {
            return Err(Error::Numerical(
                "transition_check: ground amplitude too small for label extraction".into(),
            ));
        }
        let expected = moebius_label(&x, Complex64::new(0.0, 0.0));
        let extracted = psi[1] / psi[0] / (2.0 * k).sqrt();
        max_label_error = max_label_error.max((extracted - expected).norm());
    }
    let final_label = moebius_label(&x, Complex64::new(0.0, 0.0));
    let ideal = coherent_amplitudes(final_label, k, n);
    let overlap: Complex64 = ideal
        .iter()
        .zip(psi.iter())
        .map(|(c, p)| c.conj() * p)
        .sum();
    Ok(TransitionReport {
        max_label_error,
        final_fidelity: overlap.norm_sqr(),
        max_boundary_occupation: max_occ,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{K_X, K_Y, K_Z};

    #[test]
    fn build_rep_validates() {
        assert!(build_rep(0.0, 8).is_err());
        assert!(build_rep(-1.0, 8).is_err());
        assert!(build_rep(1.0, 1).is_err());
        assert!(build_rep(0.5, 2).is_ok());
    }

    #[test]
    fn ladder_entries_match_formula() {
        let rep = build_rep(1.0, 5).unwrap();
        assert!((rep.kp[(1, 0)] - (1.0f64 * 2.0).sqrt()).abs() < 1e-15);
        assert!((rep.kp[(4, 3)] - (4.0f64 * 5.0).sqrt()).abs() < 1e-15);
        assert_eq!(rep.kp[(0, 1)], 0.0);
        assert_eq!(rep.km[(0, 1)], rep.kp[(1, 0)]);
        assert_eq!(rep.kz[(3, 3)], 4.0);
    }

    #[test]
    fn defining_relations_hold_on_interior() {
        for (k, n) in [(0.5, 8), (1.0, 16), (2.0, 12)] {
            let rep = build_rep(k, n).unwrap();
            let check = check_rep(&rep);
            assert!(check.raising_residual < 1e-12, "k={k} n={n} {check:?}");
            assert!(check.ladder_interior_residual < 1e-12);
            assert!(check.casimir_interior_residual < 1e-10);
        }
    }

    #[test]
    fn casimir_boundary_defect_is_confined() {
        let rep = build_rep(1.0, 10).unwrap();
        let cas = casimir(&rep);
        // last diagonal entry picks up the truncation defect
        let boundary = (cas[(9, 9)] - Complex64::new(0.0, 0.0)).norm();
        assert!(boundary > 1.0);
    }

    #[test]
    fn propagators_are_unitary() {
        let rep = build_rep(1.5, 12).unwrap();
        let h = algebra_rep(&rep, &AlgebraElement::new(0.7, -0.4, 1.1));
        let u = expm(&h);
        let ut = u.t().mapv(|v| v.conj());
        let prod = ut.dot(&u);
        for i in 0..12 {
            for j in 0..12 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - Complex64::new(target, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        // diagonal input: entries exponentiate independently
        let mut m = Array2::<Complex64>::zeros((3, 3));
        m[(0, 0)] = Complex64::new(0.3, 1.0);
        m[(1, 1)] = Complex64::new(-2.0, 0.5);
        m[(2, 2)] = Complex64::new(4.0, -3.0);
        let e = expm(&m);
        for i in 0..3 {
            assert!((e[(i, i)] - m[(i, i)].exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_matches_analytic_amplitudes() {
        let alpha = Complex64::new(0.3, 0.2);
        let st = coherent_state(alpha, 1.0, 32).unwrap();
        let ideal = coherent_amplitudes(st.zeta, 1.0, 32);
        for (got, want) in st.amplitudes.iter().zip(ideal.iter()) {
            assert!((got - want).norm() < 1e-10, "{got} vs {want}");
        }
        assert!(st.deficit < 1e-12);
    }

    #[test]
    fn coherent_deficit_example() {
        let st = coherent_state(Complex64::new(0.3, 0.0), 1.0, 40).unwrap();
        assert!(st.deficit < 1e-10, "deficit {}", st.deficit);
        let norm: f64 = st.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_rejects_insufficient_truncation() {
        // strong displacement against a tiny cutoff
        assert!(matches!(
            coherent_state(Complex64::new(2.5, 0.0), 1.0, 4),
            Err(Error::TruncationInsufficient(_))
        ));
    }

    #[test]
    fn deficit_decreases_with_truncation() {
        let zeta = disc_label(Complex64::new(0.8, 0.0));
        let mut last = f64::INFINITY;
        for n in [8, 16, 24, 32] {
            let tail = tail_mass(zeta.norm_sqr(), 1.0, n);
            assert!(tail <= last);
            last = tail;
        }
        // small cutoffs are rejected outright; large ones go through
        assert!(matches!(
            coherent_state(Complex64::new(0.8, 0.0), 1.0, 8),
            Err(Error::TruncationInsufficient(_))
        ));
        let st = coherent_state(Complex64::new(0.8, 0.0), 1.0, 32).unwrap();
        assert!(st.deficit < 1e-6);
    }

    #[test]
    fn moebius_drift_rotates_label() {
        // exp(t K_z) acts on labels as multiplication by exp(-i t)
        let z0 = Complex64::new(0.3, -0.1);
        for t in [0.3, 1.0, 2.7] {
            let x = exp_element(&K_Z, t);
            let z = moebius_label(&x, z0);
            let want = z0 * Complex64::new(0.0, -t).exp();
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn moebius_boost_matches_displacement() {
        // exp(t K_y) carries the lowest state to label -tanh(t/2)
        for t in [0.2, 0.9, 1.6] {
            let x = exp_element(&K_Y, t);
            let z = moebius_label(&x, Complex64::new(0.0, 0.0));
            assert!((z - Complex64::new(-(0.5 * t).tanh(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn transition_check_agrees_with_group() {
        let schedule = ControlSchedule::single_input(&[(0.4, 0.3), (0.3, -0.6), (0.5, 1.0)]);
        let report = transition_check(&K_Z, &K_X, &schedule, 1.0, 40).unwrap();
        assert!(report.max_label_error < 1e-8, "{report:?}");
        assert!(report.final_fidelity > 1.0 - 1e-8, "{report:?}");
        assert!(report.max_boundary_occupation < 1e-10);
    }

    #[test]
    fn transition_check_periodic_loop_returns_home() {
        let u = (1.0 + 16.0 * std::f64::consts::PI.powi(2)).sqrt();
        let schedule = ControlSchedule::single_input(&[(1.0, u)]);
        let report = transition_check(&K_X, &K_Z, &schedule, 0.5, 48).unwrap();
        assert!(report.max_label_error < 1e-6, "{report:?}");
        assert!(report.final_fidelity > 1.0 - 1e-6);
    }

    #[test]
    fn transition_check_detects_leakage() {
        // a long boost pushes occupation up the ladder past any small cutoff
        let schedule = ControlSchedule::single_input(&[(6.0, 0.0)]);
        assert!(matches!(
            transition_check(&K_Y, &K_X, &schedule, 1.0, 8),
            Err(Error::TruncationInsufficient(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn moebius_is_an_action(
                t1 in -1.0..1.0f64, t2 in -1.0..1.0f64,
                zx in -0.5..0.5f64, zy in -0.5..0.5f64,
            ) {
                let z = Complex64::new(zx, zy);
                let x = exp_element(&AlgebraElement::new(0.4, -0.2, 1.0), t1);
                let y = exp_element(&AlgebraElement::new(-0.3, 0.8, 0.5), t2);
                let lhs = moebius_label(&group_mul(&x, &y), z);
                let rhs = moebius_label(&x, moebius_label(&y, z));
                prop_assert!((lhs - rhs).norm() < 1e-10);
            }

            #[test]
            fn moebius_preserves_disc(t in -2.0..2.0f64, zx in -0.7..0.7f64, zy in -0.4..0.4f64) {
                let z = Complex64::new(zx, zy);
                prop_assume!(z.norm() < 0.9);
                let x = exp_element(&AlgebraElement::new(0.9, 0.1, -0.6), t);
                let w = moebius_label(&x, z);
                prop_assert!(w.norm() < 1.0);
            }

            #[test]
            fn coherent_norm_only_misses_deficit(ax in -0.6..0.6f64, ay in -0.6..0.6f64) {
                let st = coherent_state(Complex64::new(ax, ay), 1.0, 24).unwrap();
                let norm: f64 = st.amplitudes.iter().map(|z| z.norm_sqr()).sum();
                // displacement on the truncation is unitary, so the norm is 1;
                // the deficit quantifies distance to the ideal state instead
                prop_assert!((norm - 1.0).abs() < 1e-10);
                prop_assert!(st.deficit >= 0.0);
            }
        }
    }
}
