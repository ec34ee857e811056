//! Steering planner for controllable single-input systems.
//!
//! Plans are piecewise-constant schedules whose control values stay inside
//! the elliptic set Ω (clipped to the control bound when one is given), so
//! every factor of the plan is a bounded rotation-like exponential and the
//! search landscape is free of hyperbolic blowup. The planner itself is a
//! seeded multistart compass search over segment durations and control
//! values, growing the segment count on stagnation; candidate quality is
//! always measured by the same left-multiplied product the simulator
//! computes, so the returned error is the replay error by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{exp_element, group_dist, group_mul, AlgebraElement, GroupElement};
use crate::controllability::{verdict_single, verdict_single_bounded, Decision, OmegaSet, OmegaShape};
use crate::simulator::{propagate, ControlSchedule, Segment};
use crate::Error;

/// Segment-count ladder tried in order; growth only happens on stagnation.
const SEGMENT_LADDER: [usize; 5] = [1, 3, 6, 12, 24];
const RESTARTS_PER_RUNG: usize = 4;
/// Objective evaluations granted per restart, proportional to dimension.
const EVALS_PER_DIM: i64 = 400;

/// A steering result: the schedule, where it actually lands, and how far
/// that is from the request.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SteeringPlan {
    pub schedule: ControlSchedule,
    pub achieved: GroupElement,
    pub target: GroupElement,
    pub error: f64,
    pub converged: bool,
    pub evaluations: u64,
}

/// Closed control intervals strictly inside Ω, clipped to the bound, with
/// unbounded pieces truncated to a window around the witness.
fn admissible_intervals(omega: &OmegaSet, bound: Option<f64>, u_star: f64) -> Vec<(f64, f64)> {
    let w = 10.0 * (1.0 + u_star.abs());
    let margin = |root: f64| 1e-7 * (1.0 + root.abs());
    let raw: Vec<(f64, f64)> = match omega.shape {
        OmegaShape::Empty => Vec::new(),
        OmegaShape::OpenInterval { lo, hi } => vec![(lo + margin(lo), hi - margin(hi))],
        OmegaShape::HalfLineBelow { c } => vec![(c.min(u_star) - w, c - margin(c))],
        OmegaShape::HalfLineAbove { c } => vec![(c + margin(c), c.max(u_star) + w)],
        OmegaShape::TwoRays { lo, hi } => vec![
            (lo.min(u_star) - w, lo - margin(lo)),
            (hi + margin(hi), hi.max(u_star) + w),
        ],
        OmegaShape::AllReals => vec![(u_star - w, u_star + w)],
    };
    raw.into_iter()
        .filter_map(|(l, h)| {
            let (l, h) = match bound {
                Some(c) => (l.max(-c), h.min(c)),
                None => (l, h),
            };
            (l < h).then_some((l, h))
        })
        .collect()
}

/// Left-multiplied product of the plan's factors; identical in order and
/// arithmetic to the simulator's propagation of the same schedule.
fn flow_endpoint(a: &AlgebraElement, b: &AlgebraElement, params: &[f64], q: usize) -> GroupElement {
    let mut x = GroupElement::identity();
    for k in 0..q {
        let el = a.add(&b.scale(params[q + k]));
        x = group_mul(&exp_element(&el, params[k]), &x);
    }
    x
}

struct SearchBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Derivative-free compass search with per-coordinate step adaptation.
/// Runs until the steps collapse, the budget runs out, or the objective
/// hits rounding level.
fn compass<F: FnMut(&[f64]) -> f64>(
    obj: &mut F,
    x: &mut [f64],
    sbox: &SearchBox,
    budget: &mut i64,
) -> f64 {
    let n = x.len();
    let span = |i: usize| (sbox.hi[i] - sbox.lo[i]).max(1e-9);
    let mut steps: Vec<f64> = (0..n).map(|i| 0.25 * span(i)).collect();
    let mut f = obj(x);
    *budget -= 1;
    loop {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                if *budget <= 0 {
                    return f;
                }
                let old = x[i];
                let cand = (old + dir * steps[i]).clamp(sbox.lo[i], sbox.hi[i]);
                if cand == old {
                    continue;
                }
                x[i] = cand;
                let fc = obj(x);
                *budget -= 1;
                if fc < f {
                    f = fc;
                    improved = true;
                    steps[i] = (steps[i] * 1.6).min(0.5 * span(i));
                    break;
                }
                x[i] = old;
            }
        }
        if f < 1e-14 || *budget <= 0 {
            return f;
        }
        if !improved {
            let mut all_tiny = true;
            for s in steps.iter_mut() {
                *s *= 0.5;
                if *s > 1e-13 {
                    all_tiny = false;
                }
            }
            if all_tiny {
                return f;
            }
        }
    }
}

/// Duration scale: a bit over one full rotation period at the witness
/// control, so single segments can reach anywhere on their orbit.
fn duration_span(a: &AlgebraElement, b: &AlgebraElement, u_star: f64) -> f64 {
    let m = a.add(&b.scale(u_star));
    let kappa = crate::algebra::indefinite_form(&m, &m);
    let omega = 0.5 * (-kappa).max(1e-6).sqrt();
    (1.5 * (2.0 * std::f64::consts::PI / omega)).clamp(2.0, 200.0)
}

/// Plan a schedule steering the identity to `target`.
///
/// Gated on the controllability verdict (bounded when `bound` is given);
/// uncontrollable systems are rejected with the verdict's reason. When no
/// plan reaches `tol`, the best one found is returned with
/// `converged: false` rather than an error.
pub fn plan(
    a: &AlgebraElement,
    b: &AlgebraElement,
    target: &GroupElement,
    bound: Option<f64>,
    tol: f64,
    seed: u64,
) -> Result<SteeringPlan, Error> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput("plan: tol must be positive and finite".into()));
    }
    target
        .validate(1e-9)
        .map_err(|_| Error::InvalidInput("plan: target is not on the group quadric".into()))?;
    let verdict = match bound {
        Some(c) => verdict_single_bounded(a, b, c)?,
        None => verdict_single(a, b),
    };
    if verdict.decision != Decision::Controllable {
        return Err(Error::NotControllable(format!(
            "plan: system is not controllable under the given bound (certificate: {:?})",
            verdict.certificate
        )));
    }
    let u_star = verdict
        .witness()
        .expect("controllable single-input verdicts carry a witness");
    let omega = verdict
        .omega
        .expect("independent-pair verdicts carry omega");
    let intervals = admissible_intervals(&omega, bound, u_star);
    if intervals.is_empty() {
        return Err(Error::Numerical("plan: admissible control set collapsed".into()));
    }
    let home = intervals
        .iter()
        .position(|&(l, h)| l <= u_star && u_star <= h)
        .unwrap_or(0);
    let t_span = duration_span(a, b, u_star);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut evaluations = 0u64;

    'ladder: for &q in &SEGMENT_LADDER {
        for restart in 0..RESTARTS_PER_RUNG {
            let mut seg_intervals = Vec::with_capacity(q);
            let mut x = vec![0.0; 2 * q];
            for k in 0..q {
                let idx = if restart == 0 || rng.gen_bool(0.7) {
                    home
                } else {
                    rng.gen_range(0..intervals.len())
                };
                let (l, h) = intervals[idx];
                seg_intervals.push((l, h));
                x[k] = if restart == 0 && q == 1 {
                    0.25 * t_span
                } else {
                    rng.gen_range(0.0..t_span / q as f64 * 2.0)
                };
                x[q + k] = if restart == 0 {
                    u_star.clamp(l, h)
                } else {
                    rng.gen_range(l..=h)
                };
            }
            let sbox = SearchBox {
                lo: std::iter::repeat(0.0)
                    .take(q)
                    .chain(seg_intervals.iter().map(|&(l, _)| l))
                    .collect(),
                hi: std::iter::repeat(t_span)
                    .take(q)
                    .chain(seg_intervals.iter().map(|&(_, h)| h))
                    .collect(),
            };
            let mut budget = (EVALS_PER_DIM * 2 * q as i64).max(1500);
            let mut obj = |p: &[f64]| group_dist(&flow_endpoint(a, b, p, q), target);
            let before = budget;
            let f = compass(&mut obj, &mut x, &sbox, &mut budget);
            evaluations += (before - budget) as u64;
            if best.as_ref().map_or(true, |(bf, _, _)| f < *bf) {
                best = Some((f, x, q));
            }
            if best.as_ref().map(|(bf, _, _)| *bf <= tol).unwrap_or(false) {
                break 'ladder;
            }
        }
    }

    let (_, params, q) = best.expect("at least one restart always runs");
    let schedule = ControlSchedule {
        segments: (0..q)
            .map(|k| Segment {
                duration: params[k],
                controls: vec![params[q + k]],
            })
            .collect(),
    };
    let achieved = propagate(a, &[*b], &schedule)?.final_state();
    let error = group_dist(&achieved, target);
    Ok(SteeringPlan {
        schedule,
        achieved,
        target: *target,
        error,
        converged: error <= tol,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{K_X, K_Y, K_Z};
    use crate::simulator::reachable_sample;

    #[test]
    fn recovers_single_factor_target() {
        // target generated with the witness control itself
        let v = verdict_single(&K_Z, &K_X);
        let u = v.witness().unwrap();
        let target = exp_element(&K_Z.add(&K_X.scale(u)), 1.3);
        let plan = plan(&K_Z, &K_X, &target, None, 1e-6, 1).unwrap();
        assert!(plan.converged);
        assert!(plan.error < 1e-12, "error {}", plan.error);
        assert_eq!(plan.schedule.segments.len(), 1);
    }

    #[test]
    fn rejects_uncontrollable_systems() {
        let target = exp_element(&K_Y, 0.5);
        assert!(matches!(
            plan(&K_X, &K_Y, &target, None, 1e-6, 1),
            Err(Error::NotControllable(_))
        ));
        assert!(matches!(
            plan(&K_X, &K_Z, &target, Some(1.0), 1e-6, 1),
            Err(Error::NotControllable(_))
        ));
    }

    #[test]
    fn rejects_off_quadric_target() {
        let bad = GroupElement::new(1.0, 0.1, 0.0, 0.0);
        assert!(matches!(
            plan(&K_Z, &K_X, &bad, None, 1e-6, 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn plans_respect_omega_and_bound() {
        let target = exp_element(&K_X.add(&K_Z.scale(1.5)), 2.0);
        let p = plan(&K_X, &K_Z, &target, Some(3.0), 1e-6, 7).unwrap();
        let omega = verdict_single(&K_X, &K_Z).omega.unwrap();
        for seg in &p.schedule.segments {
            let u = seg.controls[0];
            assert!(omega.contains(u), "u = {u} escaped omega");
            assert!(u.abs() <= 3.0);
            assert!(seg.duration >= 0.0);
        }
    }

    #[test]
    fn achieved_error_is_replay_error() {
        let target = exp_element(&K_Z.add(&K_X.scale(0.3)), 2.1);
        let p = plan(&K_Z, &K_X, &target, None, 1e-6, 3).unwrap();
        let replay = propagate(&K_Z, &[K_X], &p.schedule).unwrap().final_state();
        assert!(group_dist(&replay, &p.achieved) < 1e-12);
        assert!((group_dist(&replay, &target) - p.error).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_plan() {
        let target = exp_element(&K_Z.add(&K_X.scale(0.4)), 1.9);
        let p1 = plan(&K_Z, &K_X, &target, None, 1e-8, 11).unwrap();
        let p2 = plan(&K_Z, &K_X, &target, None, 1e-8, 11).unwrap();
        assert_eq!(p1.schedule, p2.schedule);
        assert_eq!(p1.evaluations, p2.evaluations);
    }

    #[test]
    fn steers_to_sampled_reachable_targets() {
        let targets = reachable_sample(&K_Z, &[K_X], 6, 4, 6.0, 0.9, 99).unwrap();
        for (i, t) in targets.iter().enumerate() {
            let p = plan(&K_Z, &K_X, t, None, 1e-6, 100 + i as u64).unwrap();
            assert!(p.converged, "target {i}: error {}", p.error);
        }
    }

    #[test]
    fn bounded_plan_uses_admissible_band_only() {
        // omega is two rays beyond |u| = 1; bound 2 leaves (1, 2] and [-2, -1)
        let v = verdict_single_bounded(&K_X, &K_Z, 2.0).unwrap();
        let u = v.witness().unwrap();
        let target = exp_element(&K_X.add(&K_Z.scale(u)), 3.0);
        let p = plan(&K_X, &K_Z, &target, Some(2.0), 1e-6, 5).unwrap();
        for seg in &p.schedule.segments {
            let u = seg.controls[0];
            assert!(u.abs() > 1.0 && u.abs() <= 2.0, "u = {u}");
        }
        assert!(p.converged, "error {}", p.error);
    }
}
