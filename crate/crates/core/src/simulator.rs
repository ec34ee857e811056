//! Exact-on-group propagation of piecewise-constant controls.
//!
//! Each constant segment contributes a closed-form exponential factor, so
//! trajectories never leave the group beyond rounding; the quadric residual
//! is recorded at every emitted state as a health monitor alongside the
//! monotone value used by the trapping certificates. Long segments are
//! split so no single factor sees |t| * norm beyond a fixed cap, keeping
//! the hyperbolic branch away from overflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{exp_element, group_mul, AlgebraElement, GroupElement};
use crate::canonical::monotone_value;
use crate::algebra::{K_X, K_Y, K_Z};
use crate::Error;

/// Per-factor cap on duration * norm; larger products are subdivided.
const FACTOR_CAP: f64 = 10.0;

/// Per-step tolerance for the monotone certificates.
pub const MONOTONE_STEP_TOL: f64 = 1e-9;

/// One piecewise-constant piece: hold these control values this long.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub controls: Vec<f64>,
}

/// A full control schedule for r inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub segments: Vec<Segment>,
}

impl ControlSchedule {
    /// Convenience constructor for single-input (duration, u) lists.
    pub fn single_input(pairs: &[(f64, f64)]) -> Self {
        ControlSchedule {
            segments: pairs
                .iter()
                .map(|&(duration, u)| Segment {
                    duration,
                    controls: vec![u],
                })
                .collect(),
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Durations nonnegative and finite, control vectors of width r.
    pub fn validate(&self, r: usize) -> Result<(), Error> {
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration >= 0.0) || !seg.duration.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "schedule segment {i}: duration must be finite and >= 0"
                )));
            }
            if seg.controls.len() != r {
                return Err(Error::InvalidInput(format!(
                    "schedule segment {i}: expected {r} control values, got {}",
                    seg.controls.len()
                )));
            }
            if seg.controls.iter().any(|u| !u.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "schedule segment {i}: non-finite control value"
                )));
            }
        }
        Ok(())
    }
}

/// Health values recorded with each emitted state.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Monitor {
    pub residual: f64,
    pub monotone: f64,
}

/// Discrete trajectory: states at t = 0, every substep, and each boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GroupElement>,
    pub monitors: Vec<Monitor>,
}

impl Trajectory {
    pub fn final_state(&self) -> GroupElement {
        *self.states.last().expect("trajectory always holds t = 0")
    }

    pub fn max_residual(&self) -> f64 {
        self.monitors
            .iter()
            .map(|m| m.residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Propagate from the identity, emitting states at segment boundaries
/// (plus any splits forced by the factor cap).
pub fn propagate(
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    schedule: &ControlSchedule,
) -> Result<Trajectory, Error> {
    propagate_with_substeps(a, bs, schedule, 1)
}

/// Propagate emitting at least `min_substeps` states per segment; used when
/// certificates need dense in-segment monitoring.
pub fn propagate_with_substeps(
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    schedule: &ControlSchedule,
    min_substeps: usize,
) -> Result<Trajectory, Error> {
    if !a.is_finite() || bs.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidInput("propagate: non-finite system coefficients".into()));
    }
    schedule.validate(bs.len())?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![GroupElement::identity()],
        monitors: vec![Monitor { residual: 0.0, monotone: 1.0 }],
    };
    let mut x = GroupElement::identity();
    let mut t = 0.0;
    for seg in &schedule.segments {
        let mut el = *a;
        for (u, b) in seg.controls.iter().zip(bs) {
            el = el.add(&b.scale(*u));
        }
        let forced = (seg.duration * el.norm() / FACTOR_CAP).ceil();
        let steps = (forced as usize).max(min_substeps.max(1));
        let dt = seg.duration / steps as f64;
        let factor = exp_element(&el, dt);
        for _ in 0..steps {
            x = group_mul(&factor, &x);
            t += dt;
            if !x.is_finite() {
                return Err(Error::Numerical(
                    "propagate: state overflowed; segment too long for this drift".into(),
                ));
            }
            traj.times.push(t);
            traj.states.push(x);
            traj.monitors.push(Monitor {
                residual: x.residual(),
                monotone: monotone_value(&x),
            });
        }
    }
    Ok(traj)
}

/// Propagate a sampled control law u(t) with midpoint sampling on a fixed
/// step; the result is the exact flow of the sampled schedule.
pub fn propagate_sampled<F>(
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    control: F,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory, Error>
where
    F: Fn(f64) -> Vec<f64>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput("propagate_sampled: dt must be positive".into()));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidInput(
            "propagate_sampled: t_final must be finite and >= 0".into(),
        ));
    }
    let mut segments = Vec::new();
    let mut t = 0.0;
    while t < t_final - 1e-15 * t_final.max(1.0) {
        let step = dt.min(t_final - t);
        segments.push(Segment {
            duration: step,
            controls: control(t + 0.5 * step),
        });
        t += step;
    }
    propagate(a, bs, &ControlSchedule { segments })
}

/// Which invariant a certification run checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportKind {
    MonotoneNonincreasing,
    MonotoneNondecreasing,
    GroupResidual,
}

/// Outcome of a certification run over a batch of schedules.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: ReportKind,
    /// Worst per-step violation seen (positive means violated).
    pub max_violation: f64,
    pub pass: bool,
    pub schedules_checked: usize,
    pub states_checked: usize,
}

/// Check the monotone value along every schedule of an arbitrary system.
/// Direction picks which drift sign is being certified.
pub fn monotone_report(
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    schedules: &[ControlSchedule],
    kind: ReportKind,
) -> Result<CertificateReport, Error> {
    let sign = match kind {
        ReportKind::MonotoneNonincreasing => 1.0,
        ReportKind::MonotoneNondecreasing => -1.0,
        ReportKind::GroupResidual => {
            return Err(Error::InvalidInput(
                "monotone_report: kind must be a monotone direction".into(),
            ))
        }
    };
    let mut max_violation = f64::NEG_INFINITY;
    let mut states = 0usize;
    for schedule in schedules {
        let traj = propagate_with_substeps(a, bs, schedule, 32)?;
        states += traj.states.len();
        for w in traj.monitors.windows(2) {
            // nonincreasing: f_next - f_prev <= tol; flipped for the other sign
            let violation = sign * (w[1].monotone - w[0].monotone);
            if violation > max_violation {
                max_violation = violation;
            }
        }
    }
    if max_violation == f64::NEG_INFINITY {
        max_violation = 0.0;
    }
    Ok(CertificateReport {
        kind,
        max_violation,
        pass: max_violation <= MONOTONE_STEP_TOL,
        schedules_checked: schedules.len(),
        states_checked: states,
    })
}

/// Certify the trapping function on the canonical system (epsilon, a):
/// drift epsilon K_x + a K_z, control on K_y. Nonincreasing for
/// epsilon = +1, nondecreasing for epsilon = -1, whatever the controls.
pub fn certify_monotone(
    epsilon: f64,
    a: f64,
    schedules: &[ControlSchedule],
) -> Result<CertificateReport, Error> {
    if epsilon != 1.0 && epsilon != -1.0 {
        return Err(Error::InvalidInput("certify_monotone: epsilon must be +1 or -1".into()));
    }
    if !(a.abs() < 1.0) {
        return Err(Error::InvalidInput("certify_monotone: |a| < 1 required".into()));
    }
    let drift = K_X.scale(epsilon).add(&K_Z.scale(a));
    let kind = if epsilon > 0.0 {
        ReportKind::MonotoneNonincreasing
    } else {
        ReportKind::MonotoneNondecreasing
    };
    monotone_report(&drift, &[K_Y], schedules, kind)
}

/// Worst quadric residual across a batch of schedules for any system.
pub fn residual_report(
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    schedules: &[ControlSchedule],
    tol: f64,
) -> Result<CertificateReport, Error> {
    let mut worst = 0.0f64;
    let mut states = 0usize;
    for schedule in schedules {
        let traj = propagate(a, bs, schedule)?;
        states += traj.states.len();
        worst = worst.max(traj.max_residual());
    }
    Ok(CertificateReport {
        kind: ReportKind::GroupResidual,
        max_violation: worst,
        pass: worst <= tol,
        schedules_checked: schedules.len(),
        states_checked: states,
    })
}

/// Draw random schedules: uniform durations in [0, horizon/segments] and
/// uniform controls in [-scale, scale] per input. Deterministic in seed.
pub fn random_schedules(
    inputs: usize,
    count: usize,
    segments: usize,
    horizon: f64,
    control_scale: f64,
    seed: u64,
) -> Result<Vec<ControlSchedule>, Error> {
    if inputs == 0 || count == 0 || segments == 0 {
        return Err(Error::InvalidInput(
            "random_schedules: inputs, count, and segments must be positive".into(),
        ));
    }
    if !(horizon > 0.0) || !horizon.is_finite() || !(control_scale >= 0.0) {
        return Err(Error::InvalidInput(
            "random_schedules: horizon must be positive, control_scale >= 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_dur = horizon / segments as f64;
    Ok((0..count)
        .map(|_| ControlSchedule {
            segments: (0..segments)
                .map(|_| Segment {
                    duration: rng.gen_range(0.0..=max_dur),
                    controls: (0..inputs)
                        .map(|_| rng.gen_range(-1.0..=1.0) * control_scale)
                        .collect(),
                })
                .collect(),
        })
        .collect())
}

/// Final states of a batch of random schedules; the sampling end of the
/// soundness check against uncontrollability certificates.
pub fn reachable_sample(
    a: &AlgebraElement,
    bs: &[AlgebraElement],
    count: usize,
    segments: usize,
    horizon: f64,
    control_scale: f64,
    seed: u64,
) -> Result<Vec<GroupElement>, Error> {
    let schedules = random_schedules(bs.len(), count, segments, horizon, control_scale, seed)?;
    let mut finals = Vec::with_capacity(count);
    for schedule in &schedules {
        finals.push(propagate(a, bs, schedule)?.final_state());
    }
    Ok(finals)
}
