//! Two-level spin dynamics on the Bloch sphere.
//!
//! The rotating-frame Hamiltonian is
//! `H = ħ/2 (Ω cos ρ σx + Ω sin ρ σy + γB σz)`, so the Bloch vector obeys
//! `ds/dt = R × s` with Larmor vector `R = (Ω cos ρ, Ω sin ρ, γB)`.
//! A positive detuning therefore precesses the state from +x towards +y.
//!
//! Constant-parameter evolution is an exact rotation. Time-dependent drives
//! are composed from exact rotations over a mesh that is refined until two
//! successive meshes agree to the requested tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::TWO_PI;

/// Bloch vector of a two-level state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpinState {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// The optically pumped state, +z.
    pub const fn up() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &SpinState) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    /// Right-handed rotation by `angle` about `axis`, which need not be
    /// normalized. A zero axis leaves the state unchanged.
    pub fn rotated(&self, axis: [f64; 3], angle: f64) -> SpinState {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n == 0.0 || angle == 0.0 {
            return *self;
        }
        let k = [axis[0] / n, axis[1] / n, axis[2] / n];
        let v = self.as_array();
        let (s, c) = angle.sin_cos();
        let dot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
        let cross = [
            k[1] * v[2] - k[2] * v[1],
            k[2] * v[0] - k[0] * v[2],
            k[0] * v[1] - k[1] * v[0],
        ];
        let f = dot * (1.0 - c);
        SpinState::new(
            v[0] * c + cross[0] * s + k[0] * f,
            v[1] * c + cross[1] * s + k[1] * f,
            v[2] * c + cross[2] * s + k[2] * f,
        )
    }

    fn rotated_z(&self, angle: f64) -> SpinState {
        let (s, c) = angle.sin_cos();
        SpinState::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

/// Instantaneous control: Rabi frequency Ω (rad/s), drive phase ρ (rad),
/// and the σz coefficient γB (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub rabi: f64,
    pub phase: f64,
    pub detuning: f64,
}

impl DriveParams {
    pub fn new(rabi: f64, phase: f64, detuning: f64) -> Result<Self> {
        if !(rabi.is_finite() && rabi >= 0.0) {
            return Err(invalid(format!("rabi frequency must be finite and >= 0, got {rabi}")));
        }
        if !phase.is_finite() || !detuning.is_finite() {
            return Err(invalid("drive phase and detuning must be finite"));
        }
        Ok(Self {
            rabi,
            phase,
            detuning,
        })
    }

    /// Free precession with no drive.
    pub fn free(detuning: f64) -> Self {
        Self {
            rabi: 0.0,
            phase: 0.0,
            detuning,
        }
    }

    /// Cartesian Larmor vector.
    pub fn larmor_axis(&self) -> [f64; 3] {
        let (s, c) = self.phase.sin_cos();
        [self.rabi * c, self.rabi * s, self.detuning]
    }
}

/// Larmor vector in spherical form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LarmorVector {
    pub magnitude: f64,
    pub polar_angle: f64,
    pub azimuth: f64,
}

/// `R = sqrt(Ω² + (γB)²)`, `cos θ = γB / R`, azimuth ρ. For `R = 0` the polar
/// angle is defined as 0.
pub fn larmor_from_drive(d: &DriveParams) -> LarmorVector {
    let magnitude = d.rabi.hypot(d.detuning);
    let polar_angle = if magnitude == 0.0 {
        0.0
    } else {
        (d.detuning / magnitude).clamp(-1.0, 1.0).acos()
    };
    LarmorVector {
        magnitude,
        polar_angle,
        azimuth: d.phase,
    }
}

/// Exact evolution under constant drive parameters: rotation about the
/// Larmor vector by `R · duration`. A negative duration evolves backwards.
pub fn propagate_constant(state: &SpinState, d: &DriveParams, duration: f64) -> SpinState {
    let axis = d.larmor_axis();
    let r = d.rabi.hypot(d.detuning);
    state.rotated(axis, r * duration)
}

/// Instantaneous rotation by `angle` about the equatorial axis
/// `(cos axis_phase, sin axis_phase, 0)`.
pub fn apply_ideal_pulse(state: &SpinState, axis_phase: f64, angle: f64) -> SpinState {
    let (s, c) = axis_phase.sin_cos();
    state.rotated([c, s, 0.0], angle)
}

/// Finite resonant pulse of duration `angle / rabi` in the presence of a
/// detuning. Reduces to [`apply_ideal_pulse`] when `detuning = 0`.
pub fn apply_finite_pulse(
    state: &SpinState,
    rabi: f64,
    axis_phase: f64,
    angle: f64,
    detuning: f64,
) -> Result<SpinState> {
    if !(rabi > 0.0) {
        return Err(invalid("finite pulses need a positive rabi frequency"));
    }
    // A negative angle is the same pulse with the drive phase advanced by π.
    let (phase, duration) = if angle >= 0.0 {
        (axis_phase, angle / rabi)
    } else {
        (axis_phase + std::f64::consts::PI, -angle / rabi)
    };
    let d = DriveParams::new(rabi, phase, detuning)?;
    Ok(propagate_constant(state, &d, duration))
}

/// Exact evolution under a linearly swept drive phase
/// `ρ(t) = phase_start + phase_rate · t` with constant detuning.
///
/// In the frame co-rotating with the drive the Larmor vector is static,
/// `(Ω, 0, γB − ρ̇)`, so the whole segment is two z-rotations around one
/// fixed-axis rotation.
pub fn propagate_linear_sweep(
    state: &SpinState,
    rabi: f64,
    phase_start: f64,
    phase_rate: f64,
    detuning: f64,
    duration: f64,
) -> SpinState {
    let s = state.rotated_z(-phase_start);
    let eff = [rabi, 0.0, detuning - phase_rate];
    let r = rabi.hypot(detuning - phase_rate);
    let s = s.rotated(eff, r * duration);
    s.rotated_z(phase_start + phase_rate * duration)
}

/// Mesh control for [`propagate_swept`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Accept when successive meshes differ by at most this much in every
    /// Bloch component.
    pub tol: f64,
    /// Maximum number of mesh halvings after the initial mesh.
    pub max_depth: usize,
    /// Minimum steps per 2π of drive-phase sweep and per Larmor period.
    pub steps_per_cycle: usize,
    /// Floor on the initial number of steps.
    pub min_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_depth: 12,
            steps_per_cycle: 64,
            min_steps: 16,
        }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Result of a swept propagation with its refinement history.
#[derive(Debug, Clone, PartialEq)]
pub struct SweptReport {
    pub state: SpinState,
    /// Steps in the accepted (finest) mesh.
    pub steps: usize,
    /// Max-component difference between each mesh and its halving.
    pub error_history: Vec<f64>,
}

fn compose_mesh(
    state: &SpinState,
    rabi: f64,
    phase_fn: &dyn Fn(f64) -> f64,
    detuning_fn: &dyn Fn(f64) -> f64,
    duration: f64,
    steps: usize,
) -> SpinState {
    let dt = duration / steps as f64;
    let mut s = *state;
    for i in 0..steps {
        let t = (i as f64 + 0.5) * dt;
        let d = DriveParams {
            rabi,
            phase: phase_fn(t),
            detuning: detuning_fn(t),
        };
        s = propagate_constant(&s, &d, dt);
    }
    s
}

fn initial_steps(
    rabi: f64,
    phase_fn: &dyn Fn(f64) -> f64,
    detuning_fn: &dyn Fn(f64) -> f64,
    duration: f64,
    ctl: &StepControl,
) -> usize {
    const PROBES: usize = 128;
    let mut phase_variation = 0.0;
    let mut max_detuning: f64 = 0.0;
    let mut prev = phase_fn(0.0);
    for i in 0..=PROBES {
        let t = duration * i as f64 / PROBES as f64;
        let p = phase_fn(t);
        phase_variation += (p - prev).abs();
        prev = p;
        max_detuning = max_detuning.max(detuning_fn(t).abs());
    }
    // Phase only matters when there is a drive to carry it.
    let phase_cycles = if rabi > 0.0 {
        phase_variation / TWO_PI
    } else {
        0.0
    };
    let larmor_cycles = rabi.hypot(max_detuning) * duration / TWO_PI;
    let per = ctl.steps_per_cycle as f64;
    let n = (per * phase_cycles).ceil().max((per * larmor_cycles).ceil());
    (n as usize).max(ctl.min_steps).max(1)
}

/// Evolution under a time-dependent drive phase and detuning with constant
/// Rabi frequency, reporting the refinement history.
pub fn propagate_swept_report(
    state: &SpinState,
    rabi: f64,
    phase_fn: &dyn Fn(f64) -> f64,
    detuning_fn: &dyn Fn(f64) -> f64,
    duration: f64,
    ctl: &StepControl,
) -> Result<SweptReport> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(invalid(format!("duration must be finite and >= 0, got {duration}")));
    }
    if !(rabi >= 0.0 && rabi.is_finite()) {
        return Err(invalid(format!("rabi frequency must be finite and >= 0, got {rabi}")));
    }
    if duration == 0.0 {
        return Ok(SweptReport {
            state: *state,
            steps: 0,
            error_history: Vec::new(),
        });
    }
    let mut steps = initial_steps(rabi, phase_fn, detuning_fn, duration, ctl);
    let mut coarse = compose_mesh(state, rabi, phase_fn, detuning_fn, duration, steps);
    let mut history = Vec::new();
    for _ in 0..=ctl.max_depth {
        steps *= 2;
        let fine = compose_mesh(state, rabi, phase_fn, detuning_fn, duration, steps);
        let err = fine.max_abs_diff(&coarse);
        history.push(err);
        if err <= ctl.tol {
            return Ok(SweptReport {
                state: fine,
                steps,
                error_history: history,
            });
        }
        coarse = fine;
    }
    Err(Error::ConvergenceFailure {
        estimate: *history.last().unwrap_or(&f64::NAN),
        tolerance: ctl.tol,
        depth: ctl.max_depth,
    })
}

/// Evolution under a time-dependent drive phase and detuning.
pub fn propagate_swept(
    state: &SpinState,
    rabi: f64,
    phase_fn: &dyn Fn(f64) -> f64,
    detuning_fn: &dyn Fn(f64) -> f64,
    duration: f64,
    ctl: &StepControl,
) -> Result<SpinState> {
    propagate_swept_report(state, rabi, phase_fn, detuning_fn, duration, ctl).map(|r| r.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    const MHZ: f64 = TWO_PI * 1e6;

    fn close(a: &SpinState, b: &SpinState, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn larmor_pure_z_and_equatorial() {
        let l = larmor_from_drive(&DriveParams::free(3.0));
        assert_eq!(l.magnitude, 3.0);
        assert_eq!(l.polar_angle, 0.0);
        let l = larmor_from_drive(&DriveParams::new(2.0, 0.3, 0.0).unwrap());
        assert_eq!(l.magnitude, 2.0);
        assert!((l.polar_angle - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(l.azimuth, 0.3);
    }

    #[test]
    fn larmor_five_by_five() {
        let d = DriveParams::new(5.0 * MHZ, 0.0, 5.0 * MHZ).unwrap();
        let l = larmor_from_drive(&d);
        assert!((l.magnitude / MHZ - 50f64.sqrt()).abs() < 1e-12);
        assert!((l.polar_angle - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn larmor_degenerate() {
        let l = larmor_from_drive(&DriveParams::free(0.0));
        assert_eq!(l.magnitude, 0.0);
        assert_eq!(l.polar_angle, 0.0);
        let s = SpinState::new(0.3, -0.2, 0.5);
        assert_eq!(propagate_constant(&s, &DriveParams::free(0.0), 1.0), s);
    }

    #[test]
    fn drive_params_reject_bad_input() {
        assert!(DriveParams::new(-1.0, 0.0, 0.0).is_err());
        assert!(DriveParams::new(1.0, f64::NAN, 0.0).is_err());
        assert!(DriveParams::new(1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn resonant_pi_pulse_inverts() {
        let om = 5.0 * MHZ;
        let d = DriveParams::new(om, 0.0, 0.0).unwrap();
        let s = propagate_constant(&SpinState::up(), &d, PI / om);
        assert!(close(&s, &SpinState::new(0.0, 0.0, -1.0), 1e-12));
    }

    #[test]
    fn free_precession_is_right_handed() {
        let gb = 2.0 * MHZ;
        let t = 0.1e-6;
        let s = propagate_constant(&SpinState::new(1.0, 0.0, 0.0), &DriveParams::free(gb), t);
        let phi = gb * t;
        assert!(close(&s, &SpinState::new(phi.cos(), phi.sin(), 0.0), 1e-12));
    }

    #[test]
    fn zero_duration_is_identity() {
        let s = SpinState::new(0.1, 0.7, -0.2);
        let d = DriveParams::new(1e7, 0.4, 3e6).unwrap();
        assert_eq!(propagate_constant(&s, &d, 0.0), s);
    }

    #[test]
    fn ideal_pulses() {
        let s = apply_ideal_pulse(&SpinState::up(), 0.0, FRAC_PI_2);
        assert!(close(&s, &SpinState::new(0.0, -1.0, 0.0), 1e-15));
        let s = apply_ideal_pulse(&SpinState::up(), 0.0, PI);
        assert!(close(&s, &SpinState::new(0.0, 0.0, -1.0), 1e-15));
        let s0 = SpinState::new(0.2, 0.3, 0.9);
        let s = apply_ideal_pulse(&s0, 1.1, TWO_PI);
        assert!(close(&s, &s0, 1e-14));
    }

    #[test]
    fn finite_pulse_matches_ideal_on_resonance() {
        let s0 = SpinState::new(0.1, -0.4, 0.8);
        for &(phase, angle) in &[(0.0, FRAC_PI_2), (FRAC_PI_2, PI), (0.3, -FRAC_PI_2)] {
            let a = apply_ideal_pulse(&s0, phase, angle);
            let b = apply_finite_pulse(&s0, 10.0 * MHZ, phase, angle, 0.0).unwrap();
            assert!(close(&a, &b, 1e-12), "{phase} {angle}");
        }
    }

    #[test]
    fn constant_sweep_reduces_to_constant_propagation() {
        let om = 5.0 * MHZ;
        let gb = 1.3 * MHZ;
        let s0 = SpinState::new(0.0, -1.0, 0.0);
        let d = DriveParams::new(om, 0.7, gb).unwrap();
        let exact = propagate_constant(&s0, &d, 1e-6);
        let ctl = StepControl::with_tol(1e-9);
        let swept = propagate_swept(&s0, om, &|_| 0.7, &|_| gb, 1e-6, &ctl).unwrap();
        assert!(close(&exact, &swept, 1e-9));
    }

    #[test]
    fn zero_rabi_ignores_phase() {
        let gb = 1.0 * MHZ;
        let s0 = SpinState::new(1.0, 0.0, 0.0);
        let ctl = StepControl::default();
        let swept = propagate_swept(&s0, 0.0, &|t| 1e8 * t * t, &|_| gb, 2e-6, &ctl).unwrap();
        let exact = propagate_constant(&s0, &DriveParams::free(gb), 2e-6);
        assert!(close(&exact, &swept, 1e-9));
    }

    #[test]
    fn linear_sweep_closed_form_matches_mesh() {
        let om = 5.0 * MHZ;
        let rate = 4.0 * PI * 3.0 / 8e-6;
        let s0 = SpinState::new(0.0, -1.0, 0.0);
        for &gb in &[0.0, 2.0 * MHZ, 9.0 * MHZ] {
            let exact = propagate_linear_sweep(&s0, om, 0.2, rate, gb, 4e-6);
            let mesh = propagate_swept(
                &s0,
                om,
                &|t| 0.2 + rate * t,
                &|_| gb,
                4e-6,
                &StepControl::with_tol(1e-8),
            )
            .unwrap();
            assert!(close(&exact, &mesh, 2e-7), "gb = {gb}: {exact:?} vs {mesh:?}");
        }
    }

    #[test]
    fn refinement_history_decreases() {
        let om = 5.0 * MHZ;
        let rate = 4.0 * PI * 3.0 / 8e-6;
        let rep = propagate_swept_report(
            &SpinState::new(0.0, -1.0, 0.0),
            om,
            &|t| rate * t + 1e11 * t * t,
            &|t| 2.0 * MHZ * (1.0 + (1e6 * t).sin()),
            4e-6,
            &StepControl::with_tol(1e-9),
        )
        .unwrap();
        assert!(rep.error_history.len() >= 2);
        for w in rep.error_history.windows(2) {
            assert!(w[1] < w[0], "{:?}", rep.error_history);
        }
    }

    #[test]
    fn convergence_failure_reported() {
        let ctl = StepControl {
            tol: 1e-15,
            max_depth: 1,
            steps_per_cycle: 4,
            min_steps: 1,
        };
        let err = propagate_swept(
            &SpinState::new(0.0, -1.0, 0.0),
            5.0 * MHZ,
            &|t| 1e7 * t,
            &|_| 1.0 * MHZ,
            4e-6,
            &ctl,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConvergenceFailure { .. }));
    }

    #[test]
    fn swept_rejects_negative_duration() {
        let r = propagate_swept(&SpinState::up(), 1.0, &|_| 0.0, &|_| 0.0, -1.0, &StepControl::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
