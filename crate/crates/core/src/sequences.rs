//! Ramsey, Hahn-echo and Berry pulse sequences.
//!
//! Every plan starts from +z, opens with a π/2 pulse about +x and closes with
//! the inverse π/2 pulse, so the read-out `P = s_z` equals `cos φ` for an
//! accumulated phase φ and is +1 when nothing was picked up. Refocusing π
//! pulses are applied about +y, which maps the Larmor vector of a drive at
//! phase 0 onto its negative and so reverses the precession sense.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spin::{
    apply_finite_pulse, apply_ideal_pulse, propagate_constant, propagate_linear_sweep,
    propagate_swept, DriveParams, SpinState, StepControl,
};
use crate::units::{PhysicalConstants, TWO_PI};

/// Axis phase of the preparation and read-out pulses.
pub const PREP_AXIS: f64 = 0.0;
/// Axis phase of the refocusing π pulse.
pub const REFOCUS_AXIS: f64 = FRAC_PI_2;

/// One step of a sequence. Times in seconds, frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    IdealPulse {
        axis_phase: f64,
        angle: f64,
    },
    FreeEvolution {
        duration: f64,
    },
    SweptDrive {
        rabi: f64,
        phase_start: f64,
        phase_rate: f64,
        duration: f64,
    },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::IdealPulse { .. } => 0.0,
            Segment::FreeEvolution { duration } | Segment::SweptDrive { duration, .. } => duration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ramsey,
    Hahn,
    Berry,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Ramsey => "ramsey",
            Protocol::Hahn => "hahn",
            Protocol::Berry => "berry",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramsey" => Ok(Protocol::Ramsey),
            "hahn" => Ok(Protocol::Hahn),
            "berry" => Ok(Protocol::Berry),
            other => Err(invalid(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Control parameters a plan was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub rabi: Option<f64>,
    pub n: Option<u32>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub segments: Vec<Segment>,
    pub protocol: Protocol,
    pub control: Control,
}

impl SequencePlan {
    /// Total evolution time of the segments.
    pub fn interaction_time(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for seg in &self.segments {
            let ok = match *seg {
                Segment::IdealPulse { axis_phase, angle } => axis_phase.is_finite() && angle.is_finite(),
                Segment::FreeEvolution { duration } => duration.is_finite() && duration >= 0.0,
                Segment::SweptDrive {
                    rabi,
                    phase_start,
                    phase_rate,
                    duration,
                } => {
                    rabi.is_finite()
                        && rabi >= 0.0
                        && phase_start.is_finite()
                        && phase_rate.is_finite()
                        && duration.is_finite()
                        && duration >= 0.0
                }
            };
            if !ok {
                return Err(invalid(format!("malformed segment {seg:?}")));
            }
        }
        let total = self.interaction_time();
        if (total - self.control.t).abs() > 1e-12 * self.control.t.abs().max(1e-12) {
            return Err(invalid(format!(
                "segment durations sum to {total:e} s but the plan declares T = {:e} s",
                self.control.t
            )));
        }
        if self.protocol == Protocol::Berry {
            let swept: Vec<_> = self
                .segments
                .iter()
                .filter_map(|s| match *s {
                    Segment::SweptDrive {
                        phase_rate, duration, ..
                    } => Some((phase_rate, duration)),
                    _ => None,
                })
                .collect();
            let half = self.control.t / 2.0;
            let shaped = swept.len() == 2
                && swept.iter().all(|&(_, d)| (d - half).abs() <= 1e-12 * half)
                && swept[0].0 * swept[1].0 < 0.0;
            if !shaped {
                return Err(invalid(
                    "a Berry plan needs two counter-rotating swept halves of T/2 each",
                ));
            }
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("interaction time must be positive, got {t}")));
    }
    Ok(())
}

fn open() -> Segment {
    Segment::IdealPulse {
        axis_phase: PREP_AXIS,
        angle: FRAC_PI_2,
    }
}

fn close() -> Segment {
    Segment::IdealPulse {
        axis_phase: PREP_AXIS,
        angle: -FRAC_PI_2,
    }
}

fn refocus() -> Segment {
    Segment::IdealPulse {
        axis_phase: REFOCUS_AXIS,
        angle: PI,
    }
}

/// π/2 — free evolution T — π/2.
pub fn build_ramsey(t: f64) -> Result<SequencePlan> {
    check_time(t)?;
    Ok(SequencePlan {
        segments: vec![open(), Segment::FreeEvolution { duration: t }, close()],
        protocol: Protocol::Ramsey,
        control: Control {
            rabi: None,
            n: None,
            t,
        },
    })
}

/// π/2 — T/2 — π — T/2 — π/2. `t = 0` is accepted and is the identity.
pub fn build_hahn(t: f64) -> Result<SequencePlan> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("interaction time must be >= 0, got {t}")));
    }
    Ok(SequencePlan {
        segments: vec![
            open(),
            Segment::FreeEvolution { duration: t / 2.0 },
            refocus(),
            Segment::FreeEvolution { duration: t / 2.0 },
            close(),
        ],
        protocol: Protocol::Hahn,
        control: Control {
            rabi: None,
            n: None,
            t,
        },
    })
}

/// Berry sequence: the drive phase runs `ρ(t) = 4πNt/T` for T/2 (N turns),
/// a π pulse, then back from 2πN to 0 for the second T/2.
pub fn build_berry(rabi: f64, n: u32, t: f64) -> Result<SequencePlan> {
    check_time(t)?;
    if !(rabi.is_finite() && rabi > 0.0) {
        return Err(invalid(format!("rabi frequency must be positive, got {rabi}")));
    }
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let rate = 2.0 * TWO_PI * n as f64 / t;
    let half = t / 2.0;
    Ok(SequencePlan {
        segments: vec![
            open(),
            Segment::SweptDrive {
                rabi,
                phase_start: 0.0,
                phase_rate: rate,
                duration: half,
            },
            refocus(),
            Segment::SweptDrive {
                rabi,
                phase_start: TWO_PI * n as f64,
                phase_rate: -rate,
                duration: half,
            },
            close(),
        ],
        protocol: Protocol::Berry,
        control: Control {
            rabi: Some(rabi),
            n: Some(n),
            t,
        },
    })
}

/// A field offset in tesla as a function of time since the first pulse.
pub trait NoiseSource: Sync {
    fn field_at(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> NoiseSource for F {
    fn field_at(&self, t: f64) -> f64 {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum PulseMode {
    #[default]
    Ideal,
    /// Resonant pulses of finite length at the given Rabi frequency. Pulses
    /// do not advance the sequence clock.
    Finite { rabi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SweepMethod {
    /// Closed-form rotating-frame solution for noiseless linear sweeps,
    /// mesh otherwise.
    #[default]
    Auto,
    /// Always compose over a refined mesh.
    Mesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExecOptions {
    pub step: StepControl,
    pub pulse_mode: PulseMode,
    pub sweep_method: SweepMethod,
}

/// Runs a plan from +z at static field `b` (tesla) plus optional noise and
/// returns `P = s_z`.
pub fn execute(
    plan: &SequencePlan,
    consts: &PhysicalConstants,
    b: f64,
    noise: Option<&dyn NoiseSource>,
    opts: &ExecOptions,
) -> Result<f64> {
    Ok(execute_state(plan, consts, b, noise, opts)?.z)
}

/// Like [`execute`] but returns the full final Bloch vector.
pub fn execute_state(
    plan: &SequencePlan,
    consts: &PhysicalConstants,
    b: f64,
    noise: Option<&dyn NoiseSource>,
    opts: &ExecOptions,
) -> Result<SpinState> {
    if !b.is_finite() {
        return Err(invalid("field must be finite"));
    }
    plan.validate()?;
    let gamma = consts.gamma;
    let mut s = SpinState::up();
    let mut clock = 0.0;
    for seg in &plan.segments {
        match *seg {
            Segment::IdealPulse { axis_phase, angle } => {
                s = match opts.pulse_mode {
                    PulseMode::Ideal => apply_ideal_pulse(&s, axis_phase, angle),
                    PulseMode::Finite { rabi } => {
                        let field = b + noise.map_or(0.0, |n| n.field_at(clock));
                        apply_finite_pulse(&s, rabi, axis_phase, angle, gamma * field)?
                    }
                };
            }
            Segment::FreeEvolution { duration } => {
                s = match noise {
                    None => propagate_constant(&s, &DriveParams::free(gamma * b), duration),
                    Some(n) => {
                        let t0 = clock;
                        propagate_swept(
                            &s,
                            0.0,
                            &|_| 0.0,
                            &|t| gamma * (b + n.field_at(t0 + t)),
                            duration,
                            &opts.step,
                        )?
                    }
                };
                clock += duration;
            }
            Segment::SweptDrive {
                rabi,
                phase_start,
                phase_rate,
                duration,
            } => {
                s = match (noise, opts.sweep_method) {
                    (None, SweepMethod::Auto) => {
                        propagate_linear_sweep(&s, rabi, phase_start, phase_rate, gamma * b, duration)
                    }
                    _ => {
                        let t0 = clock;
                        propagate_swept(
                            &s,
                            rabi,
                            &|t| phase_start + phase_rate * t,
                            &|t| gamma * (b + noise.map_or(0.0, |n| n.field_at(t0 + t))),
                            duration,
                            &opts.step,
                        )?
                    }
                };
                clock += duration;
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MHZ: f64 = TWO_PI * 1e6;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn run(plan: &SequencePlan, b: f64) -> f64 {
        execute(plan, &consts(), b, None, &ExecOptions::default()).unwrap()
    }

    #[test]
    fn ramsey_plan_shape() {
        let p = build_ramsey(1e-6).unwrap();
        let free: Vec<_> = p
            .segments
            .iter()
            .filter(|s| matches!(s, Segment::FreeEvolution { .. }))
            .collect();
        assert_eq!(free.len(), 1);
        assert_eq!(free[0].duration(), 1e-6);
        assert!(p.validate().is_ok());
        assert!(build_ramsey(0.0).is_err());
        assert!(build_ramsey(-1.0).is_err());
    }

    #[test]
    fn ramsey_fringe_points() {
        let t = 1e-6;
        let p = build_ramsey(t).unwrap();
        let g = consts().gamma;
        assert!((run(&p, 0.0) - 1.0).abs() < 1e-12);
        assert!((run(&p, PI / (g * t)) + 1.0).abs() < 1e-12);
        assert!((run(&p, TWO_PI / (g * t)) - 1.0).abs() < 1e-12);
        let b = 0.3 / (g * t);
        assert!((run(&p, b) - 0.3f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn hahn_refocuses_static_fields() {
        let p = build_hahn(3e-6).unwrap();
        for &b in &[0.0, 1e-6, 3.3e-5, 2e-4] {
            assert!((run(&p, b) - 1.0).abs() < 1e-9);
        }
        assert!((run(&build_hahn(0.0).unwrap(), 1e-4) - 1.0).abs() < 1e-12);
        assert!(build_hahn(-1.0).is_err());
    }

    #[test]
    fn berry_plan_shape() {
        let t = 8e-6;
        let p = build_berry(5.0 * MHZ, 3, t).unwrap();
        let swept: Vec<_> = p
            .segments
            .iter()
            .filter_map(|s| match *s {
                Segment::SweptDrive {
                    phase_rate, duration, ..
                } => Some((phase_rate, duration)),
                _ => None,
            })
            .collect();
        assert_eq!(swept.len(), 2);
        for &(rate, d) in &swept {
            assert!((d - 4e-6).abs() < 1e-18);
            assert!((rate.abs() - 12.0 * PI / t).abs() < 1e-6);
        }
        assert!(swept[0].0 > 0.0 && swept[1].0 < 0.0);
        assert!(p.validate().is_ok());
        assert!(build_berry(0.0, 3, t).is_err());
        assert!(build_berry(1.0, 0, t).is_err());
        assert!(build_berry(1.0, 1, 0.0).is_err());
    }

    #[test]
    fn berry_at_zero_field_is_unity() {
        // Adiabatic settings only (A = N/(f T) <= 0.005); the residual is O(A²).
        for &(f, n, t) in &[(5.0, 1, 40e-6), (10.0, 1, 20e-6), (10.0, 3, 60e-6)] {
            let p = build_berry(f * MHZ, n, t).unwrap();
            assert!((run(&p, 0.0) - 1.0).abs() < 1e-3, "{f} {n} {t}");
        }
    }

    #[test]
    fn validate_catches_bad_plans() {
        let mut p = build_berry(5.0 * MHZ, 3, 8e-6).unwrap();
        if let Segment::SweptDrive { phase_rate, .. } = &mut p.segments[3] {
            *phase_rate = -*phase_rate;
        }
        assert!(p.validate().is_err());
        let mut p = build_ramsey(1e-6).unwrap();
        p.control.t = 2e-6;
        assert!(p.validate().is_err());
    }

    #[test]
    fn mesh_and_closed_form_agree() {
        let p = build_berry(5.0 * MHZ, 3, 8e-6).unwrap();
        let mesh = ExecOptions {
            sweep_method: SweepMethod::Mesh,
            step: StepControl::with_tol(1e-8),
            ..Default::default()
        };
        for &b in &[0.0, 1e-4, 3e-4, 6e-4] {
            let a = run(&p, b);
            let m = execute(&p, &consts(), b, None, &mesh).unwrap();
            assert!((a - m).abs() < 1e-6, "b = {b}: {a} vs {m}");
        }
    }

    #[test]
    fn noise_closure_enters_as_field() {
        // A constant "noise" offset is the same as a static field.
        let p = build_ramsey(1e-6).unwrap();
        let offset = 1.2e-5;
        let n = move |_t: f64| offset;
        let with = execute(&p, &consts(), 0.0, Some(&n), &ExecOptions::default()).unwrap();
        assert!((with - run(&p, offset)).abs() < 1e-6);
    }

    #[test]
    fn finite_pulses_match_ideal_at_zero_field() {
        let p = build_hahn(2e-6).unwrap();
        let opts = ExecOptions {
            pulse_mode: PulseMode::Finite { rabi: 20.0 * MHZ },
            ..Default::default()
        };
        let v = execute(&p, &consts(), 0.0, None, &opts).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
