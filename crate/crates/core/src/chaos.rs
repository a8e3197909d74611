//! Driven two-cell systems.
//!
//! The reference system couples two cells through fixed gains ±1.2; in the
//! memristor-coupled system the coupling runs through two flux-gated
//! memristors, an active one `A` (`W_A <= 0`) and a passive one `B`
//! (`W_B >= 0`). Only cell 1 is driven.

use std::f64::consts::PI;

use crate::lattice::step_index;
use crate::{check_step, saturation, Error, Result};

const GAIN: f64 = 1.2;
const WINDOW: f64 = 2.0;

/// `j(t) = amplitude · sin(ω t)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSource {
    pub amplitude: f64,
    pub omega: f64,
}

impl DriveSource {
    pub fn new(amplitude: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite() && amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drive needs finite amplitude and positive omega (got {amplitude}, {omega})"
            )));
        }
        Ok(DriveSource { amplitude, omega })
    }

    /// `4.04 sin(π t / 2)`
    pub fn reference() -> Self {
        DriveSource {
            amplitude: 4.04,
            omega: PI / 2.0,
        }
    }

    /// `4 sin(2π t / 3)`
    pub fn memristor() -> Self {
        DriveSource {
            amplitude: 4.0,
            omega: 2.0 * PI / 3.0,
        }
    }

    pub fn current(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t).sin()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Reference,
    MemristorCoupled,
}

/// Sign convention of the cells' nonlinear resistors in the memristor
/// system, whose current is `g(v) = -(|v + 1| - |v - 1|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellNonlinearity {
    /// Resistor current drawn from the node: `dv = -v - g(v) + ...`, the
    /// same `+2 f(v)` self-feedback as the reference system.
    #[default]
    Circuit,
    /// `dv = -v + g(v) + ...` taken literally. The cells are then strongly
    /// damped and the gates barely switch.
    Printed,
}

impl CellNonlinearity {
    fn self_feedback(self, v: f64) -> f64 {
        let g = -2.0 * saturation(v);
        match self {
            CellNonlinearity::Circuit => -g,
            CellNonlinearity::Printed => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoCellState {
    pub t: f64,
    pub v1: f64,
    pub v2: f64,
    /// `(φ_A, φ_B)`, memristor system only.
    pub flux: Option<(f64, f64)>,
}

impl TwoCellState {
    pub fn rest(system: System) -> Self {
        TwoCellState {
            t: 0.0,
            v1: 0.0,
            v2: 0.0,
            flux: (system == System::MemristorCoupled).then_some((0.0, 0.0)),
        }
    }

    pub fn system(&self) -> System {
        if self.flux.is_some() {
            System::MemristorCoupled
        } else {
            System::Reference
        }
    }
}

/// Memductance of the active memristor: `-1.2` on `-2 <= φ < 2`.
pub fn memductance_a(phi: f64) -> f64 {
    if (-WINDOW..WINDOW).contains(&phi) {
        -GAIN
    } else {
        0.0
    }
}

/// Memductance of the passive memristor: `+1.2` on `-2 <= φ < 2`.
pub fn memductance_b(phi: f64) -> f64 {
    if (-WINDOW..WINDOW).contains(&phi) {
        GAIN
    } else {
        0.0
    }
}

/// `(dv1, dv2)` of the reference system.
pub fn reference_rates(s: &TwoCellState, drive: &DriveSource) -> (f64, f64) {
    let (y1, y2) = (saturation(s.v1), saturation(s.v2));
    (
        -s.v1 + 2.0 * y1 - GAIN * y2 + drive.current(s.t),
        -s.v2 + GAIN * y1 + 2.0 * y2,
    )
}

/// `(dv1, dv2, dφ_A, dφ_B)` of the memristor system.
pub fn memristor_rates(s: &TwoCellState, drive: &DriveSource, cells: CellNonlinearity) -> Result<(f64, f64, f64, f64)> {
    let (pa, pb) = s
        .flux
        .ok_or_else(|| Error::Unsupported("reference state has no memristor flux".into()))?;
    let d21 = s.v2 - s.v1;
    Ok((
        -s.v1 + cells.self_feedback(s.v1) + memductance_a(pa) * d21 + drive.current(s.t),
        -s.v2 + cells.self_feedback(s.v2) + memductance_b(pb) * -d21,
        d21,
        -d21,
    ))
}

pub fn step_reference(s: &TwoCellState, drive: &DriveSource, dt: f64) -> Result<TwoCellState> {
    check_step(dt)?;
    if s.flux.is_some() {
        return Err(Error::Unsupported("memristor state passed to the reference stepper".into()));
    }
    let (d1, d2) = reference_rates(s, drive);
    Ok(TwoCellState {
        t: s.t + dt,
        v1: s.v1 + dt * d1,
        v2: s.v2 + dt * d2,
        flux: None,
    })
}

pub fn step_memristor_coupled(
    s: &TwoCellState,
    drive: &DriveSource,
    cells: CellNonlinearity,
    dt: f64,
) -> Result<TwoCellState> {
    check_step(dt)?;
    let (d1, d2, da, db) = memristor_rates(s, drive, cells)?;
    let (pa, pb) = s.flux.expect("checked by memristor_rates");
    Ok(TwoCellState {
        t: s.t + dt,
        v1: s.v1 + dt * d1,
        v2: s.v2 + dt * d2,
        flux: Some((pa + dt * da, pb + dt * db)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Memristor {
    A,
    B,
}

/// A memductance changing value between two steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Toggle {
    pub t: f64,
    pub memristor: Memristor,
    pub on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosConfig {
    pub system: System,
    pub drive: DriveSource,
    pub cells: CellNonlinearity,
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `stride`-th state.
    pub stride: usize,
}

impl ChaosConfig {
    /// Standard drive for `system`, `dt = 1e-3`, every state kept.
    pub fn new(system: System, t_end: f64) -> Self {
        ChaosConfig {
            system,
            drive: match system {
                System::Reference => DriveSource::reference(),
                System::MemristorCoupled => DriveSource::memristor(),
            },
            cells: CellNonlinearity::default(),
            dt: 1e-3,
            t_end,
            stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: System,
    pub dt: f64,
    pub stride: usize,
    pub samples: Vec<TwoCellState>,
    /// Largest `|v1|` or `|v2|` over every step, kept or not.
    pub max_abs: f64,
    pub toggles: Vec<Toggle>,
}

/// Integrate from rest, calling `visit` on every state including the first.
pub fn simulate_with(cfg: &ChaosConfig, mut visit: impl FnMut(&TwoCellState)) -> Result<Vec<Toggle>> {
    check_step(cfg.dt)?;
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be non-negative (got {})", cfg.t_end)));
    }
    let n_end = step_index(cfg.t_end, cfg.dt);
    let mut s = TwoCellState::rest(cfg.system);
    let mut toggles = Vec::new();
    visit(&s);
    for n in 1..=n_end {
        let next = match cfg.system {
            System::Reference => step_reference(&s, &cfg.drive, cfg.dt)?,
            System::MemristorCoupled => step_memristor_coupled(&s, &cfg.drive, cfg.cells, cfg.dt)?,
        };
        let mut next = next;
        next.t = n as f64 * cfg.dt;
        if let (Some((a0, b0)), Some((a1, b1))) = (s.flux, next.flux) {
            if memductance_a(a0) != memductance_a(a1) {
                toggles.push(Toggle {
                    t: next.t,
                    memristor: Memristor::A,
                    on: memductance_a(a1) != 0.0,
                });
            }
            if memductance_b(b0) != memductance_b(b1) {
                toggles.push(Toggle {
                    t: next.t,
                    memristor: Memristor::B,
                    on: memductance_b(b1) != 0.0,
                });
            }
        }
        s = next;
        visit(&s);
    }
    Ok(toggles)
}

pub fn simulate(cfg: &ChaosConfig) -> Result<Trajectory> {
    if cfg.stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    let mut samples = Vec::new();
    let mut max_abs: f64 = 0.0;
    let mut n = 0usize;
    let toggles = simulate_with(cfg, |s| {
        max_abs = max_abs.max(s.v1.abs()).max(s.v2.abs());
        if n % cfg.stride == 0 {
            samples.push(*s);
        }
        n += 1;
    })?;
    Ok(Trajectory {
        system: cfg.system,
        dt: cfg.dt,
        stride: cfg.stride,
        samples,
        max_abs,
        toggles,
    })
}

/// States at `t = k · 2π/ω`, `k = 0, 1, 2, ...`.
///
/// The drive period must be a whole number of sample intervals.
pub fn poincare_section(traj: &Trajectory, drive: &DriveSource) -> Result<Vec<(f64, f64)>> {
    let h = traj.dt * traj.stride as f64;
    let ratio = drive.period() / h;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-6 * m {
        return Err(Error::InvalidParameter(format!(
            "drive period {} is not a multiple of the sample interval {h}",
            drive.period()
        )));
    }
    let m = m as usize;
    Ok(traj.samples.iter().step_by(m).map(|s| (s.v1, s.v2)).collect())
}

/// `p_A = W_A(φ_A)(v2 - v1)²` and `p_B = W_B(φ_B)(v1 - v2)²`.
pub fn instantaneous_power(s: &TwoCellState) -> Result<(f64, f64)> {
    let (pa, pb) = s
        .flux
        .ok_or_else(|| Error::Unsupported("the reference system has no memristors".into()))?;
    let d = s.v2 - s.v1;
    Ok((memductance_a(pa) * d * d, memductance_b(pb) * d * d))
}

/// `(t, p_A, p_B)` for every kept sample.
pub fn power_series(traj: &Trajectory) -> Result<Vec<(f64, f64, f64)>> {
    if traj.system != System::MemristorCoupled {
        return Err(Error::Unsupported("the reference system has no memristors".into()));
    }
    traj.samples
        .iter()
        .map(|s| instantaneous_power(s).map(|(a, b)| (s.t, a, b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(t: f64, v1: f64, v2: f64) -> TwoCellState {
        TwoCellState {
            t,
            v1,
            v2,
            flux: None,
        }
    }

    #[test]
    fn reference_rates_examples() {
        let d = DriveSource::reference();
        assert_eq!(reference_rates(&at(0.0, 0.0, 0.0), &d), (0.0, 0.0));
        assert_eq!(reference_rates(&at(0.0, 1.0, 0.0), &d), (1.0, 1.2));
        // sin(π t / 2) = 1 at t = 1
        let (d1, _) = reference_rates(&at(1.0, 0.0, 1.0), &d);
        assert!((d1 - 2.84).abs() < 1e-12);
    }

    #[test]
    fn memductance_examples() {
        assert_eq!(memductance_a(0.0), -1.2);
        assert_eq!(memductance_a(3.0), 0.0);
        assert_eq!(memductance_a(-2.0), -1.2);
        assert_eq!(memductance_a(2.0), 0.0);
        assert_eq!(memductance_b(0.0), 1.2);
        assert_eq!(memductance_b(-5.0), 0.0);
    }

    #[test]
    fn symmetric_state_has_no_coupling() {
        let s = TwoCellState {
            t: 0.3,
            v1: 0.7,
            v2: 0.7,
            flux: Some((0.0, 0.0)),
        };
        let (_, _, da, db) = memristor_rates(&s, &DriveSource::memristor(), CellNonlinearity::Circuit).unwrap();
        assert_eq!((da, db), (0.0, 0.0));
        assert_eq!(instantaneous_power(&s).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn power_examples() {
        let s = TwoCellState {
            t: 0.0,
            v1: 0.0,
            v2: 1.0,
            flux: Some((0.0, 5.0)),
        };
        assert_eq!(instantaneous_power(&s).unwrap(), (-1.2, 0.0));
        assert!(instantaneous_power(&at(0.0, 1.0, 2.0)).is_err());
    }

    #[test]
    fn steppers_reject_bad_input() {
        let d = DriveSource::reference();
        assert!(step_reference(&at(0.0, 0.0, 0.0), &d, 0.0).is_err());
        assert!(step_memristor_coupled(&at(0.0, 0.0, 0.0), &d, CellNonlinearity::Circuit, 1e-3).is_err());
        assert!(step_reference(&TwoCellState::rest(System::MemristorCoupled), &d, 1e-3).is_err());
    }

    #[test]
    fn section_periods() {
        assert!((DriveSource::memristor().period() - 3.0).abs() < 1e-12);
        assert!((DriveSource::reference().period() - 4.0).abs() < 1e-12);
        let traj = simulate(&ChaosConfig::new(System::MemristorCoupled, 300.0).with_stride(10)).unwrap();
        let section = poincare_section(&traj, &DriveSource::memristor()).unwrap();
        assert_eq!(section.len(), 101);
        let bad = DriveSource::new(1.0, 2.0).unwrap();
        assert!(poincare_section(&traj, &bad).is_err());
    }

    #[test]
    fn constant_trajectory_has_constant_section() {
        let traj = Trajectory {
            system: System::Reference,
            dt: 1e-3,
            stride: 1,
            samples: (0..10_000).map(|n| at(n as f64 * 1e-3, 0.5, -0.25)).collect(),
            max_abs: 0.5,
            toggles: vec![],
        };
        let section = poincare_section(&traj, &DriveSource::reference()).unwrap();
        assert_eq!(section.len(), 3);
        assert!(section.iter().all(|&p| p == (0.5, -0.25)));
    }

    #[test]
    fn printed_sign_convention_is_damped() {
        let mut cfg = ChaosConfig::new(System::MemristorCoupled, 200.0).with_stride(1000);
        cfg.cells = CellNonlinearity::Printed;
        let traj = simulate(&cfg).unwrap();
        assert!(traj.max_abs < 2.5, "max |v| = {}", traj.max_abs);
        assert!(traj.toggles.len() < 10);
    }

    #[test]
    fn power_series_rejects_reference() {
        let traj = simulate(&ChaosConfig::new(System::Reference, 1.0)).unwrap();
        assert!(power_series(&traj).is_err());
    }

    proptest! {
        #[test]
        fn power_signs(v1 in -10.0f64..10.0, v2 in -10.0f64..10.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let s = TwoCellState { t: 0.0, v1, v2, flux: Some((a, b)) };
            let (pa, pb) = instantaneous_power(&s).unwrap();
            prop_assert!(pa <= 0.0);
            prop_assert!(pb >= 0.0);
        }

        #[test]
        fn coupling_currents_are_antisymmetric(v1 in -5.0f64..5.0, v2 in -5.0f64..5.0, t in 0.0f64..10.0) {
            let s = TwoCellState { t, v1, v2, flux: Some((0.0, 0.0)) };
            let (_, _, da, db) = memristor_rates(&s, &DriveSource::memristor(), CellNonlinearity::Circuit).unwrap();
            prop_assert_eq!(da, -db);
            prop_assert_eq!(da, v2 - v1);
        }
    }
}
