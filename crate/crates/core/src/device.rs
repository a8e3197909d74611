//! Device models: flux-controlled memristors, the piecewise-linear resistor of
//! every cell, and single-device hysteresis tracing.
//!
//! A flux-controlled memristor obeys `q = h(φ)` and `i = W(φ) v` with
//! `W = dh/dφ` and `dφ/dt = v`. Every profile here has a piecewise-constant
//! memductance, so the device behaves as a flux-gated switch.

use crate::{check_step, Error, Result};

/// Which sides of a [`MemductanceProfile::Window`] interval belong to the
/// on-state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoints {
    /// `lo <= φ <= hi`
    Closed,
    /// `lo < φ < hi`
    Open,
}

/// Piecewise-constant memductance `W(φ)` together with its constitutive
/// relation `q = h(φ)`.
///
/// Charge is measured from the uncharged state, so `h(0) = 0` for every
/// profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MemductanceProfile {
    /// `W = on` inside `[lo, hi]` (or `(lo, hi)`), zero elsewhere.
    Window {
        lo: f64,
        hi: f64,
        on: f64,
        endpoints: Endpoints,
    },
    /// Twin peaks: `W = 1` for `inner < |φ| < outer`, zero elsewhere.
    TwinPeak { inner: f64, outer: f64 },
    /// Unit step at the origin, `W(φ) = s[φ]` with `W(0) = 1`.
    RampStore,
    /// `W = alpha` on `-a <= φ < a`, `alpha - beta` for `φ < -b` or `φ >= b`,
    /// zero on the two middle bands.
    WaveBand { alpha: f64, beta: f64, a: f64, b: f64 },
}

impl MemductanceProfile {
    pub fn window(lo: f64, hi: f64, on: f64, endpoints: Endpoints) -> Result<Self> {
        let p = MemductanceProfile::Window {
            lo,
            hi,
            on,
            endpoints,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn twin_peak(inner: f64, outer: f64) -> Result<Self> {
        let p = MemductanceProfile::TwinPeak { inner, outer };
        p.validate()?;
        Ok(p)
    }

    pub fn wave_band(alpha: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        let p = MemductanceProfile::WaveBand { alpha, beta, a, b };
        p.validate()?;
        Ok(p)
    }

    /// Closed window `[-1, 1]` used by the dilation and sharpening cells.
    pub fn gate() -> Self {
        MemductanceProfile::Window {
            lo: -1.0,
            hi: 1.0,
            on: 1.0,
            endpoints: Endpoints::Closed,
        }
    }

    /// Open window `(0.5, 7)` of the sinusoidally driven single device.
    pub fn neuron_window() -> Self {
        MemductanceProfile::Window {
            lo: 0.5,
            hi: 7.0,
            on: 1.0,
            endpoints: Endpoints::Open,
        }
    }

    /// Twin peaks at 2 and 10, used for smoothing and erosion.
    pub fn refractory() -> Self {
        MemductanceProfile::TwinPeak {
            inner: 2.0,
            outer: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            MemductanceProfile::Window { lo, hi, on, .. } => {
                if !finite(&[lo, hi, on]) || lo >= hi {
                    return Err(Error::InvalidParameter(format!(
                        "window needs finite lo < hi (got lo={lo}, hi={hi}, on={on})"
                    )));
                }
            }
            MemductanceProfile::TwinPeak { inner, outer } => {
                if !finite(&[inner, outer]) || !(0.0 < inner && inner < outer) {
                    return Err(Error::InvalidParameter(format!(
                        "twin-peak needs 0 < inner < outer (got {inner}, {outer})"
                    )));
                }
            }
            MemductanceProfile::RampStore => {}
            MemductanceProfile::WaveBand { alpha, beta, a, b } => {
                if !finite(&[alpha, beta, a, b]) || !(0.0 < a && a < b) {
                    return Err(Error::InvalidParameter(format!(
                        "wave band needs 0 < a < b (got a={a}, b={b})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `W(φ)`, total over the reals.
    pub fn memductance(&self, phi: f64) -> f64 {
        match *self {
            MemductanceProfile::Window {
                lo,
                hi,
                on,
                endpoints,
            } => {
                let inside = match endpoints {
                    Endpoints::Closed => lo <= phi && phi <= hi,
                    Endpoints::Open => lo < phi && phi < hi,
                };
                if inside {
                    on
                } else {
                    0.0
                }
            }
            MemductanceProfile::TwinPeak { inner, outer } => {
                let m = phi.abs();
                if inner < m && m < outer {
                    1.0
                } else {
                    0.0
                }
            }
            MemductanceProfile::RampStore => crate::unit_step(phi),
            MemductanceProfile::WaveBand { alpha, beta, a, b } => {
                if -a <= phi && phi < a {
                    alpha
                } else if phi < -b || phi >= b {
                    alpha - beta
                } else {
                    0.0
                }
            }
        }
    }

    /// Constitutive relation `q = h(φ)`, continuous and piecewise linear.
    pub fn charge(&self, phi: f64) -> f64 {
        match *self {
            MemductanceProfile::Window { lo, hi, on, .. } => {
                on * (phi.clamp(lo, hi) - 0.0_f64.clamp(lo, hi))
            }
            MemductanceProfile::TwinPeak { inner, outer } => {
                0.5 * ((phi - inner).abs() - (phi - outer).abs())
                    - 0.5 * ((phi + inner).abs() - (phi + outer).abs())
            }
            MemductanceProfile::RampStore => 0.5 * (phi.abs() + phi),
            MemductanceProfile::WaveBand { alpha, beta, a, b } => {
                alpha * phi.clamp(-a, a) + (alpha - beta) * ((phi - b).max(0.0) + (phi + b).min(0.0))
            }
        }
    }

    /// Flux values where `W` jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            MemductanceProfile::Window { lo, hi, .. } => vec![lo, hi],
            MemductanceProfile::TwinPeak { inner, outer } => vec![-outer, -inner, inner, outer],
            MemductanceProfile::RampStore => vec![0.0],
            MemductanceProfile::WaveBand { a, b, .. } => vec![-b, -a, a, b],
        }
    }

    /// True when `W(φ) >= 0` everywhere.
    pub fn is_passive(&self) -> bool {
        match *self {
            MemductanceProfile::Window { on, .. } => on >= 0.0,
            MemductanceProfile::TwinPeak { .. } | MemductanceProfile::RampStore => true,
            MemductanceProfile::WaveBand { alpha, beta, .. } => alpha >= 0.0 && alpha - beta >= 0.0,
        }
    }
}

/// The two forms of a memristor constitutive relation.
///
/// Only the flux-controlled form drives lattice dynamics. The
/// charge-controlled form, `φ = g(q) = b q + 0.5 (a - b)(|q + 1| - |q - 1|)`
/// with memristance `M(q) = dg/dq`, is kept for device-level work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstitutiveRelation {
    FluxControlled(MemductanceProfile),
    ChargeControlled { inner_slope: f64, outer_slope: f64 },
}

impl ConstitutiveRelation {
    /// `M(q)` for the charge-controlled form, `None` otherwise.
    pub fn memristance(&self, q: f64) -> Option<f64> {
        match *self {
            ConstitutiveRelation::ChargeControlled {
                inner_slope,
                outer_slope,
            } => Some(if q.abs() < 1.0 { inner_slope } else { outer_slope }),
            ConstitutiveRelation::FluxControlled(_) => None,
        }
    }

    /// `φ = g(q)` for the charge-controlled form.
    pub fn flux_of_charge(&self, q: f64) -> Option<f64> {
        match *self {
            ConstitutiveRelation::ChargeControlled {
                inner_slope,
                outer_slope,
            } => Some(outer_slope * q + 0.5 * (inner_slope - outer_slope) * ((q + 1.0).abs() - (q - 1.0).abs())),
            ConstitutiveRelation::FluxControlled(_) => None,
        }
    }
}

/// Flux of one memristor. Charge is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MemristorState {
    pub flux: f64,
}

impl MemristorState {
    pub fn new(flux: f64) -> Self {
        MemristorState { flux }
    }

    pub fn charge(&self, profile: &MemductanceProfile) -> f64 {
        profile.charge(self.flux)
    }

    /// One explicit Euler step of `dφ/dt = v`.
    pub fn integrate(self, v: f64, dt: f64) -> Result<Self> {
        check_step(dt)?;
        Ok(MemristorState {
            flux: self.flux + v * dt,
        })
    }
}

/// Slope `a` of the cell's piecewise-linear resistor. In the modified and
/// memristor lattices this is also the centre feedback gain `a_{0,0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResistorParams {
    pub slope: f64,
}

impl ResistorParams {
    /// `i_r = -0.5 a (|v + 1| - |v - 1|)`
    pub fn current(&self, v: f64) -> f64 {
        -0.5 * self.slope * ((v + 1.0).abs() - (v - 1.0).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisSample {
    pub t: f64,
    pub v: f64,
    pub phi: f64,
    pub w: f64,
    pub i: f64,
}

/// Drive a single memristor with `v(t) = sin(ω t)` from `φ(0) = 0` and record
/// `(t, v, φ, W, i)` at every Euler step, `i = W(φ) v`.
pub fn hysteresis_trace(
    profile: &MemductanceProfile,
    omega: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<HysteresisSample>> {
    check_step(dt)?;
    profile.validate()?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega must be positive (got {omega})")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be non-negative (got {t_end})")));
    }
    let steps = (t_end / dt + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = MemristorState::default();
    for n in 0..=steps {
        let t = n as f64 * dt;
        let v = (omega * t).sin();
        let w = profile.memductance(state.flux);
        out.push(HysteresisSample {
            t,
            v,
            phi: state.flux,
            w,
            i: w * v,
        });
        state = state.integrate(v, dt)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn all_profiles() -> Vec<MemductanceProfile> {
        vec![
            MemductanceProfile::gate(),
            MemductanceProfile::neuron_window(),
            MemductanceProfile::refractory(),
            MemductanceProfile::RampStore,
            MemductanceProfile::wave_band(1.0, 1.0, 0.5, 4000.0).unwrap(),
            MemductanceProfile::wave_band(-1.0, 2.0, 0.5, 35.0).unwrap(),
        ]
    }

    #[test]
    fn memductance_examples() {
        assert_eq!(MemductanceProfile::gate().memductance(0.0), 1.0);
        assert_eq!(MemductanceProfile::gate().memductance(-1.0), 1.0);
        assert_eq!(MemductanceProfile::gate().memductance(1.0), 1.0);
        assert_eq!(MemductanceProfile::gate().memductance(1.0 + 1e-12), 0.0);

        let tp = MemductanceProfile::refractory();
        assert_eq!(tp.memductance(5.0), 1.0);
        assert_eq!(tp.memductance(-5.0), 1.0);
        assert_eq!(tp.memductance(0.0), 0.0);
        assert_eq!(tp.memductance(2.0), 0.0);
        assert_eq!(tp.memductance(10.0), 0.0);

        let ramp = MemductanceProfile::RampStore;
        assert_eq!(ramp.memductance(0.0), 1.0);
        assert_eq!(ramp.memductance(-1e-300), 0.0);

        let wb = MemductanceProfile::wave_band(1.0, 1.0, 0.5, 4000.0).unwrap();
        assert_eq!(wb.memductance(0.0), 1.0);
        assert_eq!(wb.memductance(-0.5), 1.0);
        assert_eq!(wb.memductance(0.5), 0.0);
        assert_eq!(wb.memductance(1.0), 0.0);
        assert_eq!(wb.memductance(5000.0), 0.0);
        let wb2 = MemductanceProfile::wave_band(-1.0, 2.0, 0.5, 35.0).unwrap();
        assert_eq!(wb2.memductance(35.0), -3.0);
        assert_eq!(wb2.memductance(-35.1), -3.0);
        assert_eq!(wb2.memductance(-35.0), 0.0);
    }

    #[test]
    fn neuron_window_is_open() {
        let p = MemductanceProfile::neuron_window();
        assert_eq!(p.memductance(0.5), 0.0);
        assert_eq!(p.memductance(0.500001), 1.0);
        assert_eq!(p.memductance(7.0), 0.0);
    }

    #[test]
    fn charge_examples() {
        let ramp = MemductanceProfile::RampStore;
        assert_eq!(ramp.charge(-3.0), 0.0);
        assert_eq!(ramp.charge(2.0), 2.0);

        let tp = MemductanceProfile::refractory();
        // 0.5(|φ-2| - |φ-10|) - 0.5(|φ+2| - |φ+10|) by hand
        assert_eq!(tp.charge(0.0), 0.0);
        assert_eq!(tp.charge(10.0), 8.0);
        assert_eq!(tp.charge(-10.0), -8.0);
        assert_eq!(tp.charge(1.0), 0.0);

        // f-phi form 0.5(|φ - 0.5| - |φ - 7| + 6.5)
        let nw = MemductanceProfile::neuron_window();
        for phi in [-3.0, 0.0, 0.5, 2.0, 6.9, 7.0, 12.0] {
            let expected = 0.5 * ((phi - 0.5_f64).abs() - (phi - 7.0_f64).abs() + 6.5);
            assert_abs_diff_eq!(nw.charge(phi), expected, epsilon = 1e-15);
        }
        // relation of the gate: 0.5(|φ + 1| - |φ - 1|)
        let g = MemductanceProfile::gate();
        for phi in [-3.0, -0.4, 0.0, 0.9, 4.0] {
            assert_abs_diff_eq!(g.charge(phi), crate::saturation(phi), epsilon = 1e-15);
        }
    }

    #[test]
    fn charge_vanishes_at_origin() {
        for p in all_profiles() {
            assert_eq!(p.charge(0.0), 0.0, "{p:?}");
        }
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(MemductanceProfile::window(1.0, 1.0, 1.0, Endpoints::Closed).is_err());
        assert!(MemductanceProfile::twin_peak(0.0, 3.0).is_err());
        assert!(MemductanceProfile::twin_peak(4.0, 3.0).is_err());
        assert!(MemductanceProfile::wave_band(1.0, 1.0, 2.0, 2.0).is_err());
        assert!(MemductanceProfile::wave_band(1.0, 1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn passivity_of_switching_profiles() {
        for p in [
            MemductanceProfile::gate(),
            MemductanceProfile::neuron_window(),
            MemductanceProfile::refractory(),
            MemductanceProfile::RampStore,
        ] {
            assert!(p.is_passive());
            for k in -2000..=2000 {
                assert!(p.memductance(k as f64 * 0.01) >= 0.0);
            }
        }
        assert!(!MemductanceProfile::wave_band(-1.0, 2.0, 0.5, 35.0).unwrap().is_passive());
    }

    #[test]
    fn flux_integration() {
        let s = MemristorState::new(1.0).integrate(0.0, 0.01).unwrap();
        assert_eq!(s.flux, 1.0);
        let s = MemristorState::new(0.0).integrate(2.0, 0.5).unwrap();
        assert_eq!(s.flux, 1.0);
        let mut s = MemristorState::default();
        for _ in 0..100 {
            s = s.integrate(1.0, 0.1).unwrap();
        }
        assert_abs_diff_eq!(s.flux, 10.0, epsilon = 1e-12);
        assert!(MemristorState::default().integrate(1.0, 0.0).is_err());
        assert!(MemristorState::default().integrate(1.0, -0.1).is_err());
    }

    #[test]
    fn resistor_examples() {
        let r = ResistorParams { slope: 2.0 };
        assert_eq!(r.current(0.0), 0.0);
        assert_eq!(r.current(1.0), -2.0);
        assert_eq!(r.current(3.0), -2.0);
        assert_eq!(r.current(-3.0), 2.0);
    }

    #[test]
    fn charge_controlled_form() {
        let rel = ConstitutiveRelation::ChargeControlled {
            inner_slope: 2.0,
            outer_slope: 0.5,
        };
        assert_eq!(rel.memristance(0.0), Some(2.0));
        assert_eq!(rel.memristance(3.0), Some(0.5));
        assert_eq!(rel.flux_of_charge(1.0), Some(2.0));
        assert_eq!(rel.flux_of_charge(3.0), Some(3.0));
        assert_eq!(ConstitutiveRelation::FluxControlled(MemductanceProfile::RampStore).memristance(0.0), None);
    }

    #[test]
    fn hysteresis_follows_closed_form_flux() {
        let trace = hysteresis_trace(&MemductanceProfile::neuron_window(), 0.2, 40.0, 1e-3).unwrap();
        // φ(t) = 5 (1 - cos 0.2 t); left Riemann sum error is O(dt)
        for s in &trace {
            let exact = 5.0 * (1.0 - (0.2 * s.t).cos());
            assert!((s.phi - exact).abs() < 2e-3, "t={} phi={} exact={}", s.t, s.phi, exact);
        }
        let peak = trace.iter().max_by(|a, b| a.phi.total_cmp(&b.phi)).unwrap();
        assert!((peak.t - 5.0 * std::f64::consts::PI).abs() < 2e-3);
        assert!((peak.phi - 10.0).abs() < 1e-3);

        let on = trace.iter().find(|s| s.w > 0.0).unwrap();
        let expected = 0.9_f64.acos() / 0.2;
        assert!((on.t - expected).abs() <= 2e-3, "first switch-on {} vs {}", on.t, expected);
    }

    #[test]
    fn hysteresis_rejects_bad_arguments() {
        let p = MemductanceProfile::gate();
        assert!(hysteresis_trace(&p, 0.0, 1.0, 0.01).is_err());
        assert!(hysteresis_trace(&p, 0.2, 1.0, 0.0).is_err());
        assert!(hysteresis_trace(&p, 0.2, -1.0, 0.01).is_err());
    }

    proptest! {
        #[test]
        fn memductance_is_slope_of_charge(phi in -60.0f64..60.0, which in 0usize..6) {
            let p = all_profiles()[which];
            let delta = 1e-6;
            prop_assume!(p.breakpoints().iter().all(|b| (phi - b).abs() > 1e-4));
            let fd = (p.charge(phi + delta) - p.charge(phi - delta)) / (2.0 * delta);
            prop_assert!((p.memductance(phi) - fd).abs() < 1e-9 * (1.0 + phi.abs()).max(1.0) * 10.0,
                "W={} fd={}", p.memductance(phi), fd);
        }

        #[test]
        fn trace_is_pinched(omega in 0.05f64..3.0, which in 0usize..6) {
            let p = all_profiles()[which];
            let trace = hysteresis_trace(&p, omega, 30.0, 1e-2).unwrap();
            for s in trace {
                prop_assert_eq!(s.i, s.w * s.v);
                if s.v.abs() < 1e-6 {
                    prop_assert!(s.i.abs() < 1e-6 * s.w.abs().max(1.0));
                }
            }
        }

        #[test]
        fn resistor_is_odd_and_bounded(a in -10.0f64..10.0, v in -100.0f64..100.0) {
            let r = ResistorParams { slope: a };
            prop_assert_eq!(r.current(-v), -r.current(v));
            prop_assert!(r.current(v).abs() <= a.abs() + 1e-12);
        }
    }
}
