//! The M×N cellular network engine.
//!
//! Every cell sees a 3×3 neighbourhood. Cells outside the lattice are virtual
//! boundary cells held at a constant state `v0` and input `u0`. All four
//! dynamics advance by synchronous explicit Euler: every derivative is taken
//! from the time-`t` snapshot before any cell moves, so the result does not
//! depend on how the per-cell loop is split across threads.

mod grid;
mod script;

pub use grid::{decode_output, to_pixels, Grid, Image};
pub use script::{
    run, DecayMode, Event, ExperimentScript, GateEvent, RunRecord, Snapshot, RECOVERY_BIAS,
    RECOVERY_SOURCE,
};

pub(crate) use script::step_index;

use rayon::prelude::*;

use crate::device::MemductanceProfile;
use crate::{check_step, saturation, sign, Error, Result};

/// Feedback gains `A`, control gains `B` and threshold `z`.
///
/// Entry `a[k + 1][l + 1]` is the gain from the neighbour at row offset `k`
/// and column offset `l`, so `a[1][1]` is the centre gain `a_{0,0}`. In the
/// sign-output dynamics the centre gain is also the slope of the cell's
/// nonlinear resistor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Template {
    pub a: [[f64; 3]; 3],
    pub b: [[f64; 3]; 3],
    pub z: f64,
}

impl Template {
    pub fn new(a: [[f64; 3]; 3], b: [[f64; 3]; 3], z: f64) -> Self {
        Template { a, b, z }
    }

    pub fn zero() -> Self {
        Template::new([[0.0; 3]; 3], [[0.0; 3]; 3], 0.0)
    }

    pub fn center_feedback(&self) -> f64 {
        self.a[1][1]
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.a.iter().chain(self.b.iter()).flatten().chain(std::iter::once(&self.z));
        for x in all {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("template entry {x} is not finite")));
            }
        }
        Ok(())
    }
}

/// Fixed state and input of the virtual boundary frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub v0: f64,
    pub u0: f64,
}

impl Boundary {
    pub fn new(v0: f64, u0: f64) -> Self {
        Boundary { v0, u0 }
    }

    pub fn zero() -> Self {
        Boundary { v0: 0.0, u0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dynamics {
    /// `dx = -x + Σ a f(x) + Σ b u + z`, saturated outputs, centre included.
    Standard,
    /// Sign outputs, centre gain applied to `f(v)` of the cell itself.
    Modified,
    /// Modified cell whose coupling current flows through one memristor.
    Memristor,
    /// Memristor cell with an inductor in parallel.
    Wave,
}

impl Dynamics {
    pub fn uses_memristor(self) -> bool {
        matches!(self, Dynamics::Memristor | Dynamics::Wave)
    }

    pub fn output(self, v: f64) -> f64 {
        match self {
            Dynamics::Standard => saturation(v),
            _ => sign(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    On,
    Off,
}

/// Time derivatives of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRates {
    pub dv: f64,
    pub dphi: f64,
    pub dil: f64,
}

/// Lattice state plus everything needed to step it.
#[derive(Debug, Clone)]
pub struct GridState {
    dynamics: Dynamics,
    template: Template,
    boundary: Boundary,
    profile: Option<MemductanceProfile>,
    parasitic: f64,
    input: Image,
    v: Grid<f64>,
    phi: Grid<f64>,
    il: Grid<f64>,
    t: f64,
    power: Power,
    coupled: bool,
    taps: Vec<(isize, isize, f64)>,
    drive: Grid<f64>,
}

impl GridState {
    /// Build a lattice with `v(0) = init`, `φ(0) = 0` and `iL(0) = 0`.
    pub fn new(
        dynamics: Dynamics,
        template: Template,
        boundary: Boundary,
        input: Image,
        init: Grid<f64>,
        profile: Option<MemductanceProfile>,
    ) -> Result<Self> {
        template.validate()?;
        if !(boundary.v0.is_finite() && boundary.u0.is_finite()) {
            return Err(Error::InvalidParameter("boundary values must be finite".into()));
        }
        if init.shape() != input.shape() {
            return Err(Error::ShapeMismatch {
                expected: input.shape(),
                got: init.shape(),
            });
        }
        if init.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        if dynamics.uses_memristor() {
            let p = profile.ok_or(Error::MissingProfile(dynamics))?;
            p.validate()?;
            if dynamics == Dynamics::Wave && !matches!(p, MemductanceProfile::WaveBand { .. }) {
                return Err(Error::Unsupported(
                    "wave dynamics needs a wave-band memductance".into(),
                ));
            }
        }
        let (rows, cols) = input.shape();
        let taps = feedback_taps(&template, dynamics);
        let drive = input_drive(&template, boundary, &input);
        Ok(GridState {
            dynamics,
            template,
            boundary,
            profile: if dynamics.uses_memristor() { profile } else { None },
            parasitic: 0.0,
            input,
            v: init,
            phi: Grid::new(rows, cols, 0.0),
            il: Grid::new(rows, cols, 0.0),
            t: 0.0,
            power: Power::On,
            coupled: true,
            taps,
            drive,
        })
    }

    pub fn dynamics(&self) -> Dynamics {
        self.dynamics
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn profile(&self) -> Option<&MemductanceProfile> {
        self.profile.as_ref()
    }

    pub fn input(&self) -> &Image {
        &self.input
    }

    pub fn shape(&self) -> (usize, usize) {
        self.v.shape()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn power(&self) -> Power {
        self.power
    }

    pub fn is_coupled(&self) -> bool {
        self.coupled
    }

    pub fn parasitic(&self) -> f64 {
        self.parasitic
    }

    pub fn v(&self) -> &Grid<f64> {
        &self.v
    }

    /// Memristor flux, present for memristor and wave dynamics.
    pub fn phi(&self) -> Option<&Grid<f64>> {
        self.dynamics.uses_memristor().then_some(&self.phi)
    }

    /// Inductor current, present for wave dynamics.
    pub fn inductor_current(&self) -> Option<&Grid<f64>> {
        (self.dynamics == Dynamics::Wave).then_some(&self.il)
    }

    pub fn set_v(&mut self, v: Grid<f64>) -> Result<()> {
        self.check_shape(&v)?;
        self.v = v;
        Ok(())
    }

    pub fn set_phi(&mut self, phi: Grid<f64>) -> Result<()> {
        if !self.dynamics.uses_memristor() {
            return Err(Error::Unsupported(format!("{:?} dynamics has no memristor flux", self.dynamics)));
        }
        self.check_shape(&phi)?;
        self.phi = phi;
        Ok(())
    }

    pub fn set_inductor_current(&mut self, il: Grid<f64>) -> Result<()> {
        if self.dynamics != Dynamics::Wave {
            return Err(Error::Unsupported("only wave dynamics has inductors".into()));
        }
        self.check_shape(&il)?;
        self.il = il;
        Ok(())
    }

    /// Parallel parasitic conductance `G >= 0` of every memristor.
    pub fn set_parasitic(&mut self, g: f64) -> Result<()> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("parasitic conductance must be >= 0 (got {g})")));
        }
        self.parasitic = g;
        Ok(())
    }

    /// Sever (`false`) or restore (`true`) all coupling of a modified lattice.
    pub fn set_coupled(&mut self, coupled: bool) {
        self.coupled = coupled;
    }

    /// Powering off zeroes every cell voltage. Flux is kept.
    pub fn set_power(&mut self, power: Power) {
        if power == Power::Off {
            self.v.fill(0.0);
        }
        self.power = power;
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    fn check_shape<T>(&self, g: &Grid<T>) -> Result<()> {
        if g.shape() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: g.shape(),
            });
        }
        Ok(())
    }

    fn boundary_output(&self) -> f64 {
        self.dynamics.output(self.boundary.v0)
    }

    /// Cell outputs: `f(v)` for standard dynamics, `sgn(v)` otherwise, zero
    /// while powered off.
    pub fn output(&self) -> Grid<f64> {
        match self.power {
            Power::Off => Grid::new(self.shape().0, self.shape().1, 0.0),
            Power::On => self.v.map(|&x| self.dynamics.output(x)),
        }
    }

    /// `W(φ) != 0` per cell.
    pub fn gate_mask(&self) -> Option<Grid<bool>> {
        let p = self.profile?;
        Some(self.phi.map(|&f| p.memductance(f) != 0.0))
    }

    fn neighbor_output(&self, r: isize, c: isize) -> f64 {
        let (rows, cols) = self.shape();
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            self.boundary_output()
        } else {
            self.dynamics.output(self.v[(r as usize, c as usize)])
        }
    }

    /// `Σ a y + Σ b u + z` over the neighbourhood of `(i, j)`.
    ///
    /// With `include_center == false` the single term `a_{0,0} y_{ij}` is
    /// dropped, as in the sign-output dynamics.
    pub fn neighborhood_sum(&self, i: usize, j: usize, include_center: bool) -> Result<f64> {
        let (rows, cols) = self.shape();
        if i >= rows || j >= cols {
            return Err(Error::OutOfRange {
                row: i,
                col: j,
                rows,
                cols,
            });
        }
        let mut fb = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                if k == 1 && l == 1 && !include_center {
                    continue;
                }
                let a = self.template.a[k][l];
                if a == 0.0 {
                    continue;
                }
                let y = self.neighbor_output(i as isize + k as isize - 1, j as isize + l as isize - 1);
                fb += a * y;
            }
        }
        Ok(fb + self.drive[(i, j)])
    }

    /// Derivatives of every cell from the current snapshot, evaluated cell by
    /// cell through [`GridState::neighborhood_sum`]. [`GridState::step`]
    /// produces bit-identical results through a faster path.
    pub fn rates(&self) -> Grid<CellRates> {
        let (rows, cols) = self.shape();
        let include_center = self.dynamics == Dynamics::Standard;
        let mut out = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let vm = self.neighborhood_sum(i, j, include_center).expect("index in range");
                out.push(self.cell_rates(i, j, vm));
            }
        }
        Grid::from_vec(rows, cols, out).expect("shape matches")
    }

    #[inline]
    fn cell_rates(&self, i: usize, j: usize, vm: f64) -> CellRates {
        let v = self.v[(i, j)];
        let phi = self.phi[(i, j)];
        let il = self.il[(i, j)];
        cell_rates(self.dynamics, &self.kernel(), v, phi, il, vm)
    }

    fn kernel(&self) -> Kernel {
        Kernel {
            a00: self.template.center_feedback(),
            profile: self.profile,
            parasitic: self.parasitic,
            coupled: self.coupled,
        }
    }

    /// One synchronous Euler step of the selected dynamics.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        check_step(dt)?;
        if self.power == Power::Off {
            self.t += dt;
            return Ok(());
        }
        let (rows, cols) = self.shape();
        let pw = cols + 2;
        let yb = self.boundary_output();
        let mut ypad = vec![yb; (rows + 2) * pw];
        for r in 0..rows {
            let src = self.v.row(r);
            let dst = &mut ypad[(r + 1) * pw + 1..(r + 1) * pw + 1 + cols];
            for (d, &x) in dst.iter_mut().zip(src) {
                *d = self.dynamics.output(x);
            }
        }
        let taps: Vec<(isize, f64)> = self
            .taps
            .iter()
            .map(|&(k, l, a)| (k * pw as isize + l, a))
            .collect();

        let kernel = self.kernel();
        let dynamics = self.dynamics;
        let mut next_v = self.v.clone();
        let mut next_phi = self.phi.clone();
        let mut next_il = self.il.clone();
        let v = &self.v;
        let phi = &self.phi;
        let il = &self.il;
        let drive = &self.drive;
        let ypad = &ypad;
        let taps = &taps;

        next_v
            .as_mut_slice()
            .par_chunks_mut(cols)
            .zip(next_phi.as_mut_slice().par_chunks_mut(cols))
            .zip(next_il.as_mut_slice().par_chunks_mut(cols))
            .enumerate()
            .for_each(|(r, ((nv, nphi), nil))| {
                let base = ((r + 1) * pw + 1) as isize;
                let (vr, pr, ir, dr) = (v.row(r), phi.row(r), il.row(r), drive.row(r));
                for c in 0..cols {
                    let centre = base + c as isize;
                    let mut fb = 0.0;
                    for &(off, a) in taps.iter() {
                        fb += a * ypad[(centre + off) as usize];
                    }
                    let vm = fb + dr[c];
                    let rates = cell_rates(dynamics, &kernel, vr[c], pr[c], ir[c], vm);
                    nv[c] = vr[c] + dt * rates.dv;
                    nphi[c] = pr[c] + dt * rates.dphi;
                    nil[c] = ir[c] + dt * rates.dil;
                }
            });

        self.v = next_v;
        self.phi = next_phi;
        self.il = next_il;
        self.t += dt;
        Ok(())
    }

    /// Euler-step the cells in isolation with an injected current per cell:
    /// `dv = -v + a_{0,0} f(v) + i`. Flux and inductor current are untouched.
    pub(crate) fn step_isolated(&mut self, dt: f64, current: &Grid<f64>) -> Result<()> {
        check_step(dt)?;
        self.check_shape(current)?;
        let a00 = self.template.center_feedback();
        self.v
            .as_mut_slice()
            .par_iter_mut()
            .zip(current.as_slice().par_iter())
            .for_each(|(v, &i)| {
                let dv = -*v + a00 * saturation(*v) + i;
                *v += dt * dv;
            });
        self.t += dt;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Kernel {
    a00: f64,
    profile: Option<MemductanceProfile>,
    parasitic: f64,
    coupled: bool,
}

#[inline]
fn cell_rates(dynamics: Dynamics, k: &Kernel, v: f64, phi: f64, il: f64, vm: f64) -> CellRates {
    match dynamics {
        Dynamics::Standard => CellRates {
            dv: -v + vm,
            dphi: 0.0,
            dil: 0.0,
        },
        Dynamics::Modified => {
            let own = -v + k.a00 * saturation(v);
            CellRates {
                dv: if k.coupled { own + vm } else { own },
                dphi: 0.0,
                dil: 0.0,
            }
        }
        Dynamics::Memristor => {
            let w = k.profile.map_or(0.0, |p| p.memductance(phi));
            CellRates {
                dv: -v + k.a00 * saturation(v) + (w + k.parasitic) * vm,
                dphi: vm,
                dil: 0.0,
            }
        }
        Dynamics::Wave => {
            let w = k.profile.map_or(0.0, |p| p.memductance(phi));
            CellRates {
                dv: il - v + k.a00 * saturation(v) + w * vm,
                dphi: vm,
                dil: -v,
            }
        }
    }
}

/// Non-zero feedback gains as `(row offset, col offset, gain)`, centre
/// excluded for the sign-output dynamics.
fn feedback_taps(t: &Template, dynamics: Dynamics) -> Vec<(isize, isize, f64)> {
    let mut taps = Vec::with_capacity(9);
    for k in 0..3 {
        for l in 0..3 {
            if k == 1 && l == 1 && dynamics != Dynamics::Standard {
                continue;
            }
            if t.a[k][l] != 0.0 {
                taps.push((k as isize - 1, l as isize - 1, t.a[k][l]));
            }
        }
    }
    taps
}

/// `Σ b u + z` per cell. The input never changes during a run.
fn input_drive(t: &Template, boundary: Boundary, input: &Image) -> Grid<f64> {
    let (rows, cols) = input.shape();
    let u = input.values();
    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            boundary.u0
        } else {
            u[(r as usize, c as usize)]
        }
    };
    let mut out = Grid::new(rows, cols, 0.0);
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    let b = t.b[k][l];
                    if b != 0.0 {
                        acc += b * at(i as isize + k as isize - 1, j as isize + l as isize - 1);
                    }
                }
            }
            out[(i, j)] = acc + t.z;
        }
    }
    out
}
