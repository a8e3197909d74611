//! Timed experiment scripts and the run loop.
//!
//! Time is kept as an integer step count `n`, with `t_n = n dt`. An event
//! scheduled at time `t` fires at the first step boundary `t_n >= t`, and a
//! snapshot requested at `t` is taken at that same boundary after its events.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dynamics, Grid, GridState, Power};
use crate::{check_step, sign, unit_step, Error, Result};

/// Source voltage `E` of the recovery circuit.
pub const RECOVERY_SOURCE: f64 = 1.0;
/// Bias current `J` of the recovery circuit.
pub const RECOVERY_BIAS: f64 = 0.5;

/// How a decayed flux relates to its stored sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    /// `φ <- ε sgn(φ)`
    Preserve,
    /// `φ <- -ε sgn(φ)`
    Flip,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Sever all coupling of a modified lattice.
    SwitchOff { at: f64 },
    /// Restore the coupling severed by `SwitchOff`.
    SwitchOn { at: f64 },
    /// Power down over `[at, until)`: `v = y = 0`, flux retained.
    PowerOff { at: f64, until: f64 },
    /// Integrate each cell's output into its storage flux over
    /// `[start, start + duration)`.
    StoreWindow { start: f64, duration: f64 },
    /// Rebuild each cell's sign from its stored flux over
    /// `[start, start + duration)`, then resume normal dynamics.
    RecoveryWindow { start: f64, duration: f64 },
    /// Power on and continue with normal dynamics.
    ResumeAt { at: f64 },
    /// Replace the flux of a seeded random `fraction` of cells by `±ε`.
    FluxDecay {
        at: f64,
        fraction: f64,
        epsilon: f64,
        mode: DecayMode,
        seed: u64,
    },
    /// Set the parasitic conductance of every memristor.
    SetParasitic { at: f64, g: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::SwitchOff { at }
            | Event::SwitchOn { at }
            | Event::PowerOff { at, .. }
            | Event::ResumeAt { at }
            | Event::FluxDecay { at, .. }
            | Event::SetParasitic { at, .. } => at,
            Event::StoreWindow { start, .. } | Event::RecoveryWindow { start, .. } => start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentScript {
    pub events: Vec<Event>,
    /// Times at which to record the output lattice.
    pub snapshots: Vec<f64>,
    /// Record every change of a memristor's on/off state.
    pub log_gates: bool,
}

impl ExperimentScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_event(mut self, event: Event) -> Self {
        self.events.push(event);
        self
    }

    pub fn with_snapshots(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.snapshots.extend(times);
        self
    }

    pub fn with_gate_log(mut self) -> Self {
        self.log_gates = true;
        self
    }

    pub fn has_store(&self) -> bool {
        self.events.iter().any(|e| matches!(e, Event::StoreWindow { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Requested time.
    pub t: f64,
    /// Time of the step boundary actually sampled.
    pub t_sampled: f64,
    pub y: Grid<f64>,
    pub gates: Option<Grid<bool>>,
}

/// A memristor changing state between two steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateEvent {
    pub t: f64,
    pub row: usize,
    pub col: usize,
    pub on: bool,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub final_state: GridState,
    pub final_y: Grid<f64>,
    pub snapshots: Vec<Snapshot>,
    pub gate_events: Vec<GateEvent>,
    /// Storage flux at the end of the last store window.
    pub stored_flux: Option<Grid<f64>>,
    /// Cells hit by the last flux-decay event.
    pub decay_mask: Option<Grid<bool>>,
    /// Output at the end of the last recovery window.
    pub recovered_y: Option<Grid<f64>>,
    /// Cells whose flux kept its sign through the recovery window, for which
    /// the recovered sign is predicted exactly.
    pub recovery_checked: usize,
    /// Checked cells whose recovered sign disagrees with the stored flux.
    pub recovery_violations: usize,
    pub warnings: Vec<String>,
    pub steps: usize,
}

impl RunRecord {
    pub fn snapshot(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.t == t)
    }
}

/// Index of the first step boundary at or after `t`.
pub(crate) fn step_index(t: f64, dt: f64) -> usize {
    let x = t / dt;
    let n = x.round();
    if (x - n).abs() <= 1e-9 * n.max(1.0) {
        n as usize
    } else {
        x.ceil() as usize
    }
}

#[derive(Debug, Clone)]
enum Action {
    StoreEnd,
    RecoveryEnd,
    PowerOn,
    SwitchOff,
    SwitchOn,
    Resume,
    Decay {
        fraction: f64,
        epsilon: f64,
        mode: DecayMode,
        seed: u64,
    },
    Parasitic(f64),
    StoreStart,
    PowerOff,
    RecoveryStart,
}

impl Action {
    // windows close before anything else fires at the same boundary, and the
    // recovery circuit connects last so it sees decayed flux
    fn priority(&self) -> u8 {
        match self {
            Action::StoreEnd | Action::RecoveryEnd => 0,
            Action::PowerOn => 1,
            Action::SwitchOff
            | Action::SwitchOn
            | Action::Resume
            | Action::Decay { .. }
            | Action::Parasitic(_) => 2,
            Action::StoreStart | Action::PowerOff => 3,
            Action::RecoveryStart => 4,
        }
    }
}

fn check_time(name: &str, t: f64, t_end: f64) -> Result<()> {
    if !(t.is_finite() && (0.0..=t_end).contains(&t)) {
        return Err(Error::Script(format!("{name} time {t} outside [0, {t_end}]")));
    }
    Ok(())
}

fn schedule(state: &GridState, script: &ExperimentScript, t_end: f64, dt: f64) -> Result<Vec<(usize, Action)>> {
    let mut actions: Vec<(usize, Action)> = Vec::new();
    let mut windows: Vec<(&str, usize, usize)> = Vec::new();
    let has_store = script.has_store();
    for ev in &script.events {
        match *ev {
            Event::SwitchOff { at } | Event::SwitchOn { at } => {
                check_time("switch", at, t_end)?;
                if state.dynamics() != Dynamics::Modified {
                    return Err(Error::Script("switch events need modified dynamics".into()));
                }
                let a = if matches!(ev, Event::SwitchOff { .. }) {
                    Action::SwitchOff
                } else {
                    Action::SwitchOn
                };
                actions.push((step_index(at, dt), a));
            }
            Event::PowerOff { at, until } => {
                check_time("power-off", at, t_end)?;
                check_time("power-on", until, t_end)?;
                if until <= at {
                    return Err(Error::Script(format!("power-off window [{at}, {until}) is empty")));
                }
                let (s, e) = (step_index(at, dt), step_index(until, dt));
                windows.push(("power-off", s, e));
                actions.push((s, Action::PowerOff));
                actions.push((e, Action::PowerOn));
            }
            Event::StoreWindow { start, duration } | Event::RecoveryWindow { start, duration } => {
                let store = matches!(ev, Event::StoreWindow { .. });
                let name = if store { "store" } else { "recovery" };
                if !(duration > 0.0 && duration.is_finite()) {
                    return Err(Error::Script(format!("{name} window needs a positive duration")));
                }
                check_time(name, start, t_end)?;
                check_time(name, start + duration, t_end)?;
                if !store && !has_store && !state.dynamics().uses_memristor() {
                    return Err(Error::Script("recovery needs a store window or memristor flux".into()));
                }
                let (s, e) = (step_index(start, dt), step_index(start + duration, dt));
                windows.push((name, s, e));
                if store {
                    actions.push((s, Action::StoreStart));
                    actions.push((e, Action::StoreEnd));
                } else {
                    actions.push((s, Action::RecoveryStart));
                    actions.push((e, Action::RecoveryEnd));
                }
            }
            Event::ResumeAt { at } => {
                check_time("resume", at, t_end)?;
                actions.push((step_index(at, dt), Action::Resume));
            }
            Event::FluxDecay {
                at,
                fraction,
                epsilon,
                mode,
                seed,
            } => {
                check_time("flux-decay", at, t_end)?;
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::Script(format!("decay fraction {fraction} outside [0, 1]")));
                }
                if !(epsilon != 0.0 && epsilon.is_finite()) {
                    return Err(Error::Script("decay magnitude must be non-zero".into()));
                }
                if !has_store && !state.dynamics().uses_memristor() {
                    return Err(Error::Script("flux decay needs a store window or memristor flux".into()));
                }
                actions.push((
                    step_index(at, dt),
                    Action::Decay {
                        fraction,
                        epsilon: epsilon.abs(),
                        mode,
                        seed,
                    },
                ));
            }
            Event::SetParasitic { at, g } => {
                check_time("parasitic", at, t_end)?;
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(Error::Script(format!("parasitic conductance {g} must be >= 0")));
                }
                actions.push((step_index(at, dt), Action::Parasitic(g)));
            }
        }
    }
    for (i, a) in windows.iter().enumerate() {
        for b in &windows[i + 1..] {
            if a.1 < b.2 && b.1 < a.2 {
                return Err(Error::Script(format!("{} window overlaps {} window", a.0, b.0)));
            }
        }
    }
    actions.sort_by_key(|(n, a)| (*n, a.priority()));
    Ok(actions)
}

fn apply_decay(
    flux: &mut Grid<f64>,
    fraction: f64,
    epsilon: f64,
    mode: DecayMode,
    seed: u64,
) -> Grid<bool> {
    let (rows, cols) = flux.shape();
    let cells = rows * cols;
    let count = ((fraction * cells as f64).round() as usize).min(cells);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = Grid::new(rows, cols, false);
    let mut chosen: Vec<usize> = sample(&mut rng, cells, count).into_vec();
    chosen.sort_unstable();
    let flux = flux.as_mut_slice();
    let m = mask.as_mut_slice();
    for k in chosen {
        let s = sign(flux[k]);
        flux[k] = match mode {
            DecayMode::Preserve => epsilon * s,
            DecayMode::Flip => -epsilon * s,
        };
        m[k] = true;
    }
    mask
}

struct Recovery {
    flux: Grid<f64>,
    start_flux: Grid<f64>,
    sign_kept: Grid<bool>,
}

/// Step `state` from `t = 0` to `t_end`, applying `script`.
pub fn run(mut state: GridState, script: &ExperimentScript, t_end: f64, dt: f64) -> Result<RunRecord> {
    check_step(dt)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Script(format!("t_end must be non-negative (got {t_end})")));
    }
    for &t in &script.snapshots {
        check_time("snapshot", t, t_end)?;
    }
    let actions = schedule(&state, script, t_end, dt)?;
    let n_end = step_index(t_end, dt);
    let (rows, cols) = state.shape();

    let mut snaps: Vec<(usize, f64)> = script.snapshots.iter().map(|&t| (step_index(t, dt), t)).collect();
    snaps.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut store: Option<Grid<f64>> = script.has_store().then(|| Grid::new(rows, cols, 0.0));
    let mut storing = false;
    let mut stored_flux = None;
    let mut decay_mask = None;
    let mut recovery: Option<Recovery> = None;
    let mut recovered_y = None;
    let (mut checked, mut violations) = (0usize, 0usize);
    let mut warnings = Vec::new();
    let mut snapshots = Vec::with_capacity(snaps.len());
    let mut gate_events = Vec::new();
    let log_gates = script.log_gates && state.dynamics().uses_memristor();
    let mut gates = if log_gates { state.gate_mask() } else { None };

    let mut ai = 0;
    let mut si = 0;
    for n in 0..=n_end {
        let t = n as f64 * dt;
        state.set_time(t);

        while ai < actions.len() && actions[ai].0 == n {
            match &actions[ai].1 {
                Action::StoreEnd => {
                    storing = false;
                    stored_flux = store.clone();
                }
                Action::RecoveryEnd | Action::Resume => {
                    if let Some(rec) = recovery.take() {
                        let y = state.output();
                        let mut kept = 0;
                        for k in 0..rows * cols {
                            if !rec.sign_kept.as_slice()[k] {
                                continue;
                            }
                            kept += 1;
                            let expected = if rec.start_flux.as_slice()[k] >= 0.0 { 1.0 } else { -1.0 };
                            if y.as_slice()[k] != expected {
                                violations += 1;
                            }
                        }
                        checked += kept;
                        if kept < rows * cols {
                            warnings.push(format!(
                                "t={t}: {} cells changed flux sign during recovery; their recovered output is not guaranteed",
                                rows * cols - kept
                            ));
                        }
                        recovered_y = Some(y);
                    }
                    if matches!(actions[ai].1, Action::Resume) {
                        state.set_power(Power::On);
                    }
                }
                Action::PowerOn => state.set_power(Power::On),
                Action::SwitchOff => state.set_coupled(false),
                Action::SwitchOn => state.set_coupled(true),
                Action::Decay {
                    fraction,
                    epsilon,
                    mode,
                    seed,
                } => {
                    let mask = match store.as_mut() {
                        Some(s) => apply_decay(s, *fraction, *epsilon, *mode, *seed),
                        None => {
                            let mut phi = state.phi().expect("checked when scheduling").clone();
                            let mask = apply_decay(&mut phi, *fraction, *epsilon, *mode, *seed);
                            state.set_phi(phi)?;
                            mask
                        }
                    };
                    decay_mask = Some(mask);
                }
                Action::Parasitic(g) => state.set_parasitic(*g)?,
                Action::StoreStart => {
                    storing = true;
                    if let Some(s) = store.as_mut() {
                        s.fill(0.0);
                    }
                }
                Action::PowerOff => state.set_power(Power::Off),
                Action::RecoveryStart => {
                    state.set_power(Power::On);
                    state.set_v(Grid::new(rows, cols, 0.0))?;
                    let flux = match &store {
                        Some(s) => s.clone(),
                        None => state.phi().expect("checked when scheduling").clone(),
                    };
                    let duration = window_duration(&script.events, n, dt);
                    let min_nonzero = flux
                        .iter()
                        .filter(|f| **f != 0.0)
                        .fold(f64::INFINITY, |m, f| m.min(f.abs()));
                    if duration >= min_nonzero {
                        warnings.push(format!(
                            "t={t}: recovery window {duration} is not shorter than the smallest stored flux {min_nonzero}"
                        ));
                    }
                    recovery = Some(Recovery {
                        sign_kept: Grid::new(rows, cols, true),
                        start_flux: flux.clone(),
                        flux,
                    });
                }
            }
            ai += 1;
        }

        while si < snaps.len() && snaps[si].0 == n {
            snapshots.push(Snapshot {
                t: snaps[si].1,
                t_sampled: t,
                y: state.output(),
                gates: state.gate_mask(),
            });
            si += 1;
        }

        if n == n_end {
            break;
        }

        if storing {
            if let Some(s) = store.as_mut() {
                let y = state.output();
                for (f, yv) in s.as_mut_slice().iter_mut().zip(y.iter()) {
                    *f += dt * yv;
                }
            }
        }

        match recovery.as_mut() {
            Some(rec) => {
                let current = rec.flux.map(|&f| unit_step(f) * RECOVERY_SOURCE - RECOVERY_BIAS);
                for ((kept, f), f0) in rec
                    .sign_kept
                    .as_mut_slice()
                    .iter_mut()
                    .zip(rec.flux.iter())
                    .zip(rec.start_flux.iter())
                {
                    if unit_step(*f) != unit_step(*f0) {
                        *kept = false;
                    }
                }
                state.step_isolated(dt, &current)?;
                for f in rec.flux.as_mut_slice() {
                    *f += dt * RECOVERY_SOURCE;
                }
            }
            None => state.step(dt)?,
        }

        if log_gates {
            let next = state.gate_mask().expect("memristor dynamics");
            if let Some(prev) = &gates {
                let t_next = (n + 1) as f64 * dt;
                for r in 0..rows {
                    for c in 0..cols {
                        if prev[(r, c)] != next[(r, c)] {
                            gate_events.push(GateEvent {
                                t: t_next,
                                row: r,
                                col: c,
                                on: next[(r, c)],
                            });
                        }
                    }
                }
            }
            gates = Some(next);
        }
    }
    state.set_time(n_end as f64 * dt);

    Ok(RunRecord {
        final_y: state.output(),
        final_state: state,
        snapshots,
        gate_events,
        stored_flux,
        decay_mask,
        recovered_y,
        recovery_checked: checked,
        recovery_violations: violations,
        warnings,
        steps: n_end,
    })
}

fn window_duration(events: &[Event], start_idx: usize, dt: f64) -> f64 {
    events
        .iter()
        .find_map(|e| match *e {
            Event::RecoveryWindow { start, duration } if step_index(start, dt) == start_idx => Some(duration),
            _ => None,
        })
        .unwrap_or(0.0)
}
