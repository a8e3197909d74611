//! Isolated-cell analysis.
//!
//! A cell cut off from its neighbours obeys `dv/dt = F(v)` with
//! `F(v) = -v + 0.5 a (|v + 1| - |v - 1|) + i`, where `a` is the resistor
//! slope (the centre gain `a_{0,0}`) and `i` a constant injected current.
//! `F` is piecewise linear with slope `a - 1` on `|v| < 1` and `-1` outside,
//! so its zeros have closed forms.

use crate::{saturation, Error, Result};

const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivingPoint {
    pub slope: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// End of the invariant interval `[i - 1, i + 1]` of the degenerate
    /// `a = 1`, `i = 0` cell, where every point of the interval is at rest.
    BoundaryOfInvariantSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub v: f64,
    pub stability: Stability,
}

impl DrivingPoint {
    pub fn new(slope: f64, bias: f64) -> Result<Self> {
        if !(slope.is_finite() && bias.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "driving point needs finite parameters (got a={slope}, i={bias})"
            )));
        }
        Ok(DrivingPoint { slope, bias })
    }

    /// `F(v)`
    pub fn rhs(&self, v: f64) -> f64 {
        -v + self.slope * saturation(v) + self.bias
    }

    fn is_degenerate(&self) -> bool {
        self.slope == 1.0 && self.bias == 0.0
    }

    /// Equilibria sorted by location.
    pub fn equilibria(&self) -> Vec<Equilibrium> {
        let (a, i) = (self.slope, self.bias);
        if self.is_degenerate() {
            return vec![
                Equilibrium {
                    v: i - 1.0,
                    stability: Stability::BoundaryOfInvariantSet,
                },
                Equilibrium {
                    v: i + 1.0,
                    stability: Stability::BoundaryOfInvariantSet,
                },
            ];
        }

        let mut found: Vec<Equilibrium> = Vec::with_capacity(3);
        let upper = a + i;
        if upper > 1.0 {
            found.push(Equilibrium {
                v: upper,
                stability: Stability::Stable,
            });
        }
        let lower = -a + i;
        if lower < -1.0 {
            found.push(Equilibrium {
                v: lower,
                stability: Stability::Stable,
            });
        }
        if a != 1.0 {
            let inner = i / (1.0 - a);
            if inner.abs() <= 1.0 {
                let stability = if a < 1.0 {
                    Stability::Stable
                } else {
                    Stability::Unstable
                };
                found.push(Equilibrium { v: inner, stability });
            }
        }
        found.sort_by(|p, q| p.v.total_cmp(&q.v));

        let mut merged: Vec<Equilibrium> = Vec::with_capacity(found.len());
        for eq in found {
            match merged.last_mut() {
                Some(prev) if (eq.v - prev.v).abs() < MERGE_TOL => {
                    // a corner root is only stable if both sides attract
                    if eq.stability != Stability::Stable {
                        prev.stability = eq.stability;
                    }
                }
                _ => merged.push(eq),
            }
        }
        merged
    }

    /// The equilibrium approached as `t -> inf` from `v(0) = v0`.
    ///
    /// The flow is one-dimensional, so the trajectory moves monotonically in
    /// the direction of `F(v0)` and stops at the first equilibrium it meets.
    /// For the degenerate `a = 1`, `i = 0` cell every point of `[-1, 1]` is
    /// at rest and outside points relax onto the nearest end.
    pub fn limit(&self, v0: f64) -> f64 {
        if self.is_degenerate() {
            return v0.clamp(-1.0, 1.0);
        }
        let eqs = self.equilibria();
        if let Some(eq) = eqs.iter().find(|e| (e.v - v0).abs() < MERGE_TOL) {
            return eq.v;
        }
        let f = self.rhs(v0);
        if f > 0.0 {
            eqs.iter().map(|e| e.v).find(|&v| v > v0).unwrap_or(f64::INFINITY)
        } else if f < 0.0 {
            eqs.iter()
                .rev()
                .map(|e| e.v)
                .find(|&v| v < v0)
                .unwrap_or(f64::NEG_INFINITY)
        } else {
            v0
        }
    }
}

/// Three-valued cell output, `sgn(0) = 0`.
pub fn sign_output(v: f64) -> i8 {
    crate::sign(v) as i8
}
