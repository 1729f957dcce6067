use std::fmt;
use std::sync::Arc;

use crate::bodies::SystemModel;
use crate::dynamics::{body_position, State6};
use crate::error::{Error, Result};

use super::dop853::DenseStep;

/// Direction of a zero crossing of the event function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

pub type EventFn = Arc<dyn Fn(f64, &State6) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum EventKind {
    /// Distance to massive body `body` drops to `radius`.
    Collision { body: usize, radius: f64 },
    /// State component `component` crosses `value`.
    PlaneCrossing {
        component: usize,
        value: f64,
        direction: Crossing,
    },
    Custom { g: EventFn, direction: Crossing },
}

impl fmt::Debug for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Collision { body, radius } => write!(f, "Collision({body}, {radius})"),
            EventKind::PlaneCrossing {
                component,
                value,
                direction,
            } => write!(f, "PlaneCrossing({component}, {value}, {direction:?})"),
            EventKind::Custom { direction, .. } => write!(f, "Custom({direction:?})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EventSpec {
    pub kind: EventKind,
    pub terminal: bool,
}

impl EventSpec {
    pub fn collision(body: usize, radius: f64) -> Self {
        EventSpec {
            kind: EventKind::Collision { body, radius },
            terminal: true,
        }
    }

    pub fn plane_crossing(component: usize, value: f64, direction: Crossing, terminal: bool) -> Self {
        EventSpec {
            kind: EventKind::PlaneCrossing {
                component,
                value,
                direction,
            },
            terminal,
        }
    }

    pub fn custom(g: EventFn, direction: Crossing, terminal: bool) -> Self {
        EventSpec {
            kind: EventKind::Custom { g, direction },
            terminal,
        }
    }

    pub(crate) fn validate(&self, model: &SystemModel) -> Result<()> {
        match &self.kind {
            EventKind::Collision { body, radius } => {
                if *body >= model.n_massive() {
                    return Err(Error::InvalidInput(format!("no body with index {body}")));
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidInput("collision radius must be positive".into()));
                }
            }
            EventKind::PlaneCrossing { component, .. } if *component >= 6 => {
                return Err(Error::InvalidInput(format!("state has no component {component}")));
            }
            _ => {}
        }
        Ok(())
    }

    fn value(&self, model: &SystemModel, t: f64, s: &State6) -> f64 {
        match &self.kind {
            EventKind::Collision { body, radius } => {
                let p = body_position(model, *body, t);
                (s.fixed_rows::<3>(0) - p).norm() - radius
            }
            EventKind::PlaneCrossing {
                component, value, ..
            } => s[*component] - value,
            EventKind::Custom { g, .. } => g(t, s),
        }
    }

    fn direction(&self) -> Crossing {
        match &self.kind {
            EventKind::Collision { .. } => Crossing::Falling,
            EventKind::PlaneCrossing { direction, .. } | EventKind::Custom { direction, .. } => *direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    /// Index into the event list passed to the integrator.
    pub index: usize,
    pub t: f64,
    pub state: State6,
}

/// Tracks event functions across accepted steps.
pub(crate) struct EventTracker<'a> {
    model: &'a SystemModel,
    specs: &'a [EventSpec],
    last: Vec<f64>,
}

const ROOT_TOL: f64 = 1e-13;

impl<'a> EventTracker<'a> {
    pub fn new(model: &'a SystemModel, specs: &'a [EventSpec], t0: f64, s0: &State6) -> Self {
        let last = specs.iter().map(|e| e.value(model, t0, s0)).collect();
        EventTracker { model, specs, last }
    }

    /// Events inside `step`, ordered along the integration direction. The list
    /// stops at the first terminal event.
    pub fn scan(&mut self, step: &DenseStep<6>) -> Vec<EventRecord> {
        let forward = step.t1 > step.t0;
        let mut found = Vec::new();
        for (i, spec) in self.specs.iter().enumerate() {
            let g0 = self.last[i];
            let g1 = spec.value(self.model, step.t1, &step.y1);
            self.last[i] = g1;
            // Orientation of the crossing in physical time.
            let (a, b) = if forward { (g0, g1) } else { (g1, g0) };
            let fired = match spec.direction() {
                _ if g0 == 0.0 => false,
                Crossing::Rising => a < 0.0 && b >= 0.0,
                Crossing::Falling => a > 0.0 && b <= 0.0,
                Crossing::Either => g0.signum() != g1.signum() || g1 == 0.0,
            };
            // The step direction matters for collisions: approaching a body while
            // integrating backward is g decreasing along the integration.
            let fired = if let EventKind::Collision { .. } = spec.kind {
                g0 > 0.0 && g1 <= 0.0
            } else {
                fired
            };
            if fired {
                let t = self.refine(spec, step, g0);
                found.push(EventRecord {
                    index: i,
                    t,
                    state: step.eval(t),
                });
            }
        }
        found.sort_by(|a, b| {
            let o = a.t.partial_cmp(&b.t).unwrap();
            if forward {
                o
            } else {
                o.reverse()
            }
        });
        if let Some(k) = found.iter().position(|e| self.specs[e.index].terminal) {
            found.truncate(k + 1);
        }
        found
    }

    fn refine(&self, spec: &EventSpec, step: &DenseStep<6>, g0: f64) -> f64 {
        let (mut lo, mut hi) = (step.t0, step.t1);
        let mut glo = g0;
        while (hi - lo).abs() > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let gm = spec.value(self.model, mid, &step.eval(mid));
            if gm == 0.0 {
                return mid;
            }
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        hi
    }
}
