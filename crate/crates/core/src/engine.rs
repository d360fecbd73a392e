//! Executes an algorithm against a timed schedule and derives the motion
//! quantities the problem predicates need.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactgeom::{interpolate, Point, Rational};
use crate::model::{
    build_snapshot, local_to_global, Algorithm, Color, Destination, PerRobot, RobotId, RobotModel,
    Snapshot,
};
use crate::sched::{check_fairness, CycleSpec, Schedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("schedule is not fair within its horizon")]
    Unfair,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("initial color {color} of robot {robot} differs from the algorithm's initial color")]
    InitialColor { robot: RobotId, color: Color },
    #[error("robot {robot} cycle {index} chose color {color} outside palette of size {palette}")]
    ColorOutOfPalette {
        robot: RobotId,
        index: u32,
        color: Color,
        palette: u32,
    },
    #[error("algorithm {alg} needs more visibility than model {model:?} grants")]
    ModelMismatch { alg: String, model: RobotModel },
    #[error("robot {robot} cycle {index} asked for a global destination without a shared grid")]
    NoGrid { robot: RobotId, index: u32 },
    #[error("algorithm {0} needs a shared grid")]
    GridRequired(String),
    #[error("time {0} outside the trace horizon")]
    OutOfHorizon(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: PerRobot<Point>,
    pub colors: PerRobot<Color>,
}

impl Configuration {
    pub fn new(a: Point, b: Point, colors: PerRobot<Color>) -> Self {
        Configuration {
            positions: PerRobot::new(a, b),
            colors,
        }
    }

    /// Both robots start with the algorithm's initial light.
    pub fn initial(alg: &dyn Algorithm, a: Point, b: Point) -> Self {
        Configuration::new(a, b, PerRobot::splat(alg.initial_color()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Look { snapshot: Snapshot },
    /// Global destination and the light in effect from this instant.
    Compute { destination: Point, color: Color },
    MoveBegin { from: Point, to: Point },
    MoveEnd { at: Point },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: Rational,
    pub robot: RobotId,
    pub cycle: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub algorithm: String,
    pub model: RobotModel,
    pub grid_granted: bool,
    pub initial: Configuration,
    pub schedule: Schedule,
    pub events: Vec<TraceEvent>,
}

/// One executed move, zero-length moves included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<'a> {
    pub cycle: &'a CycleSpec,
    pub from: Point,
    pub to: Point,
}

impl Segment<'_> {
    pub fn is_trivial(&self) -> bool {
        self.from == self.to
    }

    pub fn position_at(&self, t: &Rational) -> Point {
        let s = self.cycle.progress_at(t);
        interpolate(&self.from, &self.to, &s).expect("progress lies in [0, 1]")
    }
}

/// A maximal time interval on which both robots are stopped. Endpoints that
/// coincide with a motion boundary are open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopInterval {
    pub start: Rational,
    pub end: Rational,
    pub start_open: bool,
    pub end_open: bool,
}

impl StopInterval {
    pub fn contains(&self, t: &Rational) -> bool {
        let lo = if self.start_open { *t > self.start } else { *t >= self.start };
        let hi = if self.end_open { *t < self.end } else { *t <= self.end };
        lo && hi
    }

    /// A time strictly inside the interval, or its only point.
    pub fn sample(&self) -> Rational {
        (&self.start + &self.end) * Rational::half()
    }
}

fn check_model(alg: &dyn Algorithm, model: RobotModel) -> Result<(), EngineError> {
    let need = alg.model();
    let own_ok = !need.sees_own_color() || model.sees_own_color();
    let peer_ok = !need.sees_peer_color() || model.sees_peer_color();
    if own_ok && peer_ok {
        Ok(())
    } else {
        Err(EngineError::ModelMismatch {
            alg: alg.id(),
            model,
        })
    }
}

struct Pending {
    time: Rational,
    robot: RobotId,
    cycle: usize,
    rank: u8,
}

/// Runs `alg` under `sched` from `init`.
pub fn run(
    alg: &dyn Algorithm,
    model: RobotModel,
    sched: &Schedule,
    init: &Configuration,
    grid_granted: bool,
) -> Result<Trace, EngineError> {
    if !check_fairness(sched) {
        return Err(EngineError::Unfair);
    }
    execute(alg, model, sched, init, grid_granted)
}

/// Like [`run`] without the fairness requirement. Used to replay partial
/// schedules such as projections of simulator runs.
pub fn execute(
    alg: &dyn Algorithm,
    model: RobotModel,
    sched: &Schedule,
    init: &Configuration,
    grid_granted: bool,
) -> Result<Trace, EngineError> {
    sched.validate()?;
    for r in RobotId::BOTH {
        if init.colors[r] != alg.initial_color() {
            return Err(EngineError::InitialColor {
                robot: r,
                color: init.colors[r],
            });
        }
    }
    check_model(alg, model)?;
    if alg.needs_grid() && !grid_granted {
        return Err(EngineError::GridRequired(alg.id()));
    }

    let mut agenda = Vec::with_capacity(sched.cycles.len() * 4);
    for (i, c) in sched.cycles.iter().enumerate() {
        for (time, rank) in [
            (&c.t_look, 3),
            (&c.t_compute, 0),
            (&c.t_begin, 2),
            (&c.t_end, 1),
        ] {
            agenda.push(Pending {
                time: time.clone(),
                robot: c.robot,
                cycle: i,
                rank,
            });
        }
    }
    agenda.sort_by(|x, y| (&x.time, x.rank, x.robot).cmp(&(&y.time, y.rank, y.robot)));

    // Same-time order: Compute, MoveEnd, MoveBegin, Look. A Look therefore
    // sees lights set at that instant.
    // Anchor position and the move in progress (or most recently fixed).
    let mut rest = init.positions.clone();
    let mut active: PerRobot<Option<(usize, Point)>> = PerRobot::new(None, None);
    let mut colors = init.colors.clone();
    let mut looked: PerRobot<Option<(Snapshot, Point)>> = PerRobot::new(None, None);
    let mut events = Vec::with_capacity(agenda.len());

    let position = |r: RobotId,
                    t: &Rational,
                    rest: &PerRobot<Point>,
                    active: &PerRobot<Option<(usize, Point)>>|
     -> Point {
        match &active[r] {
            Some((ci, to)) => {
                let c = &sched.cycles[*ci];
                let s = c.progress_at(t);
                interpolate(&rest[r], to, &s).expect("progress lies in [0, 1]")
            }
            None => rest[r].clone(),
        }
    };

    for p in agenda {
        let c = &sched.cycles[p.cycle];
        let r = p.robot;
        let kind = match p.rank {
            3 => {
                let positions = PerRobot::new(
                    position(RobotId::A, &p.time, &rest, &active),
                    position(RobotId::B, &p.time, &rest, &active),
                );
                let snap = build_snapshot(&positions, &colors, r, model, &c.frame, grid_granted);
                let offset = &positions[r.peer()] - &positions[r];
                looked[r] = Some((snap.clone(), offset));
                EventKind::Look { snapshot: snap }
            }
            0 => {
                let (snap, offset) = looked[r].take().expect("Look precedes Compute");
                let decision = alg.decide(&snap);
                let new_color = decision.color.apply(colors[r]);
                if new_color.0 >= alg.palette() {
                    return Err(EngineError::ColorOutOfPalette {
                        robot: r,
                        index: c.index,
                        color: new_color,
                        palette: alg.palette(),
                    });
                }
                colors[r] = new_color;
                let own = rest[r].clone();
                let dest = match decision.destination {
                    Destination::Local(d) => local_to_global(&d, &snap.peer_offset, &own, &offset),
                    Destination::Global(g) if grid_granted => g,
                    Destination::Global(_) => {
                        return Err(EngineError::NoGrid {
                            robot: r,
                            index: c.index,
                        })
                    }
                };
                active[r] = Some((p.cycle, dest.clone()));
                EventKind::Compute {
                    destination: dest,
                    color: new_color,
                }
            }
            2 => {
                let to = active[r].as_ref().expect("Compute precedes Move").1.clone();
                EventKind::MoveBegin {
                    from: rest[r].clone(),
                    to,
                }
            }
            _ => {
                let (_, to) = active[r].take().expect("Compute precedes Move");
                rest[r] = to.clone();
                EventKind::MoveEnd { at: to }
            }
        };
        events.push(TraceEvent {
            time: p.time,
            robot: r,
            cycle: c.index,
            kind,
        });
    }

    Ok(Trace {
        algorithm: alg.id(),
        model,
        grid_granted,
        initial: init.clone(),
        schedule: sched.clone(),
        events,
    })
}

impl Trace {
    pub fn horizon(&self) -> &Rational {
        &self.schedule.horizon
    }

    /// Every executed move of `r` in time order.
    pub fn segments(&self, r: RobotId) -> Vec<Segment<'_>> {
        self.events
            .iter()
            .filter(|e| e.robot == r)
            .filter_map(|e| match &e.kind {
                EventKind::MoveBegin { from, to } => Some(Segment {
                    cycle: self
                        .schedule
                        .cycle(r, e.cycle)
                        .expect("events refer to scheduled cycles"),
                    from: from.clone(),
                    to: to.clone(),
                }),
                _ => None,
            })
            .collect()
    }

    pub fn position_at(&self, r: RobotId, t: &Rational) -> Result<Point, EngineError> {
        if t.is_negative() || t > self.horizon() {
            return Err(EngineError::OutOfHorizon(t.clone()));
        }
        Ok(self.position_unchecked(r, t))
    }

    fn position_unchecked(&self, r: RobotId, t: &Rational) -> Point {
        let mut pos = self.initial.positions[r].clone();
        for seg in self.segments(r) {
            if *t < seg.cycle.t_begin {
                break;
            }
            if *t <= seg.cycle.t_end {
                return seg.position_at(t);
            }
            pos = seg.to;
        }
        pos
    }

    pub fn positions_at(&self, t: &Rational) -> Result<PerRobot<Point>, EngineError> {
        Ok(PerRobot::new(
            self.position_at(RobotId::A, t)?,
            self.position_at(RobotId::B, t)?,
        ))
    }

    pub fn final_positions(&self) -> PerRobot<Point> {
        let h = self.horizon().clone();
        PerRobot::new(
            self.position_unchecked(RobotId::A, &h),
            self.position_unchecked(RobotId::B, &h),
        )
    }

    /// Light of `r` at time `t`; a Compute at `t` is already in effect.
    pub fn color_at(&self, r: RobotId, t: &Rational) -> Color {
        let mut c = self.initial.colors[r];
        for e in self.events.iter().filter(|e| e.robot == r) {
            if e.time > *t {
                break;
            }
            if let EventKind::Compute { color, .. } = &e.kind {
                c = *color;
            }
        }
        c
    }

    pub fn moves_count(&self, r: RobotId) -> usize {
        self.segments(r).iter().filter(|s| !s.is_trivial()).count()
    }

    /// End time of the last nontrivial move of `r`, if any.
    pub fn last_motion_end(&self, r: RobotId) -> Option<Rational> {
        self.segments(r)
            .iter()
            .filter(|s| !s.is_trivial())
            .map(|s| s.cycle.t_end.clone())
            .next_back()
    }

    /// Maximal intervals within `[0, horizon]` on which neither robot moves.
    pub fn joint_stops(&self) -> Vec<StopInterval> {
        let mut busy: Vec<(Rational, Rational)> = RobotId::BOTH
            .iter()
            .flat_map(|&r| {
                self.segments(r)
                    .into_iter()
                    .filter(|s| !s.is_trivial())
                    .map(|s| (s.cycle.t_begin.clone(), s.cycle.t_end.clone()))
                    .collect::<Vec<_>>()
            })
            .collect();
        busy.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::new();
        for (b, e) in busy {
            match merged.last_mut() {
                Some(last) if b <= last.1 => {
                    if e > last.1 {
                        last.1 = e;
                    }
                }
                _ => merged.push((b, e)),
            }
        }
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        let mut open = false;
        for (b, e) in merged {
            if b > cursor {
                out.push(StopInterval {
                    start: cursor.clone(),
                    end: b.clone(),
                    start_open: open,
                    end_open: true,
                });
            }
            cursor = e;
            open = true;
        }
        let h = self.horizon().clone();
        if h > cursor || (!open && h == cursor) {
            out.push(StopInterval {
                start: cursor,
                end: h,
                start_open: open,
                end_open: false,
            });
        }
        out
    }

    /// Configurations at each joint stop, in time order.
    pub fn stop_configurations(&self) -> Vec<(StopInterval, PerRobot<Point>)> {
        self.joint_stops()
            .into_iter()
            .map(|iv| {
                let t = iv.sample();
                let pos = PerRobot::new(
                    self.position_unchecked(RobotId::A, &t),
                    self.position_unchecked(RobotId::B, &t),
                );
                (iv, pos)
            })
            .collect()
    }

    /// Move-end times of `r`, zero-length moves included.
    pub fn move_ends(&self, r: RobotId) -> Vec<Rational> {
        self.events
            .iter()
            .filter(|e| e.robot == r && matches!(e.kind, EventKind::MoveEnd { .. }))
            .map(|e| e.time.clone())
            .collect()
    }

    /// Epoch boundaries after `t0`. Each boundary is the first instant by
    /// which every robot has finished one more move than at the previous
    /// boundary.
    pub fn epochs(&self, t0: &Rational) -> Vec<Rational> {
        let ends = PerRobot::new(self.move_ends(RobotId::A), self.move_ends(RobotId::B));
        let mut out = Vec::new();
        let mut t = t0.clone();
        loop {
            let mut next = Rational::zero();
            for r in RobotId::BOTH {
                let mu = ends[r].iter().filter(|e| **e <= t).count();
                match ends[r].get(mu) {
                    Some(e) => {
                        if *e > next {
                            next = e.clone();
                        }
                    }
                    None => return out,
                }
            }
            out.push(next.clone());
            t = next;
        }
    }

    /// Snapshot and resulting global destination of every cycle in Look order.
    pub fn decisions(&self) -> Vec<(RobotId, u32, Snapshot, Point, Color)> {
        let mut out: Vec<(Rational, RobotId, u32, Snapshot, Point, Color)> = Vec::new();
        let mut pending: PerRobot<Option<(Rational, Snapshot)>> = PerRobot::new(None, None);
        for e in &self.events {
            match &e.kind {
                EventKind::Look { snapshot } => pending[e.robot] = Some((e.time.clone(), snapshot.clone())),
                EventKind::Compute { destination, color } => {
                    if let Some((t, s)) = pending[e.robot].take() {
                        out.push((t, e.robot, e.cycle, s, destination.clone(), *color));
                    }
                }
                _ => {}
            }
        }
        out.sort_by(|x, y| (&x.0, x.1).cmp(&(&y.0, y.1)));
        out.into_iter().map(|(_, r, c, s, d, col)| (r, c, s, d, col)).collect()
    }
}
