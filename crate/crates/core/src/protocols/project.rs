use std::collections::BTreeSet;

use thiserror::Error;

use crate::engine::{execute, run, Configuration, EngineError, EventKind, Trace};
use crate::exactgeom::{Point, Rational};
use crate::model::{Algorithm, Color, PerRobot, RobotId, RobotModel, Snapshot};
use crate::sched::{validate_atomicity, Atomicity, CycleSpec, Schedule, Synchrony};

use super::sim::{Flag, HandshakeColor, Phase, RsynchHandshake, SimA, SimABranch, SimAColor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("malformed simulator trace at {robot}#{cycle}: {reason}")]
    Malformed { robot: RobotId, cycle: u32, reason: String },
    #[error("abstract trace is not legal: {0}")]
    Illegal(String),
    #[error("direct run diverges at abstract step {step}: {reason}")]
    Divergence { step: usize, reason: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One call of the simulated algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractStep {
    pub robot: RobotId,
    pub sim_cycle: u32,
    pub t_look: Rational,
    /// The view the simulated algorithm received.
    pub snapshot: Snapshot,
    pub destination: Point,
    /// The simulated algorithm's light after the step.
    pub color: Color,
    /// Index of the abstract round (handshake) or aligned cycle (SIM(A)).
    pub group: usize,
}

#[derive(Debug, Clone)]
pub struct AbstractTrace {
    pub steps: Vec<AbstractStep>,
    /// Timing of the calling cycles, one abstract cycle per step.
    pub schedule: Schedule,
    /// The simulated algorithm run directly under `schedule`.
    pub replay: Trace,
    /// Number of abstract rounds or aligned cycles containing a call.
    pub groups: usize,
    /// Simulator epochs completed by the end of the last step's move.
    pub sim_epochs: usize,
    /// Every light the simulator trace used.
    pub colors_used: BTreeSet<Color>,
}

impl AbstractTrace {
    /// Simulator epochs per abstract step, if any step occurred.
    pub fn overhead(&self) -> Option<Rational> {
        (self.groups > 0).then(|| Rational::new(self.sim_epochs as i64, self.groups as i64))
    }

    /// Simulator epochs per epoch of the direct run.
    pub fn epoch_ratio(&self) -> Option<Rational> {
        let e = self.replay.epochs(&Rational::zero()).len();
        (e > 0).then(|| Rational::new(self.sim_epochs as i64, e as i64))
    }
}

struct CycleView {
    robot: RobotId,
    cycle: u32,
    t_look: Rational,
    t_compute: Rational,
    snapshot: Snapshot,
    destination: Point,
    before: Color,
    after: Color,
}

fn cycle_views(trace: &Trace) -> Vec<CycleView> {
    let mut out = Vec::new();
    let mut pending: PerRobot<Option<(Rational, Snapshot)>> = PerRobot::new(None, None);
    let mut colors = trace.initial.colors.clone();
    for e in &trace.events {
        match &e.kind {
            EventKind::Look { snapshot } => pending[e.robot] = Some((e.time.clone(), snapshot.clone())),
            EventKind::Compute { destination, color } => {
                if let Some((t_look, snapshot)) = pending[e.robot].take() {
                    out.push(CycleView {
                        robot: e.robot,
                        cycle: e.cycle,
                        t_look,
                        t_compute: e.time.clone(),
                        snapshot,
                        destination: destination.clone(),
                        before: colors[e.robot],
                        after: *color,
                    });
                }
                colors[e.robot] = *color;
            }
            _ => {}
        }
    }
    out.sort_by(|x, y| (&x.t_look, x.robot).cmp(&(&y.t_look, y.robot)));
    out
}

fn colors_used(trace: &Trace) -> BTreeSet<Color> {
    let mut set: BTreeSet<Color> = [trace.initial.colors.a, trace.initial.colors.b].into_iter().collect();
    for e in &trace.events {
        if let EventKind::Compute { color, .. } = e.kind {
            set.insert(color);
        }
    }
    set
}

fn epochs_until(trace: &Trace, t: &Rational) -> usize {
    trace.epochs(&Rational::zero()).iter().filter(|e| *e <= t).count()
}

fn projected_schedule(
    sim: &Trace,
    steps: &[AbstractStep],
    synchrony: Synchrony,
    atomicity: Atomicity,
) -> Result<Schedule, ProjectionError> {
    let mut counters = [0u32; 2];
    let mut cycles: Vec<CycleSpec> = Vec::with_capacity(steps.len());
    for s in steps {
        let mut c = sim
            .schedule
            .cycle(s.robot, s.sim_cycle)
            .expect("steps refer to scheduled cycles")
            .clone();
        counters[s.robot.index()] += 1;
        c.index = counters[s.robot.index()];
        cycles.push(c);
    }
    Schedule::new(cycles, synchrony, atomicity, sim.schedule.horizon.clone())
        .map_err(|e| ProjectionError::Illegal(e.to_string()))
}

fn replay_and_compare(
    inner: &dyn Algorithm,
    model: RobotModel,
    sim: &Trace,
    steps: &[AbstractStep],
    schedule: &Schedule,
) -> Result<Trace, ProjectionError> {
    let init = Configuration::initial(inner, sim.initial.positions.a.clone(), sim.initial.positions.b.clone());
    let replay = execute(inner, model, schedule, &init, sim.grid_granted)?;
    let direct = replay.decisions();
    if direct.len() != steps.len() {
        return Err(ProjectionError::Divergence {
            step: direct.len().min(steps.len()),
            reason: format!("{} direct decisions for {} abstract steps", direct.len(), steps.len()),
        });
    }
    for (i, (s, d)) in steps.iter().zip(&direct).enumerate() {
        let (robot, _, snap, dest, color) = d;
        if *robot != s.robot {
            return Err(ProjectionError::Divergence { step: i, reason: "robot order differs".into() });
        }
        if *snap != s.snapshot {
            return Err(ProjectionError::Divergence {
                step: i,
                reason: format!("view {:?} vs direct {:?}", s.snapshot, snap),
            });
        }
        if *dest != s.destination || *color != s.color {
            return Err(ProjectionError::Divergence {
                step: i,
                reason: format!("decision {} {} vs direct {} {}", s.destination, s.color, dest, color),
            });
        }
    }
    Ok(replay)
}

/// Collapses each decision turn of a handshake run into one step of the
/// simulated LUMI algorithm and replays those steps directly.
pub fn project_handshake(sim: &Trace, alg: &RsynchHandshake) -> Result<AbstractTrace, ProjectionError> {
    let views = cycle_views(sim);
    let malformed = |v: &CycleView, reason: String| ProjectionError::Malformed {
        robot: v.robot,
        cycle: v.cycle,
        reason,
    };

    // Phase discipline: all activations of a round take the same branch and
    // rounds walk cpy -> rst -> exc -> cpy.
    let mut expected = Phase::Cpy;
    let mut steps = Vec::new();
    let mut group = 0usize;
    let mut i = 0;
    while i < views.len() {
        let t = views[i].t_look.clone();
        let round: Vec<&CycleView> = views[i..].iter().take_while(|v| v.t_look == t).collect();
        i += round.len();
        let mut decided = false;
        for v in &round {
            let peer = v
                .snapshot
                .peer_color
                .and_then(|c| alg.decode(c))
                .ok_or_else(|| malformed(v, "peer light is not a handshake light".into()))?;
            if peer.phase != expected {
                return Err(malformed(v, format!("observed phase {} where {} was due", peer.phase, expected)));
            }
            if peer.phase != Phase::Exc {
                continue;
            }
            let own: HandshakeColor = alg
                .decode(v.before)
                .ok_or_else(|| malformed(v, "own light is not a handshake light".into()))?;
            if own.my != peer.your {
                return Err(ProjectionError::Illegal(format!(
                    "{}#{} reads its light as {} but holds {}",
                    v.robot, v.cycle, peer.your, own.my
                )));
            }
            let after = alg
                .decode(v.after)
                .ok_or_else(|| malformed(v, "new light is not a handshake light".into()))?;
            decided = true;
            steps.push(AbstractStep {
                robot: v.robot,
                sim_cycle: v.cycle,
                t_look: v.t_look.clone(),
                snapshot: RsynchHandshake::inner_view(&v.snapshot, &peer),
                destination: v.destination.clone(),
                color: after.my,
                group,
            });
        }
        if decided {
            group += 1;
        }
        expected = expected.next();
    }

    // Round-robin legality: pairs only before the first single activation,
    // singles strictly alternate.
    let mut seen_single = false;
    let mut last_single: Option<RobotId> = None;
    for g in 0..group {
        let movers: Vec<RobotId> = steps.iter().filter(|s| s.group == g).map(|s| s.robot).collect();
        match movers.as_slice() {
            [r] => {
                if last_single == Some(*r) {
                    return Err(ProjectionError::Illegal(format!("robot {r} decides twice in a row")));
                }
                seen_single = true;
                last_single = Some(*r);
            }
            _ if seen_single => {
                return Err(ProjectionError::Illegal("synchronous decision after alternation began".into()))
            }
            _ => {}
        }
    }

    let schedule = projected_schedule(sim, &steps, Synchrony::Rsynch, Atomicity::Lcm)?;
    let replay = replay_and_compare(alg.inner().as_ref(), RobotModel::Lumi, sim, &steps, &schedule)?;
    let last_end = steps
        .last()
        .map(|s| sim.schedule.cycle(s.robot, s.sim_cycle).unwrap().t_end.clone())
        .unwrap_or_else(Rational::zero);
    Ok(AbstractTrace {
        sim_epochs: epochs_until(sim, &last_end),
        groups: group,
        steps,
        schedule,
        replay,
        colors_used: colors_used(sim),
    })
}

fn aligned(x: &SimAColor, y: &SimAColor) -> bool {
    let ready = |c: &SimAColor, p: Phase| c.phase == p && c.my == Flag::W && c.your == Flag::W;
    (ready(x, Phase::Exc) && (ready(y, Phase::Exc) || ready(y, Phase::Rst))) || (ready(y, Phase::Exc) && ready(x, Phase::Rst))
}

/// Maps each call of the simulated algorithm in a SIM(A) run to one atomic
/// abstract cycle, checks CM-atomicity of the result and replays it.
pub fn project_sim_a(sim: &Trace, alg: &SimA) -> Result<AbstractTrace, ProjectionError> {
    let views = cycle_views(sim);
    let decode = |v: &CycleView, c: Color, what: &str| {
        alg.decode(c).ok_or_else(|| ProjectionError::Malformed {
            robot: v.robot,
            cycle: v.cycle,
            reason: format!("{what} light is not a SIM(A) light"),
        })
    };

    // Aligned-cycle numbering in Compute order.
    let mut by_compute: Vec<&CycleView> = views.iter().collect();
    by_compute.sort_by(|x, y| (&x.t_compute, x.robot).cmp(&(&y.t_compute, y.robot)));
    let mut state = PerRobot::new(
        alg.decode(sim.initial.colors.a).expect("initial light decodes"),
        alg.decode(sim.initial.colors.b).expect("initial light decodes"),
    );
    let mut cycle_no = 0usize;
    let mut was_aligned = aligned(&state.a, &state.b);
    let mut group_of = std::collections::HashMap::new();
    for v in &by_compute {
        group_of.insert((v.robot, v.cycle), cycle_no);
        state[v.robot] = decode(v, v.after, "new")?;
        let now = aligned(&state.a, &state.b);
        if now && !was_aligned {
            cycle_no += 1;
        }
        was_aligned = now;
    }

    let mut steps = Vec::new();
    for v in &views {
        let peer = match v.snapshot.peer_color {
            Some(c) => decode(v, c, "peer")?,
            None => {
                return Err(ProjectionError::Malformed {
                    robot: v.robot,
                    cycle: v.cycle,
                    reason: "peer light not visible".into(),
                })
            }
        };
        let before = decode(v, v.before, "own")?;
        let after = decode(v, v.after, "new")?;
        let branch = SimA::branch(&peer);
        if branch == SimABranch::Unlisted {
            return Err(ProjectionError::Malformed {
                robot: v.robot,
                cycle: v.cycle,
                reason: "peer shows cpy with (W, W)".into(),
            });
        }
        let flag_ok = match (before.my, after.my) {
            (Flag::W, Flag::M) => branch == SimABranch::Call,
            (Flag::M, Flag::W) => branch == SimABranch::Reset,
            _ => true,
        };
        if !flag_ok {
            return Err(ProjectionError::Malformed {
                robot: v.robot,
                cycle: v.cycle,
                reason: format!("flag moved {:?} -> {:?} outside its branch", before.my, after.my),
            });
        }
        if branch != SimABranch::Call {
            if v.destination != sim.position_at(v.robot, &v.t_compute).unwrap_or_else(|_| v.destination.clone()) {
                return Err(ProjectionError::Malformed {
                    robot: v.robot,
                    cycle: v.cycle,
                    reason: "moved without calling the simulated algorithm".into(),
                });
            }
            continue;
        }
        steps.push(AbstractStep {
            robot: v.robot,
            sim_cycle: v.cycle,
            t_look: v.t_look.clone(),
            snapshot: SimA::inner_view(&v.snapshot, &peer),
            destination: v.destination.clone(),
            color: after.light,
            group: group_of[&(v.robot, v.cycle)],
        });
    }

    let schedule = projected_schedule(sim, &steps, Synchrony::Asynch, Atomicity::Cm)?;
    let report = validate_atomicity(&schedule, Atomicity::Cm);
    if !report.ok {
        return Err(ProjectionError::Illegal(format!(
            "projected schedule is not CM-atomic: {}",
            report.violations[0]
        )));
    }
    let replay = replay_and_compare(alg.inner().as_ref(), RobotModel::Fcom, sim, &steps, &schedule)?;
    let groups: BTreeSet<usize> = steps.iter().map(|s| s.group).collect();
    let last_end = steps
        .iter()
        .map(|s| sim.schedule.cycle(s.robot, s.sim_cycle).unwrap().t_end.clone())
        .max()
        .unwrap_or_else(Rational::zero);
    Ok(AbstractTrace {
        sim_epochs: epochs_until(sim, &last_end),
        groups: groups.len(),
        steps,
        schedule,
        replay,
        colors_used: colors_used(sim),
    })
}

/// A collapse run projects to itself. Checks it event for event against the
/// LUMI original, ignoring only which lights each snapshot reveals.
pub fn project_collapse(sim: &Trace, inner: &dyn Algorithm) -> Result<AbstractTrace, ProjectionError> {
    let init = Configuration::initial(inner, sim.initial.positions.a.clone(), sim.initial.positions.b.clone());
    let direct = run(inner, RobotModel::Lumi, &sim.schedule, &init, sim.grid_granted)?;
    if direct.events.len() != sim.events.len() {
        return Err(ProjectionError::Divergence {
            step: 0,
            reason: "event counts differ".into(),
        });
    }
    for (i, (x, y)) in sim.events.iter().zip(&direct.events).enumerate() {
        let same = x.time == y.time
            && x.robot == y.robot
            && match (&x.kind, &y.kind) {
                (EventKind::Look { snapshot: a }, EventKind::Look { snapshot: b }) => a.peer_offset == b.peer_offset,
                (a, b) => a == b,
            };
        if !same {
            return Err(ProjectionError::Divergence {
                step: i,
                reason: format!("{:?} vs {:?}", x, y),
            });
        }
    }
    let steps: Vec<AbstractStep> = cycle_views(sim)
        .into_iter()
        .enumerate()
        .map(|(i, v)| AbstractStep {
            robot: v.robot,
            sim_cycle: v.cycle,
            t_look: v.t_look,
            snapshot: v.snapshot,
            destination: v.destination,
            color: v.after,
            group: i,
        })
        .collect();
    let rounds = sim.schedule.rounds().len();
    Ok(AbstractTrace {
        sim_epochs: sim.epochs(&Rational::zero()).len(),
        groups: rounds,
        steps,
        schedule: sim.schedule.clone(),
        replay: direct,
        colors_used: colors_used(sim),
    })
}
