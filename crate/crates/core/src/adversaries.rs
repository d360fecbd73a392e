//! Hand-built schedules that force specific geometric outcomes.

use thiserror::Error;

use crate::engine::{run, Configuration, EngineError, Trace};
use crate::exactgeom::{Point, Rational};
use crate::model::{Algorithm, PerRobot, RobotId, RobotModel};
use crate::sched::{gen_fsynch, gen_rsynch, Atomicity, CycleSpec, Schedule, ScheduleError, Synchrony};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("lambda must lie in (0, 1], got {0}")]
    Lambda(Rational),
    #[error("x must lie in (0, 1), got {0}")]
    X(Rational),
    #[error("{0} does not expose a similarity step")]
    NoLambda(String),
    #[error("horizon must be at least one turn")]
    Horizon,
    #[error("half-distance p must be positive")]
    Spread,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Distance left, as a fraction of the previous stop distance, after a robot
/// acts on a stale midpoint while its peer completes `r` fresh midpoint moves.
pub fn psi(r: u32) -> Rational {
    if r == 0 {
        Rational::half()
    } else {
        &Rational::half() - &Rational::pow2_inv(r)
    }
}

fn q(n: i64) -> Rational {
    Rational::from_int(n)
}

/// A looks, B finishes `r_l` full cycles, then A's stale move runs, once per
/// entry of `counts`. Returns the schedule and the times at which each
/// block's stale move ends, where the resulting stop begins.
pub fn adv_psi_sequence(counts: &[u32]) -> Result<(Schedule, Vec<Rational>), AdversaryError> {
    let mut cycles = Vec::new();
    let mut ends = Vec::new();
    let (mut ia, mut ib) = (0u32, 0u32);
    let mut o = 0i64;
    for &r in counts {
        let r = r as i64;
        for j in 0..r {
            ib += 1;
            let s = o + 2 + 4 * j;
            cycles.push(CycleSpec::new(RobotId::B, ib, [q(s), q(s + 1), q(s + 2), q(s + 3)]));
        }
        ia += 1;
        let end = o + 4 + 4 * r;
        cycles.push(CycleSpec::new(RobotId::A, ia, [q(o + 1), q(end - 2), q(end - 1), q(end)]));
        ends.push(q(end));
        o = end;
    }
    // B must act at least once for the schedule to be fair.
    if ib == 0 {
        cycles.push(CycleSpec::new(RobotId::B, 1, [q(o + 1), q(o + 2), q(o + 3), q(o + 4)]));
        o += 4;
    }
    let s = Schedule::new(cycles, Synchrony::Asynch, Atomicity::Cm, q(o + 1))?;
    Ok((s, ends))
}

pub fn adv_psi_interleave(r: u32) -> Result<(Schedule, Rational), AdversaryError> {
    let (s, mut ends) = adv_psi_sequence(&[r])?;
    Ok((s, ends.remove(0)))
}

pub fn dmsd_initial() -> (Point, Point) {
    (Point::ints(0, 0), Point::ints(1, 0))
}

/// A single non-atomic round in which B looks while A has covered the
/// fraction `x` of its move and both moves end together. For an algorithm
/// stepping `lambda` of the way to the peer, starting from `dmsd_initial`,
/// the final distance is `|1 - 2 lambda + lambda^2 x|`.
pub fn adv_dmsd_break(lambda: &Rational, x: &Rational) -> Result<Schedule, AdversaryError> {
    if !lambda.is_positive() || *lambda > Rational::one() {
        return Err(AdversaryError::Lambda(lambda.clone()));
    }
    if !x.is_positive() || *x >= Rational::one() {
        return Err(AdversaryError::X(x.clone()));
    }
    let end = q(6);
    let t_look = &q(3) + &(&q(3) * x);
    let rest = &end - &t_look;
    let a = CycleSpec::new(RobotId::A, 1, [q(1), q(2), q(3), end.clone()]);
    let b = CycleSpec::new(
        RobotId::B,
        1,
        [
            t_look.clone(),
            &t_look + &(&rest * &Rational::new(1, 4)),
            &t_look + &(&rest * &Rational::half()),
            end,
        ],
    );
    Ok(Schedule::new(vec![a, b], Synchrony::Asynch, Atomicity::None, q(7))?)
}

/// Predicted final distance ratio of `adv_dmsd_break`.
pub fn dmsd_ratio(lambda: &Rational, x: &Rational) -> Rational {
    (&(&Rational::one() - &(&q(2) * lambda)) + &(&(lambda * lambda) * x)).abs()
}

pub fn adv_dmsd_for(alg: &dyn Algorithm, x: &Rational) -> Result<Schedule, AdversaryError> {
    let lambda = alg.similarity_lambda().ok_or_else(|| AdversaryError::NoLambda(alg.id()))?;
    adv_dmsd_break(&lambda, x)
}

#[derive(Debug, Clone)]
pub struct MirrorSetup {
    pub schedule: Schedule,
    pub initial: Configuration,
    /// Synchronous rounds before alternation starts.
    pub prefix: u32,
}

/// Starts the robots at `(-p, 0)` and `(p, 0)` with equal lights and keeps
/// activations synchronous as long as that never brings them together, then
/// alternates from A. Unit frames give each robot the point reflection of the
/// other's view.
pub fn adv_mirror_rsynch(
    alg: &dyn Algorithm,
    model: RobotModel,
    horizon_turns: u32,
    p: &Rational,
) -> Result<MirrorSetup, AdversaryError> {
    if horizon_turns == 0 {
        return Err(AdversaryError::Horizon);
    }
    if !p.is_positive() {
        return Err(AdversaryError::Spread);
    }
    let initial = Configuration::initial(alg, Point::new(-p, Rational::zero()), Point::new(p.clone(), Rational::zero()));
    let probe = run(alg, model, &gen_fsynch(horizon_turns)?, &initial, false)?;
    let prefix = (1..=horizon_turns)
        .find(|&i| {
            let f = probe.positions_at(&Rational::from_int(i as i64 + 1)).expect("inside horizon");
            f.a == f.b
        })
        .map(|i| i - 1)
        .unwrap_or(horizon_turns);
    let schedule = gen_rsynch(prefix, horizon_turns - prefix, RobotId::A)?;
    Ok(MirrorSetup { schedule, initial, prefix })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirrorReport {
    pub checked: usize,
    /// First aligned time at which a(t) = -b(t) fails.
    pub position_break: Option<Rational>,
    pub color_break: Option<Rational>,
    pub move_count_break: Option<Rational>,
}

impl MirrorReport {
    pub fn holds(&self) -> bool {
        self.position_break.is_none() && self.color_break.is_none() && self.move_count_break.is_none()
    }
}

fn completed_moves(trace: &Trace, r: RobotId, t: &Rational) -> usize {
    trace.segments(r).iter().filter(|s| !s.is_trivial() && s.cycle.t_end <= *t).count()
}

/// Checks mirror symmetry after every synchronous round and every
/// alternation pair of a round-based trace.
pub fn mirror_report(trace: &Trace) -> MirrorReport {
    let rounds = trace.schedule.rounds();
    let mut times = Vec::new();
    let mut pending_single = false;
    for (t, rs) in &rounds {
        if rs.len() == 2 || pending_single {
            times.push(t + &Rational::one());
            pending_single = false;
        } else {
            pending_single = true;
        }
    }
    let mut rep = MirrorReport { checked: 0, position_break: None, color_break: None, move_count_break: None };
    for t in times {
        rep.checked += 1;
        let pos: PerRobot<Point> = trace.positions_at(&t).expect("aligned times lie in the horizon");
        if rep.position_break.is_none() && pos.a != -&pos.b {
            rep.position_break = Some(t.clone());
        }
        if rep.color_break.is_none() && trace.color_at(RobotId::A, &t) != trace.color_at(RobotId::B, &t) {
            rep.color_break = Some(t.clone());
        }
        if rep.move_count_break.is_none()
            && completed_moves(trace, RobotId::A, &t) != completed_moves(trace, RobotId::B, &t)
        {
            rep.move_count_break = Some(t.clone());
        }
    }
    rep
}

#[derive(Debug, Clone)]
pub struct RdamCase {
    pub name: &'static str,
    pub schedule: Schedule,
}

fn cm_schedule(cycles: Vec<(RobotId, [Rational; 4])>) -> Schedule {
    let mut counters = [0u32; 2];
    let mut horizon = Rational::zero();
    let specs: Vec<CycleSpec> = cycles
        .into_iter()
        .map(|(r, t)| {
            counters[r.index()] += 1;
            horizon = horizon.clone().max(&t[3] + &Rational::one());
            CycleSpec::new(r, counters[r.index()], t)
        })
        .collect();
    Schedule::new(specs, Synchrony::Asynch, Atomicity::Cm, horizon).expect("hand-built case schedules are well formed")
}

fn span(s: i64) -> [Rational; 4] {
    [q(s), q(s + 1), q(s + 2), q(s + 3)]
}

/// The four timing patterns that decide how the anchor-midpoint protocol
/// resolves: a synchronous start, a lone first mover, a stale look by the
/// second robot, and a synchronous start followed by a lone move.
pub fn rdam_case_families() -> Vec<RdamCase> {
    use RobotId::{A, B};
    vec![
        RdamCase {
            name: "simultaneous start",
            schedule: cm_schedule(vec![(A, span(1)), (B, span(1)), (A, span(5)), (B, span(5))]),
        },
        RdamCase {
            name: "one robot completes first",
            schedule: cm_schedule(vec![(A, span(1)), (B, span(5)), (A, span(9))]),
        },
        RdamCase {
            name: "second robot looks before the first moves",
            schedule: cm_schedule(vec![
                (A, span(1)),
                (B, [Rational::new(3, 2), q(9), q(10), q(11)]),
                (A, span(5)),
            ]),
        },
        RdamCase {
            name: "simultaneous start then alternation",
            schedule: cm_schedule(vec![(A, span(1)), (B, span(1)), (A, span(5)), (B, span(9)), (A, span(13))]),
        },
    ]
}
