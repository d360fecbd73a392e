//! Trace predicates for the separator problems.
//!
//! Every predicate is evaluated over the finite trace. "Eventually
//! stationary" means stationary from the last completed move through the
//! horizon.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Trace;
use crate::exactgeom::{cge_step, in_square, midpoint, rot90cw, shrink_rot45cw, Point, Rational};
use crate::model::{PerRobot, RobotId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("initial distance is zero")]
    ZeroInitialDistance,
    #[error("initial positions coincide")]
    CoincidentStart,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("trace was produced without a shared grid")]
    NoGrid,
    #[error("step count must be positive")]
    ZeroSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Fails,
    #[serde(rename = "UNDECIDED-AT-HORIZON")]
    Undecided,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Undecided => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Fails => "FAILS",
            Verdict::Undecided => "UNDECIDED-AT-HORIZON",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Start of the offending time span (or the instant itself).
    pub from: Rational,
    /// End of the span; equal to `from` for an instant.
    pub to: Rational,
    pub observed: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub predicate: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
}

impl PredicateReport {
    fn holds(predicate: &str) -> Self {
        PredicateReport {
            predicate: predicate.to_string(),
            verdict: Verdict::Holds,
            witness: None,
        }
    }

    fn with(predicate: &str, verdict: Verdict, witness: Witness) -> Self {
        PredicateReport {
            predicate: predicate.to_string(),
            verdict,
            witness: Some(witness),
        }
    }

    pub fn holds_p(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

fn instant(t: &Rational, observed: String, expected: &str) -> Witness {
    Witness {
        from: t.clone(),
        to: t.clone(),
        observed,
        expected: expected.to_string(),
    }
}

fn initial_dist2(trace: &Trace) -> Rational {
    let p = &trace.initial.positions;
    p.a.dist2(&p.b)
}

/// Joint-stop distances as ratios of the initial distance, when the squared
/// ratio is a rational square.
pub fn stop_ratios(trace: &Trace) -> Result<Vec<(Rational, Rational)>, ProblemError> {
    let d0 = initial_dist2(trace);
    if d0.is_zero() {
        return Err(ProblemError::ZeroInitialDistance);
    }
    Ok(trace
        .stop_configurations()
        .into_iter()
        .map(|(iv, pos)| (iv.sample(), pos.a.dist2(&pos.b) / &d0))
        .collect())
}

pub fn check_dmsd(trace: &Trace) -> Result<PredicateReport, ProblemError> {
    let d0 = initial_dist2(trace);
    if d0.is_zero() {
        return Err(ProblemError::ZeroInitialDistance);
    }
    for (iv, pos) in trace.stop_configurations() {
        let ratio2 = pos.a.dist2(&pos.b) / &d0;
        let ok = matches!(ratio2.sqrt_exact(), Some(q) if q.is_dyadic());
        if !ok {
            let observed = match ratio2.sqrt_exact() {
                Some(q) => format!("distance ratio {q}"),
                None => format!("squared distance ratio {ratio2} is not a rational square"),
            };
            return Ok(PredicateReport::with(
                "dmsd",
                Verdict::Fails,
                Witness {
                    from: iv.start.clone(),
                    to: iv.end.clone(),
                    observed,
                    expected: "dyadic rational ratio".into(),
                },
            ));
        }
    }
    Ok(PredicateReport::holds("dmsd"))
}

fn moves(trace: &Trace) -> PerRobot<usize> {
    PerRobot::new(trace.moves_count(RobotId::A), trace.moves_count(RobotId::B))
}

pub fn check_rdv1(trace: &Trace) -> PredicateReport {
    let m = moves(trace);
    let fin = trace.final_positions();
    let h = trace.horizon();
    if fin.a != fin.b {
        return PredicateReport::with(
            "rdv1",
            Verdict::Fails,
            instant(h, format!("robots at {} and {}", fin.a, fin.b), "co-located at horizon"),
        );
    }
    if m.a != 1 || m.b != 1 {
        return PredicateReport::with(
            "rdv1",
            Verdict::Fails,
            instant(h, format!("moves(A)={} moves(B)={}", m.a, m.b), "exactly one move each"),
        );
    }
    PredicateReport::holds("rdv1")
}

pub fn check_am(trace: &Trace) -> PredicateReport {
    let m = moves(trace);
    if (m.a >= 2 && m.b <= 1) || (m.b >= 2 && m.a <= 1) {
        return PredicateReport::holds("am");
    }
    PredicateReport::with(
        "am",
        Verdict::Fails,
        instant(
            trace.horizon(),
            format!("moves(A)={} moves(B)={}", m.a, m.b),
            "one robot at least two moves, the other at most one",
        ),
    )
}

pub fn check_rdam(trace: &Trace) -> PredicateReport {
    let rdv = check_rdv1(trace);
    let am = check_am(trace);
    if rdv.holds_p() || am.holds_p() {
        return PredicateReport::holds("rdam");
    }
    let w1 = rdv.witness.expect("failed report carries a witness");
    let w2 = am.witness.expect("failed report carries a witness");
    PredicateReport::with(
        "rdam",
        Verdict::Fails,
        Witness {
            from: w1.from,
            to: w1.to,
            observed: format!("{}; {}", w1.observed, w2.observed),
            expected: "RDV1 or AM".into(),
        },
    )
}

pub fn check_sm(trace: &Trace) -> Result<PredicateReport, ProblemError> {
    if initial_dist2(trace).is_zero() {
        return Err(ProblemError::CoincidentStart);
    }
    let fin = trace.final_positions();
    for r in RobotId::BOTH {
        let segs: Vec<_> = trace.segments(r).into_iter().filter(|s| !s.is_trivial()).collect();
        match segs.len() {
            0 => {
                return Ok(PredicateReport::with(
                    "sm",
                    Verdict::Fails,
                    instant(trace.horizon(), format!("robot {r} never moved"), "exactly one move"),
                ))
            }
            1 => {}
            _ => {
                let t = &segs[1].cycle.t_begin;
                return Ok(PredicateReport::with(
                    "sm",
                    Verdict::Fails,
                    instant(t, format!("robot {r} starts a second move"), "exactly one move"),
                ));
            }
        }
        if fin[r] == trace.initial.positions[r] {
            return Ok(PredicateReport::with(
                "sm",
                Verdict::Fails,
                instant(trace.horizon(), format!("robot {r} back at its start"), "a different location"),
            ));
        }
    }
    Ok(PredicateReport::holds("sm"))
}

/// Checks that the distance never increases and eventually falls within
/// `eps` times the initial distance.
///
/// Between consecutive motion breakpoints both robots move linearly, so the
/// squared distance is a quadratic `q` in time. It is non-increasing on the
/// piece iff `q' <= 0` at both ends.
pub fn check_mcv(trace: &Trace, eps: &Rational) -> Result<PredicateReport, ProblemError> {
    if !eps.is_positive() {
        return Err(ProblemError::NonPositiveEpsilon);
    }
    let mut breaks: Vec<Rational> = vec![Rational::zero(), trace.horizon().clone()];
    for r in RobotId::BOTH {
        for s in trace.segments(r) {
            if !s.is_trivial() {
                breaks.extend(s.cycle.profile_breaks());
            }
        }
    }
    breaks.sort();
    breaks.dedup();
    for w in breaks.windows(2) {
        let (t0, t1) = (&w[0], &w[1]);
        let p0 = trace.positions_at(t0).expect("breakpoints lie within the horizon");
        let p1 = trace.positions_at(t1).expect("breakpoints lie within the horizon");
        let v0 = &p0.b - &p0.a;
        let v1 = &p1.b - &p1.a;
        let dv = &v1 - &v0;
        if dv.is_origin() {
            continue;
        }
        // q'(t) has the sign of v(t) . dv
        let s0 = v0.dot(&dv);
        let s1 = v1.dot(&dv);
        if !s0.is_positive() && !s1.is_positive() {
            continue;
        }
        // Increase starts at the minimiser of q on the piece.
        let start = if s0.is_positive() {
            t0.clone()
        } else {
            let frac = -&s0 / dv.norm2();
            t0 + &(frac * (t1 - t0))
        };
        let q_start = trace
            .positions_at(&start)
            .map(|p| p.a.dist2(&p.b))
            .expect("within horizon");
        return Ok(PredicateReport::with(
            "mcv",
            Verdict::Fails,
            Witness {
                from: start,
                to: t1.clone(),
                observed: format!("squared distance rises from {q_start} to {}", v1.norm2()),
                expected: "non-increasing distance".into(),
            },
        ));
    }
    let fin = trace.final_positions();
    let d2 = fin.a.dist2(&fin.b);
    let bound = eps * eps * initial_dist2(trace);
    if d2 <= bound {
        Ok(PredicateReport::holds("mcv"))
    } else {
        Ok(PredicateReport::with(
            "mcv",
            Verdict::Undecided,
            instant(
                trace.horizon(),
                format!("final squared distance {d2}"),
                &format!("at most {bound}"),
            ),
        ))
    }
}

fn same_pair(p: (&Point, &Point), q: (&Point, &Point)) -> bool {
    (p.0 == q.0 && p.1 == q.1) || (p.0 == q.1 && p.1 == q.0)
}

/// Which of the two step shapes a transition between stop configurations has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SroStep {
    Rotation,
    Shrink,
}

pub fn classify_sro_step(from: &PerRobot<Point>, to: &PerRobot<Point>) -> Option<SroStep> {
    let m = midpoint(&from.a, &from.b);
    let rot = (rot90cw(&from.a, &m), rot90cw(&from.b, &m));
    if same_pair((&to.a, &to.b), (&rot.0, &rot.1)) {
        return Some(SroStep::Rotation);
    }
    for (pivot, other) in [(&from.a, &from.b), (&from.b, &from.a)] {
        let img = shrink_rot45cw(other, pivot);
        if same_pair((&to.a, &to.b), (pivot, &img)) {
            return Some(SroStep::Shrink);
        }
    }
    None
}

pub fn check_sro(trace: &Trace) -> Result<PredicateReport, ProblemError> {
    if initial_dist2(trace).is_zero() {
        return Err(ProblemError::CoincidentStart);
    }
    let stops = trace.stop_configurations();
    for i in 0..stops.len().saturating_sub(1) {
        let (iv, cur) = &stops[i];
        let next = &stops[i + 1].1;
        let step = classify_sro_step(cur, next);
        if step.is_none() {
            return Ok(PredicateReport::with(
                "sro",
                Verdict::Fails,
                Witness {
                    from: iv.end.clone(),
                    to: stops[i + 1].0.start.clone(),
                    observed: format!("{} {} -> {} {}", cur.a, cur.b, next.a, next.b),
                    expected: "quarter rotation about the midpoint or shrink about an endpoint".into(),
                },
            ));
        }
        if step == Some(SroStep::Shrink) && next.a.dist2(&next.b) * Rational::from_int(2) != cur.a.dist2(&cur.b) {
            return Ok(PredicateReport::with(
                "sro",
                Verdict::Fails,
                instant(&stops[i + 1].0.start, "squared length not halved".into(), "exact halving"),
            ));
        }
        if i >= 1 {
            let prev = &stops[i - 1].1;
            for p in [&next.a, &next.b] {
                if !in_square(p, &prev.a, &prev.b) {
                    return Ok(PredicateReport::with(
                        "sro",
                        Verdict::Fails,
                        instant(
                            &stops[i + 1].0.start,
                            format!("{p} outside the square on {} {}", prev.a, prev.b),
                            "new endpoints inside the square two steps back",
                        ),
                    ));
                }
            }
        }
    }
    Ok(PredicateReport::holds("sro"))
}

/// Checks `steps` expansion steps away from the initial center of gravity.
pub fn check_cge(trace: &Trace, steps: usize) -> Result<PredicateReport, ProblemError> {
    if !trace.grid_granted {
        return Err(ProblemError::NoGrid);
    }
    if steps == 0 {
        return Err(ProblemError::ZeroSteps);
    }
    let init = &trace.initial.positions;
    let c = midpoint(&init.a, &init.b);
    let mut expected = vec![init.clone()];
    while expected.len() <= steps {
        let last = expected.last().unwrap();
        let next = PerRobot::new(cge_step(&last.a, &c), cge_step(&last.b, &c));
        if next == *last {
            break;
        }
        expected.push(next);
    }
    let stops = trace.stop_configurations();
    for (i, want) in expected.iter().enumerate() {
        match stops.get(i) {
            Some((_, got)) if got == want => {}
            Some((iv, got)) => {
                return Ok(PredicateReport::with(
                    "cge",
                    Verdict::Fails,
                    Witness {
                        from: iv.start.clone(),
                        to: iv.end.clone(),
                        observed: format!("{} {}", got.a, got.b),
                        expected: format!("{} {}", want.a, want.b),
                    },
                ))
            }
            None => {
                return Ok(PredicateReport::with(
                    "cge",
                    Verdict::Undecided,
                    instant(
                        trace.horizon(),
                        format!("only {} stop configurations", stops.len()),
                        &format!("{} expansion steps", steps),
                    ),
                ))
            }
        }
    }
    Ok(PredicateReport::holds("cge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, Configuration};
    use crate::model::{Algorithm, ColorWrite, Decision, RobotModel, Snapshot};
    use crate::sched::{gen_fsynch, gen_rsynch, Schedule};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[derive(Debug)]
    struct Toward(Rational);
    impl Algorithm for Toward {
        fn id(&self) -> String {
            "toward".into()
        }
        fn palette(&self) -> u32 {
            1
        }
        fn model(&self) -> RobotModel {
            RobotModel::Oblot
        }
        fn decide(&self, s: &Snapshot) -> Decision {
            Decision::local(s.peer_offset.scale(&self.0), ColorWrite::Keep)
        }
    }

    /// Moves by a fixed local vector, so distances may grow.
    #[derive(Debug)]
    struct Fixed(Point);
    impl Algorithm for Fixed {
        fn id(&self) -> String {
            "fixed".into()
        }
        fn palette(&self) -> u32 {
            1
        }
        fn model(&self) -> RobotModel {
            RobotModel::Oblot
        }
        fn decide(&self, _: &Snapshot) -> Decision {
            Decision::local(self.0.clone(), ColorWrite::Keep)
        }
    }

    fn go(alg: &dyn Algorithm, s: &Schedule, a: Point, b: Point) -> Trace {
        run(alg, RobotModel::Oblot, s, &Configuration::initial(alg, a, b), false).unwrap()
    }

    #[test]
    fn dmsd_midpoint_and_rendezvous() {
        let mid = Toward(r(1, 2));
        let t = go(&mid, &gen_rsynch(0, 2, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(check_dmsd(&t).unwrap().holds_p());
        let t = go(&mid, &gen_fsynch(1).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(check_dmsd(&t).unwrap().holds_p());
    }

    #[test]
    fn dmsd_rejects_non_dyadic() {
        let third = Toward(r(1, 3));
        let t = go(&third, &gen_rsynch(0, 2, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        let rep = check_dmsd(&t).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert!(rep.witness.unwrap().observed.contains("2/3"));
        let zero = go(&third, &gen_fsynch(1).unwrap(), Point::ints(0, 0), Point::ints(0, 0));
        assert_eq!(check_dmsd(&zero), Err(ProblemError::ZeroInitialDistance));
    }

    #[test]
    fn rdv1_am_rdam() {
        let mid = Toward(r(1, 2));
        let stay = Fixed(Point::origin());
        let fs = go(&mid, &gen_fsynch(1).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(check_rdv1(&fs).holds_p());
        assert!(!check_am(&fs).holds_p());
        assert!(check_rdam(&fs).holds_p());

        let idle = go(&stay, &gen_fsynch(2).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(!check_rdv1(&idle).holds_p());
        assert!(!check_rdam(&idle).holds_p());

        // A moves twice, B once.
        let alt = go(&mid, &gen_rsynch(0, 3, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert_eq!(alt.moves_count(RobotId::A), 2);
        assert!(check_am(&alt).holds_p());
        assert!(!check_rdv1(&alt).holds_p());
        let both_twice = go(&mid, &gen_rsynch(0, 4, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(!check_am(&both_twice).holds_p());
    }

    #[test]
    fn sm_cases() {
        let hop = Toward(r(1, 2));
        let once = go(&hop, &gen_rsynch(0, 2, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(check_sm(&once).unwrap().holds_p());
        let none = go(&Fixed(Point::origin()), &gen_fsynch(1).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert_eq!(check_sm(&none).unwrap().verdict, Verdict::Fails);
        let twice = go(&hop, &gen_rsynch(0, 3, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        let rep = check_sm(&twice).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert_eq!(rep.witness.unwrap().from, r(7, 2));
    }

    #[test]
    fn mcv_cases() {
        let mid = Toward(r(1, 2));
        let t = go(&mid, &gen_rsynch(0, 12, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert!(check_mcv(&t, &r(1, 100)).unwrap().holds_p());
        let stay = go(&Fixed(Point::origin()), &gen_fsynch(3).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        assert_eq!(check_mcv(&stay, &r(1, 2)).unwrap().verdict, Verdict::Undecided);
        let away = go(&Fixed(Point::ints(0, -1)), &gen_rsynch(0, 2, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(1, 0));
        let rep = check_mcv(&away, &r(1, 2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert_eq!(rep.witness.unwrap().from, r(3, 2));
    }

    #[test]
    fn mcv_detects_rise_inside_a_piece() {
        // A passes B sideways: distance shrinks, then grows within one move.
        let side = Fixed(Point::new(r(2, 1), Rational::one()));
        let t = go(&side, &gen_rsynch(0, 2, RobotId::A).unwrap(), Point::ints(0, 0), Point::ints(0, 1));
        let rep = check_mcv(&t, &r(1, 2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        let w = rep.witness.unwrap();
        assert!(w.from > r(3, 2) && w.from < r(7, 4));
    }

    #[test]
    fn sro_step_shapes() {
        let a = Point::ints(0, 0);
        let b = Point::ints(2, 0);
        let rot = PerRobot::new(Point::ints(1, 1), Point::ints(1, -1));
        assert_eq!(classify_sro_step(&PerRobot::new(a.clone(), b.clone()), &rot), Some(SroStep::Rotation));
        let shrink = PerRobot::new(shrink_rot45cw(&a, &b), b.clone());
        assert_eq!(classify_sro_step(&PerRobot::new(a.clone(), b.clone()), &shrink), Some(SroStep::Shrink));
        let shift = PerRobot::new(Point::ints(1, 0), Point::ints(3, 0));
        assert_eq!(classify_sro_step(&PerRobot::new(a, b), &shift), None);
    }

    #[test]
    fn sro_translation_fails() {
        let t = go(&Fixed(Point::ints(1, 0)), &gen_fsynch(1).unwrap(), Point::ints(0, 0), Point::ints(0, 2));
        assert_eq!(check_sro(&t).unwrap().verdict, Verdict::Fails);
    }
}
