use proptest::prelude::*;

use lcm_duo::engine::{run, Configuration};
use lcm_duo::exactgeom::{Point, Rational};
use lcm_duo::model::{RobotId, RobotModel};
use lcm_duo::problems::{check_dmsd, check_sro, Verdict};
use lcm_duo::protocols::{GoToMidpoint, SroOblot};
use lcm_duo::sched::{check_fairness, gen_asynch, gen_rsynch, gen_ssynch, validate_atomicity, Atomicity};
use lcm_duo::traceio::{parse_trace, trace_to_string};

fn distinct_points() -> impl Strategy<Value = (Point, Point)> {
    (-20i64..=20, -20i64..=20, -20i64..=20, -20i64..=20)
        .prop_filter("distinct", |(a, b, c, d)| (a, b) != (c, d))
        .prop_map(|(a, b, c, d)| (Point::ints(a, b), Point::ints(c, d)))
}

fn class() -> impl Strategy<Value = Atomicity> {
    prop_oneof![Just(Atomicity::None), Just(Atomicity::Lc), Just(Atomicity::Cm), Just(Atomicity::Lcm)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rational_text_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
        let r = Rational::new(n, d);
        let back: Rational = r.to_string().parse().unwrap();
        prop_assert_eq!(&back, &r);
        let json = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rational>(&json).unwrap(), r);
    }

    #[test]
    fn asynch_generator_meets_its_class(seed in any::<u64>(), cycles in 1u32..8, class in class()) {
        let s = gen_asynch(seed, cycles, class).unwrap();
        prop_assert!(s.validate().is_ok());
        prop_assert!(check_fairness(&s));
        let rep = validate_atomicity(&s, class);
        prop_assert!(rep.ok, "{:?}", rep.violations);
    }

    #[test]
    fn ssynch_is_lcm_atomic(seed in any::<u64>(), rounds in 1u32..12, window in 1u32..4) {
        let s = gen_ssynch(seed, rounds, window).unwrap();
        prop_assert!(check_fairness(&s));
        prop_assert!(validate_atomicity(&s, Atomicity::Lcm).ok);
    }

    #[test]
    fn midpoint_under_cm_never_grows_apart((a, b) in distinct_points(), seed in any::<u64>()) {
        let s = gen_asynch(seed, 5, Atomicity::Cm).unwrap();
        let init = Configuration::initial(&GoToMidpoint, a, b);
        let t = run(&GoToMidpoint, RobotModel::Oblot, &s, &init, false).unwrap();
        let stops = t.stop_configurations();
        for w in stops.windows(2) {
            prop_assert!(w[1].1.a.dist2(&w[1].1.b) <= w[0].1.a.dist2(&w[0].1.b));
        }
        prop_assert_eq!(check_dmsd(&t).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn traces_round_trip(seed in any::<u64>(), (a, b) in distinct_points()) {
        let mut s = gen_asynch(seed, 4, Atomicity::None).unwrap();
        s.randomize_frames(seed);
        let init = Configuration::initial(&GoToMidpoint, a, b);
        let t = run(&GoToMidpoint, RobotModel::Oblot, &s, &init, false).unwrap();
        let text = trace_to_string(&t, None);
        let (back, _) = parse_trace(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(trace_to_string(&back, None), text);
    }

    #[test]
    fn sro_shrinks_under_rsynch(
        (a, b) in distinct_points(),
        prefix in 0u32..4,
        turns in 4u32..16,
        b_first in any::<bool>(),
    ) {
        let first = if b_first { RobotId::B } else { RobotId::A };
        let s = gen_rsynch(prefix, turns, first).unwrap();
        let init = Configuration::initial(&SroOblot, a, b);
        let t = run(&SroOblot, RobotModel::Oblot, &s, &init, false).unwrap();
        let rep = check_sro(&t).unwrap();
        prop_assert_eq!(rep.verdict, Verdict::Holds, "{:?}", rep.witness);
    }
}
