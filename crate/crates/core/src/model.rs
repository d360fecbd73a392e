//! Robot models, lights, snapshots and the algorithm interface.
//!
//! A robot never sees global coordinates. Its snapshot places itself at the
//! origin and the peer on the positive local y-axis; the local x-axis is the
//! y-axis turned a quarter clockwise, so chirality is shared by both robots.
//! Destinations come back in that same local frame and are mapped to the
//! plane with [`local_to_global`].

use std::fmt;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exactgeom::{Point, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotId {
    A,
    B,
}

impl RobotId {
    pub const BOTH: [RobotId; 2] = [RobotId::A, RobotId::B];

    pub fn peer(self) -> RobotId {
        match self {
            RobotId::A => RobotId::B,
            RobotId::B => RobotId::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            RobotId::A => 0,
            RobotId::B => 1,
        }
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobotId::A => f.write_str("A"),
            RobotId::B => f.write_str("B"),
        }
    }
}

/// One value per robot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PerRobot<T> {
    pub a: T,
    pub b: T,
}

impl<T> PerRobot<T> {
    pub fn new(a: T, b: T) -> Self {
        PerRobot { a, b }
    }

    pub fn map<U>(&self, mut f: impl FnMut(RobotId, &T) -> U) -> PerRobot<U> {
        PerRobot {
            a: f(RobotId::A, &self.a),
            b: f(RobotId::B, &self.b),
        }
    }
}

impl<T: Clone> PerRobot<T> {
    pub fn splat(v: T) -> Self {
        PerRobot { a: v.clone(), b: v }
    }
}

impl<T> Index<RobotId> for PerRobot<T> {
    type Output = T;
    fn index(&self, r: RobotId) -> &T {
        match r {
            RobotId::A => &self.a,
            RobotId::B => &self.b,
        }
    }
}

impl<T> IndexMut<RobotId> for PerRobot<T> {
    fn index_mut(&mut self, r: RobotId) -> &mut T {
        match r {
            RobotId::A => &mut self.a,
            RobotId::B => &mut self.b,
        }
    }
}

/// Index into an algorithm's palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Color(pub u32);

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RobotModel {
    Oblot,
    Fsta,
    Fcom,
    Lumi,
}

impl RobotModel {
    pub fn sees_own_color(self) -> bool {
        matches!(self, RobotModel::Fsta | RobotModel::Lumi)
    }

    pub fn sees_peer_color(self) -> bool {
        matches!(self, RobotModel::Fcom | RobotModel::Lumi)
    }
}

impl fmt::Display for RobotModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotModel::Oblot => "OBLOT",
            RobotModel::Fsta => "FSTA",
            RobotModel::Fcom => "FCOM",
            RobotModel::Lumi => "LUMI",
        })
    }
}

impl std::str::FromStr for RobotModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "OBLOT" => Ok(RobotModel::Oblot),
            "FSTA" => Ok(RobotModel::Fsta),
            "FCOM" => Ok(RobotModel::Fcom),
            "LUMI" => Ok(RobotModel::Lumi),
            other => Err(format!("unknown robot model {other:?}")),
        }
    }
}

/// How the adversary scales the observer's local frame for one Look.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameChoice {
    /// The peer always appears at `(0, 1)`.
    #[default]
    Unit,
    /// The peer appears at `(0, s * |offset|)`. When `|offset|` is irrational
    /// the frame's unit absorbs it and the peer appears at `(0, s)`.
    Scaled(Rational),
}

/// Global coordinates handed to algorithms that were granted a shared grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridView {
    pub own: Point,
    pub peer: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub peer_offset: Point,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub own_color: Option<Color>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub peer_color: Option<Color>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridView>,
}

impl Snapshot {
    pub fn coincident(&self) -> bool {
        self.peer_offset.is_origin()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Local(Point),
    /// Only honoured when the scenario grants a shared grid.
    Global(Point),
}

/// How a Compute rewrites the robot's own light.
///
/// FCOM robots cannot read their own light, yet their lights persist, so a
/// composite light may be rewritten field by field. `Remap` expresses that as
/// a table from the old light to the new one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColorWrite {
    Keep,
    Set(Color),
    Remap(Arc<[Color]>),
}

impl ColorWrite {
    pub fn apply(&self, old: Color) -> Color {
        match self {
            ColorWrite::Keep => old,
            ColorWrite::Set(c) => *c,
            ColorWrite::Remap(table) => table.get(old.0 as usize).copied().unwrap_or(old),
        }
    }

    pub fn remap(palette: u32, f: impl Fn(Color) -> Color) -> ColorWrite {
        ColorWrite::Remap((0..palette).map(|i| f(Color(i))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub destination: Destination,
    pub color: ColorWrite,
}

impl Decision {
    pub fn stay() -> Self {
        Decision {
            destination: Destination::Local(Point::origin()),
            color: ColorWrite::Keep,
        }
    }

    pub fn local(dest: Point, color: ColorWrite) -> Self {
        Decision {
            destination: Destination::Local(dest),
            color,
        }
    }

    pub fn with_color(mut self, color: ColorWrite) -> Self {
        self.color = color;
        self
    }
}

/// A deterministic decision rule shared by both robots.
pub trait Algorithm: Send + Sync + fmt::Debug {
    /// Registry id, including parameters where they matter.
    fn id(&self) -> String;

    /// Number of distinct lights `k`.
    fn palette(&self) -> u32;

    fn initial_color(&self) -> Color {
        Color(0)
    }

    /// The weakest model the rule is written for.
    fn model(&self) -> RobotModel;

    fn decide(&self, snapshot: &Snapshot) -> Decision;

    /// Whether the rule reads global coordinates from a shared grid.
    fn needs_grid(&self) -> bool {
        false
    }

    /// For rules that move a fixed fraction `lambda` toward a stopped peer.
    fn similarity_lambda(&self) -> Option<Rational> {
        None
    }
}

pub type AlgorithmRef = Arc<dyn Algorithm>;

/// Where the observer sees its peer, given the true global offset.
pub fn canonical_observation(offset: &Point, frame: &FrameChoice) -> Point {
    if offset.is_origin() {
        return Point::origin();
    }
    let y = match frame {
        FrameChoice::Unit => Rational::one(),
        FrameChoice::Scaled(s) => match offset.norm2().sqrt_exact() {
            Some(d) => s * d,
            None => s.clone(),
        },
    };
    Point::new(Rational::zero(), y)
}

pub fn build_snapshot(
    positions: &PerRobot<Point>,
    colors: &PerRobot<Color>,
    observer: RobotId,
    model: RobotModel,
    frame: &FrameChoice,
    grid_granted: bool,
) -> Snapshot {
    let own = &positions[observer];
    let peer = &positions[observer.peer()];
    Snapshot {
        peer_offset: canonical_observation(&(peer - own), frame),
        own_color: model.sees_own_color().then(|| colors[observer]),
        peer_color: model.sees_peer_color().then(|| colors[observer.peer()]),
        grid: grid_granted.then(|| GridView {
            own: own.clone(),
            peer: peer.clone(),
        }),
    }
}

/// Maps a local destination back to the plane.
///
/// The local frame is fixed by one correspondence: `observed_peer` (local)
/// is `true_peer_offset` (global). A local vector is split into components
/// along the observed peer direction and its clockwise normal; the same
/// coefficients applied to the global pair give the global vector. Every
/// step is rational. Coincident robots carry no direction, so any local
/// destination collapses to staying put.
pub fn local_to_global(
    dest_local: &Point,
    observed_peer: &Point,
    own_global: &Point,
    true_peer_offset: &Point,
) -> Point {
    let e2 = observed_peer.norm2();
    if e2.is_zero() || true_peer_offset.is_origin() {
        return own_global.clone();
    }
    let along = dest_local.dot(observed_peer) / &e2;
    let across = dest_local.dot(&observed_peer.perp_cw()) / &e2;
    own_global + &(&true_peer_offset.scale(&along) + &true_peer_offset.perp_cw().scale(&across))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactgeom::midpoint;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn canonical_observation_examples() {
        let obs = canonical_observation(&Point::ints(3, 4), &FrameChoice::Scaled(r(1, 5)));
        assert_eq!(obs, Point::ints(0, 1));
        let d = r(7, 3);
        let obs = canonical_observation(
            &Point::new(Rational::zero(), d.clone()),
            &FrameChoice::Scaled(Rational::one()),
        );
        assert_eq!(obs, Point::new(Rational::zero(), d));
        for frame in [FrameChoice::Unit, FrameChoice::Scaled(r(9, 2))] {
            assert_eq!(canonical_observation(&Point::origin(), &frame), Point::origin());
        }
        // Irrational distance: the frame unit absorbs it.
        let obs = canonical_observation(&Point::ints(1, 1), &FrameChoice::Scaled(r(2, 1)));
        assert_eq!(obs, Point::ints(0, 2));
    }

    #[test]
    fn snapshot_visibility_per_model() {
        let pos = PerRobot::new(Point::ints(0, 0), Point::ints(1, 0));
        let col = PerRobot::new(Color(1), Color(2));
        let snap = |m| build_snapshot(&pos, &col, RobotId::A, m, &FrameChoice::Unit, false);

        let s = snap(RobotModel::Lumi);
        assert_eq!((s.own_color, s.peer_color), (Some(Color(1)), Some(Color(2))));
        let s = snap(RobotModel::Fsta);
        assert_eq!((s.own_color, s.peer_color), (Some(Color(1)), None));
        let s = snap(RobotModel::Fcom);
        assert_eq!((s.own_color, s.peer_color), (None, Some(Color(2))));
        let s = snap(RobotModel::Oblot);
        assert_eq!((s.own_color, s.peer_color), (None, None));
        assert!(s.grid.is_none());
    }

    #[test]
    fn grid_oracle_only_when_granted() {
        let pos = PerRobot::new(Point::ints(2, 3), Point::ints(5, 7));
        let col = PerRobot::splat(Color(0));
        let s = build_snapshot(&pos, &col, RobotId::B, RobotModel::Oblot, &FrameChoice::Unit, true);
        let g = s.grid.unwrap();
        assert_eq!(g.own, Point::ints(5, 7));
        assert_eq!(g.peer, Point::ints(2, 3));
    }

    #[test]
    fn coincident_robots_hide_multiplicity() {
        let pos = PerRobot::splat(Point::ints(4, 4));
        let col = PerRobot::splat(Color(0));
        let sa = build_snapshot(&pos, &col, RobotId::A, RobotModel::Lumi, &FrameChoice::Unit, false);
        let sb = build_snapshot(&pos, &col, RobotId::B, RobotModel::Lumi, &FrameChoice::Unit, false);
        assert_eq!(sa, sb);
        assert!(sa.coincident());
    }

    #[test]
    fn local_to_global_examples() {
        let d = r(5, 2);
        let own = Point::ints(0, 0);
        let peer = Point::new(Rational::zero(), d.clone());
        let observed = canonical_observation(&peer, &FrameChoice::Scaled(Rational::one()));
        let dest = Point::new(Rational::zero(), &d / Rational::from_int(2));
        assert_eq!(
            local_to_global(&dest, &observed, &own, &peer),
            Point::new(Rational::zero(), r(5, 4))
        );
        assert_eq!(local_to_global(&Point::origin(), &observed, &own, &peer), own);
    }

    #[test]
    fn local_x_axis_is_clockwise_of_peer() {
        // Peer to the east; local +x must point south.
        let own = Point::ints(0, 0);
        let off = Point::ints(2, 0);
        let g = local_to_global(&Point::ints(1, 0), &Point::ints(0, 1), &own, &off);
        assert_eq!(g, Point::ints(0, -2));
    }

    #[test]
    fn midpoint_is_frame_invariant() {
        let own = Point::new(r(-3, 2), r(1, 3));
        let peer = Point::new(r(7, 4), r(-2, 1));
        let off = &peer - &own;
        let expected = midpoint(&own, &peer);
        for frame in [FrameChoice::Unit, FrameChoice::Scaled(r(3, 7)), FrameChoice::Scaled(r(11, 1))] {
            let obs = canonical_observation(&off, &frame);
            let local = obs.scale(&Rational::half());
            assert_eq!(local_to_global(&local, &obs, &own, &off), expected);
        }
    }

    #[test]
    fn color_write_semantics() {
        assert_eq!(ColorWrite::Keep.apply(Color(3)), Color(3));
        assert_eq!(ColorWrite::Set(Color(1)).apply(Color(3)), Color(1));
        let w = ColorWrite::remap(4, |c| Color((c.0 + 1) % 4));
        assert_eq!(w.apply(Color(3)), Color(0));
    }
}
