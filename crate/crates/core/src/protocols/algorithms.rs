use crate::exactgeom::{cge_step, midpoint, Point, Rational};
use crate::model::{Algorithm, Color, ColorWrite, Decision, Destination, RobotModel, Snapshot};

pub const INIT: Color = Color(0);
pub const ANCHOR: Color = Color(1);
pub const DONE: Color = Color(1);

fn toward(s: &Snapshot, frac: &Rational) -> Point {
    s.peer_offset.scale(frac)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StayPut;

impl Algorithm for StayPut {
    fn id(&self) -> String {
        "alg.stay".into()
    }
    fn palette(&self) -> u32 {
        1
    }
    fn model(&self) -> RobotModel {
        RobotModel::Oblot
    }
    fn decide(&self, _: &Snapshot) -> Decision {
        Decision::stay()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GoToMidpoint;

impl Algorithm for GoToMidpoint {
    fn id(&self) -> String {
        "alg.midpoint".into()
    }
    fn palette(&self) -> u32 {
        1
    }
    fn model(&self) -> RobotModel {
        RobotModel::Oblot
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        Decision::local(midpoint(&Point::origin(), &s.peer_offset), ColorWrite::Keep)
    }
    fn similarity_lambda(&self) -> Option<Rational> {
        Some(Rational::half())
    }
}

/// Moves the fraction `lambda` of the way to the peer.
#[derive(Debug, Clone)]
pub struct LambdaStep {
    pub lambda: Rational,
}

impl Algorithm for LambdaStep {
    fn id(&self) -> String {
        format!("alg.lambda(lambda={})", self.lambda)
    }
    fn palette(&self) -> u32 {
        1
    }
    fn model(&self) -> RobotModel {
        RobotModel::Oblot
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        Decision::local(toward(s, &self.lambda), ColorWrite::Keep)
    }
    fn similarity_lambda(&self) -> Option<Rational> {
        Some(self.lambda.clone())
    }
}

/// Lights `INIT` and `ANCHOR`. A robot that sees an `INIT` peer anchors and
/// heads for the midpoint; otherwise it does nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnchorMidpoint;

impl Algorithm for AnchorMidpoint {
    fn id(&self) -> String {
        "alg.anchor".into()
    }
    fn palette(&self) -> u32 {
        2
    }
    fn model(&self) -> RobotModel {
        RobotModel::Fcom
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        if s.peer_color == Some(INIT) {
            Decision::local(midpoint(&Point::origin(), &s.peer_offset), ColorWrite::Set(ANCHOR))
        } else {
            Decision::stay()
        }
    }
}

/// Lights `INIT` and `DONE`: hop once toward the peer, then never again.
#[derive(Debug, Clone)]
pub struct SingleMoveFsta {
    pub hop: Rational,
}

impl Default for SingleMoveFsta {
    fn default() -> Self {
        SingleMoveFsta { hop: Rational::half() }
    }
}

impl Algorithm for SingleMoveFsta {
    fn id(&self) -> String {
        format!("alg.single_move(hop={})", self.hop)
    }
    fn palette(&self) -> u32 {
        2
    }
    fn model(&self) -> RobotModel {
        RobotModel::Fsta
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        if s.own_color == Some(INIT) {
            Decision::local(Point::new(Rational::zero(), self.hop.clone()), ColorWrite::Set(DONE))
        } else {
            Decision::stay()
        }
    }
}

/// Moves to `peer + S(own - peer)` where `S` is the clockwise 45-degree
/// shrink. Alone this pivots the segment about the peer; when both robots
/// fire together the pair turns a quarter about the midpoint.
#[derive(Debug, Clone, Copy, Default)]
pub struct SroOblot;

impl Algorithm for SroOblot {
    fn id(&self) -> String {
        "alg.sro".into()
    }
    fn palette(&self) -> u32 {
        1
    }
    fn model(&self) -> RobotModel {
        RobotModel::Oblot
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        if s.coincident() {
            return Decision::stay();
        }
        // peer L = (0, y); own - peer = (0, -y); S(0, -y) = (-y/2, -y/2)
        let y = &s.peer_offset.y;
        let half = y * &Rational::half();
        Decision::local(Point::new(-&half, half), ColorWrite::Keep)
    }
}

/// Expands away from the pair's center of gravity on the integer grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct CgeFsynch;

impl Algorithm for CgeFsynch {
    fn id(&self) -> String {
        "alg.cge".into()
    }
    fn palette(&self) -> u32 {
        1
    }
    fn model(&self) -> RobotModel {
        RobotModel::Oblot
    }
    fn needs_grid(&self) -> bool {
        true
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        match &s.grid {
            Some(g) => Decision {
                destination: Destination::Global(cge_step(&g.own, &midpoint(&g.own, &g.peer))),
                color: ColorWrite::Keep,
            },
            None => Decision::stay(),
        }
    }
}

/// Three lights passed around like a token. With `d = peer - own (mod 3)`:
/// `d = 0` bumps the own light and hops a quarter of the way; `d = 1` copies
/// the peer's light and hops; `d = 2` waits.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenPass;

impl Algorithm for TokenPass {
    fn id(&self) -> String {
        "alg.token".into()
    }
    fn palette(&self) -> u32 {
        3
    }
    fn model(&self) -> RobotModel {
        RobotModel::Lumi
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        let own = s.own_color.unwrap_or(Color(0)).0 % 3;
        let peer = s.peer_color.unwrap_or(Color(0)).0 % 3;
        let quarter = Rational::new(1, 4);
        match (peer + 3 - own) % 3 {
            0 => Decision::local(toward(s, &quarter), ColorWrite::Set(Color((own + 1) % 3))),
            1 => Decision::local(toward(s, &quarter), ColorWrite::Set(Color(peer))),
            _ => Decision::stay(),
        }
    }
}
