use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Algorithm, AlgorithmRef, Color, ColorWrite, Decision, RobotModel, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Exc,
    Cpy,
    Rst,
}

impl Phase {
    const ALL: [Phase; 3] = [Phase::Exc, Phase::Cpy, Phase::Rst];

    fn index(self) -> u32 {
        self as u32
    }

    fn from_index(i: u32) -> Phase {
        Phase::ALL[i as usize % 3]
    }

    /// Successor in the handshake cycle `cpy -> rst -> exc -> cpy`.
    pub fn next(self) -> Phase {
        match self {
            Phase::Cpy => Phase::Rst,
            Phase::Rst => Phase::Exc,
            Phase::Exc => Phase::Cpy,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Exc => "exc",
            Phase::Cpy => "cpy",
            Phase::Rst => "rst",
        })
    }
}

/// Replaces the unseen light field with the visible one. Under fully
/// synchronous activation both robots always carry the same light.
#[derive(Debug, Clone)]
pub struct FsynchCollapse {
    inner: AlgorithmRef,
    target: RobotModel,
}

impl FsynchCollapse {
    /// `target` must be FSTA or FCOM.
    pub fn new(inner: AlgorithmRef, target: RobotModel) -> Result<Self, String> {
        match target {
            RobotModel::Fsta | RobotModel::Fcom => Ok(FsynchCollapse { inner, target }),
            other => Err(format!("collapse target must be FSTA or FCOM, got {other:?}")),
        }
    }

    pub fn inner(&self) -> &AlgorithmRef {
        &self.inner
    }
}

impl Algorithm for FsynchCollapse {
    fn id(&self) -> String {
        format!("sim.collapse({},{})", self.inner.id(), self.target)
    }
    fn palette(&self) -> u32 {
        self.inner.palette()
    }
    fn initial_color(&self) -> Color {
        self.inner.initial_color()
    }
    fn model(&self) -> RobotModel {
        self.target
    }
    fn needs_grid(&self) -> bool {
        self.inner.needs_grid()
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        let mut view = s.clone();
        match self.target {
            RobotModel::Fsta => view.peer_color = s.own_color,
            _ => view.own_color = s.peer_color,
        }
        self.inner.decide(&view)
    }
}

/// Composite light of the handshake simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HandshakeColor {
    pub my: Color,
    pub your: Color,
    pub phase: Phase,
}

impl HandshakeColor {
    pub fn encode(&self, k: u32) -> Color {
        Color((self.phase.index() * k + self.your.0) * k + self.my.0)
    }

    pub fn decode(c: Color, k: u32) -> Option<HandshakeColor> {
        if c.0 >= 3 * k * k {
            return None;
        }
        Some(HandshakeColor {
            my: Color(c.0 % k),
            your: Color((c.0 / k) % k),
            phase: Phase::from_index(c.0 / (k * k)),
        })
    }
}

impl fmt::Display for HandshakeColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.my, self.your, self.phase)
    }
}

/// Runs a LUMI algorithm on FCOM robots under round-robin activation. Each
/// robot publishes `(my, your, phase)` where `your` echoes the peer's light,
/// so a deciding robot reads its own light back from the peer.
#[derive(Debug, Clone)]
pub struct RsynchHandshake {
    inner: AlgorithmRef,
}

impl RsynchHandshake {
    pub fn new(inner: AlgorithmRef) -> Self {
        RsynchHandshake { inner }
    }

    pub fn inner(&self) -> &AlgorithmRef {
        &self.inner
    }

    fn k(&self) -> u32 {
        self.inner.palette()
    }

    pub fn decode(&self, c: Color) -> Option<HandshakeColor> {
        HandshakeColor::decode(c, self.k())
    }

    /// The view handed to the inner algorithm when the peer is in `exc`.
    pub fn inner_view(s: &Snapshot, peer: &HandshakeColor) -> Snapshot {
        Snapshot {
            peer_offset: s.peer_offset.clone(),
            own_color: Some(peer.your),
            peer_color: Some(peer.my),
            grid: s.grid.clone(),
        }
    }

    fn rewrite(&self, f: impl Fn(HandshakeColor) -> HandshakeColor) -> ColorWrite {
        let k = self.k();
        ColorWrite::remap(3 * k * k, |c| match HandshakeColor::decode(c, k) {
            Some(h) => f(h).encode(k),
            None => c,
        })
    }
}

impl Algorithm for RsynchHandshake {
    fn id(&self) -> String {
        format!("sim.handshake({})", self.inner.id())
    }
    fn palette(&self) -> u32 {
        3 * self.k() * self.k()
    }
    fn initial_color(&self) -> Color {
        let c = self.inner.initial_color();
        HandshakeColor {
            my: c,
            your: c,
            phase: Phase::Cpy,
        }
        .encode(self.k())
    }
    fn model(&self) -> RobotModel {
        RobotModel::Fcom
    }
    fn needs_grid(&self) -> bool {
        self.inner.needs_grid()
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        let Some(peer) = s.peer_color.and_then(|c| self.decode(c)) else {
            return Decision::stay();
        };
        match peer.phase {
            Phase::Exc => {
                let d = self.inner.decide(&Self::inner_view(s, &peer));
                let new_my = d.color.apply(peer.your);
                Decision {
                    destination: d.destination,
                    color: self.rewrite(|h| HandshakeColor {
                        my: new_my,
                        phase: Phase::Cpy,
                        ..h
                    }),
                }
            }
            Phase::Cpy => Decision::stay().with_color(self.rewrite(|h| HandshakeColor {
                your: peer.my,
                phase: Phase::Rst,
                ..h
            })),
            // Echo again: after a synchronous decision round the first
            // alternating turn leaves the peer's new light unechoed otherwise.
            Phase::Rst => Decision::stay().with_color(self.rewrite(|h| HandshakeColor {
                your: peer.my,
                phase: Phase::Exc,
                ..h
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flag {
    W,
    M,
}

/// Composite light of SIM(A).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimAColor {
    pub light: Color,
    pub phase: Phase,
    pub my: Flag,
    pub your: Flag,
}

impl SimAColor {
    pub fn encode(&self, k: u32) -> Color {
        let bits = (self.phase.index() * 2 + self.my as u32) * 2 + self.your as u32;
        Color(bits * k + self.light.0)
    }

    pub fn decode(c: Color, k: u32) -> Option<SimAColor> {
        if c.0 >= 12 * k {
            return None;
        }
        let bits = c.0 / k;
        let flag = |b: u32| if b == 0 { Flag::W } else { Flag::M };
        Some(SimAColor {
            light: Color(c.0 % k),
            phase: Phase::from_index(bits / 4),
            my: flag((bits / 2) % 2),
            your: flag(bits % 2),
        })
    }

    /// The light-independent part.
    pub fn pattern(&self) -> (Phase, Flag, Flag) {
        (self.phase, self.my, self.your)
    }
}

impl fmt::Display for SimAColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{:?},{:?})", self.light, self.phase, self.my, self.your)
    }
}

/// Runs an algorithm written for CM-atomic asynchrony on plain asynchronous
/// FCOM robots. `my` flags a robot that has called the inner algorithm in the
/// current cycle; `your` is its copy of the peer's flag.
#[derive(Debug, Clone)]
pub struct SimA {
    inner: AlgorithmRef,
}

/// What one SIM(A) Compute does, keyed on the observed peer light.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimABranch {
    Call,
    Wait,
    Reset,
    /// `cpy` with `(W, W)`: not covered by the case table.
    Unlisted,
}

impl SimA {
    pub fn new(inner: AlgorithmRef) -> Self {
        SimA { inner }
    }

    pub fn inner(&self) -> &AlgorithmRef {
        &self.inner
    }

    fn k(&self) -> u32 {
        self.inner.palette()
    }

    pub fn decode(&self, c: Color) -> Option<SimAColor> {
        SimAColor::decode(c, self.k())
    }

    pub fn branch(peer: &SimAColor) -> SimABranch {
        use Flag::*;
        match (peer.phase, peer.your, peer.my) {
            (Phase::Exc, W, _) => SimABranch::Call,
            (Phase::Cpy, M, M) | (Phase::Rst, _, _) => SimABranch::Reset,
            (Phase::Cpy, W, W) => SimABranch::Unlisted,
            _ => SimABranch::Wait,
        }
    }

    pub fn inner_view(s: &Snapshot, peer: &SimAColor) -> Snapshot {
        Snapshot {
            peer_offset: s.peer_offset.clone(),
            own_color: None,
            peer_color: Some(peer.light),
            grid: s.grid.clone(),
        }
    }

    fn rewrite(&self, f: impl Fn(SimAColor) -> SimAColor) -> ColorWrite {
        let k = self.k();
        ColorWrite::remap(12 * k, |c| match SimAColor::decode(c, k) {
            Some(h) => f(h).encode(k),
            None => c,
        })
    }
}

impl Algorithm for SimA {
    fn id(&self) -> String {
        format!("sim.a({})", self.inner.id())
    }
    fn palette(&self) -> u32 {
        12 * self.k()
    }
    fn initial_color(&self) -> Color {
        SimAColor {
            light: self.inner.initial_color(),
            phase: Phase::Exc,
            my: Flag::W,
            your: Flag::W,
        }
        .encode(self.k())
    }
    fn model(&self) -> RobotModel {
        RobotModel::Fcom
    }
    fn needs_grid(&self) -> bool {
        self.inner.needs_grid()
    }
    fn decide(&self, s: &Snapshot) -> Decision {
        use Flag::*;
        let Some(peer) = s.peer_color.and_then(|c| self.decode(c)) else {
            return Decision::stay();
        };
        let keep = Decision::stay();
        match (peer.phase, peer.your, peer.my) {
            (Phase::Exc, W, _) => {
                let d = self.inner.decide(&Self::inner_view(s, &peer));
                let light = d.color;
                Decision {
                    destination: d.destination,
                    color: self.rewrite(move |h| SimAColor {
                        light: light.apply(h.light),
                        phase: Phase::Cpy,
                        my: M,
                        your: peer.my,
                    }),
                }
            }
            (Phase::Exc, M, W) => keep.with_color(self.rewrite(|h| SimAColor {
                phase: Phase::Exc,
                your: peer.my,
                ..h
            })),
            (Phase::Exc, M, M) => keep.with_color(self.rewrite(|h| SimAColor {
                phase: Phase::Cpy,
                ..h
            })),
            (Phase::Cpy, M, W) => keep.with_color(self.rewrite(|h| SimAColor {
                phase: Phase::Exc,
                your: peer.my,
                ..h
            })),
            (Phase::Cpy, W, M) => keep.with_color(self.rewrite(|h| SimAColor {
                phase: Phase::Cpy,
                your: peer.my,
                ..h
            })),
            (Phase::Cpy, M, M) | (Phase::Rst, _, _) => keep.with_color(self.rewrite(|h| SimAColor {
                phase: if peer.phase == Phase::Rst { Phase::Exc } else { Phase::Rst },
                my: W,
                your: W,
                ..h
            })),
            (Phase::Cpy, W, W) => keep,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::exactgeom::Point;
    use crate::protocols::{AnchorMidpoint, GoToMidpoint, TokenPass};

    fn view(peer: Color) -> Snapshot {
        Snapshot {
            peer_offset: Point::ints(0, 1),
            own_color: None,
            peer_color: Some(peer),
            grid: None,
        }
    }

    #[test]
    fn composite_round_trip() {
        for k in 1..4 {
            for c in 0..3 * k * k {
                let h = HandshakeColor::decode(Color(c), k).unwrap();
                assert_eq!(h.encode(k), Color(c));
            }
            for c in 0..12 * k {
                let h = SimAColor::decode(Color(c), k).unwrap();
                assert_eq!(h.encode(k), Color(c));
            }
            assert!(HandshakeColor::decode(Color(3 * k * k), k).is_none());
        }
    }

    #[test]
    fn handshake_branches() {
        let sim = RsynchHandshake::new(Arc::new(TokenPass));
        assert_eq!(sim.palette(), 27);
        let init = sim.decode(sim.initial_color()).unwrap();
        assert_eq!(init.phase, Phase::Cpy);

        let own = HandshakeColor { my: Color(2), your: Color(0), phase: Phase::Rst };
        let peer_cpy = HandshakeColor { my: Color(1), your: Color(2), phase: Phase::Cpy };
        let d = sim.decide(&view(peer_cpy.encode(3)));
        assert_eq!(d.destination, Decision::stay().destination);
        let after = sim.decode(d.color.apply(own.encode(3))).unwrap();
        assert_eq!(after, HandshakeColor { my: Color(2), your: Color(1), phase: Phase::Rst });

        // acknowledging keeps the inner light and refreshes the echo
        let peer_rst = HandshakeColor { phase: Phase::Rst, ..peer_cpy };
        let d = sim.decide(&view(peer_rst.encode(3)));
        let after = sim.decode(d.color.apply(own.encode(3))).unwrap();
        assert_eq!((after.my, after.your, after.phase), (own.my, peer_rst.my, Phase::Exc));

        // decision: inner sees own = peer.your = 2, peer = peer.my = 2 -> d = 0, bump to 0
        let peer_exc = HandshakeColor { my: Color(2), your: Color(2), phase: Phase::Exc };
        let d = sim.decide(&view(peer_exc.encode(3)));
        let after = sim.decode(d.color.apply(own.encode(3))).unwrap();
        assert_eq!((after.my, after.your, after.phase), (Color(0), own.your, Phase::Cpy));
        assert_ne!(d.destination, Decision::stay().destination);
    }

    #[test]
    fn sim_a_table() {
        use Flag::*;
        let sim = SimA::new(Arc::new(AnchorMidpoint));
        let k = 2;
        let own = SimAColor { light: Color(0), phase: Phase::Exc, my: W, your: W };
        let peer = SimAColor { light: Color(0), phase: Phase::Exc, my: W, your: W };
        let d = sim.decide(&view(peer.encode(k)));
        let after = sim.decode(d.color.apply(own.encode(k))).unwrap();
        assert_eq!(after, SimAColor { light: Color(1), phase: Phase::Cpy, my: M, your: W });

        let peer = SimAColor { light: Color(1), phase: Phase::Cpy, my: M, your: M };
        let own = SimAColor { light: Color(1), phase: Phase::Cpy, my: M, your: M };
        let d = sim.decide(&view(peer.encode(k)));
        let after = sim.decode(d.color.apply(own.encode(k))).unwrap();
        assert_eq!(after, SimAColor { light: Color(1), phase: Phase::Rst, my: W, your: W });

        let peer = SimAColor { light: Color(0), phase: Phase::Cpy, my: W, your: W };
        assert_eq!(SimA::branch(&peer), SimABranch::Unlisted);
        assert_eq!(sim.decide(&view(peer.encode(k))), Decision::stay());
    }

    #[test]
    fn collapse_fills_hidden_light() {
        let token: AlgorithmRef = Arc::new(TokenPass);
        let fsta = FsynchCollapse::new(token.clone(), RobotModel::Fsta).unwrap();
        let s = Snapshot {
            peer_offset: Point::ints(0, 1),
            own_color: Some(Color(1)),
            peer_color: None,
            grid: None,
        };
        assert_eq!(fsta.decide(&s).color, ColorWrite::Set(Color(2)));
        assert_eq!(fsta.palette(), 3);
        assert!(FsynchCollapse::new(Arc::new(GoToMidpoint), RobotModel::Lumi).is_err());
    }
}
