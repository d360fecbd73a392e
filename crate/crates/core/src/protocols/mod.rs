//! Reference algorithms, simulator transformers, and the projections that
//! map simulator runs back to runs of the simulated algorithm.

mod algorithms;
pub mod equiv;
mod project;
mod sim;

pub use algorithms::{
    AnchorMidpoint, CgeFsynch, GoToMidpoint, LambdaStep, SingleMoveFsta, SroOblot, StayPut, TokenPass,
    ANCHOR, DONE, INIT,
};
pub use project::{project_collapse, project_handshake, project_sim_a, AbstractStep, AbstractTrace, ProjectionError};
pub use sim::{Flag, FsynchCollapse, HandshakeColor, Phase, RsynchHandshake, SimA, SimABranch, SimAColor};
