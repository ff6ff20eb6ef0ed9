//! Shared numerical substrate: brackets, tolerances, ball geometry, seeded
//! randomness, dense linear algebra and a small LP solver.

mod ball;
mod bracket;
pub mod linalg;
pub mod lp;
mod rng;
mod settings;

pub use ball::{ball_vertices, BaseNorm};
pub use bracket::{Bracket, Method};
pub use lp::{lp_solve, LpProblem, LpSolution, LpStatus};
pub use rng::SeedStream;
pub use settings::Settings;
