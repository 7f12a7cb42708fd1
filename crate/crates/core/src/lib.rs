//! Affordance-sketch level style transfer between tile-based games.
//!
//! Levels from one game are reduced to affordance sketches (solid,
//! climbable, hazard, collectable, empty) and re-rendered with another
//! game's tiles by a filter trained on that game's levels.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod level;
pub mod mrf;
pub mod playability;
pub mod registry;
pub mod report;
pub mod repro;
pub mod rng;
pub mod segment;
pub mod transfer;

pub use error::{Error, Result};
pub use level::{Grid, Sketch, TileGrid};
pub use registry::{Affordance, GameId, GameProfile, Registry};
