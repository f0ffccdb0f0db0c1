//! Collision-free placement of new objects on a cluttered surface.
//!
//! Three nested local searches minimize, in lexicographic order, collisions,
//! the number of displaced pre-existing objects, and their total pose change:
//!
//! - [`relax`]: potential-field relaxation that pushes overlapping bodies apart;
//! - [`search::intermediate_search`]: re-places colliding objects into free
//!   grid cells and relaxes again;
//! - [`search::outermost_search`]: gradually widens the balls that bound how far
//!   each pre-existing object may move.

pub mod format;
pub mod geometry;
pub mod relax;
pub mod scene;
pub mod search;
pub mod bench;
