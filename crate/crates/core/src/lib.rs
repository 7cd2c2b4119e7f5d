//! Clustering over acyclic join results without materializing the join.

pub mod clustering;
pub mod error;
pub mod geometry;
pub mod gonzalez;
pub mod oracles;
pub mod rbbd;
pub mod relational;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Interval, Point, Rect, Region};
pub use relational::{AttrId, Database, Instance, JoinTree, Relation, Schema};
