//! Standard-form SDP relaxations for bounded colouring and timetabling.
//!
//! Every colouring relaxation is first written over `Y` with `Y - J ⪰ 0`
//! (a [`Sketch`]) and then converted by [`to_standard_form`].

mod bounded;
mod laminar;
mod model;
mod rooms;
mod sketch;
mod theta;

pub use bounded::{
    bounded_sketch, build_bounded, build_bounded_with, build_precoloured, build_precoloured_with, build_unbounded,
    build_weighted, reduce_precolouring, BoundedOptions, Reduction,
};
pub use laminar::{build_laminar, capacity_thresholds, is_laminar, laminar_sketch, LaminarOptions};
pub use model::{BoundSemantics, Constraint, ConstraintBlock, SdpModel, Sense, SparseSym, StructureTags, Transform};
pub use rooms::{build_room_assignment, room_index, RoomOptions};
pub use sketch::{to_standard_form, LinearRow, Sketch, SketchBlock};
pub use theta::{build_theta, ThetaVariant};
