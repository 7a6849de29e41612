//! Typed network operads for system design.
//!
//! Operations are monoid-labeled networks over words of colors ([`operad`]).
//! Templates ([`template`]) generate the operations that are syntactically
//! allowed. Algebras ([`algebra`]) attach semantics such as costs, search
//! performance and failure probabilities, and wiring diagrams ([`wiring`])
//! support top-down decomposition and requirement checks.

pub mod algebra;
pub mod laws;
pub mod operad;
pub mod sample;
pub mod template;
pub mod wiring;

pub use operad::{
    Color, EdgeKey, Endpoints, InteractionId, MonoidKind, NetOperation, NetType, OperadError,
    Signature, SlotRef,
};
