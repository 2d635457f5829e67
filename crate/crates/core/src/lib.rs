//! Orientation analysis for small Boolean circuits.
//!
//! The crate covers a circuit IR ([`circuit`]), truth-table algebra
//! ([`table`], [`funcs`]), minimal orientations ([`orientation`]),
//! Karchmer-Wigderson protocol simulation ([`kw`]) and constructive circuit
//! transforms ([`transforms`]). Everything is verified by exhaustive
//! enumeration, so input counts stay small.

pub mod circuit;
pub mod corpus;
pub mod funcs;
pub mod kw;
pub mod orientation;
pub mod report;
pub mod table;
pub mod transforms;
pub mod verify;
