//! Policy reasoning for research data repositories.

pub mod compose;
pub mod domain;
pub mod engine;
pub mod ferpa;
pub mod interview;
pub mod license;
pub mod packs;
pub mod purpose;
pub mod store;
pub mod transform;
