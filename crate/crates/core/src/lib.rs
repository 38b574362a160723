//! Procedural woven-fabric microstructure.
//!
//! A [`draft::WeavingDraft`] fixes the over/under structure of one repeat.
//! [`scene::FabricScene`] combines it with per-family yarn parameters and the
//! irregularity fields, and answers point queries in UV space. Baking, preview
//! shading and the draft designer are layered on top of that query.

pub mod baking;
pub mod designer;
pub mod draft;
pub mod imageio;
pub mod irregularity;
pub mod noise;
pub mod params;
pub mod render;
pub mod scene;
pub mod yarn;
