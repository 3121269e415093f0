//! Compact raster/vector spatial query engine.
//!
//! Integer rasters are stored as k²-rasters ([`K2Raster`]): a compressed
//! quadtree-like structure whose nodes carry minimum and maximum values.
//! Vector objects are indexed by an R-tree ([`RTree`]) over their MBRs.
//! Two queries traverse both trees in lockstep:
//!
//! * [`join()`]: objects and the cells they overlap whose values fall in a range,
//!   split into definitive and probable results;
//! * [`top_k()`]: the `K` objects overlapping the highest (or lowest) values.
//!
//! The [`baseline`] module answers the same queries by scanning a plain
//! array and is used as an oracle and as a pruning comparator.

pub mod baseline;
pub mod bitvec;
mod codec;
pub mod dacs;
pub mod error;
pub mod geom;
pub mod ingest;
pub mod join;
pub mod k2raster;
pub mod rtree;
pub mod topk;

pub use baseline::PlainRaster;
pub use bitvec::RankBitmap;
pub use dacs::DacsSequence;
pub use error::{Error, Result};
pub use geom::{Cell, Mbr};
pub use ingest::{synth_raster, SynthKind};
pub use join::{join, JoinResult, JoinStats, MbrOverlap, QuadOverlap};
pub use k2raster::{pad_to_square, K2Config, K2Raster, NodeCursor, RasterMatrix};
pub use rtree::{NodeId, ObjectId, RTree, VectorDataset};
pub use topk::{top_k, Direction, TopKResult};
