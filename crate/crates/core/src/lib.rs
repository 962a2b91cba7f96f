//! Rib centerline extraction and anatomical labeling from 4-class rib
//! probability volumes.
//!
//! The pipeline consumes a [`ProbabilityMap`] with the channels background,
//! first rib, twelfth rib and intermediate rib, and produces a
//! [`CenterlineSet`] of traced, labeled rib centerlines:
//!
//! 1. [`tracer::detect_bounding_box`] fits an inclined rib cage box from
//!    slice-wise bounding rectangles of the combined probability.
//! 2. [`tracer::initial_rib_detection`] seeds one rib per side.
//! 3. [`tracer::trace_rib`] follows the probability ridge with weighted
//!    moments, bridging drop-outs with a forward cone search, and
//!    [`tracer::find_neighbor_rib`] discovers adjacent ribs with fan searches.
//! 4. [`tracer::label_ribs`] counts from an identified first or twelfth rib.
//!
//! [`phantom`] generates synthetic rib cages with ground truth, and
//! [`evalbench`] implements point-wise centerline evaluation.

pub mod centerline;
pub mod error;
pub mod evalbench;
pub mod geom;
pub mod phantom;
pub mod probmap;
pub mod tracer;
pub mod volgrid;

pub use centerline::{CenterlineSet, RibCenterline, RibLabel, Side};
pub use error::{Error, Result};
pub use evalbench::{EvalReport, MatchCounts};
pub use geom::Vec3;
pub use phantom::PhantomSpec;
pub use probmap::{ClassCounts, ClassMetrics, LabelGrid};
pub use tracer::{RibCageBox, TraceParams, TraceState};
pub use volgrid::{Geometry, Grid, ProbabilityMap, VoxelGrid};
