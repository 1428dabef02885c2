//! Analyses of finite networks, in particular BRW traces.

mod spectral;
mod structure;
mod walk;

pub use spectral::{
    estimate_spectral_radius, group_spectral_radius, RestrictedKernel, SpectralEstimate, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
pub use structure::{
    estimate_ends, find_cutpoints, find_line_segments, line_segments, segment_lower_bound, volume_growth, Segment,
    SegmentBound,
};
pub use walk::{biased_walk_pn, srw_on_trace, step_law, walk_step, WalkConfig, WalkKernel, WalkStats};
