//! Optical-density transforms and reference-based Macenko stain
//! normalization for H&E patches.

mod macenko;
mod od;
mod profile;

pub use macenko::{
    estimate_stain_profile, nnls2, normalize_patch, Normalized, NormalizeOutcome, DEFAULT_ALPHA,
    DEFAULT_BETA, MIN_STAINED_PIXELS,
};
pub use od::{od_to_rgb, od_to_value, rgb_to_od, value_to_od, DEFAULT_IO};
pub use profile::{angular_distance_deg, StainProfile};
