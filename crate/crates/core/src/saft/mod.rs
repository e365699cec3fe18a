//! Synthetic aperture focusing: delay-and-sum along scan directions and
//! k-space merging of the directional results.

mod delay;
mod merge;
mod synth;
mod windows;

pub use delay::{coherence_factor, sir_weight, vpd_delay};
pub use merge::{fa_spectrum, merge_dsaft, merge_fasaft, merge_stack, run_saft, DirectionalStack};
pub use synth::saft_1d;
pub use windows::{build_windows, windows_for_angles, AngularWindowSet};
