//! Camera-shake trajectories, PSF rasterization, the blur-complexity
//! score and synthetic bursts with ground-truth labels.

mod burst;
mod psf;
mod trajectory;

pub use burst::{
    choose_shifts, draw_kernel, load_burst, shift_frames, synth_burst, synthesize_burst, write_burst,
    BurstManifest, FrameEntry, LoadedBurst, SynthBurst, SynthConfig, SynthFrame, MANIFEST_FILE,
};
pub use psf::{
    covariance_eigenvalues, kernel_descriptors, rasterize_psf, zeta, KernelDescriptors, Psf,
    DEFAULT_CANVAS, DEFAULT_ZETA_SIGMA,
};
pub use trajectory::{gen_trajectory, Trajectory, TrajectoryParams};
