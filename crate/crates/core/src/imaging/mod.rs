//! Image I/O, the four restoration distortions, PSNR, and restoration
//! training with two chained networks initialized to the identity.

mod composed;
mod dataset;
mod distort;
mod image;
mod psnr;
mod restore;

pub use composed::{compose_identity, identity_error, ComposedAdam, ComposedCache, ComposedGrads, ComposedNet};
pub use dataset::{synthetic_image, write_synthetic_corpus, DatasetManifest, ManifestEntry, Split, MANIFEST_FILE};
pub use distort::{
    blur_kernel, distort_blur, distort_inpaint, distort_noise, distort_watermark, noise_field, watermark_lines, Task,
    BLUR_SIGMA, NOISE_STD,
};
pub use image::{crop_patches, load_image, save_image, stitch_patches, to_grayscale, Image};
pub use psnr::{psnr, psnr_batch, PSNR_CAP};
pub use restore::{run_restoration_on, run_restoration_task, training_pairs, RestorationConfig, RestorationOutcome};
