//! Dataset variants for invariance analysis, context-crop export and
//! box-distribution maps.

mod blur;
mod crops;
mod gridmap;
mod io;
mod kinds;

pub use blur::{default_sigma, gaussian_blur, gaussian_kernel};
pub use crops::{crop_pixels, export_context_crops, CropExport, CropMode, CropRow, CropSpec};
pub use gridmap::{box_distribution_map, diff_map, GridMap, MapScale};
pub use io::{DirSink, DirSource, ImageSink, ImageSource, MemoryImages};
pub use kinds::{
    noise_image, pixel_region, resized_dims, transform_dataset, vflip_box, ImageFailure,
    IncongruentSpec, Placement, TransformOutput, TransformSpec,
};

pub use crate::datamodel::count_detections;
