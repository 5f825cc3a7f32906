//! Box and mask geometry.

mod boxes;
mod mask;
mod polygon;
mod rle_string;
mod sampler;

pub use boxes::{intersection_area, iof_box, iou_box};
pub use mask::{
    box_to_mask, decode_mask, decode_rle, encode_rle, intersection_rle, iof_mask, iou_mask,
    mask_to_box, rle_to_box, segmentation_to_rle, Bitmask, RleMask,
};
pub use rle_string::{rle_from_string, rle_to_string};
pub use sampler::{
    constraint_threshold, corner_box, sample_boxes, sample_params, CornerBranch, SampleMode,
    SampleParams, SamplerSpec,
};
