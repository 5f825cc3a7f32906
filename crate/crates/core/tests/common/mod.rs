#![allow(dead_code)]

use detbound::datamodel::{Annotation, BBox, Category, Dataset, Detection, DetectionSet, ImageRecord};
use detbound_testkit::Scene;

pub fn to_dataset(s: &Scene) -> Dataset {
    Dataset::new(
        s.images
            .iter()
            .map(|&(id, width, height)| ImageRecord {
                id,
                file_name: format!("{id}.png"),
                width,
                height,
            })
            .collect(),
        s.classes
            .iter()
            .map(|&id| Category {
                id,
                name: format!("class{id}"),
                supercategory: None,
            })
            .collect(),
        s.gts
            .iter()
            .map(|g| Annotation {
                id: g.id,
                image_id: g.image,
                category_id: g.class,
                bbox: BBox::new(g.bbox[0], g.bbox[1], g.bbox[2], g.bbox[3]),
                area: g.area,
                iscrowd: g.crowd,
                segmentation: None,
            })
            .collect(),
    )
}

pub fn to_detections(s: &Scene) -> DetectionSet {
    DetectionSet::new(
        s.dets
            .iter()
            .map(|d| Detection {
                image_id: d.image,
                category_id: d.class,
                bbox: BBox::new(d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3]),
                score: d.score,
                segmentation: None,
            })
            .collect(),
    )
}
