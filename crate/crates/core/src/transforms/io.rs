use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use image::RgbImage;

use crate::error::{Error, Result};

/// Resolves image file names to pixels.
pub trait ImageSource: Sync {
    fn load(&self, file_name: &str) -> Result<RgbImage>;
}

/// Receives generated images. Implementations are shared across worker
/// threads; each file name is written once.
pub trait ImageSink: Sync {
    fn store(&self, file_name: &str, image: &RgbImage) -> Result<()>;
}

/// Reads images relative to a directory.
#[derive(Clone, Debug)]
pub struct DirSource {
    root: PathBuf,
}

impl DirSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirSource { root: root.into() }
    }
}

impl ImageSource for DirSource {
    fn load(&self, file_name: &str) -> Result<RgbImage> {
        let path = self.root.join(file_name);
        image::open(&path)
            .map(|i| i.to_rgb8())
            .map_err(|e| Error::Image {
                name: path.display().to_string(),
                message: e.to_string(),
            })
    }
}

/// Writes images under a directory, format chosen by extension.
#[derive(Clone, Debug)]
pub struct DirSink {
    root: PathBuf,
}

impl DirSink {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirSink { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl ImageSink for DirSink {
    fn store(&self, file_name: &str, image: &RgbImage) -> Result<()> {
        let path = self.root.join(file_name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        image.save(&path).map_err(|e| Error::Image {
            name: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// In-memory image store, usable as both source and sink.
#[derive(Debug, Default)]
pub struct MemoryImages {
    images: Mutex<BTreeMap<String, RgbImage>>,
}

impl MemoryImages {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, file_name: impl Into<String>, image: RgbImage) {
        self.images.lock().unwrap().insert(file_name.into(), image);
    }

    pub fn get(&self, file_name: &str) -> Option<RgbImage> {
        self.images.lock().unwrap().get(file_name).cloned()
    }

    pub fn len(&self) -> usize {
        self.images.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn file_names(&self) -> Vec<String> {
        self.images.lock().unwrap().keys().cloned().collect()
    }
}

impl ImageSource for MemoryImages {
    fn load(&self, file_name: &str) -> Result<RgbImage> {
        self.get(file_name).ok_or_else(|| Error::Image {
            name: file_name.to_string(),
            message: "not found".into(),
        })
    }
}

impl ImageSink for MemoryImages {
    fn store(&self, file_name: &str, image: &RgbImage) -> Result<()> {
        self.insert(file_name, image.clone());
        Ok(())
    }
}
