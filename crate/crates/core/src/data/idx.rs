//! MNIST IDX containers.
//!
//! Images: big-endian `u32` magic 2051, count, rows, cols, then
//! `count * rows * cols` unsigned bytes. Labels: big-endian `u32` magic 2049,
//! count, then `count` bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::net::{Dataset, Sample};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const NUM_CLASSES: usize = 10;

const IMAGE_HEADER: usize = 16;
const LABEL_HEADER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: u32,
    pub rows: u32,
    pub cols: u32,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxLabels {
    pub labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

fn check_magic(bytes: &[u8], expected: u32, header: usize) -> Result<()> {
    if bytes.len() < header {
        return Err(Error::Length(format!(
            "{} bytes is shorter than the {header}-byte header",
            bytes.len()
        )));
    }
    let actual = be_u32(bytes, 0);
    if actual != expected {
        return Err(Error::Magic { expected, actual });
    }
    Ok(())
}

impl IdxImages {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        check_magic(bytes, IMAGE_MAGIC, IMAGE_HEADER)?;
        let count = be_u32(bytes, 4);
        let rows = be_u32(bytes, 8);
        let cols = be_u32(bytes, 12);
        let payload = (count as u64) * (rows as u64) * (cols as u64);
        let actual = (bytes.len() - IMAGE_HEADER) as u64;
        let msg = || format!("header declares {count} images of {rows}x{cols} ({payload} bytes) but payload is {actual} bytes");
        if actual < payload {
            return Err(Error::Length(msg()));
        }
        if actual > payload {
            return Err(Error::Consistency(msg()));
        }
        Ok(Self {
            count,
            rows,
            cols,
            pixels: bytes[IMAGE_HEADER..].to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(IMAGE_HEADER + self.pixels.len());
        for field in [IMAGE_MAGIC, self.count, self.rows, self.cols] {
            out.extend_from_slice(&field.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn image_len(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    /// Row-major pixels of image `index`.
    pub fn image(&self, index: usize) -> &[u8] {
        let n = self.image_len();
        &self.pixels[index * n..(index + 1) * n]
    }
}

impl IdxLabels {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        check_magic(bytes, LABEL_MAGIC, LABEL_HEADER)?;
        let count = be_u32(bytes, 4) as u64;
        let actual = (bytes.len() - LABEL_HEADER) as u64;
        let msg = || format!("header declares {count} labels but payload is {actual} bytes");
        if actual < count {
            return Err(Error::Length(msg()));
        }
        if actual > count {
            return Err(Error::Consistency(msg()));
        }
        let labels = bytes[LABEL_HEADER..].to_vec();
        if let Some(i) = labels.iter().position(|&l| l as usize >= NUM_CLASSES) {
            return Err(Error::Consistency(format!(
                "label {} at index {i} is outside 0..={}",
                labels[i],
                NUM_CLASSES - 1
            )));
        }
        Ok(Self { labels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(LABEL_HEADER + self.labels.len());
        out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.labels);
        out
    }
}

/// Which images make up a training subset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Selection {
    /// The first `limit` images in file order.
    #[default]
    FirstN,
    /// The first `limit / 10` images of every class, kept in file order.
    Balanced,
}

/// Pairs images with labels, scaling pixels by 1/255 and one-hot encoding
/// labels over ten classes.
pub fn dataset_from_idx(images: &IdxImages, labels: &IdxLabels, limit: usize, selection: Selection) -> Result<Dataset> {
    if images.count as usize != labels.labels.len() {
        return Err(Error::Consistency(format!(
            "image file holds {} images but label file holds {} labels",
            images.count,
            labels.labels.len()
        )));
    }
    if limit == 0 || limit > labels.labels.len() {
        return Err(Error::Argument(format!(
            "limit {limit} must be in 1..={}",
            labels.labels.len()
        )));
    }
    let indices: Vec<usize> = match selection {
        Selection::FirstN => (0..limit).collect(),
        Selection::Balanced => {
            if limit % NUM_CLASSES != 0 {
                return Err(Error::Argument(format!(
                    "balanced selection needs a limit divisible by {NUM_CLASSES}, got {limit}"
                )));
            }
            let quota = limit / NUM_CLASSES;
            let mut taken = [0usize; NUM_CLASSES];
            let picked: Vec<usize> = labels
                .labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| {
                    let slot = &mut taken[l as usize];
                    *slot += 1;
                    *slot <= quota
                })
                .map(|(i, _)| i)
                .collect();
            if picked.len() < limit {
                return Err(Error::Argument(format!(
                    "file does not hold {quota} images of every class"
                )));
            }
            picked
        }
    };
    let samples = indices
        .into_iter()
        .map(|i| {
            let x = images.image(i).iter().map(|&p| f64::from(p) / 255.0).collect();
            Sample::with_label(x, labels.labels[i] as usize, NUM_CLASSES)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

/// Encodes a dataset back into IDX containers (pixels rounded from `x * 255`).
pub fn dataset_to_idx(data: &Dataset, rows: u32, cols: u32) -> Result<(IdxImages, IdxLabels)> {
    if data.input_size() != rows as usize * cols as usize {
        return Err(Error::Argument(format!(
            "{} features do not fill {rows}x{cols} images",
            data.input_size()
        )));
    }
    if data.output_size() > NUM_CLASSES {
        return Err(Error::Argument(format!(
            "{} classes do not fit in IDX labels 0..=9",
            data.output_size()
        )));
    }
    let pixels = data
        .samples()
        .iter()
        .flat_map(|s| s.x().iter().map(|&v| (v * 255.0).round() as u8))
        .collect();
    let labels = data.samples().iter().map(|s| s.label() as u8).collect();
    Ok((
        IdxImages {
            count: data.len() as u32,
            rows,
            cols,
            pixels,
        },
        IdxLabels { labels },
    ))
}

/// Reads an image/label file pair and returns the selected subset.
pub fn load_mnist(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    limit: usize,
    selection: Selection,
) -> Result<Dataset> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let with_path = |path: &Path, e: Error| match e {
        Error::Io { .. } => e,
        other => Error::InFile {
            path: path.to_path_buf(),
            source: Box::new(other),
        },
    };
    let image_bytes = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let images = IdxImages::parse(&image_bytes).map_err(|e| with_path(images_path, e))?;
    let labels = IdxLabels::parse(&label_bytes).map_err(|e| with_path(labels_path, e))?;
    dataset_from_idx(&images, &labels, limit, selection)
}
