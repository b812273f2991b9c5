//! Figure images to normalized `3 × 224 × 224` tensors, and the FCT1 file format.
//!
//! FCT1 layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FCT1"
//! 4       4     u32 channels
//! 8       4     u32 height
//! 12      4     u32 width
//! 16      4·CHW f32 payload, channel-major then row-major
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::{ImageBuffer, ImageFormat, Rgb};

use crate::error::{Error, Result};
use crate::record::FigureId;

pub const CHANNELS: usize = 3;
pub const IMAGE_SIZE: usize = 224;
pub const TENSOR_LEN: usize = CHANNELS * IMAGE_SIZE * IMAGE_SIZE;

/// Per-channel RGB statistics of the image encoder's training data.
pub const CHANNEL_MEAN: [f32; 3] = [0.481_454_66, 0.457_827_5, 0.408_210_73];
// Published constants, kept digit for digit.
#[allow(clippy::excessive_precision)]
pub const CHANNEL_STD: [f32; 3] = [0.268_629_54, 0.261_302_58, 0.275_777_11];

pub const TENSOR_MAGIC: &[u8; 4] = b"FCT1";
pub const TENSOR_HEADER_LEN: usize = 16;
pub const TENSOR_FILE_LEN: usize = TENSOR_HEADER_LEN + 4 * TENSOR_LEN;

/// Model-ready image tensor, always `3 × 224 × 224`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    data: Vec<f32>,
    pub source: Option<FigureId>,
}

impl ImageTensor {
    pub fn from_data(data: Vec<f32>) -> Result<Self> {
        if data.len() != TENSOR_LEN {
            return Err(Error::Argument(format!(
                "tensor needs {TENSOR_LEN} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("tensor contains non-finite values".into()));
        }
        Ok(ImageTensor { data, source: None })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (CHANNELS, IMAGE_SIZE, IMAGE_SIZE)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn at(&self, channel: usize, y: usize, x: usize) -> f32 {
        self.data[(channel * IMAGE_SIZE + y) * IMAGE_SIZE + x]
    }

    pub fn channel(&self, channel: usize) -> &[f32] {
        let n = IMAGE_SIZE * IMAGE_SIZE;
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Number of square patches of side `patch_size` tiling the image.
    pub fn patch_count(&self, patch_size: usize) -> Result<usize> {
        patch_count(patch_size)
    }
}

/// `(224 / patch_size)²`; `patch_size` must divide 224.
pub fn patch_count(patch_size: usize) -> Result<usize> {
    if patch_size == 0 || !IMAGE_SIZE.is_multiple_of(patch_size) {
        return Err(Error::Argument(format!(
            "patch size {patch_size} does not divide {IMAGE_SIZE}"
        )));
    }
    let per_side = IMAGE_SIZE / patch_size;
    Ok(per_side * per_side)
}

/// Decodes a PNG, composites alpha over white, stretches it to 224×224 with
/// bicubic (Catmull-Rom) interpolation and applies per-channel normalization.
pub fn preprocess_image(png_bytes: &[u8]) -> Result<ImageTensor> {
    let img = image::load_from_memory_with_format(png_bytes, ImageFormat::Png)
        .map_err(|e| Error::Decode(e.to_string()))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Argument("image has a zero dimension".into()));
    }
    let rgba = img.to_rgba32f();
    let rgb: ImageBuffer<Rgb<f32>, Vec<f32>> =
        ImageBuffer::from_fn(rgba.width(), rgba.height(), |x, y| {
            let [r, g, b, a] = rgba.get_pixel(x, y).0;
            let over_white = |c: f32| c * a + (1.0 - a);
            Rgb([over_white(r), over_white(g), over_white(b)])
        });
    let side = IMAGE_SIZE as u32;
    let resized = imageops::resize(&rgb, side, side, FilterType::CatmullRom);

    let plane = IMAGE_SIZE * IMAGE_SIZE;
    let mut data = vec![0f32; TENSOR_LEN];
    for (x, y, px) in resized.enumerate_pixels() {
        let offset = y as usize * IMAGE_SIZE + x as usize;
        for c in 0..CHANNELS {
            // bicubic overshoot is clipped back into the pixel range
            let v = px.0[c].clamp(0.0, 1.0);
            data[c * plane + offset] = (v - CHANNEL_MEAN[c]) / CHANNEL_STD[c];
        }
    }
    Ok(ImageTensor { data, source: None })
}

/// Encodes a tensor as FCT1 bytes.
pub fn encode_tensor(tensor: &ImageTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(TENSOR_FILE_LEN);
    out.extend_from_slice(TENSOR_MAGIC);
    for dim in [CHANNELS, IMAGE_SIZE, IMAGE_SIZE] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in &tensor.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes FCT1 bytes.
pub fn decode_tensor(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.len() < TENSOR_HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != TENSOR_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(4), dim(8), dim(12));
    if (c, h, w) != (CHANNELS, IMAGE_SIZE, IMAGE_SIZE) {
        return Err(Error::Format(format!("unexpected shape {c}x{h}x{w}")));
    }
    if bytes.len() != TENSOR_FILE_LEN {
        return Err(Error::Format(format!(
            "expected {TENSOR_FILE_LEN} bytes, found {}",
            bytes.len()
        )));
    }
    let data: Vec<f32> = bytes[TENSOR_HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ImageTensor::from_data(data).map_err(|e| Error::Format(e.to_string()))
}

/// Writes `tensor` to `destination` as FCT1 and returns the path.
pub fn write_tensor(tensor: &ImageTensor, destination: &Path) -> Result<PathBuf> {
    fs::write(destination, encode_tensor(tensor)).map_err(|e| Error::io(destination, e))?;
    Ok(destination.to_path_buf())
}

pub fn read_tensor(source: &Path) -> Result<ImageTensor> {
    let bytes = fs::read(source).map_err(|e| Error::io(source, e))?;
    decode_tensor(&bytes)
}
