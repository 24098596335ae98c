//! Profile-image preparation: size filtering, face selection, crop and
//! bilinear resize to the 3×28×28 network input.
//!
//! Face detection is not done here. Boxes come from a manifest (or the whole
//! image is taken as an already-cropped face).

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::ImageEncoder as _;
use serde::{Deserialize, Serialize};

pub const TENSOR_SIDE: usize = 28;
pub const TENSOR_CHANNELS: usize = 3;
pub const TENSOR_LEN: usize = TENSOR_CHANNELS * TENSOR_SIDE * TENSOR_SIDE;

/// 18 KiB, inclusive.
pub const DEFAULT_THRESHOLD_BYTES: u64 = 18 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum PrepError {
    #[error("no face boxes")]
    NoFace,
    #[error("invalid raster {width}x{height} with {len} bytes")]
    InvalidRaster { width: u32, height: u32, len: usize },
    #[error("face box {0} does not fit a {1}x{2} raster")]
    InvalidBox(FaceBox, u32, u32),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest {path} line {line}: {message}")]
    Manifest { path: PathBuf, line: u64, message: String },
    #[error("tensor file: {0}")]
    TensorFile(String),
}

/// Decoded RGB8 image plus the byte size of the encoded file it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    source_byte_size: u64,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, source_byte_size: u64) -> Result<Self, PrepError> {
        let expected = width as usize * height as usize * 3;
        if width == 0 || height == 0 || pixels.len() != expected {
            return Err(PrepError::InvalidRaster {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
            source_byte_size,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3], source_byte_size: u64) -> Result<Self, PrepError> {
        let pixels = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self::new(width, height, pixels, source_byte_size)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn source_byte_size(&self) -> u64 {
        self.source_byte_size
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn full_box(&self) -> FaceBox {
        FaceBox {
            x: 0,
            y: 0,
            w: self.width,
            h: self.height,
        }
    }

    /// Decodes PNG or JPEG bytes. `source_byte_size` is the encoded length.
    pub fn decode(bytes: &[u8]) -> Result<Self, image::ImageError> {
        let img = image::load_from_memory(bytes)?.to_rgb8();
        let (w, h) = img.dimensions();
        Ok(Self {
            width: w,
            height: h,
            pixels: img.into_raw(),
            source_byte_size: bytes.len() as u64,
        })
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(&self.pixels, self.width, self.height, image::ExtendedColorType::Rgb8)
            .expect("png encoding to memory cannot fail for a valid raster");
        out
    }

    pub fn crop(&self, b: &FaceBox) -> Result<RasterImage, PrepError> {
        b.validate(self)?;
        let mut pixels = Vec::with_capacity(b.w as usize * b.h as usize * 3);
        for y in b.y..b.y + b.h {
            let row = (y as usize * self.width as usize + b.x as usize) * 3;
            pixels.extend_from_slice(&self.pixels[row..row + b.w as usize * 3]);
        }
        RasterImage::new(b.w, b.h, pixels, self.source_byte_size)
    }
}

/// Loads an image file, recording its on-disk size as the source size.
pub fn load_raster(path: impl AsRef<Path>) -> Result<RasterImage, PrepError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PrepError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RasterImage::decode(&bytes).map_err(|e| PrepError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl fmt::Display for FaceBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{} {}x{})", self.x, self.y, self.w, self.h)
    }
}

impl FaceBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn validate(&self, image: &RasterImage) -> Result<(), PrepError> {
        let fits = self.w >= 1
            && self.h >= 1
            && self.x as u64 + self.w as u64 <= image.width as u64
            && self.y as u64 + self.h as u64 <= image.height as u64;
        if fits {
            Ok(())
        } else {
            Err(PrepError::InvalidBox(*self, image.width, image.height))
        }
    }
}

/// Largest box by area; ties go to the smallest `(y, x)`.
pub fn select_face(boxes: &[FaceBox]) -> Result<FaceBox, PrepError> {
    boxes
        .iter()
        .copied()
        .min_by(|a, b| b.area().cmp(&a.area()).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)))
        .ok_or(PrepError::NoFace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterDecision {
    Keep,
    Discard,
}

pub fn size_filter(image: &RasterImage, threshold_bytes: u64) -> FilterDecision {
    size_decision(image.source_byte_size, threshold_bytes)
}

pub fn size_decision(byte_size: u64, threshold_bytes: u64) -> FilterDecision {
    if byte_size >= threshold_bytes {
        FilterDecision::Keep
    } else {
        FilterDecision::Discard
    }
}

/// Channel-major 3×28×28 tensor with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceTensor {
    data: Vec<f64>,
}

impl FaceTensor {
    pub fn new(data: Vec<f64>) -> Result<Self, PrepError> {
        if data.len() != TENSOR_LEN {
            return Err(PrepError::InvalidTensor(format!(
                "expected {TENSOR_LEN} values, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(PrepError::InvalidTensor(format!("value {v} outside [0, 1]")));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, channel: usize, y: usize, x: usize) -> f64 {
        self.data[(channel * TENSOR_SIDE + y) * TENSOR_SIDE + x]
    }
}

/// Bilinear resample with half-pixel centres, edge-clamped. Returns
/// channel-major values still on the 0..=255 scale.
///
/// Output pixel `o` samples source coordinate `(o + 0.5)·in/out − 0.5`.
pub fn resize_bilinear(image: &RasterImage, out_w: usize, out_h: usize) -> Vec<f64> {
    let (w, h) = (image.width as usize, image.height as usize);
    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(inp - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(out_w, w);
    let ys = axis(out_h, h);
    let px = |x: usize, y: usize, c: usize| image.pixels[(y * w + x) * 3 + c] as f64;
    let mut out = vec![0.0; 3 * out_w * out_h];
    for c in 0..3 {
        for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                let top = px(x0, y0, c) * (1.0 - fx) + px(x1, y0, c) * fx;
                let bottom = px(x0, y1, c) * (1.0 - fx) + px(x1, y1, c) * fx;
                out[(c * out_h + oy) * out_w + ox] = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    out
}

pub fn crop_resize(image: &RasterImage, face: &FaceBox) -> Result<FaceTensor, PrepError> {
    let crop = image.crop(face)?;
    let data = resize_bilinear(&crop, TENSOR_SIDE, TENSOR_SIDE)
        .into_iter()
        .map(|v| (v / 255.0).clamp(0.0, 1.0))
        .collect();
    FaceTensor::new(data)
}

/// Which byte size the size filter looks at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterOn {
    /// The manifest's recorded size of the original profile image.
    #[default]
    Source,
    /// The PNG-encoded size of the selected face crop.
    Crop,
}

/// How faces are located in manifest images.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceSource {
    /// Box quadruples in the manifest; rows without boxes had no detected face.
    #[default]
    Boxes,
    /// Each image already is a face crop.
    Precropped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepOptions {
    pub threshold_bytes: u64,
    pub filter_on: FilterOn,
    pub face_source: FaceSource,
}

impl Default for PrepOptions {
    fn default() -> Self {
        Self {
            threshold_bytes: DEFAULT_THRESHOLD_BYTES,
            filter_on: FilterOn::Source,
            face_source: FaceSource::Boxes,
        }
    }
}

/// Why an image did not yield a tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepDrop {
    NoFace,
    BelowThreshold,
}

/// One manifest row: `user_id,image_path,byte_size[,x,y,w,h ...]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub user_id: u64,
    pub image_path: PathBuf,
    pub byte_size: u64,
    pub boxes: Vec<FaceBox>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: &str = "user_id,image_path,byte_size";

impl Manifest {
    /// Reads a manifest; relative image paths are resolved against the
    /// manifest's directory. The header row is required.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PrepError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| PrepError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut m = Self::read(BufReader::new(file), path)?;
        for e in &mut m.entries {
            if e.image_path.is_relative() {
                e.image_path = base.join(&e.image_path);
            }
        }
        Ok(m)
    }

    pub fn read<R: Read>(reader: R, origin: &Path) -> Result<Self, PrepError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let err = |line: u64, message: String| PrepError::Manifest {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i as u64 + 1;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            if i == 0 {
                if rec.get(0) != Some("user_id") {
                    return Err(err(line, format!("expected header starting with {MANIFEST_HEADER:?}")));
                }
                continue;
            }
            if rec.len() < 3 || (rec.len() - 3) % 4 != 0 {
                return Err(err(line, format!("expected 3 + 4k fields, got {}", rec.len())));
            }
            let num = |k: usize| -> Result<u64, PrepError> {
                rec[k]
                    .parse::<u64>()
                    .map_err(|_| err(line, format!("field {} is not an unsigned integer: {:?}", k + 1, &rec[k])))
            };
            let user_id = num(0)?;
            let byte_size = num(2)?;
            let mut boxes = Vec::new();
            for q in 0..(rec.len() - 3) / 4 {
                let f = |j: usize| -> Result<u32, PrepError> {
                    let v = num(3 + 4 * q + j)?;
                    u32::try_from(v).map_err(|_| err(line, format!("box coordinate {v} too large")))
                };
                boxes.push(FaceBox {
                    x: f(0)?,
                    y: f(1)?,
                    w: f(2)?,
                    h: f(3)?,
                });
            }
            entries.push(ManifestEntry {
                user_id,
                image_path: PathBuf::from(&rec[1]),
                byte_size,
                boxes,
            });
        }
        Ok(Self { entries })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(MANIFEST_HEADER.split(','))?;
        for e in &self.entries {
            let mut rec = vec![
                e.user_id.to_string(),
                e.image_path.to_string_lossy().into_owned(),
                e.byte_size.to_string(),
            ];
            for b in &e.boxes {
                rec.extend([b.x, b.y, b.w, b.h].map(|v| v.to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one manifest entry through face selection, the size filter and
/// crop/resize. `Ok(Err(drop))` is an expected discard; `Err` is a data error.
pub fn prepare_entry(entry: &ManifestEntry, opts: &PrepOptions) -> Result<Result<FaceTensor, PrepDrop>, PrepError> {
    if opts.face_source == FaceSource::Boxes && entry.boxes.is_empty() {
        return Ok(Err(PrepDrop::NoFace));
    }
    if opts.filter_on == FilterOn::Source
        && size_decision(entry.byte_size, opts.threshold_bytes) == FilterDecision::Discard
    {
        return Ok(Err(PrepDrop::BelowThreshold));
    }
    let mut image = load_raster(&entry.image_path)?;
    image.source_byte_size = entry.byte_size;
    prepare_image(&image, &entry.boxes, opts)
}

/// Same as [`prepare_entry`] for an already decoded image.
pub fn prepare_image(
    image: &RasterImage,
    boxes: &[FaceBox],
    opts: &PrepOptions,
) -> Result<Result<FaceTensor, PrepDrop>, PrepError> {
    let face = match opts.face_source {
        FaceSource::Precropped => image.full_box(),
        FaceSource::Boxes => match select_face(boxes) {
            Ok(b) => b,
            Err(_) => return Ok(Err(PrepDrop::NoFace)),
        },
    };
    face.validate(image)?;
    let keep = match opts.filter_on {
        FilterOn::Source => size_filter(image, opts.threshold_bytes),
        FilterOn::Crop => size_decision(image.crop(&face)?.encode_png().len() as u64, opts.threshold_bytes),
    };
    if keep == FilterDecision::Discard {
        return Ok(Err(PrepDrop::BelowThreshold));
    }
    crop_resize(image, &face).map(Ok)
}

const TENSOR_MAGIC: &[u8; 4] = b"FTNS";
const TENSOR_VERSION: u32 = 1;

/// Writes `(user_id, tensor)` records: magic `FTNS`, u32 version, u64 count,
/// then per record a u64 id and 2352 f64 values, all little-endian, followed
/// by a CRC32 of everything before it.
pub fn write_tensor_file(path: impl AsRef<Path>, records: &[(u64, FaceTensor)]) -> Result<(), PrepError> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(16 + records.len() * (8 + TENSOR_LEN * 8) + 4);
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for (id, t) in records {
        buf.extend_from_slice(&id.to_le_bytes());
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    let io_err = |source| PrepError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(&buf).and_then(|_| w.flush()).map_err(io_err)
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Vec<(u64, FaceTensor)>, PrepError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PrepError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |m: &str| PrepError::TensorFile(m.to_string());
    if bytes.len() < 20 || &bytes[..4] != TENSOR_MAGIC {
        return Err(bad("bad magic or truncated header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != TENSOR_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let rec_len = 8 + TENSOR_LEN * 8;
    let expected = count
        .checked_mul(rec_len)
        .and_then(|n| n.checked_add(20))
        .ok_or_else(|| bad("record count overflow"))?;
    if bytes.len() != expected {
        return Err(bad("truncated or oversized body"));
    }
    let body = &bytes[..bytes.len() - 4];
    let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    if crc32fast::hash(body) != crc {
        return Err(bad("checksum mismatch"));
    }
    body[16..]
        .chunks_exact(rec_len)
        .map(|rec| {
            let id = u64::from_le_bytes(rec[..8].try_into().unwrap());
            let data = rec[8..]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok((id, FaceTensor::new(data)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: u32, y: u32, w: u32, h: u32) -> FaceBox {
        FaceBox { x, y, w, h }
    }

    #[test]
    fn select_largest_face() {
        assert_eq!(select_face(&[bx(0, 0, 10, 10), bx(3, 3, 20, 20)]).unwrap(), bx(3, 3, 20, 20));
        assert_eq!(select_face(&[bx(1, 2, 5, 5)]).unwrap(), bx(1, 2, 5, 5));
        assert_eq!(select_face(&[bx(5, 0, 4, 4), bx(0, 0, 4, 4)]).unwrap(), bx(0, 0, 4, 4));
        assert_eq!(select_face(&[bx(0, 1, 4, 4), bx(9, 0, 4, 4)]).unwrap(), bx(9, 0, 4, 4));
        assert!(matches!(select_face(&[]), Err(PrepError::NoFace)));
    }

    #[test]
    fn size_threshold_inclusive() {
        let img = |n| RasterImage::filled(1, 1, [0, 0, 0], n).unwrap();
        assert_eq!(size_filter(&img(20000), DEFAULT_THRESHOLD_BYTES), FilterDecision::Keep);
        assert_eq!(size_filter(&img(18432), DEFAULT_THRESHOLD_BYTES), FilterDecision::Keep);
        assert_eq!(size_filter(&img(18431), DEFAULT_THRESHOLD_BYTES), FilterDecision::Discard);
        assert_eq!(size_filter(&img(1000), DEFAULT_THRESHOLD_BYTES), FilterDecision::Discard);
    }

    #[test]
    fn identity_resize_is_exact() {
        let pixels: Vec<u8> = (0..28 * 28 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let img = RasterImage::new(28, 28, pixels.clone(), 0).unwrap();
        let t = crop_resize(&img, &img.full_box()).unwrap();
        for y in 0..28 {
            for x in 0..28 {
                for c in 0..3 {
                    assert_eq!(t.get(c, y, x), pixels[(y * 28 + x) * 3 + c] as f64 / 255.0);
                }
            }
        }
    }

    #[test]
    fn constant_field_stays_constant() {
        let img = RasterImage::filled(56, 56, [10, 128, 250], 0).unwrap();
        let t = crop_resize(&img, &img.full_box()).unwrap();
        for c in 0..3 {
            let expect = [10.0, 128.0, 250.0][c] / 255.0;
            for y in 0..28 {
                for x in 0..28 {
                    assert!((t.get(c, y, x) - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn two_by_two_checker_averages() {
        let px = [0u8, 255, 255, 0];
        let pixels = px.iter().flat_map(|&v| [v, v, v]).collect();
        let img = RasterImage::new(2, 2, pixels, 0).unwrap();
        let out = resize_bilinear(&img, 1, 1);
        for v in out {
            assert_eq!(v / 255.0, 0.5);
        }
    }

    #[test]
    fn crop_respects_box() {
        let mut img = RasterImage::filled(10, 10, [0, 0, 0], 0).unwrap();
        img.set_pixel(3, 4, [255, 255, 255]);
        let c = img.crop(&bx(3, 4, 1, 1)).unwrap();
        assert_eq!(c.pixel(0, 0), [255, 255, 255]);
        assert!(matches!(crop_resize(&img, &bx(8, 8, 3, 1)), Err(PrepError::InvalidBox(..))));
        assert!(matches!(crop_resize(&img, &bx(0, 0, 0, 1)), Err(PrepError::InvalidBox(..))));
    }

    #[test]
    fn manifest_parse() {
        let text = "user_id,image_path,byte_size\n7,a.png,20000,0,0,10,10,2,2,3,3\n8,b.png,100\n";
        let m = Manifest::read(text.as_bytes(), Path::new("m.csv")).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].boxes, vec![bx(0, 0, 10, 10), bx(2, 2, 3, 3)]);
        assert!(m.entries[1].boxes.is_empty());
        let mut out = Vec::new();
        m.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);

        let bad = "user_id,image_path,byte_size\n7,a.png,20000,0,0\n";
        assert!(matches!(Manifest::read(bad.as_bytes(), Path::new("m")), Err(PrepError::Manifest { line: 2, .. })));
        let bad = "7,a.png,20000\n";
        assert!(Manifest::read(bad.as_bytes(), Path::new("m")).is_err());
        let bad = "user_id,image_path,byte_size\nx,a.png,1\n";
        assert!(Manifest::read(bad.as_bytes(), Path::new("m")).is_err());
    }

    #[test]
    fn prepare_drops() {
        let img = RasterImage::filled(40, 40, [100, 100, 100], 30000).unwrap();
        let opts = PrepOptions::default();
        assert_eq!(prepare_image(&img, &[], &opts).unwrap(), Err(PrepDrop::NoFace));
        let small = RasterImage::filled(40, 40, [100, 100, 100], 100).unwrap();
        assert_eq!(prepare_image(&small, &[bx(0, 0, 30, 30)], &opts).unwrap(), Err(PrepDrop::BelowThreshold));
        assert!(prepare_image(&img, &[bx(0, 0, 30, 30)], &opts).unwrap().is_ok());
        let pre = PrepOptions {
            face_source: FaceSource::Precropped,
            ..opts
        };
        assert!(prepare_image(&img, &[], &pre).unwrap().is_ok());
        // a flat 40x40 crop compresses far below 18 KiB
        let crop = PrepOptions {
            filter_on: FilterOn::Crop,
            ..opts
        };
        assert_eq!(prepare_image(&img, &[bx(0, 0, 30, 30)], &crop).unwrap(), Err(PrepDrop::BelowThreshold));
    }

    #[test]
    fn png_roundtrip_decode() {
        let pixels: Vec<u8> = (0..6 * 5 * 3).map(|i| (i * 13 % 256) as u8).collect();
        let img = RasterImage::new(6, 5, pixels, 0).unwrap();
        let bytes = img.encode_png();
        let back = RasterImage::decode(&bytes).unwrap();
        assert_eq!(back.pixels(), img.pixels());
        assert_eq!(back.source_byte_size(), bytes.len() as u64);
    }

    #[test]
    fn tensor_file_roundtrip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        let t = FaceTensor::new((0..TENSOR_LEN).map(|i| (i % 97) as f64 / 96.0).collect()).unwrap();
        write_tensor_file(&p, &[(5, t.clone()), (9, t.clone())]).unwrap();
        let back = read_tensor_file(&p).unwrap();
        assert_eq!(back, vec![(5, t.clone()), (9, t)]);
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[100] ^= 1;
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_tensor_file(&p).is_err());
    }
}
