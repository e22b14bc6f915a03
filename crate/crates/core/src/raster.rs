//! Raster containers and their on-disk encodings.
//!
//! Three encodings are understood:
//!
//! * `DNHG`: a 24-byte little-endian header followed by the raw payload,
//!   row-major and pixel-major (`index = (y * width + x) * channels + c`).
//! * binary PGM (`P5`) and PPM (`P6`) with maxval 255, for 8-bit rasters with
//!   one or three channels.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const DNHG_MAGIC: &[u8; 4] = b"DNHG";
pub const DNHG_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    U8,
    U32,
}

impl DType {
    pub fn code(self) -> u32 {
        match self {
            DType::F32 => 0,
            DType::U8 => 1,
            DType::U32 => 2,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(DType::F32),
            1 => Ok(DType::U8),
            2 => Ok(DType::U32),
            other => Err(Error::format("dtype", format!("unsupported dtype code {other}"))),
        }
    }

    fn size(self) -> usize {
        match self {
            DType::U8 => 1,
            DType::F32 | DType::U32 => 4,
        }
    }
}

/// Typed sample storage.
#[derive(Debug, Clone, PartialEq)]
pub enum RasterData {
    F32(Vec<f32>),
    U8(Vec<u8>),
    U32(Vec<u32>),
}

impl RasterData {
    pub fn dtype(&self) -> DType {
        match self {
            RasterData::F32(_) => DType::F32,
            RasterData::U8(_) => DType::U8,
            RasterData::U32(_) => DType::U32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RasterData::F32(v) => v.len(),
            RasterData::U8(v) => v.len(),
            RasterData::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bitwise equality (distinguishes NaN payloads and signed zeros).
    fn bits_eq(&self, other: &RasterData) -> bool {
        match (self, other) {
            (RasterData::F32(a), RasterData::F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (RasterData::U8(a), RasterData::U8(b)) => a == b,
            (RasterData::U32(a), RasterData::U32(b)) => a == b,
            _ => false,
        }
    }
}

/// An immutable `height x width x channels` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    channels: usize,
    data: RasterData,
}

/// Output encoding for [`write_raster`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Dnhg,
    Pgm,
    Ppm,
}

impl Raster {
    pub fn new(height: usize, width: usize, channels: usize, data: RasterData) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Dimension(format!(
                "raster dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        let expected = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::Dimension("raster size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "raster {height}x{width}x{channels} needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_f32(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(height, width, channels, RasterData::F32(data))
    }

    pub fn from_u8(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(height, width, channels, RasterData::U8(data))
    }

    pub fn from_u32(height: usize, width: usize, channels: usize, data: Vec<u32>) -> Result<Self> {
        Self::new(height, width, channels, RasterData::U32(data))
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn data(&self) -> &RasterData {
        &self.data
    }

    pub fn into_data(self) -> RasterData {
        self.data
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.data {
            RasterData::F32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.data {
            RasterData::U8(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_u32(&self) -> Option<&[u32]> {
        match &self.data {
            RasterData::U32(v) => Some(v),
            _ => None,
        }
    }

    pub fn same_grid(&self, other: &Raster) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Samples converted to `f32`; `u8` samples are scaled into `[0, 1]`.
    pub fn to_unit_f32(&self) -> Vec<f32> {
        match &self.data {
            RasterData::F32(v) => v.clone(),
            RasterData::U8(v) => v.iter().map(|&b| b as f32 / 255.0).collect(),
            RasterData::U32(v) => v.iter().map(|&b| b as f32).collect(),
        }
    }

    pub fn bitwise_eq(&self, other: &Raster) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.channels == other.channels
            && self.data.bits_eq(&other.data)
    }
}

/// Stacks two co-registered rasters channel-wise into one `f32` raster.
pub fn stack(first: &Raster, second: &Raster) -> Result<Raster> {
    if !first.same_grid(second) {
        return Err(Error::Dimension(format!(
            "cannot stack {}x{} with {}x{}",
            first.height, first.width, second.height, second.width
        )));
    }
    if first.dtype() != second.dtype() {
        return Err(Error::Dimension(format!(
            "cannot stack {:?} with {:?} rasters",
            first.dtype(),
            second.dtype()
        )));
    }
    let (c1, c2) = (first.channels, second.channels);
    let a = first.to_unit_f32();
    let b = second.to_unit_f32();
    let mut out = Vec::with_capacity(first.pixels() * (c1 + c2));
    for p in 0..first.pixels() {
        out.extend_from_slice(&a[p * c1..(p + 1) * c1]);
        out.extend_from_slice(&b[p * c2..(p + 1) * c2]);
    }
    Raster::from_f32(first.height, first.width, c1 + c2, out)
}

pub fn encode_dnhg(r: &Raster) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + r.data.len() * r.dtype().size());
    out.extend_from_slice(DNHG_MAGIC);
    for field in [
        DNHG_VERSION,
        r.height as u32,
        r.width as u32,
        r.channels as u32,
        r.dtype().code(),
    ] {
        out.extend_from_slice(&field.to_le_bytes());
    }
    match &r.data {
        RasterData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        RasterData::U8(v) => out.extend_from_slice(v),
        RasterData::U32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

fn le_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn decode_dnhg(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format("header", format!("{} bytes, need {HEADER_LEN}", bytes.len())));
    }
    if &bytes[0..4] != DNHG_MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected \"DNHG\", found {:?}", String::from_utf8_lossy(&bytes[0..4])),
        ));
    }
    let version = le_u32(bytes, 4);
    if version != DNHG_VERSION {
        return Err(Error::format("version", format!("unsupported version {version}")));
    }
    let height = le_u32(bytes, 8) as usize;
    let width = le_u32(bytes, 12) as usize;
    let channels = le_u32(bytes, 16) as usize;
    let dtype = DType::from_code(le_u32(bytes, 20))?;
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::format(
            "dimensions",
            format!("zero extent {height}x{width}x{channels}"),
        ));
    }
    let count = height * width * channels;
    let payload = &bytes[HEADER_LEN..];
    let expected = count * dtype.size();
    if payload.len() != expected {
        let what = if payload.len() < expected { "truncated" } else { "trailing bytes in" };
        return Err(Error::format(
            "payload",
            format!("{what} payload: {} bytes, expected {expected}", payload.len()),
        ));
    }
    let data = match dtype {
        DType::U8 => RasterData::U8(payload.to_vec()),
        DType::F32 => RasterData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        DType::U32 => RasterData::U32(
            payload
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Raster::new(height, width, channels, data)
}

/// Netpbm header tokenizer: whitespace-separated fields with `#` comments.
fn pnm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("header", "unexpected end of netpbm header"));
    }
    Ok(&bytes[start..*pos])
}

fn pnm_number(bytes: &[u8], pos: &mut usize, field: &'static str) -> Result<usize> {
    let tok = pnm_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(field, format!("not a number: {:?}", String::from_utf8_lossy(tok))))
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    let mut pos = 0;
    let channels = match pnm_token(bytes, &mut pos)? {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::format(
                "magic",
                format!("unsupported netpbm magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = pnm_number(bytes, &mut pos, "width")?;
    let height = pnm_number(bytes, &mut pos, "height")?;
    let maxval = pnm_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::format("maxval", format!("expected 255, found {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::format("dimensions", format!("zero extent {width}x{height}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() {
        return Err(Error::format("payload", "missing payload"));
    }
    let payload = &bytes[pos + 1..];
    let expected = width * height * channels;
    if payload.len() < expected {
        return Err(Error::format(
            "payload",
            format!("truncated payload: {} bytes, expected {expected}", payload.len()),
        ));
    }
    Raster::from_u8(height, width, channels, payload[..expected].to_vec())
}

pub fn encode_pnm(r: &Raster) -> Result<Vec<u8>> {
    let magic = match (r.channels, r.dtype()) {
        (1, DType::U8) => "P5",
        (3, DType::U8) => "P6",
        (c, d) => {
            return Err(Error::format(
                "dtype",
                format!("netpbm output needs 1 or 3 channel uint8, got {c} channel {d:?}"),
            ))
        }
    };
    let mut out = format!("{magic}\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.extend_from_slice(r.as_u8().expect("checked dtype"));
    Ok(out)
}

/// Reads a DNHG, PGM or PPM file, dispatching on its leading bytes.
pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(&bytes)
    } else {
        decode_dnhg(&bytes)
    };
    decoded.map_err(|e| e.in_file(path))
}

pub fn write_raster(r: &Raster, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        RasterFormat::Dnhg => encode_dnhg(r),
        RasterFormat::Pgm if r.channels != 1 => {
            return Err(Error::format("channels", format!("pgm needs 1 channel, got {}", r.channels)))
        }
        RasterFormat::Ppm if r.channels != 3 => {
            return Err(Error::format("channels", format!("ppm needs 3 channels, got {}", r.channels)))
        }
        RasterFormat::Pgm | RasterFormat::Ppm => encode_pnm(r)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
