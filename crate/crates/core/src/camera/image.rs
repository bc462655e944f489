use std::io::{self, Write};

/// Row-major 8-bit grayscale frame with an optional depth raster (meters
/// along each pixel's ray).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub depth: Option<Vec<f32>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ImageFormatError {
    #[error("not a binary PGM (P5, maxval 255) image")]
    NotPgm,
    #[error("not a DPT1 depth raster")]
    NotDepth,
    #[error("raster truncated: expected {expected} bytes of data, found {found}")]
    Truncated { expected: usize, found: usize },
}

const DEPTH_MAGIC: &[u8; 4] = b"DPT1";
const DEPTH_HEADER: usize = 16;

impl Image {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width as usize * height as usize],
            depth: None,
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pixels.iter().map(|&p| (p as f64 - m).powi(2)).sum::<f64>() / self.pixels.len() as f64
    }

    pub fn write_pgm(&self, mut out: impl Write) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.pixels.len() + 20);
        self.write_pgm(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    /// Parses what [`Image::write_pgm`] produces (comments are not supported).
    pub fn from_pgm(bytes: &[u8]) -> Result<Image, ImageFormatError> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
                pos += 1;
            }
            let start = pos;
            while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
                pos += 1;
            }
            if start == pos {
                return Err(ImageFormatError::NotPgm);
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| ImageFormatError::NotPgm)?);
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| ImageFormatError::NotPgm);
        if fields[0] != "P5" || num(fields[3])? != 255 {
            return Err(ImageFormatError::NotPgm);
        }
        let (width, height) = (num(fields[1])?, num(fields[2])?);
        let data = bytes.get(pos + 1..).unwrap_or_default();
        let expected = width as usize * height as usize;
        if data.len() < expected {
            return Err(ImageFormatError::Truncated {
                expected,
                found: data.len(),
            });
        }
        Ok(Image {
            width,
            height,
            pixels: data[..expected].to_vec(),
            depth: None,
        })
    }

    /// `DPT1` raster: magic, u16 width, u16 height, 8 zero bytes, then one
    /// little-endian f32 per pixel. `None` if the image carries no depth.
    pub fn depth_bytes(&self) -> Option<Vec<u8>> {
        let depth = self.depth.as_ref()?;
        let mut v = Vec::with_capacity(DEPTH_HEADER + depth.len() * 4);
        v.extend_from_slice(DEPTH_MAGIC);
        v.extend_from_slice(&(self.width as u16).to_le_bytes());
        v.extend_from_slice(&(self.height as u16).to_le_bytes());
        v.extend_from_slice(&[0; 8]);
        for d in depth {
            v.extend_from_slice(&d.to_le_bytes());
        }
        Some(v)
    }

    /// Returns `(width, height, depth)`.
    pub fn parse_depth(bytes: &[u8]) -> Result<(u32, u32, Vec<f32>), ImageFormatError> {
        if bytes.len() < DEPTH_HEADER || &bytes[..4] != DEPTH_MAGIC {
            return Err(ImageFormatError::NotDepth);
        }
        let w = u16::from_le_bytes([bytes[4], bytes[5]]) as u32;
        let h = u16::from_le_bytes([bytes[6], bytes[7]]) as u32;
        let body = &bytes[DEPTH_HEADER..];
        let expected = w as usize * h as usize * 4;
        if body.len() != expected {
            return Err(ImageFormatError::Truncated {
                expected,
                found: body.len(),
            });
        }
        let depth = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok((w, h, depth))
    }
}
