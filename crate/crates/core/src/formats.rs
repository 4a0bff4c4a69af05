//! Binary containers for images (`PIF1`), dictionaries (`PDC1`) and
//! sinograms (`PSN1`), plus PGM (P5) import/export.
//!
//! All containers are little-endian with `f32` payloads. Values already
//! representable in `f32` round-trip bit-exactly.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::tomo::Sinogram;
use crate::{Dictionary, Image, Real};

pub const IMAGE_MAGIC: &[u8; 4] = b"PIF1";
pub const DICTIONARY_MAGIC: &[u8; 4] = b"PDC1";
pub const SINOGRAM_MAGIC: &[u8; 4] = b"PSN1";

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4], what: &'static str) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != magic {
            return Err(Error::Format(format!(
                "{what}: bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(Reader { bytes, pos: 4, what })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("{}: truncated at byte {}", self.what, self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let len = n.checked_mul(4).ok_or_else(|| Error::Format(format!("{}: size overflow", self.what)))?;
        let b = self.take(len)?;
        Ok(b.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{}: {} trailing bytes",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f32s<T: Real>(out: &mut Vec<u8>, values: impl IntoIterator<Item = T>) {
    for v in values {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
}

fn cast<T: Real>(v: Vec<f32>) -> Vec<T> {
    v.into_iter().map(|x| T::of(x as f64)).collect()
}

pub fn encode_image<T: Real>(img: &Image<T>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * img.len());
    out.extend_from_slice(IMAGE_MAGIC);
    put_u32(&mut out, img.width())?;
    put_u32(&mut out, img.height())?;
    put_u32(&mut out, img.channels())?;
    put_f32s(&mut out, img.samples().iter().copied());
    Ok(out)
}

pub fn decode_image<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    let mut r = Reader::new(bytes, IMAGE_MAGIC, "PIF1")?;
    let (w, h, c) = (r.u32()?, r.u32()?, r.u32()?);
    let n = w.checked_mul(h).and_then(|v| v.checked_mul(c));
    let n = n.ok_or_else(|| Error::Format("PIF1: size overflow".into()))?;
    let data = r.f32s(n)?;
    r.finish()?;
    Image::from_vec(w, h, c, cast(data)).map_err(|e| Error::Format(format!("PIF1: {e}")))
}

pub fn encode_dictionary<T: Real>(dict: &Dictionary<T>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * dict.atoms().len());
    out.extend_from_slice(DICTIONARY_MAGIC);
    put_u32(&mut out, dict.patch_size())?;
    put_u32(&mut out, dict.channels())?;
    put_u32(&mut out, dict.n_atoms())?;
    put_f32s(&mut out, dict.atoms().iter().copied());
    Ok(out)
}

/// Atoms are validated for unit norm at single precision, then widened.
pub fn decode_dictionary<T: Real>(bytes: &[u8]) -> Result<Dictionary<T>> {
    let mut r = Reader::new(bytes, DICTIONARY_MAGIC, "PDC1")?;
    let (m, c, k) = (r.u32()?, r.u32()?, r.u32()?);
    let n = m.checked_mul(m).and_then(|v| v.checked_mul(c));
    let total = n.and_then(|v| v.checked_mul(k)).ok_or_else(|| Error::Format("PDC1: size overflow".into()))?;
    let data = r.f32s(total)?;
    r.finish()?;
    let atoms = Array2::from_shape_vec((k, m * m * c), data).map_err(|e| Error::Format(format!("PDC1: {e}")))?;
    let dict = Dictionary::<f32>::from_atoms(m, c, atoms).map_err(|e| Error::Format(format!("PDC1: {e}")))?;
    Ok(dict.convert())
}

pub fn encode_sinogram<T: Real>(sino: &Sinogram<T>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * (sino.n_angles() + sino.samples().len()));
    out.extend_from_slice(SINOGRAM_MAGIC);
    put_u32(&mut out, sino.n_angles())?;
    put_u32(&mut out, sino.n_detectors())?;
    put_u32(&mut out, sino.channels())?;
    put_f32s(&mut out, sino.angles().iter().copied());
    put_f32s(&mut out, sino.samples().iter().copied());
    Ok(out)
}

pub fn decode_sinogram<T: Real>(bytes: &[u8]) -> Result<Sinogram<T>> {
    let mut r = Reader::new(bytes, SINOGRAM_MAGIC, "PSN1")?;
    let (na, nd, c) = (r.u32()?, r.u32()?, r.u32()?);
    let angles: Vec<f64> = r.f32s(na)?.into_iter().map(f64::from).collect();
    let n = na.checked_mul(nd).and_then(|v| v.checked_mul(c));
    let n = n.ok_or_else(|| Error::Format("PSN1: size overflow".into()))?;
    let data = r.f32s(n)?;
    r.finish()?;
    Sinogram::from_vec(angles, nd, c, cast(data)).map_err(|e| Error::Format(format!("PSN1: {e}")))
}

/// Sample depth of a PGM file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmDepth {
    Eight,
    Sixteen,
}

impl PgmDepth {
    fn maxval(self) -> u32 {
        match self {
            PgmDepth::Eight => 255,
            PgmDepth::Sixteen => 65535,
        }
    }
}

/// Export a scalar image as binary PGM. Samples in `range` (default: the
/// image's own min/max) map linearly onto `0..=maxval`, clamped.
pub fn encode_pgm<T: Real>(img: &Image<T>, depth: PgmDepth, range: Option<(f64, f64)>) -> Result<Vec<u8>> {
    if img.channels() != 1 {
        return Err(Error::Format(format!("PGM needs one channel, image has {}", img.channels())));
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        let (a, b) = img.min_max();
        (a.as_f64(), b.as_f64())
    });
    let maxval = depth.maxval();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    for v in img.samples() {
        let q = ((v.as_f64() - lo) / span * maxval as f64).round().clamp(0.0, maxval as f64) as u32;
        match depth {
            PgmDepth::Eight => out.push(q as u8),
            PgmDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    Ok(out)
}

/// Import a binary PGM, scaling samples to [0,1] by `maxval`.
pub fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    let bad = |msg: &str| Error::Format(format!("PGM: {msg}"));
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad("bad magic, expected P5"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("invalid header"))?;
        *f = text.parse().map_err(|_| bad("invalid header field"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing separator after header"));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let wide = maxval > 255;
    let n = w.checked_mul(h).ok_or_else(|| bad("size overflow"))?;
    let need = if wide { 2 * n } else { n };
    let body = bytes.get(pos..pos + need).ok_or_else(|| bad("truncated raster"))?;
    let scale = 1.0 / maxval as f64;
    let data = if wide {
        body.chunks_exact(2).map(|c| T::of(u16::from_be_bytes([c[0], c[1]]) as f64 * scale)).collect()
    } else {
        body.iter().map(|&b| T::of(b as f64 * scale)).collect()
    };
    Image::from_vec(w, h, 1, data)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn write_image<T: Real>(path: impl AsRef<Path>, img: &Image<T>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_image(img)?)
}

/// Read a `PIF1` or binary PGM image, chosen by the file's magic bytes.
pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let bytes = read_bytes(path.as_ref())?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else {
        decode_image(&bytes)
    }
}

pub fn write_dictionary<T: Real>(path: impl AsRef<Path>, dict: &Dictionary<T>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_dictionary(dict)?)
}

pub fn read_dictionary<T: Real>(path: impl AsRef<Path>) -> Result<Dictionary<T>> {
    decode_dictionary(&read_bytes(path.as_ref())?)
}

pub fn write_sinogram<T: Real>(path: impl AsRef<Path>, sino: &Sinogram<T>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_sinogram(sino)?)
}

pub fn read_sinogram<T: Real>(path: impl AsRef<Path>) -> Result<Sinogram<T>> {
    decode_sinogram(&read_bytes(path.as_ref())?)
}

pub fn write_pgm<T: Real>(path: impl AsRef<Path>, img: &Image<T>, depth: PgmDepth) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(img, depth, None)?)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_bytes(path.as_ref(), text.as_bytes())
}

/// Render metrics as `key=value` lines in the given order.
pub fn key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> String {
    pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip_is_bit_exact() {
        let img = Image::<f32>::from_vec(3, 2, 2, (0..12).map(|i| i as f32 * 0.1 - 0.3).collect()).unwrap();
        let bytes = encode_image(&img).unwrap();
        assert_eq!(&bytes[..4], b"PIF1");
        assert_eq!(bytes.len(), 16 + 48);
        let back: Image<f32> = decode_image(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(encode_image(&back).unwrap(), bytes);
    }

    #[test]
    fn header_is_little_endian() {
        let img = Image::<f32>::zeros(258, 1, 1);
        let bytes = encode_image(&img).unwrap();
        assert_eq!(&bytes[4..8], &[2, 1, 0, 0]);
    }

    #[test]
    fn truncated_and_trailing_rejected() {
        let img = Image::<f64>::filled(4, 4, 1, 0.5);
        let mut bytes = encode_image(&img).unwrap();
        assert!(decode_image::<f64>(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(decode_image::<f64>(&bytes).is_err());
        assert!(decode_image::<f64>(b"PDC1").is_err());
    }

    #[test]
    fn dictionary_round_trip() {
        let d = Dictionary::<f32>::dct(4, 2).unwrap();
        let bytes = encode_dictionary(&d).unwrap();
        let back: Dictionary<f32> = decode_dictionary(&bytes).unwrap();
        assert_eq!(back.atoms(), d.atoms());
        let wide: Dictionary<f64> = decode_dictionary(&bytes).unwrap();
        assert_eq!(encode_dictionary(&wide).unwrap(), bytes);
    }

    #[test]
    fn sinogram_round_trip() {
        let angles = vec![0.0, 0.5f32 as f64, 1.25];
        let s = Sinogram::<f32>::from_vec(angles, 4, 1, (0..12).map(|i| i as f32).collect()).unwrap();
        let bytes = encode_sinogram(&s).unwrap();
        let back: Sinogram<f32> = decode_sinogram(&bytes).unwrap();
        assert_eq!(back.angles(), s.angles());
        assert_eq!(back.samples(), s.samples());
    }

    #[test]
    fn pgm_round_trips_quantized_values() {
        for depth in [PgmDepth::Eight, PgmDepth::Sixteen] {
            let max = depth.maxval() as f64;
            let img = Image::<f64>::from_fn(5, 3, |c, r| ((c * 3 + r) as f64 * 17.0 % max) / max);
            let bytes = encode_pgm(&img, depth, Some((0.0, 1.0))).unwrap();
            let back: Image<f64> = decode_pgm(&bytes).unwrap();
            for (a, b) in img.samples().iter().zip(back.samples()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pgm_header_comments_and_scaling() {
        let bytes = b"P5\n# note\n2 1\n# more\n255\n\x00\xff";
        let img: Image<f64> = decode_pgm(bytes).unwrap();
        assert_eq!(img.samples(), &[0.0, 1.0]);
        let out = encode_pgm(&Image::<f64>::from_vec(2, 1, 1, vec![3.0, 5.0]).unwrap(), PgmDepth::Eight, None).unwrap();
        assert!(out.ends_with(&[0, 255]));
        assert!(decode_pgm::<f64>(b"P5\n2 1\n255\n\x00").is_err());
    }
}
