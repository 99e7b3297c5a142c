//! 8-bit PNG images as `[0, 1]` tensors.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};
use tinybeauty_core::{Shape, Tensor};

use crate::error::{Error, Result};

/// Decodes an 8-bit PNG into a `1 × C × H × W` tensor: gray images give one
/// channel, color images three. Palettes are expanded and alpha is dropped.
pub fn decode_png(bytes: &[u8]) -> Result<Tensor> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(depth as u8));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Png(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (stride, channels) = match color {
        ColorType::Grayscale => (1, 1),
        ColorType::GrayscaleAlpha => (2, 1),
        ColorType::Rgb => (3, 3),
        ColorType::Rgba => (4, 3),
        ColorType::Indexed => return Err(Error::Png("palette was not expanded".into())),
    };
    let mut t = Tensor::zeros(Shape::new(1, channels, h, w));
    for y in 0..h {
        let row = &buf[y * info.line_size..];
        for x in 0..w {
            for c in 0..channels {
                t.set(0, c, y, x, row[x * stride + c] as f32 / 255.0);
            }
        }
    }
    Ok(t)
}

pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes a `1 × 1 × H × W` or `1 × 3 × H × W` tensor, rounding to the
/// nearest 1/255 after clamping to `[0, 1]`.
pub fn encode_png(t: &Tensor) -> Result<Vec<u8>> {
    let s = t.shape();
    if s.n != 1 {
        return Err(Error::Png(format!("cannot encode a batch of {} images", s.n)));
    }
    let color = match s.c {
        1 => ColorType::Grayscale,
        3 => ColorType::Rgb,
        c => return Err(Error::UnsupportedChannels(c)),
    };
    let mut data = Vec::with_capacity(s.c * s.h * s.w);
    for y in 0..s.h {
        for x in 0..s.w {
            for c in 0..s.c {
                data.push(quantize(t.get(0, c, y, x)));
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, s.w as u32, s.h as u32);
        enc.set_color(color);
        enc.set_depth(BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer.write_image_data(&data).map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn read_png(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode_png(&bytes)
}

pub fn write_png(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_png(t)?).map_err(Error::io(path))
}

/// Rounds every value to the 8-bit grid, as a PNG round trip would.
pub fn quantized(t: &Tensor) -> Tensor {
    t.map(|v| quantize(v) as f32 / 255.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(c: usize) -> Tensor {
        Tensor::from_fn(Shape::new(1, c, 5, 7), |_, c, y, x| ((c * 31 + y * 7 + x * 13) % 256) as f32 / 255.0)
    }

    #[test]
    fn round_trip_on_grid_is_exact() {
        for c in [1, 3] {
            let t = grid(c);
            let bytes = encode_png(&t).unwrap();
            let back = decode_png(&bytes).unwrap();
            assert_eq!(back, t);
            assert_eq!(encode_png(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn quantizes_off_grid_values() {
        let t = Tensor::from_vec(Shape::new(1, 1, 1, 3), vec![-0.5, 0.5, 2.0]).unwrap();
        let back = decode_png(&encode_png(&t).unwrap()).unwrap();
        assert_eq!(back.data(), &[0.0, 128.0 / 255.0, 1.0]);
        assert_eq!(quantized(&t), back);
    }

    #[test]
    fn rejects_sixteen_bit_and_garbage() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 2);
            enc.set_color(ColorType::Rgb);
            enc.set_depth(BitDepth::Sixteen);
            enc.write_header().unwrap().write_image_data(&[0u8; 24]).unwrap();
        }
        assert!(matches!(decode_png(&out), Err(Error::UnsupportedBitDepth(16))));
        assert!(matches!(decode_png(b"not a png"), Err(Error::Png(_))));
        assert!(matches!(encode_png(&Tensor::zeros(Shape::new(1, 2, 2, 2))), Err(Error::UnsupportedChannels(2))));
    }

    #[test]
    fn alpha_is_dropped() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 1, 1);
            enc.set_color(ColorType::Rgba);
            enc.set_depth(BitDepth::Eight);
            enc.write_header().unwrap().write_image_data(&[255, 0, 51, 7]).unwrap();
        }
        let t = decode_png(&out).unwrap();
        assert_eq!(t.shape(), Shape::new(1, 3, 1, 1));
        assert_eq!(t.data(), &[1.0, 0.0, 0.2]);
    }
}
