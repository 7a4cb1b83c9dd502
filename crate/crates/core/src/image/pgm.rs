use std::path::Path;

use crate::error::{Error, Result};

use super::RasterImage;

/// Sample encoding of a written PGM file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmEncoding {
    /// `P2`, decimal text.
    Ascii,
    /// `P5`, big-endian binary.
    Binary,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Pgm {
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let c = self.data[self.pos];
            if c == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.data.len() {
                self.err(format!("unexpected end of file, expected {what}"))
            } else {
                self.err(format!("expected {what}, found byte 0x{:02x}", self.data[self.pos]))
            });
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("digits are ascii");
        text.parse().map_err(|_| Error::Pgm {
            offset: start,
            msg: format!("{what} out of range"),
        })
    }
}

/// Decode a `P2` or `P5` file, normalizing samples by `maxval`.
pub fn parse_pgm(data: &[u8], spacing: f64, origin: [f64; 2]) -> Result<RasterImage<f64>> {
    let mut c = Cursor { data, pos: 0 };
    if data.len() < 2 || data[0] != b'P' || !(data[1] == b'2' || data[1] == b'5') {
        return Err(c.err("missing P2/P5 magic number"));
    }
    let binary = data[1] == b'5';
    c.pos = 2;
    let width = c.number("width")? as usize;
    let height = c.number("height")? as usize;
    c.skip_space_and_comments();
    let max_offset = c.pos;
    let maxval = c.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Pgm {
            offset: max_offset,
            msg: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let count = width.checked_mul(height).ok_or_else(|| c.err("image size overflows"))?;
    let scale = 1.0 / maxval as f64;
    let mut values = Vec::with_capacity(count);
    if binary {
        if c.pos >= data.len() || !data[c.pos].is_ascii_whitespace() {
            return Err(c.err("expected a single whitespace byte before binary data"));
        }
        c.pos += 1;
        let bytes = if maxval < 256 { 1 } else { 2 };
        let need = count * bytes;
        if data.len() - c.pos < need {
            return Err(Error::Pgm {
                offset: data.len(),
                msg: format!("truncated binary data: {} of {need} bytes", data.len() - c.pos),
            });
        }
        for k in 0..count {
            let at = c.pos + k * bytes;
            let v = if bytes == 1 {
                data[at] as u32
            } else {
                u32::from(data[at]) << 8 | u32::from(data[at + 1])
            };
            if v > maxval {
                return Err(Error::Pgm {
                    offset: at,
                    msg: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            values.push(v as f64 * scale);
        }
    } else {
        for _ in 0..count {
            let at = c.pos;
            let v = c.number("sample")?;
            if v > maxval {
                return Err(Error::Pgm {
                    offset: at,
                    msg: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            values.push(v as f64 * scale);
        }
    }
    RasterImage::new(width, height, spacing, origin, values).map_err(|e| Error::Pgm {
        offset: 0,
        msg: e.to_string(),
    })
}

pub fn read_pgm(path: impl AsRef<Path>, spacing: f64, origin: [f64; 2]) -> Result<RasterImage<f64>> {
    let data = std::fs::read(path)?;
    parse_pgm(&data, spacing, origin)
}

/// Encode with values clamped to `[0, 1]` and quantized to `maxval`.
pub fn format_pgm(img: &RasterImage<f64>, encoding: PgmEncoding, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let q = |v: f64| (v.clamp(0.0, 1.0) * maxval as f64).round() as u16;
    let magic = match encoding {
        PgmEncoding::Ascii => "P2",
        PgmEncoding::Binary => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();
    match encoding {
        PgmEncoding::Ascii => {
            for row in img.values().chunks(img.width()) {
                let line: Vec<String> = row.iter().map(|&v| q(v).to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        PgmEncoding::Binary => {
            for &v in img.values() {
                let s = q(v);
                if maxval < 256 {
                    out.push(s as u8);
                } else {
                    out.extend_from_slice(&s.to_be_bytes());
                }
            }
        }
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, img: &RasterImage<f64>, encoding: PgmEncoding, maxval: u16) -> Result<()> {
    std::fs::write(path, format_pgm(img, encoding, maxval))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_normalization() {
        let img = parse_pgm(b"P2\n# tiny\n2 2\n255\n0 255\n255 0\n", 1.0, [0.0; 2]).unwrap();
        assert_eq!(img.values(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn sixteen_bit_round_trip() {
        let vals: Vec<f64> = (0..35).map(|i| ((i * 37 % 101) as f64) / 100.0).collect();
        let img = RasterImage::new(7, 5, 1.0, [0.0; 2], vals).unwrap();
        for enc in [PgmEncoding::Ascii, PgmEncoding::Binary] {
            let back = parse_pgm(&format_pgm(&img, enc, 65535), 1.0, [0.0; 2]).unwrap();
            for (a, b) in img.values().iter().zip(back.values()) {
                assert!((a - b).abs() <= 1.0 / 65535.0);
            }
        }
    }

    #[test]
    fn eight_bit_binary() {
        let mut data = b"P5 3 2 255\n".to_vec();
        data.extend_from_slice(&[0, 51, 102, 153, 204, 255]);
        let img = parse_pgm(&data, 2.0, [1.0, 1.0]).unwrap();
        assert!((img.pixel(2, 1) - 1.0).abs() < 1e-15);
        assert!((img.pixel(1, 0) - 0.2).abs() < 1e-15);
        assert_eq!(img.spacing(), 2.0);
    }

    #[test]
    fn truncated_files_fail_with_offsets() {
        let e = parse_pgm(b"P2\n2 2\n255\n0 255 255\n", 1.0, [0.0; 2]).unwrap_err();
        assert!(matches!(e, Error::Pgm { offset: 21, .. }), "{e:?}");
        let mut data = b"P5\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(parse_pgm(&data, 1.0, [0.0; 2]), Err(Error::Pgm { offset: 14, .. })));
        assert!(matches!(parse_pgm(b"P6\n", 1.0, [0.0; 2]), Err(Error::Pgm { offset: 0, .. })));
        assert!(matches!(parse_pgm(b"P2 2 2 70000\n", 1.0, [0.0; 2]), Err(Error::Pgm { offset: 7, .. })));
    }
}
