//! Label maps as PGM images: `P2` (ASCII) and `P5` (binary, maxval <= 255).
//! Pixel value = class label.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::LabelMap;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,
    #[default]
    Binary,
}

pub fn load_pgm(path: impl AsRef<Path>, num_classes: Option<usize>) -> Result<LabelMap> {
    decode_pgm(&fs::read(path)?, num_classes)
}

pub fn save_pgm(map: &LabelMap, path: impl AsRef<Path>, encoding: PgmEncoding) -> Result<()> {
    fs::write(path, encode_pgm(map, encoding)?)?;
    Ok(())
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("non-ASCII PGM header".into()))?,
        );
    }
    let binary = match fields[0] {
        "P2" => false,
        "P5" => true,
        other => return Err(Error::Format(format!("unsupported magic {other:?}"))),
    };
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM {what} {s:?}")))
    };
    let width = num(fields[1], "width")?;
    let height = num(fields[2], "height")?;
    let maxval = num(fields[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("PGM size {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 || (binary && maxval > 255) {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from binary data
    if pos >= bytes.len() && binary {
        return Err(Error::Format("missing PGM raster".into()));
    }
    Ok(Header {
        binary,
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

/// Decode PGM bytes. The class count defaults to `maxval + 1`.
pub fn decode_pgm(bytes: &[u8], num_classes: Option<usize>) -> Result<LabelMap> {
    let h = parse_header(bytes)?;
    let count = h.width * h.height;
    let labels: Vec<u32> = if h.binary {
        let data = bytes.get(h.data_start..).unwrap_or_default();
        if data.len() < count {
            return Err(Error::Format(format!(
                "P5 raster holds {} of {count} pixels",
                data.len()
            )));
        }
        data[..count].iter().map(|&b| u32::from(b)).collect()
    } else {
        let text = std::str::from_utf8(bytes.get(h.data_start.min(bytes.len())..).unwrap_or_default())
            .map_err(|_| Error::Format("non-ASCII P2 raster".into()))?;
        let labels = text
            .split_ascii_whitespace()
            .take(count)
            .map(|t| t.parse::<u32>().map_err(|_| Error::Format(format!("bad P2 sample {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if labels.len() < count {
            return Err(Error::Format(format!("P2 raster holds {} of {count} pixels", labels.len())));
        }
        labels
    };
    if let Some(&v) = labels.iter().find(|&&v| v as usize > h.maxval) {
        return Err(Error::Format(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    LabelMap::new(h.height, h.width, num_classes.unwrap_or(h.maxval + 1), labels)
}

/// Encode with `maxval = max(C - 1, 1)`.
pub fn encode_pgm(map: &LabelMap, encoding: PgmEncoding) -> Result<Vec<u8>> {
    let maxval = map.num_classes().saturating_sub(1).max(1);
    let header = |magic: &str| format!("{magic}\n{} {}\n{maxval}\n", map.width(), map.height());
    match encoding {
        PgmEncoding::Binary => {
            if maxval > 255 {
                return Err(Error::InvalidInput(format!(
                    "{} classes do not fit an 8-bit P5 raster",
                    map.num_classes()
                )));
            }
            let mut out = header("P5").into_bytes();
            out.extend(map.labels().iter().map(|&l| l as u8));
            Ok(out)
        }
        PgmEncoding::Ascii => {
            let mut out = header("P2");
            for row in map.labels().chunks(map.width()) {
                let line: Vec<String> = row.iter().map(u32::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            Ok(out.into_bytes())
        }
    }
}
