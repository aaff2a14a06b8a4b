//! YUV4MPEG2 reader and writer.
//!
//! Reading accepts 8-bit `C420*`, `C444` and `Cmono` streams. Chroma of
//! 4:2:0 input is upsampled nearest-neighbour, then converted with BT.601
//! (full range unless `XCOLORRANGE=LIMITED`).
//!
//! The default writer stores the RGB samples unchanged in the three 4:4:4
//! planes and tags the stream `XCOLORSPACE=RGB`, which makes a write/read
//! round-trip bit-exact. [`write_y4m_yuv`] emits a standard YCbCr stream for
//! external players; that path is lossy.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::frame::{Frame, FrameRate, VideoClip};
use crate::error::{Error, Result};

const MAGIC: &str = "YUV4MPEG2";
const RGB_TAG: &str = "XCOLORSPACE=RGB";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C444,
    Mono,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Rgb,
    YCbCr { limited: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Header {
    width: usize,
    height: usize,
    rate: FrameRate,
    chroma: Chroma,
    encoding: Encoding,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut tokens = line.split_ascii_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(Error::MalformedHeader(format!("missing {MAGIC} magic")));
    }
    let mut width = None;
    let mut height = None;
    let mut rate = FrameRate::default();
    let mut chroma = Chroma::C420;
    let mut rgb = false;
    let mut limited = false;
    for tok in tokens {
        let (key, val) = tok.split_at(1);
        match key {
            "W" => width = Some(parse_dim(val, "W")?),
            "H" => height = Some(parse_dim(val, "H")?),
            "F" => {
                let (n, d) = val
                    .split_once(':')
                    .ok_or_else(|| Error::MalformedHeader(format!("frame rate {val}")))?;
                let n = n
                    .parse()
                    .map_err(|_| Error::MalformedHeader(format!("frame rate {val}")))?;
                let d = d
                    .parse()
                    .map_err(|_| Error::MalformedHeader(format!("frame rate {val}")))?;
                rate = FrameRate::new(n, d)
                    .map_err(|_| Error::MalformedHeader(format!("frame rate {val}")))?;
            }
            "C" => {
                chroma = match val {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                    "444" => Chroma::C444,
                    "mono" => Chroma::Mono,
                    other => {
                        return Err(Error::MalformedHeader(format!(
                            "unsupported colorspace C{other}"
                        )))
                    }
                }
            }
            "I" => {
                if val != "p" && val != "?" {
                    return Err(Error::MalformedHeader(format!("interlacing I{val}")));
                }
            }
            "A" => {}
            "X" => match val {
                "COLORSPACE=RGB" => rgb = true,
                "COLORRANGE=LIMITED" => limited = true,
                _ => {}
            },
            _ => return Err(Error::MalformedHeader(format!("unknown parameter {tok}"))),
        }
    }
    let width = width.ok_or_else(|| Error::MalformedHeader("missing W".into()))?;
    let height = height.ok_or_else(|| Error::MalformedHeader("missing H".into()))?;
    if rgb && chroma != Chroma::C444 {
        return Err(Error::MalformedHeader(
            "XCOLORSPACE=RGB requires C444".into(),
        ));
    }
    let encoding = if rgb {
        Encoding::Rgb
    } else {
        Encoding::YCbCr { limited }
    };
    Ok(Header {
        width,
        height,
        rate,
        chroma,
        encoding,
    })
}

fn parse_dim(val: &str, what: &str) -> Result<usize> {
    match val.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::MalformedHeader(format!("{what}{val}"))),
    }
}

impl Header {
    fn plane_sizes(&self) -> (usize, usize) {
        let luma = self.width * self.height;
        let chroma = match self.chroma {
            Chroma::C420 => self.width.div_ceil(2) * self.height.div_ceil(2),
            Chroma::C444 => luma,
            Chroma::Mono => 0,
        };
        (luma, chroma)
    }

    fn frame_bytes(&self) -> usize {
        let (l, c) = self.plane_sizes();
        l + 2 * c
    }
}

#[inline]
fn clamp_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// BT.601 YCbCr to RGB for one sample triple.
pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8, limited: bool) -> [u8; 3] {
    let (y, cb, cr) = if limited {
        (
            (f64::from(y) - 16.0) * 255.0 / 219.0,
            (f64::from(cb) - 128.0) * 255.0 / 224.0,
            (f64::from(cr) - 128.0) * 255.0 / 224.0,
        )
    } else {
        (f64::from(y), f64::from(cb) - 128.0, f64::from(cr) - 128.0)
    };
    [
        clamp_u8(y + 1.402 * cr),
        clamp_u8(y - 0.344_136 * cb - 0.714_136 * cr),
        clamp_u8(y + 1.772 * cb),
    ]
}

/// BT.601 full-range RGB to YCbCr.
pub fn rgb_to_ycbcr([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    [
        clamp_u8(0.299 * r + 0.587 * g + 0.114 * b),
        clamp_u8(128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b),
        clamp_u8(128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b),
    ]
}

fn decode_frame(h: &Header, buf: &[u8]) -> Result<Frame> {
    let (ls, cs) = h.plane_sizes();
    let (yp, rest) = buf.split_at(ls);
    let (up, vp) = rest.split_at(cs);
    let (w, ht) = (h.width, h.height);
    let mut data = Vec::with_capacity(ls * 3);
    match (h.encoding, h.chroma) {
        (Encoding::Rgb, _) => {
            for i in 0..ls {
                data.extend_from_slice(&[yp[i], up[i], vp[i]]);
            }
        }
        (Encoding::YCbCr { limited }, Chroma::C444) => {
            for i in 0..ls {
                data.extend_from_slice(&ycbcr_to_rgb(yp[i], up[i], vp[i], limited));
            }
        }
        (Encoding::YCbCr { limited }, Chroma::C420) => {
            let cw = w.div_ceil(2);
            for y in 0..ht {
                for x in 0..w {
                    let c = (y / 2) * cw + x / 2;
                    data.extend_from_slice(&ycbcr_to_rgb(yp[y * w + x], up[c], vp[c], limited));
                }
            }
        }
        (Encoding::YCbCr { limited }, Chroma::Mono) => {
            for &l in yp {
                data.extend_from_slice(&ycbcr_to_rgb(l, 128, 128, limited));
            }
        }
    }
    Frame::new(w, ht, data)
}

pub fn read_y4m<R: Read>(reader: R) -> Result<VideoClip> {
    let mut reader = BufReader::new(reader);
    let mut line = Vec::new();
    reader
        .read_until(b'\n', &mut line)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if line.last() != Some(&b'\n') {
        return Err(Error::MalformedHeader("unterminated header".into()));
    }
    let text = std::str::from_utf8(&line[..line.len() - 1])
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
    let header = parse_header(text)?;
    let mut frames = Vec::new();
    let mut buf = vec![0u8; header.frame_bytes()];
    loop {
        line.clear();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|_| Error::TruncatedStream { frame: frames.len() })?;
        if n == 0 {
            break;
        }
        if !line.starts_with(b"FRAME") || line.last() != Some(&b'\n') {
            return Err(Error::TruncatedStream { frame: frames.len() });
        }
        reader
            .read_exact(&mut buf)
            .map_err(|_| Error::TruncatedStream { frame: frames.len() })?;
        frames.push(decode_frame(&header, &buf)?);
    }
    VideoClip::new(frames, header.rate)
}

fn write_header<W: Write>(w: &mut W, clip: &VideoClip, tail: &str) -> std::io::Result<()> {
    let r = clip.rate();
    writeln!(
        w,
        "{MAGIC} W{} H{} F{}:{} Ip A1:1 {tail}",
        clip.width(),
        clip.height(),
        r.num,
        r.den
    )
}

/// Lossless RGB-in-4:4:4 encoding.
pub fn write_y4m<W: Write>(mut w: W, clip: &VideoClip) -> std::io::Result<()> {
    write_header(&mut w, clip, &format!("C444 {RGB_TAG}"))?;
    let n = clip.width() * clip.height();
    let mut planes = vec![0u8; n * 3];
    for frame in clip.frames() {
        for (i, p) in frame.data().chunks_exact(3).enumerate() {
            planes[i] = p[0];
            planes[n + i] = p[1];
            planes[2 * n + i] = p[2];
        }
        w.write_all(b"FRAME\n")?;
        w.write_all(&planes)?;
    }
    w.flush()
}

/// Standard BT.601 full-range YCbCr stream, 4:4:4 or 4:2:0 (box-averaged chroma).
pub fn write_y4m_yuv<W: Write>(mut w: W, clip: &VideoClip, chroma: Chroma) -> std::io::Result<()> {
    let tag = match chroma {
        Chroma::C420 => "C420jpeg",
        Chroma::C444 => "C444",
        Chroma::Mono => "Cmono",
    };
    write_header(&mut w, clip, tag)?;
    let (wd, ht) = clip.dims();
    for frame in clip.frames() {
        let ycc: Vec<[u8; 3]> = frame.pixels().map(rgb_to_ycbcr).collect();
        w.write_all(b"FRAME\n")?;
        let luma: Vec<u8> = ycc.iter().map(|p| p[0]).collect();
        w.write_all(&luma)?;
        match chroma {
            Chroma::Mono => {}
            Chroma::C444 => {
                for c in 1..3 {
                    let plane: Vec<u8> = ycc.iter().map(|p| p[c]).collect();
                    w.write_all(&plane)?;
                }
            }
            Chroma::C420 => {
                for c in 1..3 {
                    let mut plane = Vec::with_capacity(wd.div_ceil(2) * ht.div_ceil(2));
                    for cy in 0..ht.div_ceil(2) {
                        for cx in 0..wd.div_ceil(2) {
                            let mut sum = 0u32;
                            let mut cnt = 0u32;
                            for y in (2 * cy)..(2 * cy + 2).min(ht) {
                                for x in (2 * cx)..(2 * cx + 2).min(wd) {
                                    sum += u32::from(ycc[y * wd + x][c]);
                                    cnt += 1;
                                }
                            }
                            plane.push(((sum + cnt / 2) / cnt) as u8);
                        }
                    }
                    w.write_all(&plane)?;
                }
            }
        }
    }
    w.flush()
}

pub fn read_y4m_file(path: &Path) -> Result<VideoClip> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_y4m(file)
}
