//! Directories of `frame_%06d.png` files, 1-based. The frame rate lives in
//! an optional `clip.json` sidecar; without it 25 fps is assumed.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frame::{Frame, FrameRate, VideoClip};
use crate::error::{Error, Result};

const SIDECAR: &str = "clip.json";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    fps_num: u32,
    fps_den: u32,
}

pub fn frame_name(index: usize) -> String {
    format!("frame_{:06}.png", index + 1)
}

fn png_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn read_png(path: &Path) -> Result<Frame> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(file);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| png_err(path, e))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| png_err(path, e))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let src = &buf[..info.buffer_size()];
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => src.to_vec(),
        png::ColorType::Rgba => src.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => src.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => src.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        other => return Err(png_err(path, format!("unsupported color type {other:?}"))),
    };
    Frame::new(w, h, data).map_err(|e| png_err(path, e))
}

fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), frame.width() as u32, frame.height() as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| png_err(path, e))?;
    writer.write_image_data(frame.data()).map_err(|e| png_err(path, e))?;
    writer.finish().map_err(|e| png_err(path, e))
}

pub fn read_png_dir(dir: &Path) -> Result<VideoClip> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("frame_") && n.ends_with(".png"))
        .collect();
    names.sort();
    let frames = names
        .iter()
        .map(|n| read_png(&dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    let side = dir.join(SIDECAR);
    let rate = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let s: Sidecar = serde_json::from_str(&text).map_err(|e| Error::json(side.display().to_string(), e))?;
        FrameRate::new(s.fps_num, s.fps_den)?
    } else {
        FrameRate::default()
    };
    VideoClip::new(frames, rate)
}

/// Writes into an existing, empty directory.
pub fn write_png_dir(dir: &Path, clip: &VideoClip) -> Result<()> {
    for (i, f) in clip.frames().iter().enumerate() {
        write_png(&dir.join(frame_name(i)), f)?;
    }
    let r = clip.rate();
    let side = serde_json::to_vec_pretty(&Sidecar {
        fps_num: r.num,
        fps_den: r.den,
    })
    .map_err(|e| Error::json("clip sidecar", e))?;
    fs::write(dir.join(SIDECAR), side).map_err(|e| Error::io(dir.join(SIDECAR), e))
}
