//! Frame and clip data model plus lossless clip I/O (Y4M and PNG
//! directories).

mod frame;
mod png_dir;
pub mod y4m;

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use frame::{to_luma, Frame, FrameRate, LumaPlane, VideoClip, BT601_WEIGHTS, MIN_SIDE};
pub use png_dir::frame_name;

use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClipFormat {
    Y4m,
    PngDir,
}

impl ClipFormat {
    /// `.y4m` files are Y4M, anything else is taken to be a PNG directory.
    pub fn infer(path: &Path) -> ClipFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("y4m") => ClipFormat::Y4m,
            _ => ClipFormat::PngDir,
        }
    }
}

impl FromStr for ClipFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "y4m" => Ok(ClipFormat::Y4m),
            "png-dir" | "png" => Ok(ClipFormat::PngDir),
            other => Err(Error::InvalidParameter(format!("unknown clip format {other}"))),
        }
    }
}

pub fn read_clip(path: &Path, format: ClipFormat) -> Result<VideoClip> {
    match format {
        ClipFormat::Y4m => y4m::read_y4m_file(path),
        ClipFormat::PngDir => png_dir::read_png_dir(path),
    }
}

/// Writes `clip` atomically; an existing file or directory is replaced.
pub fn write_clip(clip: &VideoClip, path: &Path, format: ClipFormat) -> Result<()> {
    if clip.is_empty() {
        return Err(Error::EmptyClip);
    }
    match format {
        ClipFormat::Y4m => fsutil::atomic_write(path, |w| y4m::write_y4m(w, clip)),
        ClipFormat::PngDir => fsutil::atomic_dir(path, |dir| png_dir::write_png_dir(dir, clip)),
    }
}
