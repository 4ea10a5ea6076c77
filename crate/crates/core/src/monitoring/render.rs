//! Renderer: turns environment scene descriptions into ANSI text or RGB
//! pixel frames. Pure function of the scene; identical input gives
//! identical bytes.

use crate::env::RenderInfo;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    Ansi,
    RgbArray,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Ansi(String),
    /// Height x width x 3, row-major, entries 0-255.
    Rgb {
        width: u32,
        height: u32,
        data: Vec<u8>,
    },
}

const AGENT_RGB: [u8; 3] = [255, 0, 0];
const GOAL_RGB: [u8; 3] = [0, 255, 0];
const EMPTY_RGB: [u8; 3] = [255, 255, 255];

/// Renders a grid scene. 'A' marks an agent (also when it sits on the
/// goal), 'G' the goal, '.' empty cells; rows are newline-terminated. RGB
/// frames use `scale` x `scale` pixels per cell.
pub fn render(info: &RenderInfo, mode: RenderMode, scale: u32) -> Result<Frame> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be >= 1".into()));
    }
    let RenderInfo::Grid {
        rows,
        cols,
        agents,
        goals,
    } = info
    else {
        return Err(Error::RenderUnsupported);
    };
    match mode {
        RenderMode::Ansi => {
            let mut out = String::with_capacity(((cols + 1) * rows) as usize);
            for r in 0..*rows {
                for c in 0..*cols {
                    let cell = if agents.contains(&(r, c)) {
                        'A'
                    } else if goals.contains(&(r, c)) {
                        'G'
                    } else {
                        '.'
                    };
                    out.push(cell);
                }
                out.push('\n');
            }
            Ok(Frame::Ansi(out))
        }
        RenderMode::RgbArray => {
            let width = *cols as u32 * scale;
            let height = *rows as u32 * scale;
            let mut data = Vec::with_capacity((width * height * 3) as usize);
            for py in 0..height {
                for px in 0..width {
                    let cell = ((py / scale) as u64, (px / scale) as u64);
                    let rgb = if agents.contains(&cell) {
                        AGENT_RGB
                    } else if goals.contains(&cell) {
                        GOAL_RGB
                    } else {
                        EMPTY_RGB
                    };
                    data.extend_from_slice(&rgb);
                }
            }
            Ok(Frame::Rgb {
                width,
                height,
                data,
            })
        }
    }
}
