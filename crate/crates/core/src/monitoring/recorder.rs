//! Frame recorder: writes RGB frames as a binary PPM (P6) image sequence.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::monitoring::render::Frame;

pub struct Recorder {
    dir: PathBuf,
    dims: Option<(u32, u32)>,
    count: u64,
    paths: Vec<PathBuf>,
    closed: bool,
}

impl Recorder {
    pub fn new(dir: &Path) -> Result<Recorder> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Recorder {
            dir: dir.to_path_buf(),
            dims: None,
            count: 0,
            paths: Vec::new(),
            closed: false,
        })
    }

    /// Writes one frame as `frame_%06d.ppm`. All frames must share
    /// dimensions.
    pub fn record_frame(&mut self, frame: &Frame) -> Result<()> {
        if self.closed {
            return Err(Error::RecorderClosed);
        }
        let Frame::Rgb {
            width,
            height,
            data,
        } = frame
        else {
            return Err(Error::InvalidFrame("recorder accepts rgb_array frames".into()));
        };
        match self.dims {
            None => self.dims = Some((*width, *height)),
            Some(dims) if dims != (*width, *height) => {
                return Err(Error::InvalidFrame(format!(
                    "frame is {}x{}, recording is {}x{}",
                    width, height, dims.0, dims.1
                )));
            }
            Some(_) => {}
        }
        let path = self.dir.join(format!("frame_{:06}.ppm", self.count));
        let mut bytes = format!("P6\n{} {}\n255\n", width, height).into_bytes();
        bytes.extend_from_slice(data);
        let mut file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
        self.count += 1;
        self.paths.push(path);
        Ok(())
    }

    /// Closes the recorder and returns the ordered frame paths.
    pub fn finalize(&mut self) -> Result<Vec<PathBuf>> {
        if self.closed {
            return Err(Error::RecorderClosed);
        }
        self.closed = true;
        Ok(self.paths.clone())
    }
}

/// Parses a binary PPM written by the recorder back into a frame.
pub fn parse_ppm(bytes: &[u8]) -> Result<Frame> {
    let err = |m: &str| Error::InvalidFrame(m.into());
    let header_end = bytes
        .windows(1)
        .enumerate()
        .filter(|(_, w)| w[0] == b'\n')
        .map(|(i, _)| i)
        .nth(2)
        .ok_or_else(|| err("truncated header"))?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| err("bad header"))?;
    let mut lines = header.lines();
    if lines.next() != Some("P6") {
        return Err(err("not a P6 file"));
    }
    let dims: Vec<u32> = lines
        .next()
        .ok_or_else(|| err("missing dims"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err("bad dims")))
        .collect::<Result<_>>()?;
    let data = bytes[header_end + 1..].to_vec();
    if dims.len() != 2 || data.len() != (dims[0] * dims[1] * 3) as usize {
        return Err(err("size mismatch"));
    }
    Ok(Frame::Rgb {
        width: dims[0],
        height: dims[1],
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn red_1x1() -> Frame {
        Frame::Rgb {
            width: 1,
            height: 1,
            data: vec![255, 0, 0],
        }
    }

    #[test]
    fn ppm_bytes_for_red_pixel() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recorder::new(dir.path()).unwrap();
        rec.record_frame(&red_1x1()).unwrap();
        let paths = rec.finalize().unwrap();
        let bytes = std::fs::read(&paths[0]).unwrap();
        let mut expected = b"P6\n1 1\n255\n".to_vec();
        expected.extend_from_slice(&[255, 0, 0]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn frames_are_numbered_in_capture_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recorder::new(dir.path()).unwrap();
        for _ in 0..3 {
            rec.record_frame(&red_1x1()).unwrap();
        }
        let paths = rec.finalize().unwrap();
        let names: Vec<String> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            vec!["frame_000000.ppm", "frame_000001.ppm", "frame_000002.ppm"]
        );
    }

    #[test]
    fn dimension_mismatch_and_double_finalize_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recorder::new(dir.path()).unwrap();
        rec.record_frame(&red_1x1()).unwrap();
        let other = Frame::Rgb {
            width: 2,
            height: 1,
            data: vec![0; 6],
        };
        assert!(matches!(
            rec.record_frame(&other),
            Err(Error::InvalidFrame(_))
        ));
        rec.finalize().unwrap();
        assert!(matches!(rec.finalize(), Err(Error::RecorderClosed)));
    }

    #[test]
    fn written_ppm_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recorder::new(dir.path()).unwrap();
        let frame = Frame::Rgb {
            width: 2,
            height: 2,
            data: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
        };
        rec.record_frame(&frame).unwrap();
        let paths = rec.finalize().unwrap();
        let parsed = parse_ppm(&std::fs::read(&paths[0]).unwrap()).unwrap();
        assert_eq!(parsed, frame);
    }
}
