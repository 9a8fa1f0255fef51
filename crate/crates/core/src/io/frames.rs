//! Frame sources: numbered image directories and the raw RGB pipe format.
//!
//! The raw format is a 16-byte header (`HRZN`, then width, height and frame
//! count as little-endian `u32`) followed by `width * height * 3` bytes per
//! frame. A frame count of 0 means "until end of stream". Compressed video
//! is handled by an external decoder that writes this format, either piped
//! on stdin (`-`) or spawned with a `cmd:` source.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use crate::error::{Error, Result};
use crate::io::images::load_image;
use crate::preprocess::Frame;

pub const RAW_MAGIC: [u8; 4] = *b"HRZN";
pub const RAW_HEADER_LEN: usize = 16;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Trailing decimal digits of the file stem, e.g. `frame_0042.png` -> 42.
pub fn frame_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    stem[stem.len() - digits..].parse().ok()
}

/// Images of a directory in index order. Gaps in the numbering surface as
/// a `MissingFrame` item at the position of the gap.
#[derive(Debug)]
pub struct DirectorySource {
    entries: std::vec::IntoIter<(u64, PathBuf)>,
    expected: Option<u64>,
    pending: Option<(u64, PathBuf)>,
}

impl DirectorySource {
    pub fn open(dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if !is_image(&path) {
                continue;
            }
            if let Some(n) = frame_number(&path) {
                entries.push((n, path));
            }
        }
        entries.sort();
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateFrame(w[0].0));
        }
        Ok(DirectorySource {
            entries: entries.into_iter(),
            expected: None,
            pending: None,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len() + self.pending.is_some() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Iterator for DirectorySource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        let (index, path) = self.pending.take().or_else(|| self.entries.next())?;
        if let Some(expected) = self.expected {
            if index > expected {
                self.expected = Some(index);
                self.pending = Some((index, path));
                return Some(Err(Error::MissingFrame(expected)));
            }
        }
        self.expected = Some(index + 1);
        Some(
            load_image(&path)
                .map(|f| f.with_index(index))
                .map_err(|e| Error::Frame {
                    index,
                    reason: e.to_string(),
                }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawHeader {
    pub width: u32,
    pub height: u32,
    /// 0 when unknown.
    pub frames: u32,
}

impl RawHeader {
    pub fn to_bytes(self) -> [u8; RAW_HEADER_LEN] {
        let mut out = [0u8; RAW_HEADER_LEN];
        out[..4].copy_from_slice(&RAW_MAGIC);
        out[4..8].copy_from_slice(&self.width.to_le_bytes());
        out[8..12].copy_from_slice(&self.height.to_le_bytes());
        out[12..].copy_from_slice(&self.frames.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8; RAW_HEADER_LEN]) -> Result<Self> {
        if bytes[..4] != RAW_MAGIC {
            return Err(Error::UnsupportedSource("raw stream does not start with HRZN".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let h = RawHeader {
            width: word(4),
            height: word(8),
            frames: word(12),
        };
        if h.width == 0 || h.height == 0 {
            return Err(Error::InvalidFrame(format!(
                "raw header has size {}x{}",
                h.width, h.height
            )));
        }
        Ok(h)
    }

    pub fn frame_bytes(&self) -> usize {
        self.width as usize * self.height as usize * 3
    }
}

/// Reads frames from a raw RGB stream.
#[derive(Debug)]
pub struct RawVideoReader<R: Read> {
    reader: R,
    header: RawHeader,
    next_index: u64,
    done: bool,
}

impl<R: Read> RawVideoReader<R> {
    pub fn new(mut reader: R) -> Result<Self> {
        let mut buf = [0u8; RAW_HEADER_LEN];
        reader.read_exact(&mut buf).map_err(|e| Error::io("<raw stream>", e))?;
        Ok(RawVideoReader {
            reader,
            header: RawHeader::parse(&buf)?,
            next_index: 0,
            done: false,
        })
    }

    pub fn header(&self) -> RawHeader {
        self.header
    }

    /// Fills `buf`; `Ok(false)` on a clean end of stream before any byte.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<bool> {
        let mut read = 0;
        while read < buf.len() {
            match self.reader.read(&mut buf[read..]) {
                Ok(0) if read == 0 => return Ok(false),
                Ok(0) => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated frame")),
                Ok(n) => read += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    }
}

impl<R: Read> Iterator for RawVideoReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || (self.header.frames != 0 && self.next_index >= self.header.frames as u64) {
            return None;
        }
        let index = self.next_index;
        let mut data = vec![0u8; self.header.frame_bytes()];
        match self.fill(&mut data) {
            Ok(true) => {}
            Ok(false) if self.header.frames == 0 => {
                self.done = true;
                return None;
            }
            Ok(false) => {
                self.done = true;
                return Some(Err(Error::Frame {
                    index,
                    reason: "stream ended early".into(),
                }));
            }
            Err(e) => {
                self.done = true;
                return Some(Err(Error::Frame {
                    index,
                    reason: e.to_string(),
                }));
            }
        }
        self.next_index += 1;
        Some(Frame::rgb(self.header.width as usize, self.header.height as usize, data).map(|f| f.with_index(index)))
    }
}

/// Writes a raw RGB stream.
#[derive(Debug)]
pub struct RawVideoWriter<W: Write> {
    writer: W,
    header: RawHeader,
}

impl<W: Write> RawVideoWriter<W> {
    pub fn new(mut writer: W, header: RawHeader) -> io::Result<Self> {
        writer.write_all(&header.to_bytes())?;
        Ok(RawVideoWriter { writer, header })
    }

    pub fn write_frame(&mut self, frame: &Frame) -> io::Result<()> {
        if frame.width() != self.header.width as usize || frame.height() != self.header.height as usize {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "frame size differs from header",
            ));
        }
        if frame.channels() == 3 {
            self.writer.write_all(frame.data())
        } else {
            let rgb: Vec<u8> = frame.data().iter().flat_map(|&v| [v, v, v]).collect();
            self.writer.write_all(&rgb)
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.writer.flush()?;
        Ok(self.writer)
    }
}

/// A decoder subprocess; waited on when dropped.
#[derive(Debug)]
struct ChildGuard(Child);

impl Drop for ChildGuard {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

/// Any supported frame source, as one iterator.
pub enum FrameSource {
    Directory(DirectorySource),
    Raw(RawVideoReader<Box<dyn Read + Send>>),
    Single(Option<Result<Frame>>),
}

impl std::fmt::Debug for FrameSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrameSource::Directory(d) => f.debug_tuple("Directory").field(&d.len()).finish(),
            FrameSource::Raw(r) => f.debug_tuple("Raw").field(&r.header()).finish(),
            FrameSource::Single(_) => f.write_str("Single"),
        }
    }
}

impl Iterator for FrameSource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            FrameSource::Directory(d) => d.next(),
            FrameSource::Raw(r) => r.next(),
            FrameSource::Single(s) => s.take(),
        }
    }
}

/// Keeps a spawned decoder alive for as long as its output is read.
struct ChildReader {
    stdout: std::process::ChildStdout,
    _child: ChildGuard,
}

impl Read for ChildReader {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.stdout.read(buf)
    }
}

/// Opens a frame source:
/// - a directory of numbered PNG/JPEG images;
/// - a single image file (one frame, index 0 unless the name is numbered);
/// - a file in the raw format;
/// - `-` for the raw format on stdin;
/// - `cmd:<shell command>` for a decoder writing the raw format to stdout.
pub fn load_frames(spec: &str) -> Result<FrameSource> {
    if spec == "-" {
        return Ok(FrameSource::Raw(RawVideoReader::new(
            Box::new(io::stdin()) as Box<dyn Read + Send>
        )?));
    }
    if let Some(cmd) = spec.strip_prefix("cmd:") {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdout(Stdio::piped())
            .stdin(Stdio::null())
            .spawn()
            .map_err(|e| Error::io(cmd, e))?;
        let stdout = child.stdout.take().expect("stdout was piped");
        let reader = ChildReader {
            stdout,
            _child: ChildGuard(child),
        };
        return Ok(FrameSource::Raw(RawVideoReader::new(
            Box::new(reader) as Box<dyn Read + Send>
        )?));
    }
    let path = Path::new(spec);
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_dir() {
        return Ok(FrameSource::Directory(DirectorySource::open(path)?));
    }
    if is_image(path) {
        let index = frame_number(path).unwrap_or(0);
        return Ok(FrameSource::Single(Some(load_image(path).map(|f| f.with_index(index)))));
    }
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    if file.read_exact(&mut magic).is_err() || magic != RAW_MAGIC {
        return Err(Error::UnsupportedSource(format!(
            "{spec}: not an image directory, image file or HRZN raw stream; decode it with `cmd:`"
        )));
    }
    let reader = io::Cursor::new(magic).chain(io::BufReader::new(file));
    Ok(FrameSource::Raw(RawVideoReader::new(
        Box::new(reader) as Box<dyn Read + Send>
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::images::save_frame;

    fn tiny(v: u8) -> Frame {
        Frame::rgb(4, 3, vec![v; 36]).unwrap()
    }

    #[test]
    fn numbering() {
        assert_eq!(frame_number(Path::new("a/000.png")), Some(0));
        assert_eq!(frame_number(Path::new("frame_0042.jpg")), Some(42));
        assert_eq!(frame_number(Path::new("cover.png")), None);
    }

    #[test]
    fn directory_in_order() {
        let dir = tempfile::tempdir().unwrap();
        for i in (0..10).rev() {
            save_frame(&tiny(i as u8 * 10), &dir.path().join(format!("{i:03}.png"))).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let frames: Vec<Frame> = load_frames(dir.path().to_str().unwrap())
            .unwrap()
            .map(|f| f.unwrap())
            .collect();
        assert_eq!(
            frames.iter().map(|f| f.frame_index).collect::<Vec<_>>(),
            (0..10).collect::<Vec<_>>()
        );
        assert_eq!(frames[7].data()[0], 70);
    }

    #[test]
    fn empty_directory_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load_frames(dir.path().to_str().unwrap()).unwrap().count(), 0);
    }

    #[test]
    fn gap_names_missing_index() {
        let dir = tempfile::tempdir().unwrap();
        for i in [0, 1, 3] {
            save_frame(&tiny(1), &dir.path().join(format!("{i}.png"))).unwrap();
        }
        let items: Vec<Result<Frame>> = load_frames(dir.path().to_str().unwrap()).unwrap().collect();
        assert_eq!(items.len(), 4);
        assert!(matches!(items[2], Err(Error::MissingFrame(2))));
        assert_eq!(items[3].as_ref().unwrap().frame_index, 3);
    }

    #[test]
    fn corrupt_file_reports_index() {
        let dir = tempfile::tempdir().unwrap();
        save_frame(&tiny(1), &dir.path().join("0.png")).unwrap();
        std::fs::write(dir.path().join("1.png"), b"not a png").unwrap();
        let items: Vec<Result<Frame>> = load_frames(dir.path().to_str().unwrap()).unwrap().collect();
        assert!(matches!(items[1], Err(Error::Frame { index: 1, .. })));
    }

    #[test]
    fn raw_round_trip() {
        let header = RawHeader {
            width: 4,
            height: 3,
            frames: 2,
        };
        let mut w = RawVideoWriter::new(Vec::new(), header).unwrap();
        w.write_frame(&tiny(5)).unwrap();
        w.write_frame(&tiny(9)).unwrap();
        let bytes = w.finish().unwrap();
        assert_eq!(bytes.len(), RAW_HEADER_LEN + 2 * 36);
        let frames: Vec<Frame> = RawVideoReader::new(&bytes[..]).unwrap().map(|f| f.unwrap()).collect();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].frame_index, 1);
        assert_eq!(frames[1].data(), tiny(9).data());
    }

    #[test]
    fn raw_unknown_count_reads_to_end() {
        let mut bytes = RawHeader {
            width: 4,
            height: 3,
            frames: 0,
        }
        .to_bytes()
        .to_vec();
        bytes.extend(std::iter::repeat_n(7u8, 36 * 3));
        assert_eq!(RawVideoReader::new(&bytes[..]).unwrap().count(), 3);
        bytes.extend([1, 2, 3]);
        let last = RawVideoReader::new(&bytes[..]).unwrap().last().unwrap();
        assert!(matches!(last, Err(Error::Frame { index: 3, .. })));
    }

    #[test]
    fn raw_truncated_with_known_count() {
        let mut bytes = RawHeader {
            width: 4,
            height: 3,
            frames: 2,
        }
        .to_bytes()
        .to_vec();
        bytes.extend([0u8; 36]);
        let items: Vec<_> = RawVideoReader::new(&bytes[..]).unwrap().collect();
        assert!(items[0].is_ok());
        assert!(matches!(items[1], Err(Error::Frame { index: 1, .. })));
    }

    #[test]
    fn raw_file_and_subprocess() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.hrzn");
        let mut w = RawVideoWriter::new(
            std::fs::File::create(&path).unwrap(),
            RawHeader {
                width: 4,
                height: 3,
                frames: 1,
            },
        )
        .unwrap();
        w.write_frame(&tiny(3)).unwrap();
        w.finish().unwrap();
        assert_eq!(load_frames(path.to_str().unwrap()).unwrap().count(), 1);
        let cmd = format!("cmd:cat '{}'", path.display());
        let frames: Vec<_> = load_frames(&cmd).unwrap().collect();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].as_ref().unwrap().data(), tiny(3).data());
    }

    #[test]
    fn unsupported_container() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.mp4");
        std::fs::write(&path, b"\0\0\0 ftypisom").unwrap();
        assert!(matches!(
            load_frames(path.to_str().unwrap()),
            Err(Error::UnsupportedSource(_))
        ));
    }
}
