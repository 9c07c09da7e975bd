//! KITTI-tracking style text formats.
//!
//! Detections, one per line (17 fields):
//! `frame class truncated occluded alpha bb_l bb_t bb_r bb_b h w l x y z rot_y score`
//!
//! Labels and tracking results (17 or 18 fields, score optional):
//! `frame track_id class truncated occluded alpha bb_l bb_t bb_r bb_b h w l x y z rot_y [score]`
//!
//! Poses, one line per frame: 12 numbers, the row-major 3×4 matrix `[R|t]`.
//!
//! Boxes are center-anchored unless [`BoxConvention::z_is_bottom`] is set, in
//! which case the file's `z` is the bottom face and `cz = z + h/2`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::{Box3D, Frame, GeometryError, Pose};
use crate::tracker::FrameResult;

/// Frames beyond this index are rejected as corrupt input.
pub const MAX_FRAME_INDEX: u32 = 10_000_000;

/// Object classes accepted on input.
pub const KNOWN_CLASSES: &[&str] = &[
    "Car",
    "Van",
    "Truck",
    "Pedestrian",
    "Person_sitting",
    "Person",
    "Cyclist",
    "Tram",
    "Misc",
];

const DONT_CARE: &str = "DontCare";
const POSE_DRIFT_WARN: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IoKittiError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoKittiError + '_ {
    move |source| IoKittiError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path) -> impl FnOnce(ParseError) -> IoKittiError + '_ {
    move |source| IoKittiError::Parse {
        path: path.to_path_buf(),
        source,
    }
}

/// Vertical anchoring of boxes in text files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoxConvention {
    pub z_is_bottom: bool,
}

/// Image-plane fields carried through unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageFields {
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox_2d: [f64; 4],
}

impl Default for ImageFields {
    fn default() -> Self {
        ImageFields {
            truncated: 0.0,
            occluded: 0,
            alpha: -10.0,
            bbox_2d: [0.0; 4],
        }
    }
}

/// One detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection3D {
    pub frame: u32,
    pub class_label: String,
    pub bbox: Box3D,
    pub score: f64,
    pub image: ImageFields,
}

/// One ground-truth (or tracker output) box with identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrack {
    pub frame: u32,
    pub track_id: u64,
    pub class_label: String,
    pub bbox: Box3D,
    pub score: Option<f64>,
    pub image: ImageFields,
}

/// Records indexed by frame; `stream[f]` holds frame `f`'s records.
pub type FrameStream<T> = Vec<Vec<T>>;

struct Fields<'a> {
    line: usize,
    tokens: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            message: message.into(),
        }
    }

    fn f64_at(&self, i: usize, name: &str) -> Result<f64, ParseError> {
        let v: f64 = self.tokens[i]
            .parse()
            .map_err(|_| self.err(format!("{name}: cannot parse {:?} as a number", self.tokens[i])))?;
        if !v.is_finite() {
            return Err(self.err(format!("{name}: value must be finite")));
        }
        Ok(v)
    }

    fn frame_at(&self, i: usize) -> Result<u32, ParseError> {
        let f: u32 = self.tokens[i]
            .parse()
            .map_err(|_| self.err(format!("frame: cannot parse {:?}", self.tokens[i])))?;
        if f > MAX_FRAME_INDEX {
            return Err(self.err(format!("frame index {f} exceeds {MAX_FRAME_INDEX}")));
        }
        Ok(f)
    }

    /// Parses `truncated occluded alpha bb×4 h w l x y z ry` starting at `i`.
    fn geometry_at(
        &self,
        i: usize,
        conv: BoxConvention,
    ) -> Result<(ImageFields, Box3D), ParseError> {
        let truncated = self.f64_at(i, "truncated")?;
        let occluded: i32 = self.tokens[i + 1]
            .parse()
            .map_err(|_| self.err(format!("occluded: cannot parse {:?}", self.tokens[i + 1])))?;
        let alpha = self.f64_at(i + 2, "alpha")?;
        let mut bbox_2d = [0.0; 4];
        for (k, slot) in bbox_2d.iter_mut().enumerate() {
            *slot = self.f64_at(i + 3 + k, "bbox")?;
        }
        let h = self.f64_at(i + 7, "h")?;
        let w = self.f64_at(i + 8, "w")?;
        let l = self.f64_at(i + 9, "l")?;
        let x = self.f64_at(i + 10, "x")?;
        let y = self.f64_at(i + 11, "y")?;
        let z = self.f64_at(i + 12, "z")?;
        let ry = self.f64_at(i + 13, "rot_y")?;
        let cz = if conv.z_is_bottom { z + 0.5 * h } else { z };
        let bbox = Box3D::new([x, y, cz], l, w, h, ry, Frame::Lidar)
            .map_err(|e: GeometryError| self.err(e.to_string()))?;
        Ok((
            ImageFields {
                truncated,
                occluded,
                alpha,
                bbox_2d,
            },
            bbox,
        ))
    }
}

fn lines(text: &str) -> impl Iterator<Item = Fields<'_>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Fields {
            line: i + 1,
            tokens: l.split_whitespace().collect(),
        })
}

fn decode(bytes: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() + 1;
        ParseError {
            line,
            message: "invalid UTF-8".into(),
        }
    })
}

fn class_is_known(class: &str, line: usize) -> bool {
    if class == DONT_CARE {
        return false;
    }
    if KNOWN_CLASSES.contains(&class) {
        return true;
    }
    warn!("line {line}: skipping unknown class {class:?}");
    false
}

fn group<T>(records: Vec<(u32, T)>) -> FrameStream<T> {
    let n = records.iter().map(|(f, _)| *f as usize + 1).max().unwrap_or(0);
    let mut out: FrameStream<T> = (0..n).map(|_| Vec::new()).collect();
    for (f, r) in records {
        out[f as usize].push(r);
    }
    out
}

pub fn parse_detections(bytes: &[u8], conv: BoxConvention) -> Result<FrameStream<Detection3D>, ParseError> {
    let text = decode(bytes)?;
    let mut records = Vec::new();
    for f in lines(text) {
        if f.tokens.len() != 17 {
            return Err(f.err(format!("expected 17 fields, found {}", f.tokens.len())));
        }
        let frame = f.frame_at(0)?;
        let class = f.tokens[1];
        if !class_is_known(class, f.line) {
            continue;
        }
        let (image, bbox) = f.geometry_at(2, conv)?;
        let score = f.f64_at(16, "score")?;
        records.push((
            frame,
            Detection3D {
                frame,
                class_label: class.to_string(),
                bbox,
                score,
                image,
            },
        ));
    }
    Ok(group(records))
}

/// Parses label or result files. `DontCare` rows are ignored.
pub fn parse_tracks(bytes: &[u8], conv: BoxConvention) -> Result<FrameStream<LabeledTrack>, ParseError> {
    let text = decode(bytes)?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for f in lines(text) {
        if f.tokens.len() != 17 && f.tokens.len() != 18 {
            return Err(f.err(format!("expected 17 or 18 fields, found {}", f.tokens.len())));
        }
        let frame = f.frame_at(0)?;
        let raw_id: i64 = f.tokens[1]
            .parse()
            .map_err(|_| f.err(format!("track_id: cannot parse {:?}", f.tokens[1])))?;
        let class = f.tokens[2];
        if !class_is_known(class, f.line) {
            continue;
        }
        let (image, bbox) = f.geometry_at(3, conv)?;
        let score = if f.tokens.len() == 18 {
            Some(f.f64_at(17, "score")?)
        } else {
            None
        };
        let track_id = u64::try_from(raw_id)
            .map_err(|_| f.err(format!("negative track_id {raw_id} for class {class}")))?;
        if !seen.insert((frame, track_id)) {
            return Err(f.err(format!("duplicate track_id {track_id} in frame {frame}")));
        }
        records.push((
            frame,
            LabeledTrack {
                frame,
                track_id,
                class_label: class.to_string(),
                bbox,
                score,
                image,
            },
        ));
    }
    Ok(group(records))
}

pub fn parse_poses(bytes: &[u8]) -> Result<Vec<Pose>, ParseError> {
    let text = decode(bytes)?;
    let mut poses = Vec::new();
    for f in lines(text) {
        if f.tokens.len() != 12 {
            return Err(f.err(format!("expected 12 fields, found {}", f.tokens.len())));
        }
        let mut v = [0.0; 12];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = f.f64_at(i, "pose")?;
        }
        let raw = Pose {
            rotation: Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]),
            translation: Vector3::new(v[3], v[7], v[11]),
        };
        let pose = if raw.validate().is_ok() {
            raw
        } else {
            let drift = raw.orthonormality_error();
            if drift > POSE_DRIFT_WARN {
                warn!("line {}: re-orthonormalizing pose rotation (drift {drift:e})", f.line);
            }
            raw.orthonormalized().map_err(|e| f.err(e.to_string()))?
        };
        poses.push(pose);
    }
    Ok(poses)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, IoKittiError> {
    fs::read(path).map_err(io_err(path))
}

pub fn read_detections(
    path: impl AsRef<Path>,
    conv: BoxConvention,
) -> Result<FrameStream<Detection3D>, IoKittiError> {
    let path = path.as_ref();
    parse_detections(&read_bytes(path)?, conv).map_err(parse_err(path))
}

pub fn read_tracks(
    path: impl AsRef<Path>,
    conv: BoxConvention,
) -> Result<FrameStream<LabeledTrack>, IoKittiError> {
    let path = path.as_ref();
    parse_tracks(&read_bytes(path)?, conv).map_err(parse_err(path))
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Vec<Pose>, IoKittiError> {
    let path = path.as_ref();
    parse_poses(&read_bytes(path)?).map_err(parse_err(path))
}

fn push_geometry(out: &mut String, image: &ImageFields, b: &Box3D, conv: BoxConvention) {
    let z = if conv.z_is_bottom {
        b.cz - 0.5 * b.height
    } else {
        b.cz
    };
    let [l, t, r, btm] = image.bbox_2d;
    // Infallible for String.
    let _ = write!(
        out,
        "{} {} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
        image.truncated,
        image.occluded,
        image.alpha,
        l,
        t,
        r,
        btm,
        b.height,
        b.width,
        b.length,
        b.cx,
        b.cy,
        z,
        b.yaw
    );
}

pub fn format_detection(d: &Detection3D, conv: BoxConvention) -> String {
    let mut s = format!("{} {} ", d.frame, d.class_label);
    push_geometry(&mut s, &d.image, &d.bbox, conv);
    let _ = write!(s, " {:.6}", d.score);
    s
}

pub fn format_track(t: &LabeledTrack, conv: BoxConvention) -> String {
    let mut s = format!("{} {} {} ", t.frame, t.track_id, t.class_label);
    push_geometry(&mut s, &t.image, &t.bbox, conv);
    if let Some(score) = t.score {
        let _ = write!(s, " {score:.6}");
    }
    s
}

pub fn format_pose(p: &Pose) -> String {
    let r = &p.rotation;
    let t = &p.translation;
    format!(
        "{:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
        r[(0, 0)],
        r[(0, 1)],
        r[(0, 2)],
        t.x,
        r[(1, 0)],
        r[(1, 1)],
        r[(1, 2)],
        t.y,
        r[(2, 0)],
        r[(2, 1)],
        r[(2, 2)],
        t.z
    )
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<(), IoKittiError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = io::BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Result rows sorted by frame, then track id.
pub fn result_rows(results: &[FrameResult]) -> Vec<LabeledTrack> {
    let mut rows: Vec<LabeledTrack> = results
        .iter()
        .flat_map(|fr| {
            fr.tracks.iter().map(move |t| LabeledTrack {
                frame: fr.frame,
                track_id: t.id,
                class_label: t.class_label.clone(),
                bbox: t.bbox,
                score: Some(t.score),
                image: ImageFields::default(),
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.track_id));
    rows
}

pub fn write_results(
    path: impl AsRef<Path>,
    results: &[FrameResult],
    conv: BoxConvention,
) -> Result<(), IoKittiError> {
    let rows = result_rows(results);
    write_lines(path.as_ref(), rows.iter().map(|r| format_track(r, conv)))
}

pub fn write_detections(
    path: impl AsRef<Path>,
    frames: &[Vec<Detection3D>],
    conv: BoxConvention,
) -> Result<(), IoKittiError> {
    write_lines(
        path.as_ref(),
        frames.iter().flatten().map(|d| format_detection(d, conv)),
    )
}

pub fn write_labels(
    path: impl AsRef<Path>,
    frames: &[Vec<LabeledTrack>],
    conv: BoxConvention,
) -> Result<(), IoKittiError> {
    write_lines(
        path.as_ref(),
        frames.iter().flatten().map(|t| format_track(t, conv)),
    )
}

pub fn write_poses(path: impl AsRef<Path>, poses: &[Pose]) -> Result<(), IoKittiError> {
    write_lines(path.as_ref(), poses.iter().map(format_pose))
}
