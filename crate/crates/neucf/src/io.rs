//! Scenario files, calibration documents and P6 pixmaps.

use std::path::{Path, PathBuf};

use neucf_core::geometry::{AffineMap, WorkspaceCalib};
use neucf_core::scenario::{builtin, ScenarioScript, BUILTIN_NAMES};
use neucf_core::vision::RasterImage;
use serde::{Deserialize, Serialize};

pub const BUILTIN_SCHEME: &str = "builtin:";
pub const SCENARIO_EXTENSION: &str = ".scenario.json";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("cannot read {}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", .path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("invalid document: {0}")]
    Validation(String),
    #[error("unknown builtin scenario {0:?} (known: {list})", list = BUILTIN_NAMES.join(", "))]
    UnknownBuiltin(String),
    #[error("bad pixmap: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, IoError>;

/// Parses JSON in two stages so that syntax errors and schema or invariant
/// violations are reported differently.
fn parse_document<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    serde_json::from_value(value).map_err(|e| IoError::Validation(e.to_string()))
}

pub fn parse_scenario(text: &str) -> Result<ScenarioScript> {
    let script: ScenarioScript = parse_document(text)?;
    script.validate().map_err(|e| IoError::Validation(e.to_string()))?;
    Ok(script)
}

pub fn serialize_scenario(script: &ScenarioScript) -> String {
    serde_json::to_string_pretty(script).expect("scenario serialization cannot fail")
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IoError::NotFound(path.to_path_buf()),
        _ => IoError::Read { path: path.to_path_buf(), source },
    })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

/// Resolves `builtin:<name>` or a path to a scenario file.
pub fn load_scenario(source: &str) -> Result<ScenarioScript> {
    match source.strip_prefix(BUILTIN_SCHEME) {
        Some(name) => builtin(name).ok_or_else(|| IoError::UnknownBuiltin(name.to_string())),
        None => parse_scenario(&read_text(Path::new(source))?),
    }
}

/// Camera-to-table calibration as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub affine: AffineMap,
    pub workspace: WorkspaceCalib,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDoc {
    a: [[f64; 2]; 2],
    b: [f64; 2],
    x_max: f64,
    y_max: f64,
    width_cm: f64,
    height_cm: f64,
}

pub fn parse_calibration(text: &str) -> Result<Calibration> {
    let doc: CalibrationDoc = parse_document(text)?;
    let affine = AffineMap { a00: doc.a[0][0], a01: doc.a[0][1], a10: doc.a[1][0], a11: doc.a[1][1], b00: doc.b[0], b10: doc.b[1] };
    let workspace = WorkspaceCalib { x_max_prime: doc.x_max, y_max_prime: doc.y_max, width: doc.width_cm, height: doc.height_cm };
    workspace.validate().map_err(|e| IoError::Validation(e.to_string()))?;
    if affine.inverse().is_none() {
        return Err(IoError::Validation("affine map is not invertible".into()));
    }
    Ok(Calibration { affine, workspace })
}

pub fn serialize_calibration(c: &Calibration) -> String {
    let m = &c.affine;
    let doc = CalibrationDoc {
        a: [[m.a00, m.a01], [m.a10, m.a11]],
        b: [m.b00, m.b10],
        x_max: c.workspace.x_max_prime,
        y_max: c.workspace.y_max_prime,
        width_cm: c.workspace.width,
        height_cm: c.workspace.height,
    };
    serde_json::to_string_pretty(&doc).expect("calibration serialization cannot fail")
}

/// Decodes a binary P6 pixmap with maxval 255.
pub fn decode_ppm(bytes: &[u8]) -> Result<RasterImage> {
    let bad = |m: &str| IoError::Image(m.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P6" {
        return Err(bad("magic is not P6"));
    }
    let mut num = |what: &str| -> Result<usize> { token()?.parse().map_err(|_| bad(&format!("bad {what}"))) };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(bad("maxval must be 255"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    let n = width * height;
    if data.len() < 3 * n {
        return Err(bad("raster shorter than width x height"));
    }
    let pixels = data[..3 * n].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    RasterImage::from_pixels(width, height, pixels).ok_or_else(|| bad("pixel count mismatch"))
}

pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(3 * img.pixels.len());
    for px in &img.pixels {
        out.extend_from_slice(px);
    }
    out
}

pub fn read_ppm(path: &Path) -> Result<RasterImage> {
    let bytes = std::fs::read(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IoError::NotFound(path.to_path_buf()),
        _ => IoError::Read { path: path.to_path_buf(), source },
    })?;
    decode_ppm(&bytes)
}

pub fn write_ppm(path: &Path, img: &RasterImage) -> Result<()> {
    write_file(path, encode_ppm(img))
}

/// Simulation settings; omitted keys keep their defaults, unknown keys are
/// rejected.
pub fn parse_config(text: &str) -> Result<neucf_core::sim::SimConfig> {
    let cfg: neucf_core::sim::SimConfig = parse_document(text)?;
    cfg.validate().map_err(|e| IoError::Validation(e.to_string()))?;
    Ok(cfg)
}
