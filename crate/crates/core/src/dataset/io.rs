//! Comma-separated detection and labelled-sample files.
//!
//! Detection file header: `image_id,u,v,bbox_w,bbox_h,confidence,d00..d24`,
//! optionally followed by `n000..` density-window cells. Depth cells are in
//! metres with `0` marking an invalid reading. The labelled-sample cache
//! carries the detection columns plus `x,y,z,label` and the remaining feature
//! columns `range,az,el,sigma_z,a_bbox,d_local`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dataset::{DetectionRecord, LabeledSample};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Neighborhood};
use crate::kinematics::ArmPoint;
use crate::perception::{DepthPatch, PATCH_LEN};
use crate::Label;

const BASE_COLUMNS: [&str; 6] = ["image_id", "u", "v", "bbox_w", "bbox_h", "confidence"];
const SAMPLE_COLUMNS: [&str; 10] = ["x", "y", "z", "label", "range", "az", "el", "sigma_z", "a_bbox", "d_local"];

fn detection_header(window_cells: usize) -> Vec<String> {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((0..PATCH_LEN).map(|i| format!("d{i:02}")));
    cols.extend((0..window_cells).map(|i| format!("n{i:03}")));
    cols
}

fn push_record(line: &mut String, r: &DetectionRecord, with_window: bool) {
    let _ = write!(line, "{},{},{},{},{},{}", r.image_id, r.u, r.v, r.bbox_w, r.bbox_h, r.confidence);
    for v in &r.patch.values {
        let _ = write!(line, ",{}", clean(*v));
    }
    if with_window {
        if let Some(w) = &r.neighborhood {
            for v in &w.values {
                let _ = write!(line, ",{}", clean(*v));
            }
        }
    }
}

/// Invalid readings are written as `0`.
fn clean(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

fn window_cells(records: &[DetectionRecord]) -> Result<usize> {
    let first = records.first().and_then(|r| r.neighborhood.as_ref()).map_or(0, |w| w.len());
    let uniform = records.iter().all(|r| r.neighborhood.as_ref().map_or(0, |w| w.len()) == first);
    if !uniform {
        return Err(Error::Usage("records carry density windows of different sizes".into()));
    }
    Ok(first)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_detections(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    let cells = window_cells(records)?;
    if records.iter().any(|r| r.image_id.contains(',')) {
        return Err(Error::Usage("image ids must not contain commas".into()));
    }
    let mut out = create(path)?;
    let mut text = detection_header(cells).join(",");
    text.push('\n');
    for r in records {
        push_record(&mut text, r, cells > 0);
        text.push('\n');
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

/// Records read from a detection file plus the number of rows skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub records: Vec<DetectionRecord>,
    pub skipped: usize,
    /// Whether the file carried density windows.
    pub has_window: bool,
}

fn parse_row(fields: &[&str], window_cells: usize) -> Option<DetectionRecord> {
    let num = |s: &str| s.trim().parse::<f64>().ok();
    let (u, v) = (num(fields[1])?, num(fields[2])?);
    let (bw, bh, conf) = (num(fields[3])?, num(fields[4])?, num(fields[5])?);
    let finite = [u, v, bw, bh, conf].iter().all(|x| x.is_finite());
    if !finite || u < 0.0 || v < 0.0 || bw <= 0.0 || bh <= 0.0 || !(0.0..=1.0).contains(&conf) {
        return None;
    }
    let mut patch = [0.0; PATCH_LEN];
    for (dst, s) in patch.iter_mut().zip(&fields[6..6 + PATCH_LEN]) {
        *dst = num(s)?;
    }
    let neighborhood = if window_cells > 0 {
        let side = (window_cells as f64).sqrt().round() as usize;
        let vals = fields[6 + PATCH_LEN..].iter().map(|s| num(s)).collect::<Option<Vec<f64>>>()?;
        Some(Neighborhood::new(side, vals))
    } else {
        None
    };
    Some(DetectionRecord {
        image_id: fields[0].trim().to_string(),
        u,
        v,
        bbox_w: bw,
        bbox_h: bh,
        confidence: conf,
        patch: DepthPatch::new(patch),
        neighborhood,
    })
}

pub fn ingest_detections(path: &Path) -> Result<Ingested> {
    let fail = |reason: String| Error::Ingest { path: path.to_path_buf(), reason };
    let file = fs::File::open(path).map_err(|e| fail(e.to_string()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| fail("missing header".into()))?.map_err(|e| fail(e.to_string()))?;
    let cols: Vec<&str> = header.trim_end().split(',').map(str::trim).collect();
    let extra =
        cols.len().checked_sub(BASE_COLUMNS.len() + PATCH_LEN).ok_or_else(|| fail("header too short".into()))?;
    let side = (extra as f64).sqrt().round() as usize;
    if side * side != extra || cols != detection_header(extra) {
        return Err(fail(format!("unexpected header '{header}'")));
    }

    let mut records = Vec::new();
    let mut skipped = 0;
    for line in lines {
        let line = line.map_err(|e| fail(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        match (fields.len() == cols.len()).then(|| parse_row(&fields, extra)).flatten() {
            Some(r) => records.push(r),
            None => skipped += 1,
        }
    }
    Ok(Ingested { records, skipped, has_window: extra > 0 })
}

/// Writes the labelled-sample cache. `records[i]` must be the detection that
/// produced `samples[i]`.
pub fn write_labeled(path: &Path, records: &[&DetectionRecord], samples: &[LabeledSample]) -> Result<()> {
    if records.len() != samples.len() {
        return Err(Error::Usage("record and sample counts differ".into()));
    }
    let mut out = create(path)?;
    let mut cols = detection_header(0);
    cols.extend(SAMPLE_COLUMNS.iter().map(|s| s.to_string()));
    let mut text = cols.join(",");
    text.push('\n');
    for (r, s) in records.iter().zip(samples) {
        push_record(&mut text, r, false);
        let f = &s.features;
        let _ = writeln!(
            text,
            ",{},{},{},{},{},{},{},{},{},{}",
            s.arm_point.x,
            s.arm_point.y,
            s.arm_point.z,
            s.label.as_u8(),
            f.range,
            f.azimuth,
            f.elevation,
            f.depth_var,
            f.bbox_area,
            f.local_density
        );
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

/// Reads a labelled-sample cache; sample ids are row positions.
pub fn read_labeled(path: &Path) -> Result<Vec<LabeledSample>> {
    let fail = |reason: String| Error::Ingest { path: path.to_path_buf(), reason };
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let mut lines = text.lines();
    let mut expected = detection_header(0);
    expected.extend(SAMPLE_COLUMNS.iter().map(|s| s.to_string()));
    let header = lines.next().ok_or_else(|| fail("missing header".into()))?;
    if header.split(',').map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(fail("unexpected header".into()));
    }
    let base = BASE_COLUMNS.len() + PATCH_LEN;
    let mut out = Vec::new();
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(fail(format!("row {} has {} fields", row + 1, fields.len())));
        }
        let nums = fields[base..]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| fail(format!("row {}: {e}", row + 1)))?;
        let label = Label::from_u8(nums[3] as u8)
            .filter(|_| nums[3] == 0.0 || nums[3] == 1.0)
            .ok_or_else(|| fail(format!("row {}: bad label", row + 1)))?;
        let arm_point = ArmPoint::new(nums[0], nums[1], nums[2]);
        let features = FeatureVector::from_array([
            nums[0], nums[1], nums[2], nums[4], nums[5], nums[6], nums[7], nums[8], nums[9],
        ]);
        out.push(LabeledSample { id: row, features, label, arm_point });
    }
    Ok(out)
}
