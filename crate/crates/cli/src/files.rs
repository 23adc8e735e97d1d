//! CSV file formats shared by the CLI stages.
//!
//! All files carry a header row, UTF-8 text with `.` decimal separator, and
//! `\n` line endings. Landmarks are serialized in polar form since the
//! motion model consumes ranges and bearings natively; Cartesian coordinates
//! are derived on load.
//!
//! - scans:           `scan_index,landmark_id,range_m,bearing_rad`
//! - relative poses:  `scan_index,dx_m,dy_m,dtheta_rad` (row `k` holds the
//!   motion from scan `k-1` to scan `k`, so indices start at 1)
//! - trajectories:    `scan_index,x_m,y_m,theta_rad`
//! - metrics:         per-length rows plus one `overall` row

use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use arcodo_core::evaluation::{LengthBucket, Overall, SegmentErrorReport, Trajectory};
use arcodo_core::geom::polar_to_point;
use arcodo_core::{LandmarkSet, PolarObservation, Pose2};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{row}: parse error: {msg}")]
    Parse { path: PathBuf, row: u64, msg: String },
    #[error("{path}: schema error: {msg}")]
    Schema { path: PathBuf, msg: String },
    #[error("{path}:{row}: invalid value: {msg}")]
    Validation { path: PathBuf, row: u64, msg: String },
}

impl FileError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FileError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScanRecord {
    scan_index: usize,
    landmark_id: usize,
    range_m: f64,
    bearing_rad: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RelPoseRecord {
    scan_index: usize,
    dx_m: f64,
    dy_m: f64,
    dtheta_rad: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRecord {
    scan_index: usize,
    x_m: f64,
    y_m: f64,
    theta_rad: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsRecord {
    segment_length_m: String,
    trans_err_pct: f64,
    rot_err_deg_per_m: f64,
    trans_std_pct: f64,
    rot_std_deg_per_m: f64,
    segment_count: usize,
}

fn open_reader(path: &Path, expected_headers: &[&str]) -> Result<csv::Reader<fs::File>, FileError> {
    let file = fs::File::open(path).map_err(|e| FileError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| FileError::Schema { path: path.to_path_buf(), msg: e.to_string() })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected_headers {
        return Err(FileError::Schema {
            path: path.to_path_buf(),
            msg: format!("expected columns {expected_headers:?}, found {got:?}"),
        });
    }
    Ok(reader)
}

fn read_rows<T: for<'de> Deserialize<'de>>(
    path: &Path,
    expected_headers: &[&str],
) -> Result<Vec<(u64, T)>, FileError> {
    let mut reader = open_reader(path, expected_headers)?;
    let mut rows = Vec::new();
    let mut iter = reader.deserialize::<T>();
    loop {
        // Line of the record about to be read (the header is line 1).
        let line = iter.reader().position().line();
        match iter.next() {
            None => break,
            Some(Ok(record)) => rows.push((line, record)),
            Some(Err(e)) => {
                return Err(FileError::Parse {
                    path: path.to_path_buf(),
                    row: e.position().map_or(line, |p| p.line()),
                    msg: e.to_string(),
                })
            }
        }
    }
    Ok(rows)
}

/// Load landmark scans, validating ranges, bearings, and scan-index
/// contiguity from 0. `step_period` reconstructs the timestamps that the
/// format does not carry.
pub fn load_scans(path: &Path, step_period: f64) -> Result<Vec<LandmarkSet>, FileError> {
    let rows: Vec<(u64, ScanRecord)> =
        read_rows(path, &["scan_index", "landmark_id", "range_m", "bearing_rad"])?;
    let mut scans: Vec<LandmarkSet> = Vec::new();
    for (row, record) in rows {
        let invalid = |msg: String| FileError::Validation { path: path.to_path_buf(), row, msg };
        if !(record.range_m.is_finite() && record.range_m > 0.0) {
            return Err(invalid(format!("range_m must be > 0, got {}", record.range_m)));
        }
        if !(record.bearing_rad.is_finite() && record.bearing_rad > -PI && record.bearing_rad <= PI) {
            return Err(invalid(format!("bearing_rad must lie in (-pi, pi], got {}", record.bearing_rad)));
        }
        if record.scan_index == scans.len() {
            scans.push(LandmarkSet::new(
                record.scan_index,
                Vec::new(),
                record.scan_index as f64 * step_period,
            ));
        } else if record.scan_index + 1 != scans.len() {
            return Err(invalid(format!(
                "scan_index {} breaks contiguity (expected {} or {})",
                record.scan_index,
                scans.len().saturating_sub(1),
                scans.len()
            )));
        }
        let scan = scans.last_mut().expect("scan exists");
        if record.landmark_id != scan.points.len() {
            return Err(invalid(format!(
                "landmark_id {} out of order (expected {})",
                record.landmark_id,
                scan.points.len()
            )));
        }
        scan.points
            .push(polar_to_point(&PolarObservation::new(record.range_m, record.bearing_rad)));
    }
    Ok(scans)
}

pub fn write_scans(path: &Path, scans: &[LandmarkSet]) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(|e| FileError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for scan in scans {
        for (id, point) in scan.points.iter().enumerate() {
            let polar = point.to_polar();
            writer
                .serialize(ScanRecord {
                    scan_index: scan.scan_index,
                    landmark_id: id,
                    range_m: polar.range,
                    bearing_rad: polar.bearing,
                })
                .map_err(|e| FileError::io(path, std::io::Error::other(e)))?;
        }
    }
    writer.flush().map_err(|e| FileError::io(path, e))
}

/// Load a relative-pose file (ground truth or estimates). Row `k` holds the
/// motion into scan `k`; indices must run contiguously from 1.
pub fn load_relative_poses(path: &Path) -> Result<Vec<Pose2>, FileError> {
    let rows: Vec<(u64, RelPoseRecord)> =
        read_rows(path, &["scan_index", "dx_m", "dy_m", "dtheta_rad"])?;
    let mut poses = Vec::new();
    for (row, record) in rows {
        let invalid = |msg: String| FileError::Validation { path: path.to_path_buf(), row, msg };
        if record.scan_index != poses.len() + 1 {
            return Err(invalid(format!(
                "scan_index {} breaks contiguity (expected {})",
                record.scan_index,
                poses.len() + 1
            )));
        }
        let finite = record.dx_m.is_finite() && record.dy_m.is_finite() && record.dtheta_rad.is_finite();
        if !finite {
            return Err(invalid("pose components must be finite".into()));
        }
        if !(record.dtheta_rad > -PI && record.dtheta_rad <= PI) {
            return Err(invalid(format!("dtheta_rad must lie in (-pi, pi], got {}", record.dtheta_rad)));
        }
        poses.push(Pose2::new(record.dx_m, record.dy_m, record.dtheta_rad));
    }
    Ok(poses)
}

/// Alias for readers of ground-truth files; the schema is shared with
/// estimated relative poses.
pub fn load_ground_truth(path: &Path) -> Result<Vec<Pose2>, FileError> {
    load_relative_poses(path)
}

pub fn write_relative_poses(path: &Path, rel_poses: &[Pose2]) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(|e| FileError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for (k, pose) in rel_poses.iter().enumerate() {
        writer
            .serialize(RelPoseRecord {
                scan_index: k + 1,
                dx_m: pose.dx,
                dy_m: pose.dy,
                dtheta_rad: pose.dtheta,
            })
            .map_err(|e| FileError::io(path, std::io::Error::other(e)))?;
    }
    writer.flush().map_err(|e| FileError::io(path, e))
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(|e| FileError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for (k, pose) in trajectory.poses.iter().enumerate() {
        writer
            .serialize(TrajectoryRecord { scan_index: k, x_m: pose.dx, y_m: pose.dy, theta_rad: pose.dtheta })
            .map_err(|e| FileError::io(path, std::io::Error::other(e)))?;
    }
    writer.flush().map_err(|e| FileError::io(path, e))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, FileError> {
    let rows: Vec<(u64, TrajectoryRecord)> =
        read_rows(path, &["scan_index", "x_m", "y_m", "theta_rad"])?;
    let mut poses = Vec::new();
    for (row, record) in rows {
        if record.scan_index != poses.len() {
            return Err(FileError::Validation {
                path: path.to_path_buf(),
                row,
                msg: format!("scan_index {} breaks contiguity (expected {})", record.scan_index, poses.len()),
            });
        }
        poses.push(Pose2::new(record.x_m, record.y_m, record.theta_rad));
    }
    Ok(Trajectory { poses })
}

/// Write per-length metric rows plus the trailing `overall` row.
pub fn write_metrics(path: &Path, report: &SegmentErrorReport) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(|e| FileError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut put = |record: MetricsRecord| {
        writer
            .serialize(record)
            .map_err(|e| FileError::io(path, std::io::Error::other(e)))
    };
    for bucket in &report.per_length {
        put(MetricsRecord {
            segment_length_m: format!("{}", bucket.length_m),
            trans_err_pct: bucket.tr_percent,
            rot_err_deg_per_m: bucket.rot_deg_per_m,
            trans_std_pct: bucket.tr_std_percent,
            rot_std_deg_per_m: bucket.rot_std_deg_per_m,
            segment_count: bucket.segment_count,
        })?;
    }
    put(MetricsRecord {
        segment_length_m: "overall".into(),
        trans_err_pct: report.overall.tr_percent,
        rot_err_deg_per_m: report.overall.rot_deg_per_m,
        trans_std_pct: 0.0,
        rot_std_deg_per_m: 0.0,
        segment_count: report.overall.segment_count,
    })?;
    writer.flush().map_err(|e| FileError::io(path, e))
}

pub fn load_metrics(path: &Path) -> Result<SegmentErrorReport, FileError> {
    let rows: Vec<(u64, MetricsRecord)> = read_rows(
        path,
        &[
            "segment_length_m",
            "trans_err_pct",
            "rot_err_deg_per_m",
            "trans_std_pct",
            "rot_std_deg_per_m",
            "segment_count",
        ],
    )?;
    let mut per_length = Vec::new();
    let mut overall = None;
    for (row, record) in rows {
        if record.segment_length_m == "overall" {
            overall = Some(Overall {
                tr_percent: record.trans_err_pct,
                rot_deg_per_m: record.rot_err_deg_per_m,
                segment_count: record.segment_count,
                distance_m: 0.0,
            });
        } else {
            let length_m: f64 = record.segment_length_m.parse().map_err(|_| FileError::Parse {
                path: path.to_path_buf(),
                row,
                msg: format!("bad segment length {:?}", record.segment_length_m),
            })?;
            per_length.push(LengthBucket {
                length_m,
                tr_percent: record.trans_err_pct,
                rot_deg_per_m: record.rot_err_deg_per_m,
                tr_std_percent: record.trans_std_pct,
                rot_std_deg_per_m: record.rot_std_deg_per_m,
                segment_count: record.segment_count,
            });
        }
    }
    let overall = overall.ok_or_else(|| FileError::Schema {
        path: path.to_path_buf(),
        msg: "missing overall row".into(),
    })?;
    Ok(SegmentErrorReport { per_length, overall })
}

/// Write one frame's sorted per-match arc angles.
pub fn write_sorted_thetas(path: &Path, thetas: &[(usize, f64)]) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(|e| FileError::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(writer, "rank,match_index,theta_rad")?;
        for (rank, (index, theta)) in thetas.iter().enumerate() {
            writeln!(writer, "{rank},{index},{theta}")?;
        }
        writer.flush()
    };
    emit().map_err(|e| FileError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use arcodo_core::simulator::{self, CorruptionSpec, Segment, TrajectorySpec, WorldConfig};
    use arcodo_core::MotionParams;
    use tempfile::tempdir;

    #[test]
    fn empty_scan_file_with_header_loads_empty() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        fs::write(&path, "scan_index,landmark_id,range_m,bearing_rad\n").unwrap();
        assert!(load_scans(&path, 0.25).unwrap().is_empty());
    }

    #[test]
    fn negative_range_is_rejected_with_its_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        fs::write(
            &path,
            "scan_index,landmark_id,range_m,bearing_rad\n0,0,5.0,0.1\n0,1,-1.0,0.2\n",
        )
        .unwrap();
        match load_scans(&path, 0.25).unwrap_err() {
            FileError::Validation { row, msg, .. } => {
                assert_eq!(row, 3);
                assert!(msg.contains("range_m"), "{msg}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        fs::write(&path, "scan_index,landmark_id,range_m\n0,0,5.0\n").unwrap();
        assert!(matches!(load_scans(&path, 0.25).unwrap_err(), FileError::Schema { .. }));
    }

    #[test]
    fn unparseable_field_reports_the_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        fs::write(
            &path,
            "scan_index,landmark_id,range_m,bearing_rad\n0,0,5.0,0.1\n0,1,abc,0.2\n",
        )
        .unwrap();
        match load_scans(&path, 0.25).unwrap_err() {
            FileError::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_contiguous_scan_indices_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        fs::write(
            &path,
            "scan_index,landmark_id,range_m,bearing_rad\n0,0,5.0,0.1\n2,0,5.0,0.1\n",
        )
        .unwrap();
        assert!(matches!(load_scans(&path, 0.25).unwrap_err(), FileError::Validation { .. }));
    }

    #[test]
    fn simulated_sequence_round_trips_exactly() {
        let world = simulator::generate_world(&WorldConfig {
            landmark_count: 60,
            extent: 40.0,
            rng_seed: 3,
        });
        let spec = TrajectorySpec {
            segments: vec![
                Segment { motion: MotionParams::straight(1.0), steps: 4 },
                Segment { motion: MotionParams::arc(0.05, 20.0), steps: 4 },
            ],
            ..Default::default()
        };
        let poses = simulator::generate_trajectory(&spec);
        let noise = CorruptionSpec { sigma_range: 0.05, sigma_bearing: 0.002, rng_seed: 5, ..Default::default() };
        let scans: Vec<LandmarkSet> = poses
            .iter()
            .enumerate()
            .map(|(k, p)| simulator::observe(p, &world, 50.0, &noise, k, k as f64 * 0.25).landmarks)
            .collect();

        let dir = tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        write_scans(&path, &scans).unwrap();
        let loaded = load_scans(&path, 0.25).unwrap();
        assert_eq!(loaded.len(), scans.len());
        for (a, b) in loaded.iter().zip(&scans) {
            assert_eq!(a.scan_index, b.scan_index);
            assert_eq!(a.points.len(), b.points.len());
            for (p, q) in a.points.iter().zip(&b.points) {
                // The polar text is shortest-round-trip exact; the Cartesian
                // view differs only by the final trig conversion.
                approx::assert_relative_eq!(p.x, q.x, max_relative = 1e-14, epsilon = 1e-14);
                approx::assert_relative_eq!(p.y, q.y, max_relative = 1e-14, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn relative_poses_round_trip_and_validate() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rel.csv");
        let poses = vec![Pose2::new(1.0, 0.01, 0.002), Pose2::new(0.98, -0.02, -0.004)];
        write_relative_poses(&path, &poses).unwrap();
        assert_eq!(load_relative_poses(&path).unwrap(), poses);

        fs::write(&path, "scan_index,dx_m,dy_m,dtheta_rad\n5,1.0,0.0,0.0\n").unwrap();
        assert!(matches!(load_relative_poses(&path).unwrap_err(), FileError::Validation { .. }));
    }

    #[test]
    fn metrics_keep_ladder_rows_plus_overall() {
        use arcodo_core::evaluation::accumulate;
        let gt = accumulate(&vec![Pose2::new(1.0, 0.0, 0.0); 100]);
        let est = accumulate(&vec![Pose2::new(1.01, 0.0, 0.0); 100]);
        let report = arcodo_core::segment_errors(&gt, &est, &[10.0, 20.0, 40.0]).unwrap();

        let dir = tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics(&path, &report).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 1 + 3 + 1, "header + ladder + overall");
        assert!(rows.last().unwrap().starts_with("overall,"));

        let loaded = load_metrics(&path).unwrap();
        assert_eq!(loaded.per_length.len(), 3);
        assert_eq!(loaded.overall.segment_count, report.overall.segment_count);
    }
}
