//! Report emission: CSV artifacts and static SVG plots.
//!
//! Output layout under the run's `out_dir`:
//!
//! ```text
//! scans.csv, ground_truth.csv    (simulation mode only)
//! trajectory_gt.csv
//! diagnostics.csv
//! thetas/sorted_thetas_<frame>.csv
//! <method>/relative_poses.csv
//! <method>/trajectory_est.csv
//! <method>/metrics.csv
//! ground_trace.svg, segment_errors.svg, lateral_motion.svg
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use arcodo_core::evaluation::{SegmentErrorReport, Trajectory};
use arcodo_core::geom::{compose, inverse};
use arcodo_core::solvers::SolverMethod;
use arcodo_core::Pose2;

use crate::config::RunConfig;
use crate::files::{self, FileError};
use crate::pipeline::PipelineRun;

pub fn method_color(method: SolverMethod) -> &'static str {
    match method {
        SolverMethod::FullSvd => "#d62728",
        SolverMethod::Ransac => "#ff7f0e",
        SolverMethod::CcQuantileSvd => "#1f77b4",
        SolverMethod::CcQuantileMeans => "#2ca02c",
    }
}

const GT_COLOR: &str = "#000000";

#[derive(Serialize)]
struct DiagnosticsRecord {
    frame: usize,
    method: &'static str,
    n_matches: usize,
    n_injected_outliers: usize,
    n_inliers_used: usize,
    fallback: u8,
}

fn io_err(path: &Path, e: std::io::Error) -> FileError {
    FileError::Io { path: path.to_path_buf(), source: e }
}

/// Write every artifact of a pipeline run under `cfg.out_dir`.
pub fn emit_run(run: &PipelineRun, cfg: &RunConfig) -> Result<(), FileError> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    if cfg.sim.is_some() {
        files::write_scans(&dir.join("scans.csv"), &run.scans)?;
        files::write_relative_poses(&dir.join("ground_truth.csv"), &run.gt_rel)?;
    }
    files::write_trajectory(&dir.join("trajectory_gt.csv"), &run.gt_trajectory)?;

    let theta_dir = dir.join("thetas");
    fs::create_dir_all(&theta_dir).map_err(|e| io_err(&theta_dir, e))?;
    for frame in &run.frames {
        let path = theta_dir.join(format!("sorted_thetas_{:05}.csv", frame.frame));
        files::write_sorted_thetas(&path, &frame.sorted_thetas)?;
    }

    for method_run in &run.methods {
        let method_dir = dir.join(method_run.method.name());
        fs::create_dir_all(&method_dir).map_err(|e| io_err(&method_dir, e))?;
        files::write_relative_poses(&method_dir.join("relative_poses.csv"), &method_run.rel_poses)?;
        files::write_trajectory(&method_dir.join("trajectory_est.csv"), &method_run.trajectory)?;
        files::write_metrics(&method_dir.join("metrics.csv"), &method_run.report)?;
    }

    write_diagnostics(&dir.join("diagnostics.csv"), run)?;

    let traces: Vec<(SolverMethod, &Trajectory)> =
        run.methods.iter().map(|m| (m.method, &m.trajectory)).collect();
    let reports: Vec<(SolverMethod, &SegmentErrorReport)> =
        run.methods.iter().map(|m| (m.method, &m.report)).collect();
    let rels: Vec<(SolverMethod, &[Pose2])> =
        run.methods.iter().map(|m| (m.method, m.rel_poses.as_slice())).collect();

    write_svg(&dir.join("ground_trace.svg"), &ground_trace_svg(&run.gt_trajectory, &traces))?;
    write_svg(&dir.join("segment_errors.svg"), &segment_errors_svg(&reports))?;
    write_svg(&dir.join("lateral_motion.svg"), &lateral_motion_svg(&run.gt_rel, &rels))?;
    Ok(())
}

fn write_diagnostics(path: &Path, run: &PipelineRun) -> Result<(), FileError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for frame in &run.frames {
        for method_run in &run.methods {
            let idx = frame.frame - 1;
            writer
                .serialize(DiagnosticsRecord {
                    frame: frame.frame,
                    method: method_run.method.name(),
                    n_matches: frame.n_matches,
                    n_injected_outliers: frame.n_injected_outliers,
                    n_inliers_used: method_run.inlier_counts[idx],
                    fallback: u8::from(method_run.fallback_frames.contains(&frame.frame)),
                })
                .map_err(|e| io_err(path, std::io::Error::other(e)))?;
        }
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Rebuild the SVG plots from a directory previously written by
/// [`emit_run`] (or by the `odometry` + `evaluate` stages).
pub fn render_reports(dir: &Path, methods: &[SolverMethod]) -> Result<Vec<PathBuf>, FileError> {
    let gt_trajectory = files::load_trajectory(&dir.join("trajectory_gt.csv"))?;
    let mut traces = Vec::new();
    let mut reports = Vec::new();
    for &method in methods {
        let method_dir = dir.join(method.name());
        traces.push((method, files::load_trajectory(&method_dir.join("trajectory_est.csv"))?));
        reports.push((method, files::load_metrics(&method_dir.join("metrics.csv"))?));
    }
    let trace_refs: Vec<(SolverMethod, &Trajectory)> =
        traces.iter().map(|(m, t)| (*m, t)).collect();
    let report_refs: Vec<(SolverMethod, &SegmentErrorReport)> =
        reports.iter().map(|(m, r)| (*m, r)).collect();

    let gt_rel = rel_from_trajectory(&gt_trajectory);
    let rels: Vec<(SolverMethod, Vec<Pose2>)> = traces
        .iter()
        .map(|(m, t)| (*m, rel_from_trajectory(t)))
        .collect();
    let rel_refs: Vec<(SolverMethod, &[Pose2])> =
        rels.iter().map(|(m, r)| (*m, r.as_slice())).collect();

    let outputs = vec![
        dir.join("ground_trace.svg"),
        dir.join("segment_errors.svg"),
        dir.join("lateral_motion.svg"),
    ];
    write_svg(&outputs[0], &ground_trace_svg(&gt_trajectory, &trace_refs))?;
    write_svg(&outputs[1], &segment_errors_svg(&report_refs))?;
    write_svg(&outputs[2], &lateral_motion_svg(&gt_rel, &rel_refs))?;
    Ok(outputs)
}

fn rel_from_trajectory(trajectory: &Trajectory) -> Vec<Pose2> {
    trajectory
        .poses
        .windows(2)
        .map(|w| compose(&inverse(&w[0]), &w[1]))
        .collect()
}

fn write_svg(path: &Path, content: &str) -> Result<(), FileError> {
    fs::write(path, content).map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// SVG plotting

const W: f64 = 800.0;
const H: f64 = 520.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 48.0;

#[derive(Clone, Copy)]
struct Scale {
    v0: f64,
    v1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        if self.v1 == self.v0 {
            return (self.p0 + self.p1) / 2.0;
        }
        self.p0 + (v - self.v0) / (self.v1 - self.v0) * (self.p1 - self.p0)
    }
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 || a == 0.0 {
        format!("{v:.1}")
    } else if a >= 0.001 {
        format!("{v:.4}")
    } else {
        format!("{v:.1e}")
    }
}

struct Panel {
    x: Scale,
    y: Scale,
    body: String,
}

impl Panel {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64, px0: f64, px1: f64) -> Panel {
        Panel {
            x: Scale { v0: x0, v1: x1, p0: px0, p1: px1 },
            y: Scale { v0: y0, v1: y1, p0: H - MARGIN_B, p1: MARGIN_T },
            body: String::new(),
        }
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (px0, px1) = (self.x.p0, self.x.p1);
        let (py0, py1) = (self.y.p0, self.y.p1);
        let _ = write!(
            self.body,
            r##"<rect x="{px0:.1}" y="{py1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#999" stroke-width="1"/>"##,
            px1 - px0,
            py0 - py1
        );
        for k in 0..=4 {
            let fx = self.x.v0 + (self.x.v1 - self.x.v0) * k as f64 / 4.0;
            let fy = self.y.v0 + (self.y.v1 - self.y.v0) * k as f64 / 4.0;
            let tx = self.x.map(fx);
            let ty = self.y.map(fy);
            let _ = write!(
                self.body,
                r##"<line x1="{tx:.1}" y1="{py0:.1}" x2="{tx:.1}" y2="{:.1}" stroke="#999" stroke-width="0.5"/>"##,
                py0 + 4.0
            );
            let _ = write!(
                self.body,
                r##"<text x="{tx:.1}" y="{:.1}" font-size="11" text-anchor="middle" fill="#333">{}</text>"##,
                py0 + 16.0,
                tick_label(fx)
            );
            let _ = write!(
                self.body,
                r##"<line x1="{:.1}" y1="{ty:.1}" x2="{px0:.1}" y2="{ty:.1}" stroke="#999" stroke-width="0.5"/>"##,
                px0 - 4.0
            );
            let _ = write!(
                self.body,
                r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" fill="#333">{}</text>"##,
                px0 - 6.0,
                ty + 4.0,
                tick_label(fy)
            );
        }
        let _ = write!(
            self.body,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" fill="#000">{x_label}</text>"##,
            (px0 + px1) / 2.0,
            py0 + 34.0
        );
        let _ = write!(
            self.body,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" fill="#000" transform="rotate(-90 {:.1} {:.1})">{y_label}</text>"##,
            px0 - 48.0,
            (py0 + py1) / 2.0,
            px0 - 48.0,
            (py0 + py1) / 2.0
        );
    }

    fn polyline(&mut self, points: impl Iterator<Item = (f64, f64)>, color: &str, id: &str) {
        let mut coords = String::new();
        for (x, y) in points {
            let _ = write!(coords, "{:.2},{:.2} ", self.x.map(x), self.y.map(y));
        }
        let _ = write!(
            self.body,
            r##"<polyline id="{id}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
            coords.trim_end()
        );
    }

    fn envelope(&mut self, upper: &[(f64, f64)], lower: &[(f64, f64)], color: &str) {
        let mut coords = String::new();
        for (x, y) in upper {
            let _ = write!(coords, "{:.2},{:.2} ", self.x.map(*x), self.y.map(*y));
        }
        for (x, y) in lower.iter().rev() {
            let _ = write!(coords, "{:.2},{:.2} ", self.x.map(*x), self.y.map(*y));
        }
        let _ = write!(
            self.body,
            r##"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"##,
            coords.trim_end()
        );
    }
}

fn legend(entries: &[(&str, &str)]) -> String {
    let mut out = String::new();
    let mut x = MARGIN_L;
    for (name, color) in entries {
        let _ = write!(
            out,
            r##"<line x1="{x:.1}" y1="20" x2="{:.1}" y2="20" stroke="{color}" stroke-width="2.5"/><text x="{:.1}" y="24" font-size="12" fill="#000">{name}</text>"##,
            x + 22.0,
            x + 27.0
        );
        x += 28.0 + 9.0 * name.len() as f64 + 16.0;
    }
    out
}

fn svg_document(title: &str, body: &str) -> String {
    format!(
        concat!(
            r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"##,
            r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##,
            r##"<title>{title}</title>{body}</svg>"##,
            "\n"
        ),
        w = W,
        h = H,
        title = title,
        body = body
    )
}

/// Overlaid world-frame traces: ground truth plus one polyline per method.
pub fn ground_trace_svg(gt: &Trajectory, methods: &[(SolverMethod, &Trajectory)]) -> String {
    let all_points = gt
        .poses
        .iter()
        .chain(methods.iter().flat_map(|(_, t)| t.poses.iter()));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in all_points {
        x0 = x0.min(p.dx);
        x1 = x1.max(p.dx);
        y0 = y0.min(p.dy);
        y1 = y1.max(p.dy);
    }
    // Lock the aspect ratio so the trace is not distorted.
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let aspect = plot_w / plot_h;
    let (sx, sy) = if aspect >= 1.0 { (span * aspect, span) } else { (span, span / aspect) };
    let (x0, x1) = pad_range(cx - sx / 2.0, cx + sx / 2.0);
    let (y0, y1) = pad_range(cy - sy / 2.0, cy + sy / 2.0);

    let mut panel = Panel::new(x0, x1, y0, y1, MARGIN_L, W - MARGIN_R);
    panel.axes("x [m]", "y [m]");
    panel.polyline(gt.poses.iter().map(|p| (p.dx, p.dy)), GT_COLOR, "trace-gt");
    for (method, trajectory) in methods {
        panel.polyline(
            trajectory.poses.iter().map(|p| (p.dx, p.dy)),
            method_color(*method),
            &format!("trace-{}", method.name()),
        );
    }
    let mut entries = vec![("ground truth", GT_COLOR)];
    entries.extend(methods.iter().map(|(m, _)| (m.name(), method_color(*m))));
    svg_document("Ground traces", &format!("{}{}", legend(&entries), panel.body))
}

type BucketField = fn(&arcodo_core::evaluation::LengthBucket) -> f64;

fn error_panel(
    reports: &[(SolverMethod, &SegmentErrorReport)],
    px0: f64,
    px1: f64,
    mean_of: BucketField,
    std_of: BucketField,
    tag: &str,
    y_label: &str,
) -> String {
    let mut x0 = f64::MAX;
    let mut x1 = f64::MIN;
    let mut top = f64::MIN;
    for (_, report) in reports {
        for bucket in &report.per_length {
            x0 = x0.min(bucket.length_m);
            x1 = x1.max(bucket.length_m);
            top = top.max(mean_of(bucket) + std_of(bucket));
        }
    }
    if x0 > x1 {
        return String::new();
    }
    let y1 = pad_range(0.0, top.max(1e-12)).1;
    let mut panel = Panel::new(x0, x1, 0.0, y1, px0, px1);
    panel.axes("segment length [m]", y_label);
    for (method, report) in reports {
        let color = method_color(*method);
        let upper: Vec<(f64, f64)> = report
            .per_length
            .iter()
            .map(|b| (b.length_m, mean_of(b) + std_of(b)))
            .collect();
        let lower: Vec<(f64, f64)> = report
            .per_length
            .iter()
            .map(|b| (b.length_m, (mean_of(b) - std_of(b)).max(0.0)))
            .collect();
        panel.envelope(&upper, &lower, color);
        panel.polyline(
            report.per_length.iter().map(|b| (b.length_m, mean_of(b))),
            color,
            &format!("errors-{tag}-{}", method.name()),
        );
    }
    panel.body
}

/// Mean segment errors per length with standard-deviation envelopes,
/// translational panel on the left and rotational on the right.
pub fn segment_errors_svg(reports: &[(SolverMethod, &SegmentErrorReport)]) -> String {
    let mid = W / 2.0;
    let mut body = String::new();
    body.push_str(&error_panel(
        reports,
        MARGIN_L,
        mid - 24.0,
        |b| b.tr_percent,
        |b| b.tr_std_percent,
        "tr",
        "translational error [%]",
    ));
    body.push_str(&error_panel(
        reports,
        mid + MARGIN_L - 16.0,
        W - MARGIN_R,
        |b| b.rot_deg_per_m,
        |b| b.rot_std_deg_per_m,
        "rot",
        "rotational error [deg/m]",
    ));
    let entries: Vec<(&str, &str)> = reports.iter().map(|(m, _)| (m.name(), method_color(*m))).collect();
    svg_document("Segment errors", &format!("{}{}", legend(&entries), body))
}

/// Per-frame lateral motion (`dy` of each relative pose) for ground truth
/// and every method.
pub fn lateral_motion_svg(gt_rel: &[Pose2], methods: &[(SolverMethod, &[Pose2])]) -> String {
    let mut y0 = f64::MAX;
    let mut y1 = f64::MIN;
    for dy in gt_rel
        .iter()
        .map(|p| p.dy)
        .chain(methods.iter().flat_map(|(_, rel)| rel.iter().map(|p| p.dy)))
    {
        y0 = y0.min(dy);
        y1 = y1.max(dy);
    }
    let (y0, y1) = pad_range(y0.min(0.0), y1.max(0.0));
    let x1 = gt_rel.len().max(1) as f64;
    let mut panel = Panel::new(1.0, x1, y0, y1, MARGIN_L, W - MARGIN_R);
    panel.axes("frame", "lateral motion dy [m]");
    for (method, rel) in methods {
        panel.polyline(
            rel.iter().enumerate().map(|(k, p)| ((k + 1) as f64, p.dy)),
            method_color(*method),
            &format!("lateral-{}", method.name()),
        );
    }
    panel.polyline(
        gt_rel.iter().enumerate().map(|(k, p)| ((k + 1) as f64, p.dy)),
        GT_COLOR,
        "lateral-gt",
    );
    let mut entries = vec![("ground truth", GT_COLOR)];
    entries.extend(methods.iter().map(|(m, _)| (m.name(), method_color(*m))));
    svg_document("Lateral motion per frame", &format!("{}{}", legend(&entries), panel.body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use arcodo_core::evaluation::accumulate;

    #[test]
    fn ground_trace_has_one_polyline_per_method_plus_gt() {
        let gt = accumulate(&vec![Pose2::new(1.0, 0.0, 0.01); 50]);
        let est = accumulate(&vec![Pose2::new(1.01, 0.0, 0.01); 50]);
        let traces = vec![
            (SolverMethod::FullSvd, &est),
            (SolverMethod::CcQuantileMeans, &est),
        ];
        let svg = ground_trace_svg(&gt, &traces);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(r##"id="trace-gt""##));
        assert!(svg.contains(r##"id="trace-full-svd""##));
        assert!(svg.contains(r##"id="trace-cc-means""##));
    }

    #[test]
    fn segment_error_plot_includes_envelopes() {
        let gt = accumulate(&vec![Pose2::new(1.0, 0.0, 0.0); 120]);
        let est = accumulate(&vec![Pose2::new(1.02, 0.001, 0.0001); 120]);
        let report = arcodo_core::segment_errors(&gt, &est, &[10.0, 20.0, 40.0]).unwrap();
        let svg = segment_errors_svg(&[(SolverMethod::Ransac, &report)]);
        assert_eq!(svg.matches("<polygon").count(), 2, "one envelope per panel");
        assert!(svg.contains(r##"id="errors-tr-ransac""##));
        assert!(svg.contains(r##"id="errors-rot-ransac""##));
    }

    #[test]
    fn lateral_motion_plot_draws_gt_and_methods() {
        let gt_rel = vec![Pose2::new(1.0, 0.0, 0.0); 30];
        let est_rel = vec![Pose2::new(1.0, 0.05, 0.0); 30];
        let svg = lateral_motion_svg(&gt_rel, &[(SolverMethod::CcQuantileSvd, &est_rel)]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r##"id="lateral-gt""##));
        assert!(svg.contains(r##"id="lateral-cc-svd""##));
    }
}
