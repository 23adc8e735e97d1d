//! Parameter exploration for the synthetic method-comparison experiment.

use std::time::Instant;

use arcodo_cli::config::{RunConfig, SimConfig};
use arcodo_cli::pipeline::run_pipeline;
use arcodo_core::geom::{compose, inverse};
use arcodo_core::simulator::Segment;
use arcodo_core::solvers::SolverMethod;
use arcodo_core::MotionParams;

fn benchmark_config(seed: u64) -> RunConfig {
    RunConfig {
        sim: Some(SimConfig {
            landmark_count: 2200,
            extent: 200.0,
            max_range: 30.0,
            trajectory: vec![
                Segment { motion: MotionParams::straight(1.0), steps: 100 },
                Segment { motion: MotionParams::arc(0.0157, 63.7), steps: 100 },
                Segment { motion: MotionParams::straight(1.0), steps: 50 },
                Segment { motion: MotionParams::arc(-0.0157, -63.7), steps: 100 },
                Segment { motion: MotionParams::straight(1.0), steps: 70 },
                Segment { motion: MotionParams::arc(0.0157, 63.7), steps: 100 },
                Segment { motion: MotionParams::straight(1.0), steps: 30 },
            ],
            step_period: 0.25,
            sigma_range: 0.05,
            sigma_bearing: 0.002,
        }),
        segment_lengths: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
        seed,
        outlier_fraction: 0.2,
        dynamic_count: None,
        dynamic_speed: 0.6,
        ..Default::default()
    }
}

fn main() {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let variant = std::env::args().nth(2).unwrap_or_default();
    let start = Instant::now();
    let mut ordered = 0usize;
    let mut sums = [0.0f64; 4];
    println!("seed   full-svd    ransac     cc-svd   cc-means  ordered  matches");
    for seed in 0..n_seeds {
        let mut cfg = benchmark_config(1000 + seed);
        match variant.as_str() {
            "clean" => {
                cfg.outlier_fraction = 0.0;
                let sim = cfg.sim.as_mut().unwrap();
                sim.sigma_range = 0.0;
                sim.sigma_bearing = 0.0;
            }
            "noise-only" => cfg.outlier_fraction = 0.0,
            _ => {}
        }
        let run = run_pipeline(&cfg).expect("pipeline");
        let err_of = |m: SolverMethod| {
            run.methods
                .iter()
                .find(|r| r.method == m)
                .map(|r| r.report.overall.tr_percent)
                .unwrap()
        };
        let errs = [
            err_of(SolverMethod::FullSvd),
            err_of(SolverMethod::Ransac),
            err_of(SolverMethod::CcQuantileSvd),
            err_of(SolverMethod::CcQuantileMeans),
        ];
        let ok = errs[0] >= errs[1] && errs[1] >= errs[2] && errs[2] >= errs[3];
        ordered += usize::from(ok);
        for (s, e) in sums.iter_mut().zip(&errs) {
            *s += e;
        }
        let mean_matches: f64 = run.frames.iter().map(|f| f.n_matches as f64).sum::<f64>()
            / run.frames.len() as f64;
        println!(
            "{seed:>4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {:>7} {:>8.1}",
            errs[0], errs[1], errs[2], errs[3], ok, mean_matches
        );

        // Per-frame error profile of each method for the first seed.
        if seed == 0 {
            for m in &run.methods {
                let mut errors: Vec<(f64, usize)> = m
                    .rel_poses
                    .iter()
                    .zip(&run.gt_rel)
                    .enumerate()
                    .map(|(k, (est, gt))| {
                        let e = compose(&inverse(gt), est);
                        (e.translation_norm(), k + 1)
                    })
                    .collect();
                errors.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let n = errors.len();
                let pick = |q: f64| errors[((n as f64 * q) as usize).min(n - 1)];
                println!(
                    "    {:<9} per-frame |t| err: p50={:.4} p90={:.4} p99={:.4} max={:.4}@{} fallbacks={}",
                    m.method.name(),
                    pick(0.5).0,
                    pick(0.9).0,
                    pick(0.99).0,
                    errors[n - 1].0,
                    errors[n - 1].1,
                    m.fallback_frames.len()
                );
            }
        }
    }
    let n = n_seeds as f64;
    println!(
        "mean {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {ordered}/{n_seeds} ordered",
        sums[0] / n,
        sums[1] / n,
        sums[2] / n,
        sums[3] / n
    );
    println!(
        "cc-means reduction vs full-svd: {:.1}%",
        100.0 * (sums[0] - sums[3]) / sums[0]
    );
    println!("elapsed: {:.1?}", start.elapsed());
}
