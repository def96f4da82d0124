//! Parameter sweep: every (alpha, kind, V0, amplitude) combination runs the
//! scatter experiment in its own subdirectory. Points are independent, so
//! they run on a rayon pool capped by `DISPERSE_LAB_THREADS`.

use std::cmp::Ordering;
use std::fs;
use std::path::PathBuf;

use disperse_core::potentials::{hypothesis_report, PotentialKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{write_scatter_artifacts, Context, Outcome, ScatterArtifacts, EXIT_OK};
use crate::config::{prepare_config, LoadedConfig, PotentialSection};
use crate::output::{num, timestamp, write_json, RunRecord, Table};
use crate::CliError;

pub const THREADS_ENV: &str = "DISPERSE_LAB_THREADS";

#[derive(Clone, Copy, Debug)]
struct Point {
    alpha: f64,
    kind: PotentialKind,
    v0: f64,
    amplitude: f64,
}

impl Point {
    fn cmp(&self, other: &Point) -> Ordering {
        self.alpha
            .total_cmp(&other.alpha)
            .then_with(|| self.kind.name().cmp(other.kind.name()))
            .then_with(|| self.v0.total_cmp(&other.v0))
            .then_with(|| self.amplitude.total_cmp(&other.amplitude))
    }
}

struct Row {
    point: Point,
    dir: String,
    result: Result<(String, Option<f64>, bool), String>,
}

#[derive(Serialize)]
struct SweepSummary {
    points: usize,
    failed: usize,
    consistent: usize,
    aggregate: PathBuf,
}

fn points(loaded: &LoadedConfig) -> Vec<Point> {
    let Some(s) = &loaded.config.sweep else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for &alpha in &s.alpha {
        for &kind in &s.kind {
            for &v0 in &s.v0 {
                for &amplitude in &s.amplitude {
                    out.push(Point {
                        alpha,
                        kind,
                        v0,
                        amplitude,
                    });
                }
            }
        }
    }
    out.sort_by(Point::cmp);
    out
}

fn run_point(base: &Context, point: Point, dir: PathBuf) -> Result<(String, Option<f64>, bool), String> {
    let mut config = base.loaded.config.clone();
    config.alpha = point.alpha;
    let width = config.potential.map_or(1.0, |p| p.a);
    config.potential = Some(PotentialSection {
        kind: point.kind,
        v0: point.v0,
        a: width,
        center: 0.0,
    });
    config.initial_data.amplitude = Some(point.amplitude);
    config.initial_data.h1 = None;
    config.sweep = None;
    config.output_dir = Some(dir.clone());
    let loaded = LoadedConfig {
        path: base.loaded.path.clone(),
        source: base.loaded.source.clone(),
        config,
    };
    let prepared = prepare_config(&loaded.config, |section, key, msg| format!("{section}.{key}: {msg}"))?;
    let hypotheses = hypothesis_report(prepared.sample.as_ref().expect("sweep points carry a potential"));
    if !hypotheses.admissible {
        return Err(format!(
            "hypothesis check failed (nonneg: {}, repulsive: {})",
            hypotheses.nonneg, hypotheses.repulsive
        ));
    }
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let ctx = Context {
        loaded: &loaded,
        output_dir: dir.clone(),
        allow_untrusted: base.allow_untrusted,
    };
    let started = timestamp();
    let artifacts = ScatterArtifacts::run(&prepared, &ctx).map_err(|e| e.to_string())?;
    let csv = write_scatter_artifacts(&dir, &artifacts).map_err(|e| e.to_string())?;
    let hash = loaded.hash();
    let summary = artifacts.summary(&hash);
    write_json(&dir.join("scatter.json"), &summary).map_err(|e| e.to_string())?;
    let record = RunRecord {
        command: "scatter".into(),
        config_hash: hash,
        version: crate::VERSION.into(),
        started,
        finished: timestamp(),
        exit_code: EXIT_OK,
        summary,
        csv,
    };
    write_json(&dir.join("record.json"), &serde_json::to_value(record).expect("record serializes"))
        .map_err(|e| e.to_string())?;
    Ok((artifacts.verdict(), artifacts.final_residual(), artifacts.tails_decreasing()))
}

fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_ENV) {
        let n: usize = text
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {text:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

pub fn sweep(ctx: &Context) -> Result<Outcome, CliError> {
    let points = points(ctx.loaded);
    let rows: Vec<Row> = pool()?.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &point)| {
                let dir = format!("point_{i:03}");
                let result = run_point(ctx, point, ctx.output_dir.join(&dir));
                Row { point, dir, result }
            })
            .collect()
    });

    let mut table = Table::new([
        "alpha",
        "kind",
        "V0",
        "amplitude",
        "status",
        "verdict",
        "final_residual",
        "tails_decreasing",
        "directory",
        "message",
    ]);
    let mut failed = 0;
    let mut consistent = 0;
    for row in &rows {
        let p = row.point;
        let mut cells = vec![num(p.alpha), p.kind.name().to_string(), num(p.v0), num(p.amplitude)];
        match &row.result {
            Ok((verdict, residual, tails)) => {
                if verdict == "scattering-consistent" {
                    consistent += 1;
                }
                cells.extend([
                    "ok".to_string(),
                    verdict.clone(),
                    residual.map_or_else(String::new, num),
                    tails.to_string(),
                    row.dir.clone(),
                    String::new(),
                ]);
            }
            Err(message) => {
                failed += 1;
                cells.extend([
                    "failed".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    row.dir.clone(),
                    message.clone(),
                ]);
            }
        }
        table.push(cells);
    }
    let aggregate = ctx.output_dir.join("sweep.csv");
    table.write(&aggregate).map_err(|e| CliError::Io(aggregate.clone(), e))?;
    let summary = SweepSummary {
        points: rows.len(),
        failed,
        consistent,
        aggregate: aggregate.clone(),
    };
    Ok(Outcome {
        code: EXIT_OK,
        summary: crate::output::summary(&summary, &ctx.loaded.hash()),
        csv: vec![aggregate],
    })
}
