use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{BenchError, BenchRun, Summary};
use crate::scheduler::RenderMode;

/// Row names of the summary matrix, in order.
pub const SUMMARY_ROWS: [&str; 6] = ["fps", "frame_ms", "plan_ms", "raster_ms", "passes", "fragments"];
/// Portal-count columns of the summary matrix.
const SUMMARY_COLUMNS: [usize; 4] = [0, 2, 4, 6];

pub const SUMMARY_FOOTER: &str = "# times are software-raster wall clock on this machine; \
compare trends and counts, not absolute values. plan_ms is scheduling, raster_ms is pass execution.";

/// One line of the per-frame CSV.
#[derive(Debug, Clone, Serialize)]
pub struct FrameRow {
    pub mode: &'static str,
    pub portals: usize,
    pub frame: usize,
    pub space: u32,
    pub total_ms: f64,
    pub plan_ms: f64,
    pub raster_ms: f64,
    pub passes: usize,
    pub triangles_submitted: u64,
    pub triangles_culled: u64,
    pub fragments_shaded: u64,
    pub fragments_stencil_rejected: u64,
    pub fragments_depth_rejected: u64,
    pub left_fragments: u64,
    pub right_fragments: u64,
}

fn rows(run: &BenchRun) -> impl Iterator<Item = FrameRow> + '_ {
    run.series.iter().map(move |m| FrameRow {
        mode: m.mode.name(),
        portals: run.portals,
        frame: m.frame,
        space: m.space.0,
        total_ms: m.total_ms,
        plan_ms: m.plan_ms,
        raster_ms: m.raster_ms,
        passes: m.pass_count,
        triangles_submitted: m.counters.triangles_submitted,
        triangles_culled: m.counters.triangles_culled,
        fragments_shaded: m.counters.fragments_shaded,
        fragments_stencil_rejected: m.counters.fragments_stencil_rejected,
        fragments_depth_rejected: m.counters.fragments_depth_rejected,
        left_fragments: m.eye_fragments(0),
        right_fragments: m.eye_fragments(1),
    })
}

/// Path of the summary matrix written next to `path`. With several modes in
/// one output the mode name is added.
pub fn summary_path(path: &Path, mode: Option<RenderMode>) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match mode {
        Some(mode) => format!("{stem}.{}.summary.csv", mode.name()),
        None => format!("{stem}.summary.csv"),
    };
    path.with_file_name(name)
}

/// Writes the per-frame CSV at `path` and the summary matrix beside it
/// (rows are metrics, columns are portal counts 0, 2, 4, 6). Returns the
/// summary file paths.
pub fn emit_csv(runs: &[BenchRun], path: &Path) -> Result<Vec<PathBuf>, BenchError> {
    if runs.iter().all(|r| r.series.is_empty()) {
        return Err(BenchError::EmptySeries);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut writer = csv::Writer::from_path(path)?;
    for run in runs {
        for row in rows(run) {
            writer.serialize(row)?;
        }
    }
    writer.flush()?;

    let mut by_mode: BTreeMap<&'static str, (RenderMode, Vec<&Summary>)> = BTreeMap::new();
    for run in runs.iter().filter(|r| !r.series.is_empty()) {
        by_mode
            .entry(run.summary.mode.name())
            .or_insert_with(|| (run.summary.mode, Vec::new()))
            .1
            .push(&run.summary);
    }
    let several = by_mode.len() > 1;
    let mut written = Vec::new();
    for (mode, summaries) in by_mode.into_values() {
        let target = summary_path(path, several.then_some(mode));
        fs::write(&target, summary_matrix(&summaries))?;
        written.push(target);
    }
    Ok(written)
}

/// Summary matrix text. Columns without a run stay empty; if a portal count
/// was run more than once the last run wins.
fn summary_matrix(summaries: &[&Summary]) -> String {
    let mut columns: BTreeMap<usize, &Summary> = BTreeMap::new();
    for s in summaries {
        columns.insert(s.portals, s);
    }
    let mut out = String::from("metric");
    for c in SUMMARY_COLUMNS {
        out.push_str(&format!(",{c}"));
    }
    out.push('\n');
    for row in SUMMARY_ROWS {
        out.push_str(row);
        for c in SUMMARY_COLUMNS {
            out.push(',');
            if let Some(value) = columns.get(&c).and_then(|s| s.metric(row)) {
                out.push_str(&format!("{value:.4}"));
            }
        }
        out.push('\n');
    }
    let extra: Vec<_> = columns.keys().filter(|k| !SUMMARY_COLUMNS.contains(k)).collect();
    if !extra.is_empty() {
        out.push_str(&format!("# runs with other portal counts omitted: {extra:?}\n"));
    }
    out.push_str(SUMMARY_FOOTER);
    out.push('\n');
    out
}

/// Writes `frame_{index}_{mode}.png` for every `every`-th captured frame.
pub fn emit_frames(run: &BenchRun, dir: &Path, every: usize) -> Result<Vec<PathBuf>, BenchError> {
    if every == 0 {
        return Err(BenchError::InvalidConfig("frame interval must be at least 1".into()));
    }
    if run.series.is_empty() {
        return Err(BenchError::EmptySeries);
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for index in (0..run.series.len()).step_by(every) {
        let png = run
            .captures
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, png)| png)
            .ok_or(BenchError::NotCaptured(index))?;
        let path = dir.join(format!("frame_{index:05}_{}.png", run.config.mode.name()));
        fs::write(&path, png)?;
        written.push(path);
    }
    Ok(written)
}
