//! Replication harness: manifests describing an experiment, deterministic
//! parallel execution with one pseudorandom stream per replication, and
//! byte-stable statistics output (sorted-key JSON, RFC 4180 CSV).
//!
//! Results are independent of the degree of parallelism: replication `r`
//! draws from streams derived from `(master_seed, r)` alone, and reduction
//! happens in replication order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::attach::{build_attach, enumerate_trees, state_space_size};
use crate::coalescent::build_coalescent;
use crate::rng::stream_rng;
use crate::seq::{compute_walk, SignSequence};
use crate::seqgen::{SequenceKind, SequenceSpec};
use crate::stats::{summarize, tv_distance};
use crate::tree::FreezeTree;
use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FREEZE_TREE_OUT";

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BuilderKind {
    Attach,
    Coalescent,
}

/// Statistics a manifest can request.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StatRequest {
    /// Uniform-active-vertex depth, uniform-pair distance, height.
    DepthDistanceHeight,
    /// Final active count, vertex count, and the height scale `h+`.
    WalkSummary,
    /// Canonical-tree frequencies, with the exact-law TV when enumerable.
    CanonicalFrequencies,
}

/// Description of one experiment: what to generate, how to build, how often.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub sequence: SequenceSpec,
    pub builder: BuilderKind,
    pub replications: usize,
    pub master_seed: u64,
    pub statistics: Vec<StatRequest>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty()
            || !self
                .experiment
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(Error::InvalidManifest(
                "experiment id must be nonempty and filename-safe".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidManifest(
                "need at least one replication".into(),
            ));
        }
        self.sequence.validate()?;
        let is_sir = matches!(self.sequence.kind, SequenceKind::Sir { .. });
        if is_sir && self.builder == BuilderKind::Coalescent {
            return Err(Error::InvalidManifest(
                "SIR sequences absorb within the horizon; the coalescent build needs tau > n"
                    .into(),
            ));
        }
        if is_sir && self.statistics.contains(&StatRequest::DepthDistanceHeight) {
            return Err(Error::InvalidManifest(
                "SIR trees end fully frozen; the active-vertex draw would fail (use the sir verb)"
                    .into(),
            ));
        }
        if self.statistics.contains(&StatRequest::CanonicalFrequencies)
            && !matches!(
                self.sequence.kind,
                SequenceKind::ConstantPlus | SequenceKind::Explicit { .. }
            )
        {
            return Err(Error::InvalidManifest(
                "canonical frequencies need a deterministic sequence kind".into(),
            ));
        }
        Ok(())
    }

    fn sequence_for_rep(&self, rep: usize) -> Result<SignSequence> {
        // stream 2r for the sequence, 2r + 1 for the build
        let spec = SequenceSpec {
            seed: self.master_seed,
            ..self.sequence.clone()
        };
        spec.generate(2 * rep as u64)
    }
}

#[derive(Clone, Debug)]
struct RepRecord {
    values: Vec<(&'static str, f64)>,
    canonical: Option<String>,
}

/// In-memory result of a run: the statistics document and the raw rows.
#[derive(Clone, Debug)]
pub struct ExperimentBundle {
    pub stats: Value,
    pub raw_rows: Vec<Vec<String>>,
}

/// Paths written by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub stats_path: PathBuf,
    pub csv_path: PathBuf,
    pub stats: Value,
}

fn run_replication(manifest: &RunManifest, rep: usize) -> Result<RepRecord> {
    let x = manifest.sequence_for_rep(rep)?;
    let n = match manifest.sequence.kind {
        SequenceKind::Sir { .. } => x.len(),
        _ => manifest.sequence.horizon.min(x.len()),
    };
    let mut build_rng = stream_rng(manifest.master_seed, 2 * rep as u64 + 1);
    let walk = compute_walk(&x);
    let mut values: Vec<(&'static str, f64)> = Vec::new();
    let mut canonical = None;

    let needs_tree = manifest.statistics.iter().any(|s| {
        matches!(
            s,
            StatRequest::DepthDistanceHeight | StatRequest::CanonicalFrequencies
        )
    });
    let tree: Option<FreezeTree> = if needs_tree {
        Some(match manifest.builder {
            BuilderKind::Attach => build_attach(&x, n, &mut build_rng)?,
            BuilderKind::Coalescent => build_coalescent(&x, n, &mut build_rng)?.tree,
        })
    } else {
        None
    };

    for stat in &manifest.statistics {
        match stat {
            StatRequest::WalkSummary => {
                let effective = walk.tau().map_or(n, |t| t.min(n));
                values.push(("active_count", walk.s(effective) as f64));
                values.push(("vertex_count", walk.num_vertices(effective)? as f64));
                if walk.survives_past(n) {
                    values.push(("h_plus", walk.h_plus(n)?));
                }
            }
            StatRequest::DepthDistanceHeight => {
                let tree = tree.as_ref().expect("tree built");
                let stats =
                    crate::stats::depth_distance_stats(std::slice::from_ref(tree), &mut build_rng)?;
                values.push(("active_depth", stats.active_depth.mean));
                values.push(("pair_distance", stats.pair_distance.mean));
                values.push(("height", stats.height.mean));
            }
            StatRequest::CanonicalFrequencies => {
                canonical = Some(tree.as_ref().expect("tree built").canonical_key());
            }
        }
    }
    Ok(RepRecord { values, canonical })
}

/// Runs the experiment in memory. Deterministic given the manifest: the
/// records are computed in parallel but reduced in replication order.
pub fn run_experiment_bundle(manifest: &RunManifest) -> Result<ExperimentBundle> {
    manifest.validate()?;
    let records: Vec<RepRecord> = (0..manifest.replications)
        .into_par_iter()
        .map(|rep| run_replication(manifest, rep))
        .collect::<Result<Vec<_>>>()?;

    let mut raw_rows = Vec::new();
    let mut series: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut frequencies: BTreeMap<String, u64> = BTreeMap::new();
    for (rep, record) in records.iter().enumerate() {
        for (name, value) in &record.values {
            raw_rows.push(vec![rep.to_string(), name.to_string(), format!("{value}")]);
            series.entry(name).or_default().push(*value);
        }
        if let Some(key) = &record.canonical {
            raw_rows.push(vec![
                rep.to_string(),
                "canonical_key".to_string(),
                key.clone(),
            ]);
            *frequencies.entry(key.clone()).or_insert(0) += 1;
        }
    }

    let mut stats_obj = serde_json::Map::new();
    for (name, values) in &series {
        let summary = summarize(values);
        stats_obj.insert(name.to_string(), serde_json::to_value(summary)?);
    }

    let mut doc = json!({
        "experiment": manifest.experiment,
        "builder": manifest.builder,
        "replications": manifest.replications,
        "master_seed": manifest.master_seed,
        "sequence": serde_json::to_value(&manifest.sequence)?,
        "stats": Value::Object(stats_obj),
    });

    if manifest
        .statistics
        .contains(&StatRequest::CanonicalFrequencies)
    {
        doc["canonical_frequencies"] = serde_json::to_value(&frequencies)?;
        // exact-law comparison when the state space is small enough
        let x = manifest.sequence_for_rep(0)?;
        let n = manifest.sequence.horizon.min(x.len());
        let walk = compute_walk(&x);
        if walk.survives_before(n) && state_space_size(&walk, n)? <= 10_000 {
            let exact = enumerate_trees(&x, n, 10_000)?;
            let expected: BTreeMap<String, f64> = exact
                .into_iter()
                .map(|(k, p)| {
                    let p = rational_to_f64(&p);
                    (k, p)
                })
                .collect();
            let total: u64 = frequencies.values().sum();
            let observed: BTreeMap<String, f64> = frequencies
                .iter()
                .map(|(k, &c)| (k.clone(), c as f64 / total as f64))
                .collect();
            doc["tv_to_exact"] = json!(tv_distance(&observed, &expected));
        }
    }

    Ok(ExperimentBundle {
        stats: doc,
        raw_rows,
    })
}

/// Floating-point view of an exact probability.
pub fn rational_to_f64(p: &crate::Exact) -> f64 {
    use num_traits::ToPrimitive;
    p.to_f64().expect("probability fits in f64")
}

/// Runs the experiment and writes `<experiment>.stats.json` and
/// `<experiment>.raw.csv` into the output directory. Experiment ids are
/// unique per directory: existing outputs are refused.
pub fn run_experiment(manifest: &RunManifest) -> Result<ExperimentOutput> {
    let out_dir = manifest.out_dir.clone().unwrap_or_else(default_out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let stats_path = out_dir.join(format!("{}.stats.json", manifest.experiment));
    let csv_path = out_dir.join(format!("{}.raw.csv", manifest.experiment));
    if stats_path.exists() || csv_path.exists() {
        return Err(Error::InvalidManifest(format!(
            "experiment '{}' already has outputs in {}",
            manifest.experiment,
            out_dir.display()
        )));
    }
    let bundle = run_experiment_bundle(manifest)?;
    std::fs::write(&stats_path, canonical_json_string(&bundle.stats))?;
    write_csv(
        &csv_path,
        &["replication", "statistic", "value"],
        bundle.raw_rows.iter(),
    )?;
    Ok(ExperimentOutput {
        stats_path,
        csv_path,
        stats: bundle.stats,
    })
}

/// Sorted-key, pretty-printed JSON with a trailing newline.
pub fn canonical_json_string(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("json serializes");
    out.push('\n');
    out
}

/// RFC 4180 field quoting.
pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn write_csv<'a>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = &'a Vec<String>>,
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|f| csv_escape(f)).collect();
        writeln!(file, "{}", line.join(","))?;
    }
    Ok(())
}

/// Runs a closure on a dedicated rayon pool with `threads` workers; used to
/// demonstrate that results do not depend on the degree of parallelism.
pub fn with_thread_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(job)
}
