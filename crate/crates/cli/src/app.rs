//! Subcommand implementations, kept out of `main` so they can be tested.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use veritas_core::chain::{audit_chains, export_chains, import_chains, trace_source, Chain, DEFAULT_MAX_LEN};
use veritas_core::graph::{load_graph, preferential_attachment, GraphSource, SocialGraph};
use veritas_core::sim::{detection_level_stats, run_on_graph, RunReport, SimConfig};
use veritas_core::Topic;

use crate::config::{ConfigError, GraphSpec, RunConfig};
use crate::report::{detection_histogram_csv, fingerprint, label_counts_csv, render_tables, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

/// `<out>` with its extension replaced by `suffix`, e.g. `report.chains.ndjson`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Loads the graph and hashes the edge list it came from.
pub fn load_with_fingerprint(source: &GraphSource) -> Result<(SocialGraph, String), CliError> {
    let (graph, _) = load_graph(source).map_err(data("loading graph"))?;
    let digest = match source {
        GraphSource::EdgeListFile(path) => {
            fingerprint(&fs::read(path).map_err(data(format_args!("reading {}", path.display())))?)
        }
        GraphSource::SyntheticScaleFree { .. } => fingerprint(graph.to_edge_list().as_bytes()),
    };
    Ok((graph, digest))
}

pub struct RunArgs<'a> {
    pub config: Option<&'a Path>,
    pub manifest: Option<&'a Path>,
    pub seed: Option<u64>,
    pub graph: Option<&'a GraphSpec>,
    pub out: &'a Path,
    pub runs: usize,
}

/// Resolves the run to a config plus the fingerprint it must match, if replaying.
fn resolve(args: &RunArgs) -> Result<(SimConfig, Option<String>), CliError> {
    if let Some(path) = args.manifest {
        let text = fs::read_to_string(path).map_err(data(format_args!("reading {}", path.display())))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("manifest: {e}")))?;
        let mut config = manifest.config;
        if let Some(seed) = args.seed {
            if seed != manifest.root_seed {
                return Err(ConfigError::Invalid(format!(
                    "--seed {seed} disagrees with manifest seed {}",
                    manifest.root_seed
                ))
                .into());
            }
        }
        config.seed = manifest.root_seed;
        config.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        return Ok((config, Some(manifest.dataset_fingerprint)));
    }
    let path = args
        .config
        .ok_or_else(|| ConfigError::Invalid("either --config or --manifest is required".into()))?;
    let seed = args
        .seed
        .ok_or_else(|| ConfigError::Invalid("--seed is required".into()))?;
    let text = fs::read_to_string(path).map_err(data(format_args!("reading {}", path.display())))?;
    let config = RunConfig::parse(&text)?.to_sim_config(seed, args.graph)?;
    Ok((config, None))
}

pub fn run(args: &RunArgs, started_at: String) -> Result<String, CliError> {
    let (config, expected) = resolve(args)?;
    let (graph, digest) = load_with_fingerprint(&config.graph_source)?;
    if let Some(expected) = expected {
        if expected != digest {
            return Err(CliError::Data(format!(
                "dataset fingerprint {digest} does not match manifest {expected}"
            )));
        }
    }
    log::info!(
        "graph: {} nodes, {} edges, fingerprint {digest}",
        graph.node_count(),
        graph.edge_count()
    );
    let manifest = RunManifest {
        config: config.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        root_seed: config.seed,
        dataset_fingerprint: digest,
    };
    if args.runs > 1 {
        return run_batch(&graph, &config, args.runs, args.out, &manifest);
    }

    let report = run_on_graph(&graph, &config).map_err(data("simulation"))?;
    write_report(&report, args.out)?;
    write_json(&sidecar(args.out, "manifest.json"), &manifest)?;
    Ok(format!(
        "accuracy {:.4} (baseline {:.4}) over {} messages; wrote {}",
        report.accuracy,
        report.baseline_accuracy,
        report.events.len(),
        args.out.display()
    ))
}

/// Writes the report and all of its sidecars.
pub fn write_report(report: &RunReport, out: &Path) -> Result<(), CliError> {
    write_json(out, report)?;
    let chains_path = sidecar(out, "chains.ndjson");
    let file = File::create(&chains_path).map_err(data(format_args!("creating {}", chains_path.display())))?;
    let mut w = BufWriter::new(file);
    export_chains(&report.chains, &mut w)
        .and_then(|_| w.flush())
        .map_err(data(format_args!("writing {}", chains_path.display())))?;
    write_rendered(report, out)?;
    Ok(())
}

fn write_rendered(report: &RunReport, out: &Path) -> Result<String, CliError> {
    let tables = render_tables(report);
    write_text(&sidecar(out, "messages.csv"), &tables.per_message_csv)?;
    write_text(&sidecar(out, "detection.csv"), &tables.detection_csv)?;
    write_text(&sidecar(out, "labels.csv"), &label_counts_csv(report))?;
    write_text(&sidecar(out, "levels.csv"), &detection_histogram_csv(report))?;
    Ok(tables.text)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(data(format_args!("writing {}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(data("serializing"))?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Debug, Serialize)]
struct BatchRun {
    seed: u64,
    accuracy: f64,
    baseline_accuracy: f64,
    mean_detection_level: BTreeMap<Topic, f64>,
    longest_chain: usize,
}

#[derive(Debug, Serialize)]
struct BatchReport {
    runs: Vec<BatchRun>,
    mean_accuracy: f64,
    above_baseline: usize,
}

fn run_batch(
    graph: &SocialGraph,
    config: &SimConfig,
    runs: usize,
    out: &Path,
    manifest: &RunManifest,
) -> Result<String, CliError> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(runs);
    let seeds: Vec<u64> = (0..runs as u64).map(|k| config.seed.wrapping_add(k)).collect();
    let mut results: Vec<Option<Result<BatchRun, CliError>>> = (0..runs).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (chunk_seeds, chunk_out) in seeds
            .chunks(runs.div_ceil(workers))
            .zip(results.chunks_mut(runs.div_ceil(workers)))
        {
            scope.spawn(move || {
                for (seed, slot) in chunk_seeds.iter().zip(chunk_out) {
                    let mut c = config.clone();
                    c.seed = *seed;
                    *slot = Some(
                        run_on_graph(graph, &c)
                            .map_err(data(format_args!("simulation with seed {seed}")))
                            .map(|r| BatchRun {
                                seed: *seed,
                                accuracy: r.accuracy,
                                baseline_accuracy: r.baseline_accuracy,
                                mean_detection_level: detection_level_stats(&r)
                                    .into_iter()
                                    .map(|(t, s)| (t, s.raw))
                                    .collect(),
                                longest_chain: r.chains.values().map(Chain::len).max().unwrap_or(0),
                            }),
                    );
                }
            });
        }
    });
    let runs_done = results
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect::<Result<Vec<_>, _>>()?;
    let mean_accuracy = runs_done.iter().map(|r| r.accuracy).sum::<f64>() / runs_done.len() as f64;
    let above_baseline = runs_done.iter().filter(|r| r.accuracy > r.baseline_accuracy).count();
    let summary = format!(
        "mean accuracy {mean_accuracy:.4} over {} runs; above baseline in {above_baseline}; wrote {}",
        runs_done.len(),
        out.display()
    );
    write_json(
        out,
        &BatchReport {
            runs: runs_done,
            mean_accuracy,
            above_baseline,
        },
    )?;
    write_json(&sidecar(out, "manifest.json"), manifest)?;
    Ok(summary)
}

fn read_chains(path: &Path, max_len: usize) -> Result<BTreeMap<usize, Chain>, CliError> {
    let file = File::open(path).map_err(data(format_args!("opening {}", path.display())))?;
    import_chains(BufReader::new(file), max_len).map_err(data(path.display()))
}

pub fn verify(chains: &Path, max_len: Option<usize>) -> Result<String, CliError> {
    let chains = read_chains(chains, max_len.unwrap_or(DEFAULT_MAX_LEN))?;
    let problems = audit_chains(&chains);
    if problems.is_empty() {
        let blocks: usize = chains.values().map(Chain::len).sum();
        return Ok(format!("all chains valid ({} chains, {blocks} blocks)", chains.len()));
    }
    let lines: Vec<String> = problems.iter().map(ToString::to_string).collect();
    Err(CliError::Data(lines.join("\n")))
}

pub fn trace(chains: &Path, message: u64, max_len: Option<usize>) -> Result<String, CliError> {
    let chains = read_chains(chains, max_len.unwrap_or(DEFAULT_MAX_LEN))?;
    for chain in chains.values() {
        if let Ok(origin) = trace_source(chain, message) {
            return Ok(origin.to_string());
        }
    }
    Err(CliError::Data(format!("message {message} not found in any chain")))
}

/// Re-renders tables and plot data from a saved report.
pub fn report(path: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(data(format_args!("reading {}", path.display())))?;
    let report: RunReport = serde_json::from_str(&text).map_err(data(path.display()))?;
    if report.events.is_empty() {
        return Err(CliError::Data("report has no events".into()));
    }
    write_rendered(&report, out.unwrap_or(path))
}

pub fn gen_graph(graph: &GraphSpec, seed: u64, out: &Path) -> Result<String, CliError> {
    let GraphSpec::Synthetic { n, m } = *graph else {
        return Err(ConfigError::Invalid("gen-graph needs --graph synthetic:n,m".into()).into());
    };
    let graph = preferential_attachment(n, m, seed).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let text = format!(
        "% synthetic scale-free n={n} m={m} seed={seed}\n{}",
        graph.to_edge_list()
    );
    write_text(out, &text)?;
    Ok(format!(
        "wrote {} nodes, {} edges to {}",
        graph.node_count(),
        graph.edge_count(),
        out.display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar(Path::new("out/report.json"), "messages.csv"),
            Path::new("out/report.messages.csv")
        );
        assert_eq!(sidecar(Path::new("r"), "chains.ndjson"), Path::new("r.chains.ndjson"));
    }
}
