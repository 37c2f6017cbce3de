//! Tables, plot data and the reproducibility manifest.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use veritas_core::sim::{detection_level_stats, Detection, RunReport, SimConfig};
use veritas_core::Topic;

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub tool_version: String,
    pub started_at: String,
    pub root_seed: u64,
    /// SHA-256 of the edge list the run consumed.
    pub dataset_fingerprint: String,
}

pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    pub text: String,
    pub per_message_csv: String,
    pub detection_csv: String,
}

/// Per-message table (node id, info type, T/F) and per-topic average
/// detection level, as text and CSV.
pub fn render_tables(report: &RunReport) -> Tables {
    let mut text = String::new();
    let mut per_message_csv = String::from("Node ID,Info Type,Detection\n");
    writeln!(text, "Detection per message").unwrap();
    writeln!(text, "{:>10}  {:<9}  Detection", "Node ID", "Info Type").unwrap();
    for e in &report.events {
        let node = report.external_id(e.message.origin);
        let label = label(e.final_label);
        writeln!(text, "{node:>10}  {:<9}  {label}", e.message.topic.name()).unwrap();
        writeln!(per_message_csv, "{node},{},{label}", e.message.topic.name()).unwrap();
    }

    let stats = detection_level_stats(report);
    let mut detection_csv = String::from("Info Type,Average Level of Detection\n");
    writeln!(text).unwrap();
    writeln!(text, "Average level of detection").unwrap();
    writeln!(text, "{:<9}  Average Level of Detection", "Info Type").unwrap();
    for (topic, stat) in &stats {
        writeln!(text, "{:<9}  {}", topic.name(), stat.table).unwrap();
        writeln!(detection_csv, "{},{}", topic.name(), stat.table).unwrap();
    }
    for topic in Topic::ALL.into_iter().filter(|t| !stats.contains_key(t)) {
        writeln!(text, "* {} omitted: no messages on this topic", topic.name()).unwrap();
    }
    writeln!(text).unwrap();
    writeln!(
        text,
        "accuracy {:.4} (always-true baseline {:.4}) over {} messages",
        report.accuracy,
        report.baseline_accuracy,
        report.events.len()
    )
    .unwrap();
    Tables {
        text,
        per_message_csv,
        detection_csv,
    }
}

fn label(d: Detection) -> &'static str {
    match d {
        Detection::T => "T",
        Detection::F => "F",
    }
}

/// Messages labelled T/F per topic, with the count of actually true ones.
pub fn label_counts_csv(report: &RunReport) -> String {
    let mut out = String::from("Info Type,T,F,Actually True,Correct\n");
    for t in &report.topics {
        writeln!(
            out,
            "{},{},{},{},{}",
            t.topic.name(),
            t.labelled_true,
            t.labelled_false,
            t.actually_true,
            t.correct
        )
        .unwrap();
    }
    out
}

/// Histogram of detection levels per topic.
pub fn detection_histogram_csv(report: &RunReport) -> String {
    let max = report.config.max_hops;
    let mut out = String::from("Info Type");
    for level in 1..=max {
        write!(out, ",Level {level}").unwrap();
    }
    out.push('\n');
    for topic in Topic::ALL {
        let mut counts = vec![0usize; max];
        for e in report.events.iter().filter(|e| e.message.topic == topic) {
            counts[e.detection_level - 1] += 1;
        }
        out.push_str(topic.name());
        for c in counts {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use veritas_core::sim::run_simulation;
    use veritas_core::GraphSource;

    fn small_report() -> RunReport {
        let mut c = SimConfig::new(GraphSource::SyntheticScaleFree { n: 200, m: 3, seed: 4 }, 4);
        c.num_seeds = 12;
        run_simulation(&c).unwrap()
    }

    #[test]
    fn single_event_row() {
        let mut r = small_report();
        r.events.truncate(1);
        let e = &r.events[0];
        let tables = render_tables(&r);
        let rows: Vec<&str> = tables.per_message_csv.lines().collect();
        assert_eq!(rows.len(), 2);
        let expected = format!(
            "{},{},{}",
            e.message.origin,
            e.message.topic.name(),
            if e.final_label == Detection::T { "T" } else { "F" }
        );
        assert_eq!(rows[1], expected);
    }

    #[test]
    fn detection_table_rows_and_footnote() {
        let mut r = small_report();
        r.events.truncate(3);
        let (pol, tech) = (r.events[0].clone(), r.events[1].clone());
        r.events = vec![pol.clone(), pol, tech];
        r.events[0].message.topic = Topic::Pol;
        r.events[0].detection_level = 2;
        r.events[1].message.topic = Topic::Pol;
        r.events[1].detection_level = 4;
        r.events[2].message.topic = Topic::Tech;
        r.events[2].detection_level = 2;
        let tables = render_tables(&r);
        assert_eq!(
            tables.detection_csv,
            "Info Type,Average Level of Detection\nPol,3\nTech,2\n"
        );
        assert!(tables.text.contains("* Movie omitted: no messages on this topic"));
        assert!(tables.text.contains("* Research omitted"));
    }

    #[test]
    fn plot_data_totals() {
        let r = small_report();
        let hist = detection_histogram_csv(&r);
        let total: usize = hist
            .lines()
            .skip(1)
            .flat_map(|l| l.split(',').skip(1).map(|c| c.parse::<usize>().unwrap()))
            .sum();
        assert_eq!(total, r.events.len());
        let counts = label_counts_csv(&r);
        assert_eq!(counts.lines().count(), 5);
    }

    #[test]
    fn fingerprint_is_sha256_hex() {
        assert_eq!(
            fingerprint(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
