use std::collections::BTreeSet;
use std::io::Write;

use veritas_core::chain::{audit_chains, export_chains, import_chains, trace_source, verify_chain, ChainValidity};
use veritas_core::graph::preferential_attachment;
use veritas_core::sim::{run_simulation, Detection, SimConfig};
use veritas_core::{load_graph, Decision, GraphSource};

fn edge_list_file(text: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(text.as_bytes()).unwrap();
    file
}

#[test]
fn file_backed_run_keeps_external_ids() {
    // sparse, shifted ids so dense and external indices differ
    let synthetic = preferential_attachment(400, 3, 11).unwrap();
    let mut text = String::from("% wall posts\n");
    for (a, b) in synthetic.edges() {
        text.push_str(&format!("{} {} 1 1234567\n", a * 7 + 100, b * 7 + 100));
    }
    let file = edge_list_file(&text);
    let source = GraphSource::EdgeListFile(file.path().to_path_buf());
    let (graph, stats) = load_graph(&source).unwrap();
    assert_eq!(graph.node_count(), 400);
    assert_eq!(graph.edge_count(), synthetic.edge_count());
    assert_eq!(stats.lines_read, synthetic.edge_count() + 1);

    let mut config = SimConfig::new(source, 21);
    config.num_seeds = 40;
    let report = run_simulation(&config).unwrap();
    assert_eq!(report.events.len(), 40);
    for e in &report.events {
        let external = report.external_id(e.message.origin);
        assert_eq!(external, e.message.origin as u64 * 7 + 100);
        assert!((1..=config.max_hops).contains(&e.detection_level));
        assert_eq!(
            e.final_label == Detection::F,
            e.hops.last().unwrap().decision == Decision::Blocked
        );
    }
    let origins: BTreeSet<_> = report.events.iter().map(|e| e.message.origin).collect();
    assert_eq!(origins.len(), 40, "origins are sampled without replacement");
}

#[test]
fn exported_chains_round_trip_and_trace() {
    let mut config = SimConfig::new(GraphSource::SyntheticScaleFree { n: 600, m: 3, seed: 2 }, 2);
    config.num_seeds = 60;
    let report = run_simulation(&config).unwrap();

    let mut bytes = Vec::new();
    export_chains(&report.chains, &mut bytes).unwrap();
    let imported = import_chains(bytes.as_slice(), config.max_chain_len).unwrap();
    assert_eq!(imported, report.chains);
    assert!(audit_chains(&imported).is_empty());
    for chain in imported.values() {
        assert_eq!(verify_chain(chain), ChainValidity::Valid);
        assert!(chain.len() <= config.max_chain_len);
    }
    for e in &report.events {
        let origin = imported
            .values()
            .find_map(|c| trace_source(c, e.message.message_id).ok());
        assert_eq!(origin, Some(e.message.origin));
    }
}

#[test]
fn truncated_export_is_still_consistent_but_reordered_is_not() {
    let mut config = SimConfig::new(GraphSource::SyntheticScaleFree { n: 300, m: 2, seed: 6 }, 6);
    config.num_seeds = 10;
    let report = run_simulation(&config).unwrap();
    let mut bytes = Vec::new();
    export_chains(&report.chains, &mut bytes).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();

    // dropping a chain's tail leaves a valid, shorter prefix
    let last = lines.pop().unwrap();
    let joined = lines.join("\n");
    let shorter = import_chains(joined.as_bytes(), config.max_chain_len).unwrap();
    assert!(audit_chains(&shorter).is_empty());

    // swapping two blocks of one chain breaks the links
    lines.push(last);
    let pos = lines
        .windows(2)
        .position(|w| w[0].split(',').next() == w[1].split(',').next())
        .expect("some chain has two blocks");
    lines.swap(pos, pos + 1);
    let swapped = lines.join("\n");
    let chains = import_chains(swapped.as_bytes(), config.max_chain_len).unwrap();
    assert!(!audit_chains(&chains).is_empty());
}
