mod support;

use umlskg::build::{build_from_tables, BuildOptions, TableSchemas};
use umlskg::synth::{write_release, SynthConfig};

fn check(cfg: &SynthConfig) {
    let dir = tempfile::tempdir().unwrap();
    let (paths, summary) = write_release(dir.path(), cfg).unwrap();
    let out = build_from_tables(&paths, &TableSchemas::default(), &BuildOptions::default()).unwrap();
    let s = out.snapshot.stats();
    let oracle = support::recount(dir.path());

    assert_eq!(s.concepts_kept, oracle.concepts_kept, "concepts_kept");
    assert_eq!(s.edges_kept, oracle.edges_kept, "edges_kept");
    assert_eq!(s.self_relations_dropped, oracle.self_relations_dropped, "self_relations_dropped");
    assert_eq!(
        s.non_english_endpoint_dropped, oracle.non_english_endpoint_dropped,
        "non_english_endpoint_dropped"
    );
    assert_eq!(s.fallback_labels_used, oracle.fallback_labels_used, "fallback_labels_used");
    assert_eq!(s.multi_definition_concepts, oracle.multi_definition_concepts, "multi_definition_concepts");

    let malformed = out.conso_report.rows_malformed
        + out.def_report.rows_malformed
        + out.sty_report.rows_malformed
        + out.rel_report.rows_malformed;
    assert!(malformed >= oracle.malformed_lines);
    assert!(malformed <= summary.truncated_lines);
    assert_eq!(out.snapshot.concept_count() as u64, s.concepts_kept);
    assert_eq!(out.snapshot.edge_count() as u64, s.edges_kept);
    assert!(out.snapshot.adjacency_is_consistent());
}

#[test]
fn default_fixture_matches_recount() {
    let cfg = SynthConfig::default();
    check(&cfg);
}

#[test]
fn other_seeds_and_shapes_match_recount() {
    for seed in [1u64, 2, 3] {
        check(&SynthConfig {
            seed,
            concepts: 200,
            relations: 1_500,
            missing_rela_fraction: 0.6,
            self_loop_fraction: 0.1,
            ..Default::default()
        });
    }
}

#[test]
fn fixture_exercises_every_counter() {
    let dir = tempfile::tempdir().unwrap();
    write_release(dir.path(), &SynthConfig::default()).unwrap();
    let r = support::recount(dir.path());
    assert!(r.self_relations_dropped > 0);
    assert!(r.non_english_endpoint_dropped > 0);
    assert!(r.fallback_labels_used > 0);
    assert!(r.multi_definition_concepts > 0);
    assert!(r.malformed_lines > 0);
    assert!(r.concepts_kept > 800 && r.concepts_kept < 1_000);
}

#[test]
fn drop_suppressed_changes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (paths, _) = write_release(dir.path(), &SynthConfig { concepts: 200, relations: 500, ..Default::default() }).unwrap();
    let keep = build_from_tables(&paths, &TableSchemas::default(), &BuildOptions::default()).unwrap();
    let drop = build_from_tables(&paths, &TableSchemas::default(), &BuildOptions { drop_suppressed: true }).unwrap();
    assert_eq!(keep.snapshot.stats().suppressed_rows_dropped, 0);
    assert!(drop.snapshot.stats().suppressed_rows_dropped > 0);
}
