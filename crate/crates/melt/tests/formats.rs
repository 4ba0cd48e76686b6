mod common;

use std::collections::BTreeMap;

use melt::corpus::{ingest, read_corpus};
use melt::formats::*;
use melt_core::chem::{EntityKind, SeedEntitySet};
use melt_core::embed::Embeddings;
use melt_core::graph::Edge;
use melt_core::mask::MaskedExample;
use melt_core::vocab::VocabEntry;
use tempfile::TempDir;

fn table() -> Embeddings {
    let words = vec!["LiCoO2".to_string(), "cathode".into(), "band gap".into()];
    let data = vec![0.5, -1.25, 3.0e-7, 1234567.0, 0.1, -0.2, 0.0, 1.0, -1.0];
    Embeddings::new(words, 3, data).unwrap()
}

#[test]
fn vocab_round_trip() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("vocab.tsv");
    let entries = vec![
        VocabEntry { word: "the".into(), count: 10, is_formula: false },
        VocabEntry { word: "TiO2".into(), count: 3, is_formula: true },
    ];
    write_vocab(&p, &entries).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "the\t10\t0\nTiO2\t3\t1\n");
    assert_eq!(read_vocab(&p).unwrap(), entries);
}

#[test]
fn malformed_vocab_reports_line() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("vocab.tsv");
    std::fs::write(&p, "a\t1\t0\nb\tx\t0\n").unwrap();
    let err = read_vocab(&p).unwrap_err();
    assert!(err.to_string().contains(":2:"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn seeds_round_trip_in_frequency_order() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("seeds.tsv");
    let mut s = SeedEntitySet::new();
    s.add("melting point", EntityKind::DictionaryTerm, 2);
    s.add("H2O", EntityKind::Formula, 5);
    s.add("GaN", EntityKind::Formula, 2);
    write_seeds(&p, &s).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let first: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(first, ["H2O", "GaN", "melting point"]);
    let back = read_seeds(&p).unwrap();
    assert_eq!(back.ordered(), s.ordered());
}

#[test]
fn text_embeddings_keep_six_significant_digits() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("emb.vec");
    let emb = table();
    // Multi-word entries cannot be written in the space-separated layout.
    let single = Embeddings::new(emb.words()[..2].to_vec(), 3, emb.data()[..6].to_vec()).unwrap();
    write_embeddings_text(&p, &single).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().next().unwrap(), "2 3");
    assert_eq!(text.lines().nth(2).unwrap(), "cathode 1.23457e+06 0.1 -0.2");
    let back = read_embeddings(&p).unwrap();
    assert_eq!(back.words(), single.words());
    for (a, b) in back.data().iter().zip(single.data()) {
        assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn binary_embeddings_round_trip_at_f32_precision() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("emb.bin");
    let emb = Embeddings::new(table().words()[..2].to_vec(), 3, table().data()[..6].to_vec()).unwrap();
    write_embeddings_binary(&p, &emb).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    assert!(bytes.starts_with(b"2 3\nLiCoO2 "));
    assert_eq!(bytes.len(), 4 + 2 * 3 * 4 + "LiCoO2 ".len() + "cathode ".len() + 2);
    let back = read_embeddings(&p).unwrap();
    for (a, b) in back.data().iter().zip(emb.data()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}

#[test]
fn embedding_header_mismatch_is_a_parse_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("emb.vec");
    std::fs::write(&p, "3 2\na 1 2\nb 3 4\n").unwrap();
    assert!(read_embeddings(&p).unwrap_err().to_string().contains("header"));
    std::fs::write(&p, "1 2\na 1 2 3\n").unwrap();
    assert!(read_embeddings(&p).is_err());
}

#[test]
fn concepts_group_by_name_in_order() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("c.tsv");
    std::fs::write(&p, "# name\tsubject\tobject\nApplication\tbattery\tLiCoO2\nProperty\tband gap\tTiO2\nApplication\tsolar cell\tCdTe\n").unwrap();
    let c = read_concepts(&p).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c[0].name, "Application");
    assert_eq!(c[0].pairs, vec![("battery".into(), "LiCoO2".into()), ("solar cell".into(), "CdTe".into())]);
    assert_eq!(c[1].pairs[0].0, "band gap");
}

#[test]
fn graph_tables_round_trip() {
    let dir = TempDir::new().unwrap();
    let ep = dir.path().join("edges.tsv");
    let edges = vec![Edge { from: "TiO2".into(), to: "anatase".into(), concept: "Property".into(), similarity: 0.75 }];
    write_edges(&ep, &edges).unwrap();
    assert_eq!(read_edges(&ep).unwrap(), edges);
    let np = dir.path().join("nodes.tsv");
    let nodes: BTreeMap<String, NodeRecord> = [
        ("TiO2".to_string(), NodeRecord { degree: 1, is_seed: true }),
        ("anatase".to_string(), NodeRecord { degree: 1, is_seed: false }),
    ]
    .into();
    write_nodes(&np, &nodes).unwrap();
    assert_eq!(read_nodes(&np).unwrap(), nodes);
    std::fs::write(&np, "a\t1\t1\na\t2\t0\n").unwrap();
    assert!(read_nodes(&np).is_err());
}

#[test]
fn example_records_use_the_documented_keys() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("ex.jsonl");
    let ex = MaskedExample {
        sequence_id: "doc#0".into(),
        tokens: vec!["[MASK]".into(), "is".into(), "stable".into()],
        masked_positions: vec![0],
        original_targets: vec!["TiO2".into()],
        stage: 2,
        strategy: "melt".into(),
    };
    write_examples(&p, std::slice::from_ref(&ex)).unwrap();
    let line = std::fs::read_to_string(&p).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    let mut want = ["id", "tokens", "masked_positions", "targets", "stage", "strategy"];
    want.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, want);
    assert_eq!(read_examples(&p).unwrap(), vec![ex]);
}

#[test]
fn conll_and_counts() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("g.conll");
    std::fs::write(&p, "-DOCSTART-\tO\n\nTiO2\tB-MAT\nis\tO\n\r\n").unwrap();
    assert_eq!(read_conll(&p).unwrap(), vec![("TiO2".into(), "B-MAT".into()), ("is".into(), "O".into())]);
    let c = dir.path().join("c.tsv");
    std::fs::write(&c, "the\t5\nthe\t2\nfoo\t1\n").unwrap();
    assert_eq!(read_counts(&c).unwrap(), BTreeMap::from([("foo".into(), 1), ("the".into(), 7)]));
}

#[test]
fn token_offsets_survive_the_round_trip() {
    let dir = TempDir::new().unwrap();
    let corpus = read_corpus(&common::data_dir().join("toy_corpus")).unwrap();
    let ing = ingest(&corpus.docs, 1).unwrap();
    let p = dir.path().join("tokens.jsonl");
    write_tokens(&p, &ing.docs).unwrap();
    let back = read_tokens(&p).unwrap();
    assert_eq!(back, ing.docs);
    for d in &back {
        for t in d.sentences.iter().flatten() {
            assert_eq!(&d.text[t.char_start..t.char_end], t.surface);
        }
    }
}

#[test]
fn corpus_directory_skips_invalid_utf8_and_rejects_duplicates() {
    let dir = TempDir::new().unwrap();
    std::fs::create_dir_all(dir.path().join("sub")).unwrap();
    std::fs::write(dir.path().join("a.txt"), "LiCoO2 is a cathode.").unwrap();
    std::fs::write(dir.path().join("sub/b.txt"), "TiO2 is white.").unwrap();
    std::fs::write(dir.path().join("bad.txt"), [0xff, 0xfe, 0x00]).unwrap();
    std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
    let c = read_corpus(dir.path()).unwrap();
    let ids: Vec<&str> = c.docs.iter().map(|d| d.doc_id.as_str()).collect();
    assert_eq!(ids, ["a", "sub/b"]);
    assert_eq!(c.skipped.len(), 1);

    let j = dir.path().join("c.jsonl");
    std::fs::write(&j, "{\"doc_id\":\"x\",\"text\":\"one\"}\n{\"doc_id\":\"x\",\"text\":\"two\"}\n").unwrap();
    assert_eq!(read_corpus(&j).unwrap_err().exit_code(), 1);
}

#[test]
fn empty_corpus_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("a.txt"), "   \n\t").unwrap();
    let c = read_corpus(dir.path()).unwrap();
    assert_eq!(ingest(&c.docs, 1).unwrap_err().exit_code(), 1);
}
