mod common;

use std::path::Path;

use common::{data_dir, melt, stage_toy_inputs};
use tempfile::TempDir;

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = melt(cwd, args);
    assert!(
        out.status.success(),
        "melt {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(cwd: &Path, args: &[&str]) -> i32 {
    melt(cwd, args).status.code().expect("exit code")
}

#[test]
fn stage_subcommands_chain_on_toy_corpus() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    stage_toy_inputs(d);
    ok(d, &["ingest", "--input", "toy_corpus", "--min-count", "2", "--out", "vocab.tsv", "--tokens", "tokens.jsonl"]);
    ok(d, &["extract", "--tokens", "tokens.jsonl", "--dict", "materials_dict.txt", "--out", "seeds.tsv"]);
    ok(
        d,
        &[
            "embed", "--tokens", "tokens.jsonl", "--vocab", "vocab.tsv", "--out", "emb.vec", "--dim", "24",
            "--epochs", "30", "--lr", "0.05", "--window", "5", "--negatives", "5", "--subsample", "1e-3",
        ],
    );
    let emb = std::fs::read_to_string(d.join("emb.vec")).unwrap();
    assert!(emb.lines().next().unwrap().ends_with(" 24"));
    ok(d, &["graph", "--emb", "emb.vec", "--seeds", "seeds.tsv", "--concepts", "concepts_six.tsv", "--topk", "5", "--out", "graph"]);
    for f in ["edges.tsv", "nodes.tsv", "meta.json"] {
        assert!(d.join("graph").join(f).is_file(), "missing graph/{f}");
    }
    ok(
        d,
        &[
            "curriculum", "--graph", "graph", "--strategy", "node-degree", "--k", "3", "--warmup", "10000",
            "--stage", "10000", "--total", "100000", "--out", "plan",
        ],
    );
    let printed = ok(
        d,
        &["emit", "--tokens", "tokens.jsonl", "--plan", "plan", "--out", "data", "--ratio", "0.15", "--seqlen", "64", "--seed", "7"],
    );
    assert_eq!(printed.lines().count(), 4, "warm-up plus three stages: {printed}");
    let manifest = melt::emit::read_manifest(&d.join("data")).unwrap();
    assert_eq!(manifest.datasets.iter().map(|x| x.stage).collect::<Vec<_>>(), vec![0, 1, 2, 3]);

    // Gold tags for the last stage's own token stream: formulas are
    // entities, everything else is outside.
    let last = manifest.datasets.last().unwrap();
    let examples = melt::emit::read_dataset(&d.join("data"), last).unwrap();
    let mut conll = String::from("-DOCSTART-\tO\n\n");
    for ex in &examples {
        for t in ex.reconstruct() {
            let tag = if melt_core::formula::is_formula(&t) { "B-MAT" } else { "O" };
            conll.push_str(&format!("{t}\t{tag}\n"));
        }
        conll.push('\n');
    }
    std::fs::write(d.join("gold.conll"), conll).unwrap();
    let line = ok(d, &["analyze", "overlap", "--data", "data", "--tagged", "gold.conll"]);
    let (name, ratio) = line.trim().split_once('\t').unwrap();
    assert_eq!(name, "stage3");
    let ratio: f64 = ratio.parse().unwrap();
    assert!((0.0..=1.0).contains(&ratio));
}

#[test]
fn baseline_emission_through_cli() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    stage_toy_inputs(d);
    ok(d, &["ingest", "--input", "toy_corpus", "--min-count", "1", "--out", "vocab.tsv", "--tokens", "tokens.jsonl"]);
    ok(d, &["extract", "--tokens", "tokens.jsonl", "--dict", "materials_dict.txt", "--out", "seeds.tsv"]);
    let base = ["emit", "--tokens", "tokens.jsonl", "--seqlen", "64"];
    ok(d, &[&base[..], &["--strategy", "random", "--out", "random"]].concat());
    ok(d, &[&base[..], &["--strategy", "entity-only", "--seeds", "seeds.tsv", "--out", "entity"]].concat());
    ok(d, &[&base[..], &["--strategy", "diff-masking", "--generic", "generic_freq.tsv", "--out", "diff"]].concat());
    let diff = melt::emit::read_manifest(&d.join("diff")).unwrap();
    assert_eq!(diff.anchors.as_ref().unwrap().len(), 20);
    assert!((diff.datasets[0].realized_ratio - 0.25).abs() < 0.02, "{}", diff.datasets[0].realized_ratio);
    for dir in ["random", "entity"] {
        let m = melt::emit::read_manifest(&d.join(dir)).unwrap();
        assert_eq!(m.datasets.len(), 1);
        assert_eq!(m.datasets[0].name, "stage1");
        assert!((m.datasets[0].realized_ratio - 0.15).abs() < 0.02);
    }
    // Entity-only needs its seed list.
    assert_eq!(code(d, &[&base[..], &["--strategy", "entity-only", "--out", "x"]].concat()), 1);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    stage_toy_inputs(d);
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["--version"]), 0);
    // Usage and input errors.
    assert_eq!(code(d, &["ingest", "--bogus"]), 1);
    assert_eq!(code(d, &["ingest", "--input", "missing", "--out", "v.tsv", "--tokens", "t.jsonl"]), 1);
    assert_eq!(code(d, &["run", "--config", "absent.toml"]), 1);
    std::fs::write(d.join("bad.toml"), "seed = 1\nunknown_key = 2\n").unwrap();
    assert_eq!(code(d, &["run", "--config", "bad.toml"]), 1);
    // Validation errors.
    ok(d, &["ingest", "--input", "toy_corpus", "--min-count", "2", "--out", "vocab.tsv", "--tokens", "tokens.jsonl"]);
    assert_eq!(code(d, &["emit", "--tokens", "tokens.jsonl", "--strategy", "random", "--ratio", "1.5", "--out", "e"]), 3);
    assert_eq!(code(d, &["emit", "--tokens", "tokens.jsonl", "--strategy", "nonsense", "--out", "e"]), 3);
    assert_eq!(code(d, &["run", "--config", "melt.toml", "--ratio", "0"]), 3);
    assert_eq!(code(d, &["embed", "--tokens", "tokens.jsonl", "--vocab", "vocab.tsv", "--out", "e.vec", "--dim", "0"]), 3);
}

#[test]
fn failing_stage_is_named_and_keeps_upstream_artifacts() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    stage_toy_inputs(d);
    // More stages than graph nodes cannot be stratified.
    let out = melt(d, &["run", "--config", "melt.toml", "--k", "100000"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("curriculum"), "{err}");
    for stage in ["ingest", "extract", "embed", "graph"] {
        assert!(d.join("out").join(stage).join("stamp.json").is_file(), "{stage} artifacts lost");
    }
    assert!(!d.join("out/emit/manifest.json").exists());
}

#[test]
fn run_then_report() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    stage_toy_inputs(d);
    let first = ok(d, &["run", "--config", "melt.toml"]);
    assert_eq!(first.lines().filter(|l| l.contains(" ran ")).count(), 6, "{first}");
    let second = ok(d, &["run", "--config", "melt.toml"]);
    assert_eq!(second.lines().filter(|l| l.contains(" cached ")).count(), 6, "{second}");
    let report = ok(d, &["report", "--run", "out"]);
    for needle in ["MELT w/o expansion", "stage", "p_m", "realized"] {
        assert!(report.contains(needle), "report lacks {needle:?}:\n{report}");
    }
    // Missing artifacts are listed, not fatal; a missing run manifest is.
    std::fs::remove_file(d.join("out/emit/manifest.json")).unwrap();
    let sparse = ok(d, &["report", "--run", "out"]);
    assert!(sparse.to_lowercase().contains("missing"), "{sparse}");
    std::fs::create_dir_all(d.join("empty")).unwrap();
    assert_eq!(code(d, &["report", "--run", "empty"]), 1);
}

#[test]
fn bundled_data_is_present() {
    for f in ["melt.toml", "materials_dict.txt", "concepts_six.tsv", "concepts_seven.tsv", "generic_freq.tsv"] {
        assert!(data_dir().join(f).is_file(), "{f}");
    }
}
