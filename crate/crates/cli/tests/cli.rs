use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const NOUNS: [&str; 12] = [
    "cat", "dog", "wheel", "car", "table", "wood", "knife", "bread", "tree", "leaf", "house", "brick",
];
const FILLER: [&str; 14] = [
    "a", "an", "the", "is", "of", "made", "part", "for", "used", "has", "cutting", "animal", "tool", "plant",
];

fn defframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defframe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        let mut basis = String::new();
        for (i, w) in NOUNS.iter().chain(&FILLER).chain(&[".", ","]).enumerate() {
            let v: Vec<String> = (0..6)
                .map(|j| format!("{:.5}", ((i * 7 + j * 13) as f64 * 0.731).sin()))
                .collect();
            let _ = writeln!(basis, "{w} {}", v.join(" "));
        }
        ws.write("basis.txt", &basis);
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        fs::write(self.path(name), text).unwrap();
        self.p(name)
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    fn similarity(&self, name: &str, n: usize) -> String {
        let mut text = String::new();
        let mut k = 0;
        for (i, a) in NOUNS.iter().enumerate() {
            for b in &NOUNS[i + 1..] {
                if k == n {
                    break;
                }
                let _ = writeln!(text, "{a}\t{b}\t{}", (k * 37 % 11) as f64);
                k += 1;
            }
        }
        self.write(name, &text)
    }
}

fn triples() -> String {
    let rows = [
        ("cat", "IsA", "animal", "a cat is an animal ."),
        ("dog", "IsA", "animal", "a dog is an animal ."),
        ("wheel", "PartOf", "car", "a wheel is part of a car ."),
        ("table", "MadeOf", "wood", "a table is made of wood ."),
        ("knife", "UsedFor", "cutting", "a knife is used for cutting ."),
        ("knife", "IsA", "tool", "a knife is a tool used for cutting bread ."),
        ("tree", "HasA", "leaf", "a tree is a plant . a tree has a leaf ."),
        ("tree", "IsA", "plant", "a tree is a plant . a tree has a leaf ."),
        ("house", "MadeOf", "brick", "a house is made of brick ."),
    ];
    let mut text = String::new();
    for (c, r, t, s) in rows {
        let _ = writeln!(text, "{c}\t{r}\t{t}\t{s}");
    }
    text
}

fn manifest(path: &Path) -> serde_json::Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(PathBuf::from(name)).unwrap()).unwrap()
}

#[test]
fn pipeline_runs_end_to_end() {
    let ws = Workspace::new();
    let basis = ws.p("basis.txt");
    let triples = ws.write("triples.tsv", &triples());
    let o = defframe(&["align", "--triples", &triples, "--out", &ws.p("corpus.conll"), "--fallback-tagger"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(ws.read("corpus.conll").contains("# concept = cat"));
    let m = manifest(&ws.path("corpus.conll"));
    assert_eq!(m["subcommand"], "align");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let config = ws.write("tagger.cfg", "hidden_size=4\nword_proj_dim=4\nepochs=3\n");
    let corpus = ws.p("corpus.conll");
    let o = defframe(&[
        "train-tagger", "--corpus", &corpus, "--dev", &corpus, "--basis", &basis, "--config", &config, "--seed", "3",
        "--out", &ws.p("tagger.model"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = String::from_utf8_lossy(&o.stdout);
    assert_eq!(log.lines().count(), 4, "{log}");
    assert_eq!(manifest(&ws.path("tagger.model"))["seed"], 3);

    let defs = ws.write("defs.tsv", "cat\ta cat is an animal .\nbrick\ta wheel is part of a car .\n");
    let o = defframe(&[
        "extract", "--model", &ws.p("tagger.model"), "--definitions", &defs, "--basis", &basis, "--out", &ws.p("frames.jsonl"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("`brick` not found"));
    assert_eq!(ws.read("frames.jsonl").lines().count(), 2);

    let frames = ws.write(
        "gold_frames.jsonl",
        &NOUNS
            .iter()
            .enumerate()
            .map(|(i, n)| format!("{{\"concept\":\"{n}\",\"IsA\":[\"{}\"],\"MadeOf\":[\"{}\"]}}\n", FILLER[i], NOUNS[(i + 5) % 12]))
            .collect::<String>(),
    );
    let o = defframe(&["encode", "--frames", &frames, "--basis", &basis, "--out", &ws.p("frames.enc")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(ws.read("frames.enc").starts_with("defframe-enc/1 7 6\n"));

    let ds = ws.similarity("toy.tsv", 30);
    let o = defframe(&[
        "eval-sim", "--enc", &ws.p("frames.enc"), "--basis", &basis, "--dataset", &ds, "--mask", "DF_all", "DF_basic",
        "--gold-oracle", "--intersect", "--n-perm", "1000", "--out", &ws.p("eval.tsv"), "--markdown", &ws.p("eval.md"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ws.read("eval.tsv");
    let rows: Vec<&str> = report.lines().collect();
    assert_eq!(rows[0], "dataset\trepresenter\tmask\tn_pairs\trho\tp_value\tnote");
    assert_eq!(rows.len(), 5);
    let gold: Vec<&str> = rows[4].split('\t').collect();
    assert_eq!((gold[1], gold[4]), ("gold", "1.0000"));
    assert!(ws.read("eval.md").starts_with("| dataset |"));

    let o = defframe(&["decode", "--enc", &ws.p("frames.enc"), "--basis", &basis, "-k", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let listing = String::from_utf8_lossy(&o.stdout);
    assert!(listing.contains("cat\n  self\tcat:1.0000"), "{listing}");
}

#[test]
fn all_unalignable_triples_give_an_empty_corpus() {
    let ws = Workspace::new();
    let triples = ws.write("t.tsv", "cat\tIsA\tanimal\tthe sky is blue .\nzebra\tIsA\thorse\tthe sky is blue .\n");
    let o = defframe(&["align", "--triples", &triples, "--out", &ws.p("c.conll")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(ws.read("c.conll"), "");
    let skips = ws.read("c.conll.skips.tsv");
    assert_eq!(skips.lines().count(), 3);
    assert!(skips.contains("concept-not-found"));
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let ws = Workspace::new();
    let basis = ws.p("basis.txt");
    let frames = ws.write("f.jsonl", "{\"concept\":\"cat\",\"IsA\":[\"animal\"]}\n");
    let o = defframe(&["encode", "--frames", &frames, "--basis", &basis, "--out", &ws.p("x"), "--mask", "custom:IsA,Colour"]);
    assert_eq!(o.status.code(), Some(2));

    let o = defframe(&["encode", "--frames", &ws.p("missing.jsonl"), "--basis", &basis, "--out", &ws.p("x")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.jsonl"));

    let corpus = ws.write("c.conll", "# concept = cat\ncat\tNN\tB-NP\t1\tO\n");
    let bad = ws.write("bad.cfg", "hidden_size=0\n");
    let o = defframe(&["train-tagger", "--corpus", &corpus, "--dev", &corpus, "--basis", &basis, "--config", &bad, "--out", &ws.p("m")]);
    assert_eq!(o.status.code(), Some(2));

    let o = defframe(&["eval-sim", "--dataset", &ws.p("d.tsv")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_transform_gates_small_datasets() {
    let ws = Workspace::new();
    let basis = ws.p("basis.txt");
    let small = ws.similarity("small.tsv", 20);
    let big = ws.similarity("big.tsv", 60);
    let config = ws.write("fit.cfg", "learning_rate=0.5\nepochs=20\nn_perm=1000\n");
    let o = defframe(&[
        "fit-transform", "--basis", &basis, "--dataset", &small, &big, "--folds", "3", "--min-pairs", "50", "--config", &config,
        "--out", &ws.p("fit.tsv"), "--save-transforms", &ws.p("lt"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ws.read("fit.tsv");
    let rows: Vec<Vec<&str>> = report.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0][..7], ["dataset", "basis_name", "rep", "rho_before", "rho_after", "gain", "p_value"]);
    assert_eq!(rows[1][0], "small");
    assert!(rows[1][7].starts_with("rejected: 20 pairs"));
    assert_eq!(rows[2][0], "big");
    assert!(rows[2][3].parse::<f64>().is_ok() && rows[2][6].parse::<f64>().is_ok(), "{report}");
    assert!(ws.path("lt/big.basis.lt").exists());
    assert!(!ws.path("lt/small.basis.lt").exists());

    let o = defframe(&[
        "fit-transform", "--basis", &basis, "--dataset", &small, &big, "--joint", "sim", "--folds", "3", "--min-pairs", "50",
        "--config", &config, "--out", &ws.p("joint.tsv"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(ws.read("joint.tsv").lines().nth(1).unwrap().starts_with("Sim-All\tbasis\tbasis\t"));
}
