use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use architext::grammar::CondensedGrammar;

const REL_COLL_GRAMMAR: &str =
    "ROOT -> COLL_1\nCOLL_1 -> REL_1+\nREL_1 -> GROUP_1 GROUP_2\nGROUP_1 -> ENT_1 ENT_2\nGROUP_2 -> ENT_3\n";

fn architext(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_architext"))
        .current_dir(dir)
        .args(args)
        .env_remove("ARCHITEXT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn toy_corpus(dir: &Path) {
    let tree = "(S (NP (NN a) (NN b)) (VP (VBZ has) (NP (DT the) (NN c) (NN d))))\n";
    fs::write(dir.join("trees.txt"), tree.repeat(3)).unwrap();
    let mut ents = String::from("sentence\tentity\tstart\tend\n");
    for i in 0..3 {
        ents.push_str(&format!("{i}\t1\t0\t0\n{i}\t2\t1\t1\n{i}\t3\t4\t5\n"));
    }
    fs::write(dir.join("entities.tsv"), ents).unwrap();
    fs::write(dir.join("run.cfg"), "# keep the verb phrase as a unit\nkeep_tags = VP\ntau = 0.9\n").unwrap();
}

#[test]
fn structure_toy_corpus_yields_relation_collection() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path());
    let args = ["structure", "--config", "run.cfg", "--trees", "trees.txt", "--entities", "entities.tsv"];
    let o = architext(dir.path(), &[&args[..], &["--tau", "0.7", "--out", "a"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let got: CondensedGrammar = fs::read_to_string(dir.path().join("a/grammar.txt")).unwrap().parse().unwrap();
    let want: CondensedGrammar = REL_COLL_GRAMMAR.parse().unwrap();
    assert!(got.equivalent_up_to_renaming(&want), "{got}");
    for f in ["instance.txt", "metrics.csv", "summary.txt"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(dir.path().join("a/summary.txt")).unwrap();
    assert!(summary.starts_with("status: valid\n"));
    assert!(summary.contains("frontier: 0\n"));
}

#[test]
fn structure_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path());
    for out in ["x", "y"] {
        let o = architext(dir.path(), &["structure", "--trees", "trees.txt", "--entities", "entities.tsv", "--out", out]);
        assert_eq!(code(&o), 0);
    }
    for f in ["grammar.txt", "instance.txt", "metrics.csv", "summary.txt"] {
        let a = fs::read(dir.path().join("x").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("y").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn structure_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("trees.txt"), "").unwrap();
    let o = architext(dir.path(), &["structure", "--trees", "trees.txt", "--out", "o"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(dir.path().join("o/grammar.txt")).unwrap(), "");
    let summary = fs::read_to_string(dir.path().join("o/summary.txt")).unwrap();
    assert!(summary.contains("iterations: 0\n"), "{summary}");
    let csv = fs::read_to_string(dir.path().join("o/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn structure_budget_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path());
    let base = ["structure", "--trees", "trees.txt", "--entities", "entities.tsv", "--out", "o"];
    let o = architext(dir.path(), &[&base[..], &["--max-cycles", "1"]].concat());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("cycle budget"));

    assert_eq!(code(&architext(dir.path(), &["structure", "--trees", "missing.txt"])), 2);
    assert_eq!(code(&architext(dir.path(), &[&base[..], &["--tau", "1.5"]].concat())), 2);
    assert_eq!(code(&architext(dir.path(), &[&base[..], &["--similarity", "cosine"]].concat())), 2);
    fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(code(&architext(dir.path(), &[&base[..], &["--config", "bad.cfg"]].concat())), 2);
    fs::write(dir.path().join("broken.txt"), "(S (NP a)\n").unwrap();
    assert_eq!(code(&architext(dir.path(), &["structure", "--trees", "broken.txt"])), 2);

    let o = Command::new(env!("CARGO_BIN_EXE_architext"))
        .current_dir(dir.path())
        .args(base)
        .env("ARCHITEXT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn structure_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    toy_corpus(dir.path());
    for (threads, out) in [("1", "one"), ("4", "four")] {
        let o = Command::new(env!("CARGO_BIN_EXE_architext"))
            .current_dir(dir.path())
            .args(["structure", "--trees", "trees.txt", "--entities", "entities.tsv", "--out", out])
            .env("ARCHITEXT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    }
    assert_eq!(
        fs::read(dir.path().join("one/metrics.csv")).unwrap(),
        fs::read(dir.path().join("four/metrics.csv")).unwrap()
    );
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("good.txt"), REL_COLL_GRAMMAR).unwrap();
    fs::write(dir.path().join("arity.txt"), REL_COLL_GRAMMAR.replace("GROUP_1 GROUP_2", "GROUP_1")).unwrap();
    fs::write(dir.path().join("garbage.txt"), "this is not -> a grammar ++\n").unwrap();

    let o = architext(dir.path(), &["validate", "--grammar", "good.txt"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());

    let o = architext(dir.path(), &["validate", "--grammar", "arity.txt"]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().all(|l| l.starts_with("meta-rule ")), "{out}");
    assert!(out.lines().any(|l| l.starts_with("meta-rule 16:") && l.ends_with("(rule 3)")), "{out}");

    assert_eq!(code(&architext(dir.path(), &["validate", "--grammar", "garbage.txt"])), 2);
    assert_eq!(code(&architext(dir.path(), &["validate", "--grammar", "nope.txt"])), 2);
}

#[test]
fn extract_prints_grammar() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("xy.txt"), "(ROOT (X a b) (X b c) (Y a))").unwrap();
    fs::write(
        dir.path().join("colored.txt"),
        "(white\n  (red (black) (blue))\n  (green (blue) (red (black)) (red (black))))\n",
    )
    .unwrap();
    fs::write(dir.path().join("leaf.txt"), "(ROOT)").unwrap();
    fs::write(dir.path().join("bad.txt"), "(ROOT (X a)").unwrap();

    let o = architext(dir.path(), &["extract", "--instance", "xy.txt"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "ROOT -> X+ Y\nX -> a b c\nY -> a\n");

    let o = architext(dir.path(), &["extract", "--instance", "colored.txt", "--out", "g.txt"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("g.txt")).unwrap(),
        "white -> red green\nred -> black blue\ngreen -> blue red+\n"
    );

    let o = architext(dir.path(), &["extract", "--instance", "leaf.txt"]);
    assert_eq!((code(&o), o.stdout.len()), (0, 0));
    assert_eq!(code(&architext(dir.path(), &["extract", "--instance", "bad.txt"])), 2);
}

#[test]
fn generate_then_structure() {
    let dir = tempfile::tempdir().unwrap();
    let schema = "\
group G0 DRUG DOSE FREQ
group G1 DISORDER SITE GRADE
group G2 EXAM VALUE UNIT
group G3 SIGN ONSET DURATION
relation R0 G0 G1
relation R1 G2 G3
noise dropout 0.1
";
    fs::write(dir.path().join("planted.schema"), schema).unwrap();
    let gen = ["generate", "--schema", "planted.schema", "--n", "100", "--seed", "42"];
    assert_eq!(code(&architext(dir.path(), &[&gen[..], &["--out", "c1"]].concat())), 0);
    assert_eq!(code(&architext(dir.path(), &[&gen[..], &["--out", "c2"]].concat())), 0);
    for f in ["trees.txt", "entities.tsv", "grammar.txt", "planted.txt"] {
        assert_eq!(fs::read(dir.path().join("c1").join(f)).unwrap(), fs::read(dir.path().join("c2").join(f)).unwrap());
    }
    let o = architext(dir.path(), &["validate", "--grammar", "c1/grammar.txt"]);
    assert_eq!(code(&o), 0);

    let o = architext(
        dir.path(),
        &["structure", "--trees", "c1/trees.txt", "--entities", "c1/entities.tsv", "--out", "run", "--max-cycles", "50"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    fs::write(dir.path().join("bad.schema"), "relation R0 G0 G1\n").unwrap();
    let o = architext(dir.path(), &["generate", "--schema", "bad.schema", "--n", "3", "--out", "c3"]);
    assert_eq!(code(&o), 2);
}
