use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pltune(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pltune"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.path().join(name);
        fs::write(&p, content).unwrap();
        p
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path().join(name)).unwrap()
    }

    fn run(&self, args: &[&str]) -> Output {
        pltune(self.path(), args)
    }

    fn small_corpus(&self) {
        self.write(
            "nbest.txt",
            "1 ||| the cat sat on the mat ||| lm=-2 tm=-1 len=6 ||| -3\n\
             1 ||| a cat sat on mat ||| lm=-4 tm=-1.5 len=5 ||| -5.5\n\
             1 ||| cat the mat on sat ||| lm=-9 tm=-1 len=5 ||| -10\n\
             2 ||| there is a dog here ||| lm=-3 tm=-2 len=5 ||| -5\n\
             2 ||| a dog is there ||| lm=-5 tm=-2 len=4 ||| -7\n\
             2 ||| dog dog dog ||| lm=-12 tm=-4 len=3 ||| -16\n",
        );
        self.write(
            "refs.txt",
            "1 ||| the cat sat on the mat\n2 ||| there is a dog here\n",
        );
    }

    fn spec(&self) {
        self.write(
            "spec.txt",
            "# small synthetic task\nnum_sentences=12\nfeature_dim=30\npool_size=25\nnoise_scale=0.1\n",
        );
    }
}

#[test]
fn train_writes_sorted_weights_and_history() {
    let f = Fixture::new();
    f.small_corpus();
    let o = f.run(&[
        "train",
        "--nbest",
        "nbest.txt",
        "--refs",
        "refs.txt",
        "--out",
        "w.txt",
        "--history",
        "h.csv",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("objective="));
    assert!(stdout(&o).contains("iterations="));
    let names: Vec<String> = f
        .read("w.txt")
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_owned())
        .collect();
    assert_eq!(names, ["len", "lm", "tm"]);
    let history = f.read("h.csv");
    assert_eq!(
        history.lines().next().unwrap(),
        "iteration,objective,grad_norm"
    );
    assert!(history.lines().count() >= 2);
}

#[test]
fn missing_refs_is_a_usage_error() {
    let f = Fixture::new();
    f.small_corpus();
    let o = f.run(&["train", "--nbest", "nbest.txt", "--out", "w.txt"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn invalid_flag_values_are_usage_errors() {
    let f = Fixture::new();
    f.small_corpus();
    let base = [
        "train",
        "--nbest",
        "nbest.txt",
        "--refs",
        "refs.txt",
        "--out",
        "w.txt",
    ];
    for extra in [
        &["--k", "0"][..],
        &["--l2", "-1"],
        &["--max-iter", "0"],
        &["--sample-size", "2"],
        &["--k", "abc"],
    ] {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        assert_eq!(code(&f.run(&args)), 2, "{extra:?}");
    }
    assert_eq!(
        code(&f.run(&[
            "rerank",
            "--nbest",
            "nbest.txt",
            "--weights",
            "w.txt",
            "--top",
            "0"
        ])),
        2
    );
    assert_eq!(
        code(&f.run(&["--threads", "0", "richness", "--nbest", "nbest.txt"])),
        2
    );
    assert_eq!(code(&f.run(&["no-such-command"])), 2);
    assert!(!f.path().join("w.txt").exists());
}

#[test]
fn parse_errors_name_file_and_line() {
    let f = Fixture::new();
    f.small_corpus();
    f.write(
        "bad.txt",
        "1 ||| a b ||| x=1 ||| 0\n1 ||| a c ||| x=oops ||| 0\n",
    );
    let o = f.run(&[
        "train", "--nbest", "bad.txt", "--refs", "refs.txt", "--out", "w.txt",
    ]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("bad.txt") && err.contains("line 2"), "{err}");
}

#[test]
fn missing_input_is_a_data_error() {
    let f = Fixture::new();
    f.small_corpus();
    let o = f.run(&[
        "train", "--nbest", "nope.txt", "--refs", "refs.txt", "--out", "w.txt",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.txt"));
    let o = f.run(&[
        "train",
        "--nbest",
        "nbest.txt",
        "--refs",
        "refs.txt",
        "--out",
        "no/dir/w.txt",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn train_without_reference_for_a_sentence_fails() {
    let f = Fixture::new();
    f.small_corpus();
    f.write("refs1.txt", "1 ||| the cat sat on the mat\n");
    let o = f.run(&[
        "train",
        "--nbest",
        "nbest.txt",
        "--refs",
        "refs1.txt",
        "--out",
        "w.txt",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains('2'));
}

#[test]
fn rerank_top1_emits_one_line_per_sentence() {
    let f = Fixture::new();
    f.small_corpus();
    f.write("w.txt", "lm\t1\ntm\t0.5\n");
    let o = f.run(&["rerank", "--nbest", "nbest.txt", "--weights", "w.txt"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("1 ||| the cat sat on the mat |||"));
    assert!(lines[1].starts_with("2 ||| there is a dog here |||"));
}

#[test]
fn rerank_scores_are_dot_products() {
    let f = Fixture::new();
    f.small_corpus();
    let weights = [("lm", 0.3), ("tm", -1.25), ("len", 0.07)];
    let text: String = weights.iter().map(|(n, v)| format!("{n}\t{v}\n")).collect();
    f.write("w.txt", &text);
    let o = f.run(&[
        "rerank",
        "--nbest",
        "nbest.txt",
        "--weights",
        "w.txt",
        "--top",
        "10",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6);
    for line in out.lines() {
        let fields: Vec<&str> = line.split(" ||| ").collect();
        let mut expected = 0.0;
        for item in fields[2].split(' ') {
            let (name, value) = item.split_once('=').unwrap();
            let w = weights.iter().find(|(n, _)| *n == name).unwrap().1;
            expected += w * value.parse::<f64>().unwrap();
        }
        let got: f64 = fields[3].parse().unwrap();
        assert!(
            (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
            "{line}"
        );
    }
}

#[test]
fn rerank_with_zero_weights_keeps_input_order() {
    let f = Fixture::new();
    f.small_corpus();
    f.write("w.txt", "lm\t0\n");
    let o = f.run(&[
        "rerank",
        "--nbest",
        "nbest.txt",
        "--weights",
        "w.txt",
        "--top",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let tokens: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split(" ||| ").nth(1).unwrap().to_owned())
        .collect();
    let input: Vec<String> = f
        .read("nbest.txt")
        .lines()
        .map(|l| l.split(" ||| ").nth(1).unwrap().to_owned())
        .collect();
    assert_eq!(tokens, input);
}

#[test]
fn rerank_warns_about_unknown_weights() {
    let f = Fixture::new();
    f.small_corpus();
    f.write("w.txt", "lm\t1\nghost\t3\n");
    let o = f.run(&["rerank", "--nbest", "nbest.txt", "--weights", "w.txt"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("ghost"));
}

#[test]
fn evaluate_identity_and_disjoint() {
    let f = Fixture::new();
    f.small_corpus();
    let o = f.run(&["evaluate", "--hyp", "refs.txt", "--refs", "refs.txt"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "BLEU = 100.00");
    f.write("hyp.txt", "1 ||| q r s t u v\n2 ||| w x y z zz\n");
    let o = f.run(&["evaluate", "--hyp", "hyp.txt", "--refs", "refs.txt"]);
    assert_eq!(stdout(&o).trim(), "BLEU = 0.00");
}

#[test]
fn evaluate_matches_hand_computed_bleu() {
    let f = Fixture::new();
    f.write("refs.txt", "0 ||| a b c d e\n");
    f.write("hyp.txt", "0 ||| a b c d x ||| f=1 ||| 0\n");
    // 1-grams 4/5, 2-grams 3/4, 3-grams 2/3, 4-grams 1/2, equal lengths
    let expected = 100.0 * (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    let o = f.run(&["evaluate", "--hyp", "hyp.txt", "--refs", "refs.txt"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), format!("BLEU = {expected:.2}"));
}

#[test]
fn evaluate_reports_mismatched_ids() {
    let f = Fixture::new();
    f.small_corpus();
    f.write("hyp.txt", "1 ||| the cat\n7 ||| a dog\n");
    let o = f.run(&["evaluate", "--hyp", "hyp.txt", "--refs", "refs.txt"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains('7'));
    f.write("hyp.txt", "1 ||| the cat\n");
    let o = f.run(&["evaluate", "--hyp", "hyp.txt", "--refs", "refs.txt"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sentence 2"));
}

#[test]
fn richness_single_hypothesis() {
    let f = Fixture::new();
    f.write("nb.txt", "0 ||| a ||| x=1 y=2 z=3 ||| 0\n");
    let o = f.run(&["richness", "--nbest", "nb.txt"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "features=3 avg_list=1.00 r=3.00");
    assert!(lines.next().unwrap().contains("resample lists"));
}

#[test]
fn richness_of_rich_corpus_recommends_nothing() {
    let f = Fixture::new();
    let mut text = String::new();
    for i in 0..12 {
        text.push_str(&format!("0 ||| h{i} ||| f{i}=1 ||| 0\n"));
    }
    text.push_str("1 ||| g ||| f0=1 ||| 0\n");
    f.write("nb.txt", &text);
    let o = f.run(&["richness", "--nbest", "nb.txt"]);
    let out = stdout(&o);
    assert!(out.starts_with("features=12 avg_list=6.50 r=1.85"), "{out}");
    f.write("nb2.txt", "0 ||| a ||| a=1 b=1 c=1 d=1 e=1 f=1 ||| 0\n");
    let out = stdout(&f.run(&["richness", "--nbest", "nb2.txt"]));
    assert!(out.contains("no resampling needed"), "{out}");
}

#[test]
fn richness_of_empty_corpus_fails() {
    let f = Fixture::new();
    f.write("nb.txt", "\n");
    assert_eq!(code(&f.run(&["richness", "--nbest", "nb.txt"])), 1);
}

#[test]
fn tune_sim_one_round_has_one_row() {
    let f = Fixture::new();
    f.spec();
    assert_eq!(
        code(&f.run(&["synth", "--spec", "spec.txt", "--nbest", "nb.txt", "--refs", "refs.txt"])),
        0
    );
    let o = f.run(&[
        "tune-sim",
        "--spec",
        "spec.txt",
        "--refs",
        "refs.txt",
        "--rounds",
        "1",
        "--per-round",
        "10",
        "--out",
        "w.txt",
        "--history",
        "h.csv",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let history = f.read("h.csv");
    let mut lines = history.lines();
    assert_eq!(
        lines.next().unwrap(),
        "round,dev_bleu,objective,corpus_size,richness"
    );
    assert_eq!(lines.count(), 1);
    assert!(f.read("w.txt").lines().count() > 0);
}

#[test]
fn tune_sim_needs_every_reference() {
    let f = Fixture::new();
    f.spec();
    f.write("refs.txt", "0 ||| t0 t1\n");
    let o = f.run(&[
        "tune-sim",
        "--spec",
        "spec.txt",
        "--refs",
        "refs.txt",
        "--out",
        "w.txt",
        "--history",
        "h.csv",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sentence 1"));
}

#[test]
fn tune_sim_rejects_bad_spec() {
    let f = Fixture::new();
    f.write("spec.txt", "num_sentences=3\nfeature_dim=4\npool_size=x\n");
    f.write("refs.txt", "0 ||| t0\n");
    let o = f.run(&[
        "tune-sim",
        "--spec",
        "spec.txt",
        "--refs",
        "refs.txt",
        "--out",
        "w.txt",
        "--history",
        "h.csv",
    ]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("spec.txt") && err.contains("line 3"), "{err}");
}

#[test]
fn synth_then_train_then_rerank_round_trip() {
    let f = Fixture::new();
    f.spec();
    f.run(&[
        "synth", "--spec", "spec.txt", "--nbest", "nb.txt", "--refs", "refs.txt",
    ]);
    assert_eq!(f.read("nb.txt").lines().count(), 12 * 25);
    let o = f.run(&[
        "train",
        "--nbest",
        "nb.txt",
        "--refs",
        "refs.txt",
        "--out",
        "w.txt",
        "--sample-size",
        "9",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = f.run(&["rerank", "--nbest", "nb.txt", "--weights", "w.txt"]);
    f.write("top.txt", &stdout(&o));
    let o = f.run(&["evaluate", "--hyp", "top.txt", "--refs", "refs.txt"]);
    assert_eq!(code(&o), 0);
    let bleu: f64 = stdout(&o)
        .trim()
        .trim_start_matches("BLEU = ")
        .parse()
        .unwrap();
    assert!(bleu > 50.0, "{bleu}");
}

#[test]
fn train_output_is_independent_of_thread_count() {
    let f = Fixture::new();
    f.spec();
    f.run(&[
        "synth", "--spec", "spec.txt", "--nbest", "nb.txt", "--refs", "refs.txt",
    ]);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let o = f.run(&[
            "--threads",
            threads,
            "train",
            "--nbest",
            "nb.txt",
            "--refs",
            "refs.txt",
            "--out",
            "w.txt",
            "--history",
            "h.csv",
            "--sample-size",
            "10",
        ]);
        assert_eq!(code(&o), 0);
        outputs.push((stdout(&o), f.read("w.txt"), f.read("h.csv")));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn help_exits_zero() {
    let f = Fixture::new();
    let o = f.run(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("tune-sim"));
}
