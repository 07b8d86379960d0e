use std::path::{Path, PathBuf};
use std::process::Command;

use hyperwidth::corpus;
use hyperwidth::formats::{write_forest, write_hypergraph, write_structure, write_td};
use hyperwidth_core::decomp::exact_fwidth;
use hyperwidth_core::mso::structure::encode_td;
use hyperwidth_core::{Budget, Width};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn hw(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyperwidth"));
    c.args(args).env_remove("HYPERWIDTH_BUDGET");
    for (k, v) in env {
        c.env(k, v);
    }
    let out = c.output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn file(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const K3: &str = "p hg 3 3\ne 1 2\ne 2 3\ne 1 3\n";

#[test]
fn width_accepts_and_rejects_k3() {
    let d = tempfile::tempdir().unwrap();
    let k3 = file(d.path(), "k3.hg", K3);
    let r = hw(&["width", "--function", "ghw", "--k", "2", &k3], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.lines().last(), Some("result accept value=2/1 mode=pipeline"));
    let r = hw(&["width", "--function", "ghw", "--k", "1", &k3], &[]);
    assert_eq!(r.code, 1);
    assert_eq!(r.stdout.lines().last(), Some("result reject mode=pipeline"));
    let r = hw(&["width", "--function", "fhw", "--k", "3/2", "--mode", "both", &k3], &[]);
    assert_eq!(r.stdout.lines().last(), Some("result accept value=3/2 mode=both"));
}

#[test]
fn width_writes_a_decomposition_that_verifies() {
    let d = tempfile::tempdir().unwrap();
    let h0 = file(d.path(), "h0.hg", "p hg 5 3\ne 1 2\ne 1 3 4\ne 3 5\n");
    let td = d.path().join("h0.td").display().to_string();
    let r = hw(&["width", "--function", "ghw", "--k", "1", "--mode", "oracle", "--td-out", &td, &h0], &[]);
    assert_eq!(r.code, 0);
    let v = hw(&["verify", "--td", &td, "--function", "ghw", &h0], &[]);
    assert_eq!(v.code, 0);
    assert!(v.stdout.starts_with("valid function=ghw width=1/1"), "{}", v.stdout);
    let bad = file(d.path(), "bad.td", "s td 1 2 5\nb 1 1 2\n");
    let v = hw(&["verify", "--td", &bad, &h0], &[]);
    assert_eq!(v.code, 1, "{}{}", v.stdout, v.stderr);
}

#[test]
fn tsv_report_has_fixed_columns() {
    let d = tempfile::tempdir().unwrap();
    let k3 = file(d.path(), "k3.hg", K3);
    let r = hw(&["--format", "tsv", "width", "--function", "tw", "--mode", "oracle", &k3], &[]);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], hyperwidth::report::WIDTH_COLUMNS);
    assert_eq!(lines[1], "tw-card\t2/1\toracle\taccept\t2/1\t2/1\t-\t-\t-\t-");
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let bad = file(d.path(), "bad.hg", "p hg 2 1\ne 1\n");
    let r = hw(&["width", "--function", "ghw", &bad], &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 1: vertex 2 is isolated"), "{}", r.stderr);
    assert_eq!(hw(&["width", "--function", "nope", &bad], &[]).code, 2);
    assert_eq!(hw(&["frobnicate"], &[]).code, 2);
    assert_eq!(hw(&["--help"], &[]).code, 0);
}

#[test]
fn budget_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let k3 = file(d.path(), "k3.hg", K3);
    let r = hw(&["oracle", "compare", &k3], &[("HYPERWIDTH_BUDGET", "forest_vertices=2")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("above the cap of 2"), "{}", r.stderr);
    let r = hw(&["oracle", "compare", &k3], &[("HYPERWIDTH_BUDGET", "bogus=1")]);
    assert_eq!(r.code, 2);
    let r = hw(&["oracle", "compare", &k3], &[]);
    assert_eq!(r.stdout, "ghw forest=2/1 td=2/1 agree\nfhw forest=3/2 td=3/2 agree\ntw forest=2/1 td=2/1 agree\n");
}

#[test]
fn mso_eval_prints_truth() {
    let d = tempfile::tempdir().unwrap();
    let m = file(d.path(), "m.sexp", "(universe 1 2 3)(rel Vertex (1)(2))(rel Child (1 2))");
    let yes = file(d.path(), "yes.sexp", "(exists1 x (exists1 y (rel Child x y)))");
    let no = file(d.path(), "no.sexp", "(forall1 u (rel Vertex u))");
    let sets = file(d.path(), "sets.sexp", "(existsS U (and (forall1 u (iff (in u U) (rel Vertex u))) (exists1 x (in x U))))");
    for (f, want) in [(&yes, "true\n"), (&no, "false\n"), (&sets, "true\n")] {
        let r = hw(&["mso", "eval", "--formula", f, "--structure", &m], &[]);
        assert_eq!((r.code, r.stdout.as_str()), (0, want), "{}", r.stderr);
    }
    let open = file(d.path(), "open.sexp", "(rel Vertex x)");
    assert_eq!(hw(&["mso", "eval", "--formula", &open, "--structure", &m], &[]).code, 2);
}

#[test]
fn transduce_and_dealternate_run_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    let h = corpus::h0();
    let b = Budget::default();
    let (_, forest) = exact_fwidth(&h, &Width::Ghw, &b).unwrap();
    let forest = forest.reduce(&h);
    let t = forest.induced_td(&h);
    let hg = file(d.path(), "h.hg", &write_hypergraph(&h));
    let td = file(d.path(), "h.td", &write_td(&t, &h));
    let ef = file(d.path(), "h.ef", &write_forest(&forest, &h));
    let out = d.path().join("out.ef").display().to_string();
    let r = hw(&["dealternate", "--td", &td, "--forest", &ef, "--forest-out", &out, &hg], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.lines().any(|l| l.starts_with("dealternated width_before=1/1 width_after=1/1")), "{}", r.stdout);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("s ef 5\n"));

    let p2 = hyperwidth_core::Hypergraph::from_edge_lists(&[[1u32, 2]]).unwrap();
    let (_, f2) = exact_fwidth(&p2, &Width::Ghw, &b).unwrap();
    let f2 = f2.reduce(&p2);
    let m = file(d.path(), "m.sexp", &write_structure(&encode_td(&p2, &f2.induced_td(&p2)).unwrap()));
    let r = hw(&["transduce", "--q", "2", "--structure", &m], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let last = r.stdout.lines().last().unwrap();
    assert!(!last.starts_with("outputs=0 "), "{last}");
    assert!(r.stdout.contains("(rel Child"), "{}", r.stdout);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let k3 = file(d.path(), "k3.hg", K3);
    let args = ["width", "--function", "fhw", "--mode", "both", &k3];
    assert_eq!(hw(&args, &[]).stdout, hw(&args, &[]).stdout);
}

#[test]
fn bundled_corpus_matches_the_generator() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let loaded = corpus::load_dir(&dir).unwrap();
    let mut built = corpus::builtin();
    built.sort_by(|a, b| a.name.cmp(&b.name));
    assert_eq!(loaded, built);
}
