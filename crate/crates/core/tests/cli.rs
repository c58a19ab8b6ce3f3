mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use fekern::sparse::{spy_file, SpyStyle};

fn fekern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fekern"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const IDENTITY: &str = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 1\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn spy_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "id.mtx", IDENTITY);
    let out = dir.path().join("id.svg");
    let o = fekern(&["spy", "--in", &input, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "2 2 2");
    let svg = common::parse_svg(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(svg.rects.len(), 2);
    assert_eq!(svg.view_box, vec![0.0, 0.0, 24.0, 24.0]);
}

#[test]
fn spy_bytes_equal_library_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = "%%MatrixMarket matrix coordinate real general\n4 5 4\n1 1 1\n2 3 4\n4 5 2\n3 1 -1\n";
    let input = write(dir.path(), "a.mtx", text);
    let cli = dir.path().join("cli.svg");
    let lib = dir.path().join("lib.svg");
    let o = fekern(&["spy", "--in", &input, "--out", cli.to_str().unwrap(), "--cell", "7", "--pad", "3"]);
    assert!(o.status.success());
    let style = SpyStyle {
        cell: 7,
        padding: 3,
        ..SpyStyle::default()
    };
    spy_file(Path::new(&input), &lib, &style).unwrap();
    assert_eq!(std::fs::read(cli).unwrap(), std::fs::read(lib).unwrap());
}

#[test]
fn spy_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.mtx", "%%MatrixMarket matrix array real general\n2 2\n");
    let out = dir.path().join("o.svg");
    let o = fekern(&["spy", "--in", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let missing = dir.path().join("missing.mtx");
    let o = fekern(&["spy", "--in", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.mtx"));
}

#[test]
fn bench_reports_both_modes() {
    let o = fekern(&["bench", "--n", "20", "--reps", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(lines.len(), 6);
    let checksums: BTreeSet<String> = lines.iter().map(|l| l[3].to_string()).collect();
    assert_eq!(checksums.len(), 1);
    for l in &lines {
        assert!(["baseline-resort", "nosort"].contains(&l[1]));
        assert!(l[2].parse::<f64>().unwrap() >= 0.0);
        assert!(["assemble-pattern", "setup-matrix", "assemble-matrix"].contains(&l[0]));
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("ratio"));

    let o = fekern(&["bench", "--n", "10", "--mode", "nosort", "--reps", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
    assert_eq!(fekern(&["bench", "--n", "10", "--mode", "quick"]).status.code(), Some(1));
    assert_eq!(fekern(&["bench", "--n", "1"]).status.code(), Some(1));
}

#[test]
fn geomcheck_passes() {
    let o = fekern(&["geomcheck", "--seed", "7", "--points", "20"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().count() > 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn quad_tables() {
    let o = fekern(&["quad", "--kind", "cube", "--order", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0.5\t1\n");

    let o = fekern(&["quad", "--kind", "simplex", "--dim", "3", "--order", "3"]);
    assert!(o.status.success());
    let sum: f64 = stdout(&o)
        .lines()
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 4);
            cols[3].parse::<f64>().unwrap()
        })
        .sum();
    assert!((sum - 1.0 / 6.0).abs() < 1e-15);

    assert_eq!(fekern(&["quad", "--kind", "pyramid", "--order", "99"]).status.code(), Some(1));
    assert_eq!(fekern(&["quad", "--kind", "blob", "--order", "1"]).status.code(), Some(1));
}

#[test]
fn usage_errors() {
    assert_eq!(fekern(&["spy"]).status.code(), Some(1));
    assert_eq!(fekern(&["--help"]).status.code(), Some(0));
    assert_eq!(fekern(&["--version"]).status.code(), Some(0));
}
