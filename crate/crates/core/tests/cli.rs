mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use layercut::io::{to_json, InstanceFile};
use layercut::model::energy;
use layercut::{Configuration, Instance};

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("layercut-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.0.join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn instance(&self, name: &str, file: &InstanceFile) -> PathBuf {
        self.write(name, &to_json(file).unwrap())
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layercut"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn grid_instance() -> Instance {
    let mut r = rng(5);
    with_potentials(&mut r, 2, 12, grid_edges(4, 3), (0.0, 1.0), (0.0, 1.0))
}

#[test]
fn json_report_round_trips_against_instance() {
    let dir = TempDir::new("roundtrip");
    let inst = grid_instance();
    let path = dir.instance("grid.json", &InstanceFile::from_instance(&inst));
    for scheme in [["--scheme", "baker"], ["--scheme", "td"]] {
        let out = cli(&[
            "solve",
            p(&path),
            scheme[0],
            scheme[1],
            "--k",
            "2",
            "--json",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let labels: Vec<usize> = serde_json::from_value(report["configuration"].clone()).unwrap();
        let reported = report["energy"].as_f64().unwrap();
        let recomputed = energy(&inst, &Configuration::new(labels)).unwrap();
        assert!((reported - recomputed).abs() <= 1e-9);
        assert!(report["dp_bound"].is_number());
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new("determinism");
    let path = dir.instance("grid.json", &InstanceFile::from_instance(&grid_instance()));
    let args = ["solve", p(&path), "--scheme", "baker", "--k", "1"];
    let first = cli(&args).stdout;
    assert_eq!(first, cli(&args).stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(first, cli(&threaded).stdout);
}

#[test]
fn epsilon_selects_k_and_prints_guarantee() {
    let dir = TempDir::new("epsilon");
    let path = dir.instance("grid.json", &InstanceFile::from_instance(&grid_instance()));
    let out = cli(&["solve", p(&path), "--scheme", "baker", "--epsilon", "0.1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k: 18\n"), "{text}");
    assert!(text.contains("guarantee: 0.9 "), "{text}");
}

#[test]
fn negative_entry_fails_baker_precondition() {
    let dir = TempDir::new("negative");
    let mut file = InstanceFile::from_instance(&grid_instance());
    file.edge_potentials[0][0][1] = -0.5;
    let path = dir.instance("neg.json", &file);
    for cmd in ["validate", "solve"] {
        let out = cli(&[cmd, p(&path), "--scheme", "baker", "--k", "2"]);
        assert_eq!(out.status.code(), Some(4));
        assert!(String::from_utf8_lossy(&out.stderr).contains("f_i >= 0"));
    }
    assert_eq!(cli(&["validate", p(&path)]).status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new("codes");
    assert_eq!(
        cli(&["solve", "x.json", "--unknown"]).status.code(),
        Some(64)
    );
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    let bad = dir.write("bad.json", "{\"q\": 2}");
    assert_eq!(cli(&["validate", p(&bad)]).status.code(), Some(2));

    let mut r = rng(9);
    let big = with_potentials(&mut r, 2, 30, grid_edges(6, 5), (0.0, 1.0), (0.0, 1.0));
    let path = dir.instance("big.json", &InstanceFile::from_instance(&big));
    assert_eq!(cli(&["oracle", p(&path)]).status.code(), Some(3));
    let capped = Command::new(env!("CARGO_BIN_EXE_layercut"))
        .args(["solve", p(&path), "--exact-td"])
        .env("LAYERCUT_TABLE_CAP", "4")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(3));
}

#[test]
fn crossing_scheme_from_coords() {
    let dir = TempDir::new("crossing");
    let k4 = convex_k4();
    let mut file = InstanceFile::from_instance(&k4.inst);
    file.coords = Some(k4.drawing.coords.iter().map(|c| c.to_vec()).collect());
    let path = dir.instance("k4.json", &file);
    let out = cli(&["solve", p(&path), "--scheme", "crossing", "--k", "8"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("phi: 1\n") && text.contains("guarantee: 0.625 "),
        "{text}"
    );
    assert!(text.contains("value: 4\n"), "{text}");
    assert_eq!(
        cli(&[
            "solve",
            p(&path),
            "--scheme",
            "crossing",
            "--epsilon",
            "0.1"
        ])
        .status
        .code(),
        Some(4)
    );
    assert_eq!(
        cli(&["solve", p(&path), "--scheme", "crossing", "--k", "3"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn encode_then_solve() {
    let dir = TempDir::new("encode");
    let edges = dir.write(
        "c4.json",
        r#"{"num_vertices": 4, "edges": [[0,1],[1,2],[2,3],[3,0,2.5]]}"#,
    );
    let out_path = dir.0.join("c4-inst.json");
    assert_eq!(
        cli(&["encode", "maxcut", p(&edges), "-o", p(&out_path)])
            .status
            .code(),
        Some(0)
    );
    let text = String::from_utf8(cli(&["oracle", p(&out_path)]).stdout).unwrap();
    assert!(text.contains("value: 5.5\n"), "{text}");

    let dicut = dir.write(
        "arcs.json",
        r#"{"num_vertices": 3, "edges": [[0,1],[1,0],[1,2]]}"#,
    );
    let out = cli(&["encode", "dicut", p(&dicut)]);
    let file: InstanceFile = serde_json::from_slice(&out.stdout).unwrap();
    assert!(file.directed);
    let path = dir.instance("dicut.json", &file);
    let text = String::from_utf8(cli(&["solve", p(&path), "--exact-td"]).stdout).unwrap();
    assert!(text.contains("value: 2\n"), "{text}");

    let ea = dir.write("ea.json", r#"{"dims": [2, 2, 2], "couplings": [1]}"#);
    let file: InstanceFile =
        serde_json::from_slice(&cli(&["encode", "ea", p(&ea)]).stdout).unwrap();
    assert_eq!(file.metadata.unwrap()["constant"], 12.0);

    let field = dir.write(
        "field.json",
        r#"{"dims": [2], "couplings": [1], "field": 0.5}"#,
    );
    assert_eq!(cli(&["encode", "ea", p(&field)]).status.code(), Some(4));

    let vision = dir.write(
        "vision.json",
        r#"{"width": 3, "height": 2, "q": 3, "observed": [0,1,2,2,1,0], "smoothness": {"kind": "potts", "w": 1}}"#,
    );
    let file: InstanceFile =
        serde_json::from_slice(&cli(&["encode", "vision", p(&vision)]).stdout).unwrap();
    assert_eq!((file.num_vertices, file.edges.len()), (6, 7));
}

#[test]
fn geometric_encode_feeds_geo_solve() {
    let dir = TempDir::new("geo");
    let balls = dir.write(
        "balls.json",
        r#"{"d": 2, "centers": [[0.1,0.2],[0.8,0.3],[1.5,0.4],[2.2,1.1],[0.3,1.6],[1.2,1.9]], "diameters": [1,1,1,1,1,1]}"#,
    );
    let inst_path = dir.0.join("geo.json");
    assert_eq!(
        cli(&["encode", "geometric", p(&balls), "-o", p(&inst_path)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        cli(&["validate", p(&inst_path), "--scheme", "geo"])
            .status
            .code(),
        Some(0)
    );
    let out = cli(&[
        "solve",
        p(&inst_path),
        "--scheme",
        "geo",
        "--k",
        "2",
        "--json",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ratio_guarantee"], 0.5);
    let with_file = cli(&[
        "solve",
        p(&inst_path),
        "--scheme",
        "geo",
        "--k",
        "2",
        "--json",
        "--balls",
        p(&balls),
    ]);
    assert_eq!(with_file.stdout, out.stdout);

    let other = dir.write(
        "other.json",
        r#"{"d": 2, "centers": [[0,0],[5,5],[9,9],[0,9],[9,0],[4,4]], "diameters": [1,1,1,1,1,1]}"#,
    );
    let mismatch = cli(&[
        "solve",
        p(&inst_path),
        "--scheme",
        "geo",
        "--k",
        "2",
        "--balls",
        p(&other),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn supplied_decomposition_is_used_and_checked() {
    let dir = TempDir::new("td");
    let path = dir.write(
        "p3.json",
        r#"{"q": 2, "num_vertices": 3, "edges": [[0,1],[1,2]],
            "vertex_potentials": [[0,0],[0,0],[0,0]],
            "edge_potentials": [[[0,1],[1,0]], [[0,1],[1,0]]]}"#,
    );
    let td = dir.write(
        "td.json",
        r#"{"bags": [[0,1],[1,2]], "tree_edges": [[0,1]], "root": 0}"#,
    );
    let out = cli(&["solve", p(&path), "--exact-td", "--td", p(&td)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("value: 2\n") && text.contains("widths: 1\n"),
        "{text}"
    );
    let broken = dir.write(
        "broken.json",
        r#"{"bags": [[0,1],[2]], "tree_edges": [[0,1]], "root": 0}"#,
    );
    assert_eq!(
        cli(&["solve", p(&path), "--exact-td", "--td", p(&broken)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cli(&["validate", p(&path), "--scheme", "td", "--td", p(&broken)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn ratio_table_rows() {
    let out =
        String::from_utf8(cli(&["ratio-table", "--scheme", "baker", "--k-range", "1..3"]).stdout)
            .unwrap();
    assert_eq!(
        out,
        "k=1 ratio=0.333333333333\nk=2 ratio=0.5\nk=3 ratio=0.6\n"
    );
    let out = String::from_utf8(
        cli(&[
            "ratio-table",
            "--scheme",
            "crossing",
            "--phi",
            "1",
            "--k-range",
            "8..8",
        ])
        .stdout,
    )
    .unwrap();
    assert_eq!(out, "k=8 ratio=0.625\n");
    let out = String::from_utf8(
        cli(&[
            "ratio-table",
            "--scheme",
            "min",
            "--alpha",
            "2",
            "--k-range",
            "2..2",
        ])
        .stdout,
    )
    .unwrap();
    assert_eq!(out, "k=2 ratio=1.5\n");
}
