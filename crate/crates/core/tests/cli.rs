use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn glvortex(args: &[&str], cwd: &Path, out_env: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_glvortex"));
    c.args(args).current_dir(cwd).env_remove("GLVORTEX_OUT");
    if let Some(p) = out_env {
        c.env("GLVORTEX_OUT", p);
    }
    c.output().expect("binary runs")
}

fn small_config(dir: &Path, penalty: &str) -> std::path::PathBuf {
    let p = dir.join(format!("{penalty}.toml"));
    fs::write(
        &p,
        format!(
            "[run]\nshape = \"disk\"\npenalty = \"{penalty}\"\neps = 0.1\nrings = 16\noutput = \"out_{penalty}\"\n"
        ),
    )
    .unwrap();
    p
}

#[test]
fn run_writes_all_artifacts_and_reruns_from_its_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "div");
    let o = glvortex(&["run", cfg.to_str().unwrap()], tmp.path(), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out_div");
    for f in ["field.csv", "trace.csv", "vortex.json", "quiver.svg", "manifest.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let field = fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field.starts_with("x,y,u1,u2\n"));
    assert_eq!(field.lines().count(), 1 + 1 + 3 * 16 * 17);
    assert!(fs::read_to_string(out.join("trace.csv"))
        .unwrap()
        .starts_with("stage,eps,iter,total,dirichlet,penalty,potential,gradnorm"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);

    // GLVORTEX_OUT redirects, and the echoed config reproduces the run
    let again = tmp.path().join("again");
    let o = glvortex(
        &["run", out.join("manifest.json").to_str().unwrap()],
        tmp.path(),
        Some(&again),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["field.csv", "trace.csv", "vortex.json", "quiver.svg"] {
        assert_eq!(
            fs::read(out.join(f)).unwrap(),
            fs::read(again.join(f)).unwrap(),
            "{f} differs"
        );
    }
    assert!(!tmp.path().join("out_div").join("again").exists());
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("typo.toml", "[run]\nshape = \"disk\"\nepsilon = 0.1\n"),
        ("neg.toml", "[run]\neps = -1.0\n"),
        ("rings.toml", "[run]\nrings = 2\n"),
        ("syntax.toml", "[run\n"),
    ] {
        fs::write(tmp.path().join(name), text).unwrap();
        let o = glvortex(&["run", name], tmp.path(), None);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    }
    let o = glvortex(&["run", "missing.toml"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_scaling_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "div");
    fs::write(&cfg, "[run]\npenalty = \"div\"\nrings = 12\noutput = \"sw\"\n").unwrap();
    let o = glvortex(
        &["sweep", cfg.to_str().unwrap(), "--eps", "0.3,0.2,0.15"],
        tmp.path(),
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("sw/scaling.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("3e-1"));
    assert!(csv.contains("# slope"));
    let o = glvortex(
        &["sweep", cfg.to_str().unwrap(), "--eps", "0.1,0.2,0.05"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_filters_and_forced_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = glvortex(&["verify", "--only", "duality"], tmp.path(), None);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("PASS duality"));

    fs::write(tmp.path().join("v.toml"), "[verify]\ngradient_tol = 0.0\n").unwrap();
    let o = glvortex(
        &["verify", "--only", "gradient", "--config", "v.toml"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL gradient"));
}

#[test]
fn plot_counts_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let report = r#"{"interior":[{"x":0.0,"y":0.0,"r":0.3,"d":1}],"boundary":[],"index_sum":"1","bad_vertex_count":1}"#;
    fs::write(d.join("r.json"), report).unwrap();

    fs::write(d.join("empty.csv"), "x,y,u1,u2\n").unwrap();
    let o = glvortex(&["plot", "empty.csv", "r.json", "-o", "e.svg"], d, None);
    assert!(o.status.success());
    let svg = fs::read_to_string(d.join("e.svg")).unwrap();
    assert_eq!(svg.matches("class=\"outline\"").count(), 1);
    assert_eq!(svg.matches("class=\"arrow\"").count(), 0);

    let g = glvortex::Geometry::new(glvortex::Shape::UnitDisk).unwrap();
    let m = glvortex::mesh::build_mesh(&g, 2).unwrap();
    let u = glvortex::Field::from_fn(&m, |x| x.perp());
    let mut buf = Vec::new();
    u.write_csv(&m, &mut buf).unwrap();
    fs::write(d.join("f.csv"), &buf).unwrap();
    let o = glvortex(&["plot", "f.csv", "r.json", "-o", "f.svg", "--shape", "disk"], d, None);
    assert!(o.status.success());
    let a = fs::read(d.join("f.svg")).unwrap();
    let text = String::from_utf8_lossy(&a);
    assert_eq!(text.matches("class=\"arrow\"").count(), 19);
    assert_eq!(text.matches("class=\"ball interior\"").count(), 1);
    glvortex(&["plot", "f.csv", "r.json", "-o", "g.svg", "--shape", "disk"], d, None);
    assert_eq!(a, fs::read(d.join("g.svg")).unwrap());

    fs::write(d.join("bad.csv"), "x,y,u1,u2\n1,2,three,4\n").unwrap();
    assert_eq!(
        glvortex(&["plot", "bad.csv", "r.json", "-o", "b.svg"], d, None)
            .status
            .code(),
        Some(2)
    );
    fs::write(d.join("bad.json"), "{\"interior\": 3}").unwrap();
    assert_eq!(
        glvortex(&["plot", "f.csv", "bad.json", "-o", "b.svg"], d, None)
            .status
            .code(),
        Some(2)
    );
    assert!(!d.join("b.svg").exists());
}
