use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use balayage_core::balayage::{sweep_ray_system, GenusChoice};
use balayage_core::measures::RaySystem;
use balayage_kit::io::{self, IoError};
use std::f64::consts::PI;

fn kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balayage-kit")).args(args).output().unwrap()
}

fn kit_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balayage-kit")).args(args).env("BALAYAGE_THREADS", threads).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn poisson_kernel_at_i() {
    let o = kit(&["kernel", "--kind", "poisson", "--genus", "0", "--z", "0,1", "--t", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.3183098862\n");
}

#[test]
fn negative_coordinates_and_lists() {
    let o = kit(&["kernel", "--kind", "poisson", "--genus", "1", "--z", "-1,1", "--t", "-1,0,2.5", "--digits", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim().split(',').count(), 3);
    assert_eq!(stdout(&o).trim().split(',').nth(1), Some("0.0000"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kit(&["kernel", "--kind", "bogus", "--z", "0,1"]).status.code(), Some(2));
    assert_eq!(kit(&["kernel", "--kind", "omega", "--z", "0,1"]).status.code(), Some(2));
    assert_eq!(kit(&["sweep", "--input", "x.json", "--order", "1", "--grid", "5:1:3"]).status.code(), Some(2));
    assert_eq!(kit(&["estimate", "--charge", "/nonexistent.json", "--grid", "1:10:4"]).status.code(), Some(2));
    assert_eq!(kit(&["--help"]).status.code(), Some(0));
}

#[test]
fn numeric_failure_names_the_operation() {
    let o = kit(&["kernel", "--kind", "hadamard", "--z", "0,1", "--zeta", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hadamard_kernel"), "{}", stderr(&o));
}

#[test]
fn zero_sequence_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let json = write(dir.path(), "z.json", r#"[{"re":-1,"im":0,"mass":1}]"#);
    let z = io::read_zero_sequence(Path::new(&json), 1).unwrap();
    assert_eq!(z.atoms().len(), 1);
    let csv = write(dir.path(), "z.csv", "1,0,2\n");
    let z = io::read_zero_sequence(Path::new(&csv), 1).unwrap();
    assert_eq!((z.atoms()[0].position.re, z.atoms()[0].mass), (1.0, 2.0));
    let bad = write(dir.path(), "bad.csv", "1;0;2\n");
    let err = io::read_zero_sequence(Path::new(&bad), 1).unwrap_err();
    assert!(matches!(err, IoError::Row { row: 1, .. }), "{err}");
    assert!(err.to_string().contains("row 1"));
    let origin = write(dir.path(), "o.json", r#"[{"re":0,"im":0}]"#);
    assert!(matches!(io::read_zero_sequence(Path::new(&origin), 1), Err(IoError::OriginZero { .. })));
    assert!(io::read_zero_sequence(Path::new(&origin), 0).is_ok());
}

#[test]
fn swept_delta_is_a_probability_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "delta_i.json", r#"{"atoms":[{"re":0,"im":1,"mass":1}]}"#);
    let rays = write(dir.path(), "real.json", r#"{"angles":[0,3.141592653589793]}"#);
    let out = dir.path().join("swept.csv");
    let plan = dir.path().join("plan.json");
    let o = kit(&[
        "sweep",
        "--input",
        &input,
        "--rays",
        &rays,
        "--order",
        "1",
        "--genus",
        "0",
        "--grid",
        "0:5:100",
        "--output",
        out.to_str().unwrap(),
        "--plan-out",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# schema: balayage-kit/1\nray_index,t,density,N,mass\n"));
    let rows = io::read_swept_csv(&out).unwrap();
    let mass: f64 = rows.iter().map(|r| r.mass).sum();
    assert!((mass - 1.0).abs() <= 1e-6, "{mass}");
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(plan["schema"], "balayage-kit/1");
    assert_eq!(plan["angles"][0]["genus"], 0);

    // Re-ingested N samples are bit-identical to an in-process sweep.
    let charge = io::read_charge(Path::new(&input)).unwrap();
    let system = RaySystem::new(vec![0.0, PI]).unwrap();
    let (swept, _) = sweep_ray_system(&charge, &system, 1.0, 1.0, GenusChoice::Fixed(0)).unwrap();
    for r in rows.iter().filter(|r| r.t.is_finite()) {
        assert_eq!(r.n.to_bits(), swept.distribution(r.ray_index, r.t).unwrap().to_bits());
    }
}

#[test]
fn condition_and_estimate_emit_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (1..=1500).map(|k| format!("0,{k},1\n")).collect();
    let charge = write(dir.path(), "upper.csv", &rows);
    let o = kit(&["condition", "--kind", "blaschke", "--charge", &charge, "--order", "1", "--grid", "10:1400:24"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let verdict: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(verdict["schema"], "balayage-kit/1");
    assert_eq!(verdict["verdict"], "unbounded");
    assert!(text.contains("r,value\n"));

    let o = kit(&["estimate", "--charge", &charge, "--grid", "2:1400:24", "--order", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let fitted = v["growth"]["fitted_order"].as_f64().unwrap();
    assert!((fitted - 1.0).abs() < 0.1, "{fitted}");
}

#[test]
fn crg_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let zeros: String = (1..=150).flat_map(|k| [format!("{k},0\n"), format!("-{k},0\n")]).collect();
    let path = write(dir.path(), "sin.csv", &zeros);
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = kit_env(
            &[
                "crg",
                "--zeros",
                &path,
                "--order",
                "1",
                "--xmin",
                "2",
                "--xmax",
                "80",
                "--points",
                "32",
                "--seed",
                "7",
                "--output",
                out.to_str().unwrap(),
            ],
            threads,
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (o.stdout, fs::read(out).unwrap())
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let v: serde_json::Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(v["schema"], "balayage-kit/1");
    assert_eq!(v["rays"][0]["genus"], 2);
}
