use std::process::Command;

fn qdbounds() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qdbounds"))
}

const BUNDLED: [&str; 5] = [
    "free_ballistic",
    "supercritical_localized",
    "barrier_demo",
    "commutator_audit",
    "parseval_audit",
];

#[test]
fn list_names_every_bundled_scenario() {
    let out = qdbounds().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in BUNDLED {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn bundled_scenarios_validate() {
    for name in BUNDLED {
        let out = qdbounds().args(["validate", name]).output().unwrap();
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn out_of_range_delta_is_rejected() {
    let out = qdbounds()
        .args([
            "validate",
            "supercritical_localized",
            "--set",
            "experiment.0.delta=1.5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn unknown_scenario_is_an_error() {
    let out = qdbounds()
        .args(["validate", "no_such_scenario"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_outputs_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let file = dir.join("audit.toml");
    std::fs::write(
        &file,
        r#"
name = "small_audit"
seed = 9

[operator]
coupling = 1.0
kernel = { type = "exp", A1 = 1.0, a = 1.0 }
potential = { type = "quasiperiodic", fourier_coeffs = [0.0, 2.0], theta = 0.0, alpha = "golden" }

[[experiment]]
kind = "commutator_audit"
trials = 3
p_max = 2
gamma = { amp = 1.0, rate = 1.0, radius = 4 }
tol = 1e-12
"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = qdbounds()
        .args([
            "run",
            file.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert!(manifest.is_object());
    assert!(out_dir.join("00_commutator_audit.csv").exists());
}

#[test]
fn matrix_dumps_are_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = |dump: bool| {
        format!(
            r#"
name = "dumps"
seed = 3

[operator]
coupling = 0.5
kernel = {{ type = "exp", A1 = 1.0, a = 1.0 }}
potential = {{ type = "constant", value = 0.0 }}

[[experiment]]
kind = "resolvent_identity"
trials = 2
max_window = 16
dump_matrices = {dump}
"#
        )
    };
    for dump in [false, true] {
        let file = tmp.path().join(format!("dump_{dump}.toml"));
        std::fs::write(&file, scenario(dump)).unwrap();
        let out_dir = tmp.path().join(format!("out_{dump}"));
        let out = qdbounds()
            .args(["run", file.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let dumps: Vec<_> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "grn"))
            .collect();
        if dump {
            assert_eq!(dumps.len(), 2);
            let m = qdbounds::greens::read_matrix_dump(std::fs::File::open(&dumps[0]).unwrap()).unwrap();
            assert!(m.is_square() && m.nrows() >= 4);
        } else {
            assert!(dumps.is_empty());
        }
    }
}
