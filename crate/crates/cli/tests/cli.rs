use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_h2o-stark"))
}

#[test]
fn config_errors_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "l_max = 3\nxi = -1\n").unwrap();
    let out = bin().arg("solve").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn unknown_supplementary_table_is_a_usage_error() {
    let out = bin().args(["sweep", "--sm-table", "99"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn field_free_density_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("b1.dat");
    let out = bin()
        .args([
            "density",
            "--set",
            "field.magnitude=0",
            "--set",
            "density.samples=21",
        ])
        .args(["--set", "density.orbital=1b1"])
        .arg("--set")
        .arg(format!("output.density={}", grid.display()))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&grid).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 21 * 21);
    // 1b1 is odd in x, so the y-z plane carries no density.
    for l in data {
        let d: f64 = l.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert!(d.abs() < 1e-20, "{l}");
    }
}
