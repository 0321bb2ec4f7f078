use std::fs;
use std::process::Command;

fn contamdp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_contamdp")).args(args).output().unwrap()
}

fn config(dir: &std::path::Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn unknown_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"n_gird": [100]}"#);
    let out = contamdp(&["table1", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn empty_grid_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    for (cmd, text) in [
        ("table1", r#"{"n_grid": []}"#),
        ("regression-decay", r#"{"n_grid": []}"#),
        ("fisher-check", r#"{"p_grid": []}"#),
        ("mean-bench", r#"{"n_grid": []}"#),
    ] {
        let cfg = config(dir.path(), text);
        let out = contamdp(&[cmd, "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
    }
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_file_is_config_error() {
    let out = contamdp(&["fisher-check", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fisher_check_writes_csv_with_header_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "{}");
    let out = contamdp(&["fisher-check", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("fisher_check.csv")).unwrap();
    assert!(text.starts_with("# contamdp "));
    assert!(text.contains("# config-sha256: "));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "p,max_entry_gap,info_p,info_0");
    assert_eq!(data.len(), 4);
}

#[test]
fn seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"n_grid": [60, 300], "repeats": 10, "particles": 200}"#);
    let run = |sub: &str, seed: &str, workers: &str| {
        let out_dir = dir.path().join(sub);
        let o = contamdp(&["table1", "--config", &cfg, "--seed", seed, "--workers", workers, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out_dir.join("table1.csv")).unwrap()
    };
    let a = run("a", "5", "1");
    let b = run("b", "5", "2");
    let c = run("c", "6", "1");
    assert_eq!(a, b);
    assert_ne!(a, c);
}
