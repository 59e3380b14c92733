use std::path::Path;
use std::process::{Command, Output};

const TINY: [&str; 10] = [
    "--profile",
    "desk",
    "--iter-max",
    "2",
    "--horizon",
    "4",
    "--eval-episodes",
    "1",
    "--candidates",
    "20",
];

fn hapcache(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hapcache"))
        .args(args)
        .env("HAPCACHE_RESULTS_DIR", out)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn run_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--methods", "proposed,b4", "--seed", "1"];
    args.extend(TINY);
    let o = hapcache(&args, tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    let dir = tmp.path().join("run_desk_s1");
    let config = dir.join("config.toml");
    let records = [dir.join("proposed.json"), dir.join("b4.json")];

    let verify = |extra: &[&str]| {
        let mut a = vec!["verify", "--config", config.to_str().unwrap()];
        a.extend(records.iter().map(|p| p.to_str().unwrap()));
        a.extend(extra);
        hapcache(&a, tmp.path())
    };
    let o = verify(&[]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(!text(&o).contains("FAILED"));

    let json = std::fs::read_to_string(&records[1]).unwrap();
    std::fs::write(&records[1], json.replacen("\"seed\": 1", "\"seed\": 2", 1)).unwrap();
    let o = verify(&[]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("digest: FAILED"));
}

#[test]
fn sweep_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--axis", "n_sto", "--values", "1,2", "--seeds", "0", "--methods", "b3,b4"];
    args.extend(TINY);
    let o = hapcache(&args, tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    let dir = tmp.path().join("sweep_desk_n_sto");
    std::fs::remove_file(dir.join("mean_pc.svg")).unwrap();
    let o = hapcache(&["report", dir.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("n_sto"));
    assert!(dir.join("mean_pc.svg").is_file());
}

#[test]
fn train_writes_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--seed", "0"];
    args.extend(TINY);
    let o = hapcache(&args, tmp.path());
    assert!(o.status.success(), "{}", text(&o));
    let dir = tmp.path().join("train_desk_proposed_s0");
    for f in ["agent.bin", "agent.json", "learning_curve.json", "learning_curve.svg"] {
        assert!(dir.join(f).is_file(), "{f} missing: {:?}", std::fs::read_dir(&dir).unwrap().collect::<Vec<_>>());
    }
}

#[test]
fn bad_input_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hapcache(&["run", "--profile", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("unknown profile"));
    let o = hapcache(&["verify", "/nonexistent.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
