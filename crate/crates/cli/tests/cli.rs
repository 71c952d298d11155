use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stereoportal")).args(args).output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn benchmark_reports_the_pass_law() {
    let out = run(&["--scene", "test:3", "--frames", "2", "--res", "32x32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("portals=6"));
    assert!(text.contains("passes=14.00"), "{text}");
}

#[test]
fn all_test_scenes_fill_the_summary_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let out = run(&[
        "--scene",
        "test:all",
        "--frames",
        "2",
        "--res",
        "32x32",
        "--trajectory",
        "orbit",
        "--mode",
        "stencil",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("run.summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("metric,0,2,4,6"));
    let passes = lines.find(|l| l.starts_with("passes,")).unwrap();
    assert_eq!(passes, "passes,4.0000,8.0000,12.0000,16.0000");
    let rows = csv::Reader::from_path(&csv).unwrap().records().count();
    assert_eq!(rows, 8);
}

#[test]
fn frames_are_dumped_every_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--scene",
        "test:1",
        "--frames",
        "5",
        "--res",
        "24x24",
        "--trajectory",
        "walk",
        "--mode",
        "instanced",
        "--dump-frames",
        dir.path().to_str().unwrap(),
        "--every",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["frame_00000_instanced.png", "frame_00002_instanced.png", "frame_00004_instanced.png"]
    );
}

#[test]
fn plan_dump_lists_passes() {
    let out = run(&["--scene", "test:1", "--frames", "1", "--res", "16x16", "--dump-plan"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# plan for test:1 (6 passes)"));
    assert!(text.contains("main-scene"));
}

#[test]
fn scene_files_load() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenes/four_rooms.toml");
    let out = run(&["--scene", path, "--frames", "1", "--res", "16x16", "--trajectory", "walk"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn configuration_errors_exit_non_zero_with_a_message() {
    for args in [
        &["--frames", "0"][..],
        &["--res", "8x8"],
        &["--res", "big"],
        &["--mode", "fast"],
        &["--scene", "test:9"],
        &["--scene", "/no/such/scene.toml"],
        &["--trajectory", "spiral"],
    ] {
        let out = run(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} gave no message");
    }
}

#[test]
fn serve_answers_health_checks() {
    use std::io::{Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::time::{Duration, Instant};

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_stereoportal"))
        .args(["--scene", "test:1", "--res", "32x32", "--serve", &port.to_string()])
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut response = String::new();
    while Instant::now() < deadline {
        if let Ok(mut stream) = TcpStream::connect(("127.0.0.1", port)) {
            stream
                .write_all(b"GET /healthz HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
                .unwrap();
            stream.read_to_string(&mut response).unwrap();
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200") && response.ends_with("ok\n"), "{response}");
}
