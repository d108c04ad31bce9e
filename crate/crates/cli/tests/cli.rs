use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tuckeriga"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV, split on commas.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (
        header,
        lines.map(|l| l.split(',').map(String::from).collect()).collect(),
    )
}

fn col(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn cube_smoke_run_converges() {
    let o = run(&[
        "solve",
        "--geometry",
        "unit_cube",
        "-p",
        "2",
        "--n-el",
        "6",
        "--tol",
        "1e-8",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, data) = rows(&stdout(&o));
    assert_eq!(
        header,
        ["iter", "res_norm", "rx1", "rx2", "rx3", "rr1", "rr2", "rr3", "rp1", "rp2", "rp3", "eps_k"]
    );
    let res = |r: &Vec<String>| r[1].parse::<f64>().unwrap();
    assert!(res(data.last().unwrap()) <= 1e-8 * res(&data[0]));
    assert!(stderr(&o).contains("status=converged"));
}

#[test]
fn unknown_geometry_is_a_config_error() {
    let o = run(&["solve", "--geometry", "teapot"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown geometry"));
}

#[test]
fn bad_config_files_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "geometry = \"unit_cube\"\nwarp_factor = 9\n").unwrap();
    assert_eq!(code(&run(&["solve", "-c", unknown.to_str().unwrap()])), 2);
    let bad_tol = dir.path().join("tol.toml");
    std::fs::write(&bad_tol, "tol = 2.0\n").unwrap();
    assert_eq!(code(&run(&["solve", "-c", bad_tol.to_str().unwrap()])), 2);
    assert_eq!(
        code(&run(&[
            "solve",
            "-c",
            dir.path().join("missing.toml").to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&run(&["solve", "--geometry", "unit_cube", "-p", "3", "--n-el", "2"])),
        2
    );
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let o = run(&["solve", "-p", "3", "--n-el", "12", "--max-iterations", "2"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("status=max_iterations"));
    assert_eq!(rows(&stdout(&o)).1.len(), 3);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "geometry = \"unit_cube\"\np = 2\nn_el = 4\ntol = 1e-7\n[truncation]\neps0 = 0.05\n[output]\ncsv = \"ignored.csv\"\n",
    )
    .unwrap();
    let out = dir.path().join("report.csv");
    let o = run(&[
        "solve",
        "-c",
        cfg.to_str().unwrap(),
        "--n-el",
        "6",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("unit_cube p=2 n_el=6"));
    let (_, data) = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(data[0][11], "5e-2");
    assert!(!Path::new("ignored.csv").exists());
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let o = run(&[
            "solve",
            "--geometry",
            "spherical_shell",
            "-p",
            "3",
            "--n-el",
            "8",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(!outputs[0].contains(&b'\r'));
}

#[test]
fn convergence_on_cube_and_single_level() {
    let o = run(&["convergence", "--geometry", "unit_cube", "-p", "2", "--levels", "2,3,4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, data) = rows(&stdout(&o));
    assert_eq!(data.len(), 3);
    let last: f64 = data[2][col(&h, "order_l2")].parse().unwrap();
    assert!((last - 3.0).abs() < 0.3, "L2 rate {last}");
    assert!(data[0][col(&h, "order_l2")].is_empty());
    assert!(stderr(&o).contains("fitted orders"));

    let o = run(&["convergence", "--geometry", "unit_cube", "-p", "2", "--levels", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(rows(&stdout(&o)).1.len(), 1);
    assert!(stderr(&o).contains("no fitted order"));

    // No exact solution is known on the shell.
    assert_eq!(code(&run(&["convergence", "--geometry", "spherical_shell"])), 2);
}

#[test]
fn precond_study_ranks() {
    let args = [
        "precond-study",
        "--degrees",
        "2,3,4",
        "--n-els",
        "6,8,12",
        "--eps-prec",
        "1",
    ];
    let o = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, data) = rows(&stdout(&o));
    assert_eq!(data.len(), 9);
    let m: Vec<f64> = data.iter().map(|r| r[col(&h, "m_p")].parse().unwrap()).collect();
    for (r, &m_p) in data.iter().zip(&m) {
        let rank: usize = r[col(&h, "r_p")].parse().unwrap();
        // With eps_prec = 1 the required sup-error is 1/M_P, so the rank
        // stays tiny only while the spectrum is narrow.
        if m_p < 200.0 {
            assert!((1..=3).contains(&rank), "rank {rank} at M_P {m_p}");
        }
        assert!(rank <= 4);
    }
    for d in m.chunks(3) {
        assert!(d[0] < d[1] && d[1] < d[2], "{d:?}");
    }

    // Threads do not change the output.
    assert_eq!(stdout(&run(&args)), stdout(&o));
}

#[test]
fn elasticity_runs() {
    assert_eq!(code(&run(&["elasticity", "--n-el", "4", "-p", "2"])), 2);
    assert_eq!(
        code(&run(&[
            "elasticity",
            "--n-el",
            "4",
            "-p",
            "2",
            "--lambda",
            "1",
            "--mu",
            "-1"
        ])),
        2
    );
    assert_eq!(
        code(&run(&["elasticity", "--lambda", "1", "--mu", "1", "--load", "0,1"])),
        2
    );

    let lame = ["--lambda", "0.5769", "--mu", "0.3846"];
    let mut args = vec!["elasticity", "--n-el", "4", "-p", "2"];
    args.extend(lame);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, data) = rows(&stdout(&o));
    assert_eq!(h.len(), 2 + 27 + 1);
    assert_eq!(h[2], "rx1_c1");
    assert!(data.len() > 2);

    args.extend(["--load", "0,0,0", "--top-displacement", "0"]);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(rows(&stdout(&o)).1.len(), 1);
    assert!(stderr(&o).contains("iterations=0"));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let o = run(&[
        "solve",
        "--geometry",
        "unit_cube",
        "-p",
        "2",
        "--n-el",
        "4",
        "-o",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn paper_tables_are_labelled_scaled_down() {
    assert_eq!(code(&run(&["--paper-tables", "solve"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--paper-tables",
        "--threads",
        "4",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("# scaled-down:").count(), 5);
    for slug in ["preconditioner", "convergence", "orders", "shell", "elasticity"] {
        let f = dir.path().join(format!("scaled_down_{slug}.csv"));
        assert!(f.exists(), "{slug}");
    }
}
