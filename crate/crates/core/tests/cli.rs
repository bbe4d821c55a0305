use std::path::Path;
use std::process::{Command, Output};

use msid::io::model_json::ModelDocument;
use msid::io::profile::{read_table, write_profile_csv, Unit};
use msid::io::series::{load_csv, preprocess};
use msid::simulate::{benchmark_var, simulate_realization, BenchmarkParams};

fn msid(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msid"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("MSID_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(envs.iter().copied());
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn write_benchmark_csv(file: &str, params: &BenchmarkParams, n: usize, seed: u64) {
    let m = benchmark_var(params).unwrap();
    let ts = simulate_realization(&m, n, seed, 50, 10_000).unwrap();
    ts.write_csv(std::fs::File::create(file).unwrap()).unwrap();
}

#[test]
fn benchmark_sweep_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "sweep.csv");
    let o = msid(
        &["benchmark", "--experiment", "1", "--points", "20", "--scales", "12", "--q", "10", "--r", "12", "-o", &out],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_table(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(table.is_sweep());
    assert_eq!(table.columns.len(), 10);
    assert_eq!(table.rows.len(), 20 * 12);
    assert!(table.rows.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn uncoupled_model_decomposes_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let model = path(dir.path(), "m.json");
    let m = benchmark_var(&BenchmarkParams::default().uncoupled()).unwrap();
    std::fs::write(&model, ModelDocument::from_model(&m, 50, "test").to_json()).unwrap();
    let out = path(dir.path(), "p.csv");
    let o = msid(
        &["decompose", "--model", &model, "--target", "H", "--sources", "S,R", "--scales", "3", "-o", &out],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_table(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 3);
    for row in &table.rows {
        assert!(row[1..].iter().all(|v| v.abs() <= 1e-10), "{row:?}");
    }
}

#[test]
fn random_walk_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "rw.csv");
    let mut text = String::from("H,S,R\n");
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let mut walk = [0.0f64; 3];
    for _ in 0..5000 {
        for w in walk.iter_mut() {
            *w += rand::Rng::gen_range(&mut rng, -1.0..1.0);
        }
        text.push_str(&format!("{},{},{}\n", walk[0], walk[1], walk[2]));
    }
    std::fs::write(&input, text).unwrap();
    let o = msid(&["fit", "-i", &input, "--p-max", "4"], &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error: kind=nonstationary_subject"), "{}", stderr(&o));
}

#[test]
fn fit_then_decompose_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "x.csv");
    write_benchmark_csv(&input, &BenchmarkParams::default().with_d([0.1, 0.25, 0.45]), 5000, 7);
    let model = path(dir.path(), "m.json");
    let o = msid(&["fit", "-i", &input, "--p-max", "5", "-o", &model], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let prof = path(dir.path(), "p.csv");
    let flags = ["--target", "H", "--sources", "S,R", "--scales", "1,2,4"];
    let mut args = vec!["decompose", "--model", &model, "-o", &prof];
    args.extend(flags);
    let o = msid(&args, &[]);
    assert!(o.status.success(), "{}", stderr(&o));

    let cfg = msid::io::config::AnalysisConfig {
        p_max: 5,
        target: Some("H".into()),
        sources: Some(vec!["S".into(), "R".into()]),
        scales: vec![1, 2, 4],
        ..Default::default()
    };
    let ts = preprocess(&load_csv(&input).unwrap()).unwrap();
    let opts = msid::estimation::FitOptions {
        q: cfg.q,
        p_max: cfg.p_max,
        bandwidth: cfg.bandwidth,
        order: None,
    };
    let report = msid::estimation::fit_varfi(&ts.data, &ts.labels, &opts).unwrap();
    let profile = msid::cli::decompose_model(report.model(), &cfg).unwrap();
    let mut expected = Vec::new();
    write_profile_csv(&profile, Unit::Nats, &mut expected).unwrap();
    assert_eq!(std::fs::read_to_string(&prof).unwrap(), String::from_utf8(expected).unwrap());
}

fn count_polylines(svg: &str) -> usize {
    let mut reader = quick_xml::Reader::from_str(svg);
    let mut count = 0;
    loop {
        match reader.read_event().unwrap() {
            quick_xml::events::Event::Eof => break,
            quick_xml::events::Event::Start(e) | quick_xml::events::Event::Empty(e)
                if e.name().as_ref() == b"polyline" =>
            {
                count += 1
            }
            _ => {}
        }
    }
    count
}

#[test]
fn plots_are_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    let model = path(dir.path(), "m.json");
    let m = benchmark_var(&BenchmarkParams::default()).unwrap();
    std::fs::write(&model, ModelDocument::from_model(&m, 50, "test").to_json()).unwrap();
    let prof = path(dir.path(), "p.csv");
    let o = msid(
        &["decompose", "--model", &model, "--target", "H", "--sources", "S,R", "--scales", "4", "-o", &prof],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = path(dir.path(), "p.svg");
    let o = msid(&["plot", "-i", &prof, "-o", &svg], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(count_polylines(&std::fs::read_to_string(&svg).unwrap()), 8);

    let sweep = path(dir.path(), "s.csv");
    let o = msid(
        &["benchmark", "--experiment", "2", "--points", "3", "--scales", "3", "--q", "10", "--r", "12", "-o", &sweep],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = msid(&["plot", "-i", &sweep, "-o", &svg], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = msid(&["plot", "-i", &sweep, "--measure", "T_joint", "-o", &svg], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(count_polylines(&std::fs::read_to_string(&svg).unwrap()), 3);
}

#[test]
fn usage_errors_exit_two() {
    let o = msid(&["fit", "--no-such-flag"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error: kind=usage"), "{}", stderr(&o));
    let o = msid(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn missing_input_is_an_io_error() {
    let o = msid(&["fit", "-i", "/nonexistent/x.csv"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error: kind=io"), "{}", stderr(&o));
}

#[test]
fn bad_csv_cell_is_reported_with_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "bad.csv");
    std::fs::write(&input, "H,S\n1,2\n1,2\n1,2\n1,2\n1,2\n1,x\n").unwrap();
    let o = msid(&["fit", "-i", &input], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("kind=parse") && err.contains('7'), "{err}");
}

#[test]
fn flags_override_environment_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "x.csv");
    write_benchmark_csv(&input, &BenchmarkParams::default(), 2000, 3);
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"q": 30, "p_max": 3}"#).unwrap();
    let q_of = |args: &[&str], envs: &[(&str, &str)]| -> usize {
        let model = path(dir.path(), "m.json");
        let mut all = vec!["fit", "-i", &input, "--config", &cfg, "-o", &model];
        all.extend_from_slice(args);
        let o = msid(&all, envs);
        assert!(o.status.success(), "{}", stderr(&o));
        ModelDocument::from_json(&std::fs::read_to_string(&model).unwrap()).unwrap().q
    };
    assert_eq!(q_of(&[], &[]), 30);
    assert_eq!(q_of(&[], &[("MSID_Q", "20")]), 20);
    assert_eq!(q_of(&["--q", "10"], &[("MSID_Q", "20")]), 10);

    let o = msid(&["fit", "-i", &input, "--config", &cfg], &[("MSID_BOGUS", "1")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kind=config"), "{}", stderr(&o));
}
