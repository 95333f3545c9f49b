use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nrhlc::dsp::wav::{self, WavFormat};
use nrhlc::dsp::AudioSignal;
use nrhlc::metrics::read_metrics_csv;
use tempfile::TempDir;

fn nrhlc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrhlc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn nrhlc")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = nrhlc(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    nrhlc(args, dir).status.code().unwrap()
}

/// Material plus three one-second scenes.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "synth-material",
            "--out",
            "mat",
            "--speech",
            "3",
            "--noise",
            "3",
            "--secs",
            "3",
        ],
        d,
    );
    ok(
        &[
            "scene-gen",
            "--manifest",
            "mat/manifest.toml",
            "--out",
            "sc",
            "--count",
            "3",
            "--seed",
            "4",
            "--duration-secs",
            "1",
        ],
        d,
    );
    dir
}

fn trained(d: &Path) -> PathBuf {
    std::fs::write(d.join("cfg.toml"), "epochs = 1\nbatch_size = 3\n").unwrap();
    ok(
        &[
            "train", "--config", "cfg.toml", "--scenes", "sc", "--out", "p.bin",
        ],
        d,
    );
    d.join("p.bin")
}

fn energy_db(a: &[f64], b: &[f64]) -> f64 {
    let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let p: f64 = b.iter().map(|v| v * v).sum();
    10.0 * (e / p).log10()
}

fn tone(n: usize) -> AudioSignal {
    AudioSignal::new((0..n).map(|i| 0.05 * (i as f64 * 0.2).sin()).collect()).unwrap()
}

#[test]
fn scene_gen_is_seeded_and_handles_empty_runs() {
    let w = workspace();
    let d = w.path();
    ok(
        &[
            "scene-gen",
            "--manifest",
            "mat/manifest.toml",
            "--out",
            "again",
            "--count",
            "3",
            "--seed",
            "4",
            "--duration-secs",
            "1",
        ],
        d,
    );
    for f in ["x.wav", "y.wav", "scene.toml"] {
        let a = std::fs::read(d.join("sc/scene_00002").join(f)).unwrap();
        let b = std::fs::read(d.join("again/scene_00002").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    ok(
        &[
            "scene-gen",
            "--manifest",
            "mat/manifest.toml",
            "--out",
            "none",
            "--count",
            "0",
        ],
        d,
    );
    assert_eq!(std::fs::read_dir(d.join("none")).unwrap().count(), 0);

    std::fs::remove_file(d.join("mat/noise_001_babble.wav")).unwrap();
    assert_eq!(
        code(
            &[
                "scene-gen",
                "--manifest",
                "mat/manifest.toml",
                "--out",
                "x",
                "--count",
                "1"
            ],
            d
        ),
        3
    );
}

#[test]
fn am_run_writes_channel_by_sample_arrays() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    wav::write(d.join("tone.wav"), &tone(1600), WavFormat::Float32).unwrap();
    wav::write(
        d.join("silence.wav"),
        &AudioSignal::silence(800),
        WavFormat::Float32,
    )
    .unwrap();
    std::fs::write(
        d.join("flat.toml"),
        "thresholds = [0, 0, 0, 0, 0, 0, 0, 0, 0, 0]\n",
    )
    .unwrap();

    ok(&["am-run", "--input", "tone.wav", "--out", "nh.bin"], d);
    ok(
        &[
            "am-run",
            "--input",
            "tone.wav",
            "--audiogram",
            "flat.toml",
            "--out",
            "flat.bin",
        ],
        d,
    );
    let nh = nrhlc::io::read_array(d.join("nh.bin")).unwrap();
    assert_eq!(nh.shape(), &[31, 1600]);
    assert_eq!(nh, nrhlc::io::read_array(d.join("flat.bin")).unwrap());

    ok(
        &[
            "am-run",
            "--input",
            "silence.wav",
            "--audiogram",
            "N4",
            "--out",
            "s.bin",
        ],
        d,
    );
    let s = nrhlc::io::read_array(d.join("s.bin")).unwrap();
    assert_eq!(s.shape(), &[31, 800]);
    assert!(s.data().iter().all(|&v| v == 0.0));
}

#[test]
fn render_at_zero_exponents_returns_the_input() {
    let w = workspace();
    let d = w.path();
    trained(d);
    let args = [
        "render",
        "--input",
        "sc/scene_00001/x.wav",
        "--params",
        "p.bin",
        "--audiogram",
        "N5",
        "--alpha-nr",
        "0",
        "--alpha-hlc",
        "0",
        "--out",
        "r.wav",
    ];
    ok(&args, d);
    let x = wav::read(d.join("sc/scene_00001/x.wav")).unwrap();
    let y = wav::read(d.join("r.wav")).unwrap();
    assert!(energy_db(y.samples(), x.samples()) < -100.0);
}

#[test]
fn eval_and_sweep_tables() {
    let w = workspace();
    let d = w.path();
    trained(d);
    ok(
        &[
            "sweep",
            "--params",
            "p.bin",
            "--scenes",
            "sc",
            "--audiograms",
            "N3",
            "--out",
            "sweep.csv",
        ],
        d,
    );
    let rows = read_metrics_csv(d.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 25);
    let first: Vec<_> = rows.iter().filter(|r| r.scene == "scene_00000").collect();
    assert_eq!(first.len(), 25);
    assert!(first.iter().any(|r| r.alpha_nr == 0.25 && r.alpha_hlc == 0.75));

    ok(
        &[
            "eval",
            "--scenes",
            "sc",
            "--audiograms",
            "N3",
            "--systems",
            "unprocessed,nalr",
            "--out",
            "e.csv",
        ],
        d,
    );
    let rows = read_metrics_csv(d.join("e.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    let b = nrhlc::scene::read_scene_bundle(&d.join("sc/scene_00000")).unwrap();
    let m = nrhlc::auditory::AuditoryModel::load_default().unwrap();
    let a = nrhlc::auditory::StandardAudiograms::load_default()
        .unwrap()
        .get("N3")
        .unwrap();
    let p =
        nrhlc::metrics::nalr_gains(&a, &nrhlc::metrics::NalrCoefficients::load_default().unwrap()).unwrap();
    let y_hat = nrhlc::metrics::nalr_apply(&b.x, &p).unwrap();
    let want_nrmse =
        nrhlc::metrics::nrmse(&m, y_hat.samples(), b.y.samples(), &m.profile(&a).unwrap()).unwrap();
    let want_sdr = nrhlc::metrics::sdr(y_hat.samples(), b.y.samples()).unwrap();
    let row = rows
        .iter()
        .find(|r| r.scene == "scene_00000" && r.system == "nalr")
        .unwrap();
    assert_eq!((row.alpha_nr, row.alpha_hlc), (0.0, 0.0));
    assert!((row.nrmse_pct - want_nrmse).abs() < 1e-9);
    assert!((row.sdr_db - want_sdr).abs() < 1e-9);

    // the model system without parameters is a usage error
    assert_eq!(code(&["eval", "--scenes", "sc", "--out", "f.csv"], d), 2);
}

#[test]
fn nalr_prints_gains_and_is_transparent_for_normal_hearing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let x = tone(4000);
    wav::write(d.join("in.wav"), &x, WavFormat::Float32).unwrap();
    let out = ok(
        &[
            "nalr",
            "--audiogram",
            "NH",
            "--input",
            "in.wav",
            "--out",
            "out.wav",
        ],
        d,
    );
    assert_eq!(out.lines().filter(|l| l.starts_with("# gain")).count(), 10);
    let y = wav::read(d.join("out.wav")).unwrap();
    assert!(energy_db(y.samples(), x.samples()) < -100.0);

    let out = ok(
        &[
            "nalr",
            "--audiogram",
            "N4",
            "--input",
            "in.wav",
            "--out",
            "out.wav",
        ],
        d,
    );
    let gains: Vec<f64> = out
        .lines()
        .filter_map(|l| l.strip_prefix("# gain"))
        .map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(gains.len(), 10);
    assert!(gains.iter().any(|&g| g > 10.0));

    assert_eq!(
        code(
            &[
                "nalr",
                "--audiogram",
                "missing.toml",
                "--input",
                "in.wav",
                "--out",
                "o.wav"
            ],
            d
        ),
        3
    );
    std::fs::write(d.join("bad.toml"), "thresholds = [0, 0]\n").unwrap();
    assert_eq!(
        code(
            &[
                "nalr",
                "--audiogram",
                "bad.toml",
                "--input",
                "in.wav",
                "--out",
                "o.wav"
            ],
            d
        ),
        2
    );
}

#[test]
fn exit_codes_distinguish_failures() {
    let w = workspace();
    let d = w.path();
    trained(d);
    std::fs::write(d.join("junk.bin"), b"not a parameter file").unwrap();
    let render = |params: &str| {
        code(
            &[
                "render",
                "--input",
                "sc/scene_00000/x.wav",
                "--params",
                params,
                "--out",
                "r.wav",
            ],
            d,
        )
    };
    assert_eq!(render("junk.bin"), 4);
    assert_eq!(render("absent.bin"), 3);
    assert_eq!(code(&["render", "--input", "sc/scene_00000/x.wav"], d), 2);
    assert_eq!(
        code(
            &[
                "render",
                "--input",
                "sc/scene_00000/x.wav",
                "--params",
                "p.bin",
                "--alpha-nr",
                "1.5",
                "--out",
                "r.wav",
            ],
            d,
        ),
        2
    );
    // warm-starting a tinynet run from gainbank parameters
    std::fs::write(d.join("tiny.toml"), "model = \"tinynet\"\nepochs = 1\n").unwrap();
    let c = code(
        &[
            "train",
            "--config",
            "tiny.toml",
            "--scenes",
            "sc",
            "--init",
            "p.bin",
            "--out",
            "q.bin",
        ],
        d,
    );
    assert_eq!(c, 4);
}

#[test]
fn replaying_a_settings_echo_repeats_the_run() {
    let w = workspace();
    let d = w.path();
    std::fs::write(d.join("cfg.toml"), "epochs = 1\nbatch_size = 2\nloss = \"hlc\"\n").unwrap();
    let echo = ok(
        &[
            "train", "--config", "cfg.toml", "--scenes", "sc", "--out", "p.bin",
        ],
        d,
    );
    assert!(echo.contains("[settings]") && echo.contains("batch_size = 2"));
    std::fs::write(d.join("echo.toml"), &echo).unwrap();
    let first = std::fs::read(d.join("p.bin")).unwrap();
    // the echo carries the resolved settings, so the config file is no longer needed
    std::fs::remove_file(d.join("cfg.toml")).unwrap();
    ok(&["replay", "echo.toml"], d);
    assert_eq!(std::fs::read(d.join("p.bin")).unwrap(), first);
    assert!(std::fs::read_to_string(d.join("p.bin.loss.csv"))
        .unwrap()
        .starts_with("epoch,"));

    std::fs::write(d.join("broken.toml"), "command = \"train\"\nbogus = 1\n").unwrap();
    assert_eq!(code(&["replay", "broken.toml"], d), 4);
}
