use std::path::{Path, PathBuf};
use std::process::Command;

use tubal_cli::format::{read_volume, write_volume};
use tubal_cli::VolumeFile;
use tubal_core::synth::{benchmark_reflectors, benchmark_wavelet, make_model, ReflectorSpec};
use tubal_core::{add_noise, snr_db, Volume};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn tubal(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let full = std::iter::once("tubal").chain(args.iter().copied());
    let code = tubal_cli::run(full, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_noisy(dir: &Path) -> PathBuf {
    let refl = [ReflectorSpec {
        depth_at_origin: 25.0,
        dip: (0.5, 0.5),
        amplitude: 1.0,
    }];
    let clean = make_model([64, 8, 8], 0.001, &refl, &benchmark_wavelet()).unwrap();
    let path = dir.join("noisy.tvol");
    write_volume(&path, &add_noise(&clean, 5.0, 1).unwrap()).unwrap();
    path
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(
        &path,
        format!("# small run\natoms = 6\nmax_outer = 2\nmax_inner = 30\npatch = 8, 4, 4\nstride = 4, 2, 2\n{extra}"),
    )
    .unwrap();
    path
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_tubal");
    let status = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    let status = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tvol");
    let status = Command::new(bin)
        .args(["eval", s(&missing), s(&missing)])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn zero_outer_iterations_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_noisy(dir.path());
    let cfg = small_config(dir.path(), "max_outer = 0\n");
    let out = dir.path().join("out.tvol");
    let report = dir.path().join("report.txt");
    let r = tubal(&[
        "--config",
        s(&cfg),
        "denoise",
        s(&input),
        s(&out),
        s(&report),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("no iterations requested"), "{}", r.stderr);
    assert!(!out.exists());
}

#[test]
fn bad_config_lines_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "atoms = 4\nbogus = 1\n").unwrap();
    let r = tubal(&["--config", s(&cfg), "eval", "a", "b"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);
}

#[test]
fn corrupted_magic_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = small_noisy(dir.path());
    let bad = dir.path().join("corrupt.tvol");
    let mut bytes = std::fs::read(&good).unwrap();
    bytes[0] = b'X';
    std::fs::write(&bad, bytes).unwrap();
    let r = tubal(&["eval", s(&good), s(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("corrupt.tvol"), "{}", r.stderr);
    assert!(r.stderr.contains("magic"), "{}", r.stderr);
}

#[test]
fn truncated_payload_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let good = small_noisy(dir.path());
    let mut bytes = std::fs::read(&good).unwrap();
    bytes.truncate(bytes.len() - 3);
    let bad = dir.path().join("short.tvol");
    std::fs::write(&bad, bytes).unwrap();
    assert_eq!(tubal(&["eval", s(&good), s(&bad)]).code, 2);
}

#[test]
fn eval_prints_snr() {
    let dir = tempfile::tempdir().unwrap();
    let reference = Volume::from_fn([4, 3, 2], 0.001, |i, j, k| (i + 2 * j + 3 * k) as f64 + 1.0);
    // error energy exactly one tenth of the signal energy
    let scale = (reference.energy() / 10.0 / 24.0).sqrt();
    let mut test = reference.clone();
    for (n, v) in test.as_mut_slice().iter_mut().enumerate() {
        *v += if n % 2 == 0 { scale } else { -scale };
    }
    let (a, b) = (dir.path().join("ref.tvol"), dir.path().join("test.tvol"));
    write_volume(&a, &reference).unwrap();
    write_volume(&b, &test).unwrap();
    let stored = (read_volume(&a).unwrap(), read_volume(&b).unwrap());
    let want = snr_db(&stored.0, &stored.1).unwrap();
    assert!((want - 10.0).abs() < 1e-4);

    let r = tubal(&["eval", s(&a), s(&b)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.trim(), format!("SNR = {want:.4} dB"));
    assert_eq!(r.stdout.trim(), "SNR = 10.0000 dB");
    assert_eq!(tubal(&["eval", s(&a), s(&a)]).stdout.trim(), "SNR = inf dB");
}

#[test]
fn eval_rejects_mismatched_dims() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.tvol"), dir.path().join("b.tvol"));
    write_volume(&a, &Volume::from_fn([4, 3, 2], 0.001, |i, _, _| i as f64)).unwrap();
    write_volume(&b, &Volume::from_fn([4, 2, 3], 0.001, |i, _, _| i as f64)).unwrap();
    assert_eq!(tubal(&["eval", s(&a), s(&b)]).code, 2);
}

#[test]
fn synth_is_reproducible_and_reports_its_snr() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let first = tubal(&["--seed", "12", "synth", s(&p("c1")), s(&p("n1"))]);
    let second = tubal(&["--seed", "12", "synth", s(&p("c2")), s(&p("n2"))]);
    assert_eq!(first.code, 0, "{}", first.stderr);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(
        std::fs::read(p("n1")).unwrap(),
        std::fs::read(p("n2")).unwrap()
    );
    assert_eq!(
        std::fs::read(p("c1")).unwrap(),
        std::fs::read(p("c2")).unwrap()
    );

    let snr = snr_db(
        &read_volume(&p("c1")).unwrap(),
        &read_volume(&p("n1")).unwrap(),
    )
    .unwrap();
    assert_eq!(first.stdout.trim(), format!("input SNR = {snr:.4} dB"));
    assert!((snr - 0.1403).abs() < 0.01);

    let other = tubal(&["--seed", "13", "synth", s(&p("c3")), s(&p("n3"))]);
    assert_eq!(other.code, 0);
    assert_ne!(
        std::fs::read(p("n1")).unwrap(),
        std::fs::read(p("n3")).unwrap()
    );
}

#[test]
fn denoise_writes_outputs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_noisy(dir.path());
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("clean_est.tvol");
    let report = dir.path().join("report.txt");
    let r = tubal(&[
        "--config",
        s(&cfg),
        "--deterministic",
        "denoise",
        s(&input),
        s(&out),
        s(&report),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(read_volume(&out).unwrap().dims(), [64, 8, 8]);
    let dict = VolumeFile::read(&dir.path().join("clean_est.dict.tvol")).unwrap();
    assert_eq!(dict.dims, [8, 6, 16]);
    let text = std::fs::read_to_string(&report).unwrap();
    for key in [
        "beta = ",
        "objective = ",
        "atom_usage = ",
        "outer_iterations = ",
    ] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn unwritable_output_leaves_no_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_noisy(dir.path());
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("missing_dir").join("out.tvol");
    let report = dir.path().join("report.txt");
    let r = tubal(&[
        "--config",
        s(&cfg),
        "denoise",
        s(&input),
        s(&out),
        s(&report),
    ]);
    assert_eq!(r.code, 2);
    assert!(!out.exists());
    assert!(!report.exists());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 2, "{leftovers:?}");
}

fn read_pgm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = std::fs::read(path).unwrap();
    let header: Vec<&[u8]> = bytes.splitn(4, |&b| b == b'\n').collect();
    assert_eq!(header[0], b"P5");
    let dims = std::str::from_utf8(header[1]).unwrap();
    let (cols, rows) = dims.split_once(' ').unwrap();
    assert_eq!(header[2], b"255");
    let (cols, rows): (usize, usize) = (cols.parse().unwrap(), rows.parse().unwrap());
    assert_eq!(header[3].len(), rows * cols);
    (rows, cols, header[3].to_vec())
}

#[test]
fn constant_volume_slices_are_mid_gray() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.tvol");
    write_volume(&input, &Volume::from_fn([5, 4, 3], 0.001, |_, _, _| 2.5)).unwrap();
    let img = dir.path().join("flat.pgm");
    for axis in ["time", "inline", "crossline"] {
        assert_eq!(tubal(&["slice", s(&input), axis, "1", s(&img)]).code, 0);
        let (_, _, px) = read_pgm(&img);
        assert!(px.iter().all(|&p| p == 128));
    }
}

#[test]
fn bright_pixels_follow_the_reflectors() {
    let dir = tempfile::tempdir().unwrap();
    let (clean, noisy) = (dir.path().join("c.tvol"), dir.path().join("n.tvol"));
    assert_eq!(tubal(&["synth", s(&clean), s(&noisy)]).code, 0);
    let img = dir.path().join("inline.pgm");
    let i2 = 5;
    assert_eq!(tubal(&["slice", s(&clean), "inline", "5", s(&img)]).code, 0);
    let (rows, cols, px) = read_pgm(&img);
    assert_eq!((rows, cols), (1200, 32));
    let refl = benchmark_reflectors();
    for c in 0..cols {
        let loci: Vec<f64> = refl.iter().map(|r| r.depth(i2, c)).collect();
        for z in 0..rows {
            if px[z * cols + c] == 255 {
                assert!(
                    loci.iter().any(|d| (z as f64 - d).abs() <= 5.0),
                    "row {z} col {c}"
                );
            }
        }
        for d in loci {
            let z = d.round() as usize;
            assert_eq!(px[z * cols + c], 255, "locus {d} col {c}");
        }
    }
}

#[test]
fn invalid_slice_requests_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.tvol");
    write_volume(
        &input,
        &Volume::from_fn([5, 4, 3], 0.001, |i, _, _| i as f64),
    )
    .unwrap();
    let img = dir.path().join("x.pgm");
    assert_eq!(
        tubal(&["slice", s(&input), "diagonal", "0", s(&img)]).code,
        1
    );
    assert_eq!(
        tubal(&["slice", s(&input), "crossline", "3", s(&img)]).code,
        1
    );
    assert!(!img.exists());
}
