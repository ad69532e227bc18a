use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_wavesal");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("WAVESAL_FILTER_DIR").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_pgm(path: &Path, w: usize, h: usize, f: impl Fn(usize, usize) -> u8) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(f(x, y));
        }
    }
    std::fs::write(path, bytes).unwrap();
}

fn textured(x: usize, y: usize) -> u8 {
    let blob = if (20..36).contains(&x) && (24..40).contains(&y) { 120 } else { 0 };
    (((x * 7 + y * 13 + x * y) % 61) as u8).wrapping_add(blob)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn saliency_output_follows_naming_contract() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.pgm");
    write_pgm(&img, 64, 64, textured);
    let out = run(&["saliency", p(&img), "--transform", "dwt", "--scale-rule", "wss"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("img.dwt.wss.pgm").is_file());
    let side = std::fs::read_to_string(dir.path().join("img.dwt.wss.txt")).unwrap();
    assert!(side.starts_with("method_tag=dwt.wss\n"));
}

#[test]
fn out_dir_and_scale_dump() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("scene.pgm");
    write_pgm(&img, 40, 32, textured);
    let out_dir = dir.path().join("maps");
    let out = run(&["saliency", p(&img), "--transform", "qwt", "--scale-rule", "dis", "--levels", "3", "--dump-scales", "--out-dir", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out_dir.join("scene.qwt.dis.pgm").is_file());
    let csv = std::fs::read_to_string(out_dir.join("scene.qwt.dis.scales.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,s_p,H,MI");
    assert_eq!(lines.len(), 1 + 40 * 32);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.pgm");
    write_pgm(&img, 32, 32, textured);
    for args in [
        vec!["saliency", p(&img), "--levels", "0"],
        vec!["saliency", p(&img), "--levels", "6"],
        vec!["saliency", p(&img), "--transform", "fft"],
        vec!["saliency", p(&img), "--transform", "qwt", "--bank", "cdf97"],
        vec!["saliency", p(&img), "--sigma", "-1"],
        vec!["transform", p(&img), "--levels", "6"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
    assert!(!dir.path().join("img.dwt.wss.pgm").exists());
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.pgm");
    let out = run(&["saliency", p(&missing)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("absent.pgm"));

    let black = dir.path().join("black.pgm");
    write_pgm(&black, 32, 32, |_, _| 0);
    let out = run(&["saliency", p(&black), "--mode", "searcher", "--levels", "3"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn searcher_best_basis_quaternion_runs() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.pgm");
    write_pgm(&img, 64, 64, textured);
    let out = run(&["saliency", p(&img), "--transform", "qwptbb", "--mode", "searcher", "--levels", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("img.qwptbb.wss.searcher.pgm").is_file());
}

#[test]
fn saliency_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.pgm");
    write_pgm(&img, 48, 48, textured);
    let read = || {
        let out = run(&["saliency", p(&img), "--transform", "dwptbb", "--levels", "3"]);
        assert_eq!(code(&out), 0);
        (
            std::fs::read(dir.path().join("img.dwptbb.wss.pgm")).unwrap(),
            std::fs::read(dir.path().join("img.dwptbb.wss.txt")).unwrap(),
        )
    };
    assert_eq!(read(), read());
}

struct Dataset {
    dir: tempfile::TempDir,
}

impl Dataset {
    /// Two 32×32 images; fixations for those listed in `with_fixations`.
    fn new(with_fixations: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        for sub in ["images", "fixations"] {
            std::fs::create_dir(dir.path().join(sub)).unwrap();
        }
        write_pgm(&dir.path().join("images/a.pgm"), 32, 32, textured);
        write_pgm(&dir.path().join("images/b.pgm"), 32, 32, |x, y| textured(y, x));
        for id in with_fixations {
            std::fs::write(dir.path().join(format!("fixations/{id}.csv")), "x,y\n25,30\n27.4,31\n5,5\n").unwrap();
        }
        Dataset { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn manifest(&self, methods: &[&str]) -> PathBuf {
        let mut text = String::from("# test set\nimages=images/*.pgm\nfixations=fixations\noutput=out\nlevels=3\n");
        for m in methods {
            text.push_str(&format!("method={m}\n"));
        }
        let path = self.path("run.manifest");
        std::fs::write(&path, text).unwrap();
        path
    }

    fn eval(&self, methods: &[&str], jobs: &str) -> (Output, String) {
        let out = run(&["eval", p(&self.manifest(methods)), "--jobs", jobs]);
        let csv = std::fs::read_to_string(self.path("out/results.csv")).unwrap_or_default();
        (out, csv)
    }
}

#[test]
fn eval_two_images_one_method() {
    let ds = Dataset::new(&["a", "b"]);
    let (out, csv) = ds.eval(&["dwt.wss"], "1");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 4, "{csv}");
    assert_eq!(lines[0], "image_id,method,mode,scale_rule,auc,nss,time_ms");
    assert!(lines[1].starts_with("a,dwt,observer,wss,"));
    assert!(lines[2].starts_with("b,dwt,observer,wss,"));
    assert!(lines[3].starts_with("MEAN,dwt,observer,wss,"));
    let auc: f64 = lines[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let roc = std::fs::read_to_string(ds.path("out/roc/a.dwt.wss.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr\n0,0\n"));
    assert!(roc.ends_with("1,1\n"));
}

#[test]
fn missing_fixations_give_na_row_and_warning() {
    let ds = Dataset::new(&["a"]);
    let (out, csv) = ds.eval(&["dwt.dis"], "1");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("warning: b: no fixation file"));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[2], "b,dwt,observer,dis,NA,NA,NA");
    assert!(lines[3].starts_with("MEAN,dwt,observer,dis,"));
    assert_eq!(lines.len(), 4);
}

fn without_time(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn eval_is_deterministic_apart_from_time() {
    let ds = Dataset::new(&["a", "b"]);
    let methods = ["dwt.wss", "qwt.dis", "dwptbb.wss.searcher", "pss"];
    let (out1, first) = ds.eval(&methods, "1");
    assert_eq!(code(&out1), 0, "{}", stderr(&out1));
    let roc1 = std::fs::read(ds.path("out/roc/b.qwt.dis.csv")).unwrap();
    let (out2, second) = ds.eval(&methods, "3");
    assert_eq!(code(&out2), 0);
    assert_eq!(without_time(&first), without_time(&second));
    assert_eq!(roc1, std::fs::read(ds.path("out/roc/b.qwt.dis.csv")).unwrap());
    // 2 images × 4 methods + 4 means
    assert_eq!(first.lines().count(), 1 + 8 + 4);
    assert!(first.contains("\na,pss,-,-,"));
}

#[test]
fn external_maps_are_ingested() {
    let ds = Dataset::new(&["a", "b"]);
    std::fs::create_dir(ds.path("itt")).unwrap();
    // perfect predictor for image a only
    write_pgm(&ds.path("itt/a.pgm"), 32, 32, |x, y| if [(25, 30), (27, 31), (5, 5)].contains(&(x, y)) { 255 } else { 0 });
    let (out, csv) = ds.eval(&["external itt itt"], "2");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<_> = csv.lines().collect();
    let a: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(a[..5], ["a", "itt", "-", "-", "1"]);
    // three ones among 1024 zeros: 1 / sqrt(p (1 - p)) with p = 3/1024
    let p: f64 = 3.0 / 1024.0;
    assert!((a[5].parse::<f64>().unwrap() - 1.0 / (p * (1.0 - p)).sqrt()).abs() < 1e-9);
    assert_eq!(a[6], "0.000");
    assert_eq!(lines[2], "b,itt,-,-,NA,NA,NA");
    assert!(stderr(&out).contains("b itt: no precomputed map"));
}

#[test]
fn bad_manifests_exit_2() {
    let ds = Dataset::new(&["a", "b"]);
    let out = run(&["eval", p(&ds.path("nope.manifest"))]);
    assert_eq!(code(&out), 2);
    let bad = ds.path("bad.manifest");
    for text in [
        "images=images/*.pgm\nfixations=fixations\noutput=out\n",
        "images=images/*.pgm\nfixations=fixations\noutput=out\nmethod=dwt.xyz\n",
        "images=images/*.pgm\nfixations=missing\noutput=out\nmethod=dwt.wss\n",
        "images=images/*.png\nfixations=fixations\noutput=out\nmethod=dwt.wss\n",
        "images=images/*.pgm\nfixations=fixations\noutput=out\nmethod=external itt nowhere\n",
    ] {
        std::fs::write(&bad, text).unwrap();
        let out = run(&["eval", p(&bad)]);
        assert_eq!(code(&out), 2, "{text}: {}", stderr(&out));
    }
    let out = run(&["eval", p(&ds.manifest(&["dwt.wss"])), "--jobs", "0"]);
    assert_eq!(code(&out), 2);
}

fn dump(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn constant_image_dump_has_zero_details() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.pgm");
    write_pgm(&img, 16, 16, |_, _| 128);
    for kind in ["dwt", "dwptbb", "qwt", "qwptbb"] {
        let csv = dump(&["transform", p(&img), "--transform", kind, "--levels", "2"]);
        let mut approx = 0;
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f[2] == "A" {
                approx += 1;
            } else {
                assert!(f[5..].iter().all(|c| *c == "0"), "{kind}: {line}");
            }
        }
        assert!(approx > 0, "{kind}");
    }
}

#[test]
fn dump_layout_and_parseval() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.pgm");
    write_pgm(&img, 8, 8, textured);
    let energy: f64 = (0..8)
        .flat_map(|y| (0..8).map(move |x| (x, y)))
        .map(|(x, y)| (textured(x, y) as f64 / 255.0).powi(2))
        .sum();

    let csv = dump(&["transform", p(&img), "--transform", "dwt", "--levels", "3"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("depth,node_index,orientation,x,y,c1"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 64);
    assert_eq!(&rows[0][..5], &["1", "1", "V", "0", "0"]);
    assert_eq!(rows.iter().filter(|r| r[..3] == ["3", "0", "A"]).count(), 1);
    let total: f64 = rows.iter().map(|r| r[5].parse::<f64>().unwrap().powi(2)).sum();
    assert!((total - energy).abs() <= 1e-6 * energy, "{total} vs {energy}");

    let out_path = dir.path().join("q.csv");
    let ggd_path = dir.path().join("ggd.csv");
    dump(&["transform", p(&img), "--transform", "qwt", "--levels", "1", "--out", p(&out_path), "--ggd", p(&ggd_path)]);
    let q = std::fs::read_to_string(&out_path).unwrap();
    assert!(q.starts_with("depth,node_index,orientation,x,y,c1,c2,c3,c4\n"));
    assert_eq!(q.lines().count(), 1 + 4 * 16);
    assert!(std::fs::read_to_string(&ggd_path).unwrap().starts_with("depth,band_id,alpha,beta\n"));
}

#[test]
fn filter_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.pgm");
    write_pgm(&img, 16, 16, textured);
    let args = ["transform", p(&img), "--transform", "qwt", "--levels", "2"];
    let default = dump(&args);

    let with_dir = |filters: &Path| Command::new(BIN).args(args).env("WAVESAL_FILTER_DIR", filters).output().unwrap();
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets");
    let same = with_dir(&assets);
    assert_eq!(code(&same), 0, "{}", stderr(&same));
    assert_eq!(String::from_utf8(same.stdout).unwrap(), default);

    let missing = with_dir(&dir.path().join("no-such-dir"));
    assert_eq!(code(&missing), 1);
    assert!(stderr(&missing).contains("filters.txt"));

    let broken = dir.path().join("broken");
    std::fs::create_dir(&broken).unwrap();
    std::fs::write(broken.join("filters.txt"), "db4_lo: 1 2 x\n").unwrap();
    assert_eq!(code(&with_dir(&broken)), 1);
}
