use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ldrp_core::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn ldrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldrp"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn textured(rng: &mut ChaCha8Rng, side: usize) -> GrayImage {
    let freq: f64 = rng.random_range(0.1..0.6);
    let phase: f64 = rng.random_range(0.0..6.0);
    GrayImage::from_fn(side, side, |r, c| {
        (128.0 + 90.0 * ((r as f64 * freq + phase).sin() * (c as f64 * freq * 0.7).cos())) as u8
    })
}

/// `subjects` folders of `per_subject` noisy copies of one texture each.
fn corpus(root: &Path, subjects: usize, per_subject: usize, noise: u8) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in 1..=subjects {
        let base = textured(&mut rng, 48);
        let dir = root.join(format!("s{s}"));
        fs::create_dir_all(&dir).unwrap();
        for i in 1..=per_subject {
            let img = GrayImage::from_fn(48, 48, |r, c| {
                let jitter = if noise == 0 {
                    0
                } else {
                    rng.random_range(0..=noise)
                };
                base.get(r, c).saturating_add(jitter as u16) as u8
            });
            img.write_pgm(dir.join(format!("{i}.pgm"))).unwrap();
        }
    }
}

fn extracted(tmp: &TempDir, subjects: usize, per_subject: usize, noise: u8) -> String {
    let root = tmp.path().join("faces");
    corpus(&root, subjects, per_subject, noise);
    let store = tmp.path().join("faces.ldfv");
    let out = ldrp(&[
        "extract",
        "--root",
        root.to_str().unwrap(),
        "--out",
        store.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    store.to_str().unwrap().to_string()
}

#[test]
fn extract_writes_a_store_and_summary() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("faces");
    corpus(&root, 3, 2, 8);
    let store = tmp.path().join("f.ldfv");
    let out = ldrp(&[
        "extract",
        "--root",
        root.to_str().unwrap(),
        "--out",
        store.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("images: 6"), "{text}");
    assert!(text.contains("skipped: 0"));
    assert!(text.contains("dimension: 1024"));
    assert!(text.contains("wall time:"));
    assert_eq!(&fs::read(&store).unwrap()[..4], b"LDFV");

    let shifted = tmp.path().join("g.ldfv");
    let out = ldrp(&[
        "extract",
        "--root",
        root.to_str().unwrap(),
        "--out",
        shifted.to_str().unwrap(),
        "--m1",
        "4",
        "--m2",
        "7",
    ]);
    assert!(stdout(&out).contains("dimension: 1024"));

    let csv = tmp.path().join("f.csv");
    let out = ldrp(&[
        "extract",
        "--root",
        root.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--format",
        "csv",
        "--descriptor",
        "lbp",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert!(table.starts_with("label,path,v0,"));
    assert_eq!(table.lines().next().unwrap().split(',').count(), 2 + 256);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing");
    let out = ldrp(&[
        "extract",
        "--root",
        missing.to_str().unwrap(),
        "--out",
        "x.ldfv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("does not exist"));

    let root = tmp.path().join("faces");
    corpus(&root, 2, 2, 0);
    let unwritable = tmp.path().join("no/such/dir/f.ldfv");
    let out = ldrp(&[
        "extract",
        "--root",
        root.to_str().unwrap(),
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = ldrp(&[
        "extract",
        "--root",
        root.to_str().unwrap(),
        "--out",
        "x",
        "--directions",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = ldrp(&["evaluate", "--store", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let garbage = tmp.path().join("garbage.ldfv");
    fs::write(&garbage, b"not a store").unwrap();
    let out = ldrp(&["evaluate", "--store", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = ldrp(&["evaluate", "--store", "x", "--distance", "manhattan"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_tables() {
    let tmp = TempDir::new().unwrap();
    let store = extracted(&tmp, 3, 4, 20);
    let out = ldrp(&["evaluate", "--store", &store, "--n", "1-10"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,arp,arr,f_score,anmrr");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("1,1,"), "{}", lines[1]);

    let json = ldrp(&[
        "evaluate",
        "--store",
        &store,
        "--n",
        "1,5",
        "--format",
        "json",
        "--distance",
        "l1",
    ]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["distance"], "l1");
    assert_eq!(value["rows"].as_array().unwrap().len(), 2);
    assert_eq!(value["rows"][0]["arp"], 1.0);
}

#[test]
fn evaluate_is_deterministic_across_runs_and_workers() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("faces");
    corpus(&root, 3, 3, 30);
    let root = root.to_str().unwrap();
    let a = ldrp(&["evaluate", "--root", root, "--n", "1-9", "--workers", "1"]);
    let b = ldrp(&["evaluate", "--root", root, "--n", "1-9", "--workers", "4"]);
    let c = ldrp(&["evaluate", "--root", root, "--n", "1-9"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let s1 = tmp.path().join("a.ldfv");
    let s2 = tmp.path().join("b.ldfv");
    ldrp(&[
        "extract",
        "--root",
        root,
        "--out",
        s1.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    ldrp(&[
        "extract",
        "--root",
        root,
        "--out",
        s2.to_str().unwrap(),
        "--workers",
        "3",
    ]);
    assert_eq!(fs::read(s1).unwrap(), fs::read(s2).unwrap());
}

#[test]
fn store_parameter_mismatch() {
    let tmp = TempDir::new().unwrap();
    let store = extracted(&tmp, 2, 2, 0);
    let out = ldrp(&["evaluate", "--store", &store, "--m2", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--m2"));
    let out = ldrp(&["evaluate", "--store", &store, "--m2", "6"]);
    assert!(out.status.success());
}

#[test]
fn recognize_curves() {
    let tmp = TempDir::new().unwrap();
    let store = extracted(&tmp, 3, 2, 0);
    let prefix = tmp.path().join("rec");
    let out = ldrp(&[
        "recognize",
        "--store",
        &store,
        "--max-rank",
        "4",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cmc = fs::read_to_string(tmp.path().join("rec.cmc.csv")).unwrap();
    let lines: Vec<&str> = cmc.lines().collect();
    assert_eq!(lines[0], "rank,rate");
    assert_eq!(lines[1], "1,1");
    assert_eq!(lines.len(), 5);
    let roc = fs::read_to_string(tmp.path().join("rec.roc.csv")).unwrap();
    assert_eq!(roc.lines().next(), Some("fpr,tpr"));
    assert_eq!(roc.lines().last(), Some("1,1"));

    let json = ldrp(&["recognize", "--store", &store, "--format", "json"]);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["cmc"]["rates"].as_array().unwrap().len(), 10);
    assert!(value["roc"]["thresholds"].is_array());
}

#[test]
fn recognize_gallery_and_probe_lists() {
    let tmp = TempDir::new().unwrap();
    let store = extracted(&tmp, 3, 2, 10);
    let gallery = tmp.path().join("gallery.txt");
    let probe = tmp.path().join("probe.txt");
    fs::write(&gallery, "s1/1.pgm\ns2/1.pgm\n\ns3/1.pgm\n").unwrap();
    fs::copy(&gallery, &probe).unwrap();
    let args = [
        "recognize",
        "--store",
        &store,
        "--gallery-list",
        gallery.to_str().unwrap(),
        "--probe-list",
        probe.to_str().unwrap(),
    ];
    let out = ldrp(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "rank1_accuracy\n1\n");

    fs::write(&probe, "s1/2.pgm\ns9/1.pgm\n").unwrap();
    let out = ldrp(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("probe.txt:2:"), "{}", stderr(&out));
}

#[test]
fn compare_prints_two_sections() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("faces");
    corpus(&root, 4, 1, 0);
    let out = ldrp(&["compare", "--root", root.to_str().unwrap(), "--n", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let headers: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
    assert_eq!(headers.len(), 2);
    assert!(headers[0].starts_with("# ldrp dimension=1024"));
    assert!(headers[1].starts_with("# lbp dimension=256"));
    assert_eq!(
        text.lines().filter(|l| l.starts_with("1,1,")).count(),
        2,
        "{text}"
    );

    let out = ldrp(&[
        "compare",
        "--root",
        root.to_str().unwrap(),
        "--descriptor",
        "lbp",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
