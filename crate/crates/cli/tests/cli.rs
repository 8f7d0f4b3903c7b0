use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;
use trisub::postprocess::Status;
use trisub_cli::archive::{FamiliesFile, ResultArchive, SearchStatus};
use trisub_cli::commands::{self, Exit, Overrides, RenderArgs, Seed};
use trisub_cli::config::CampaignConfig;
use trisub_cli::report::Analysis;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trisub"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn search(dir: &Path, cfg: &str) -> PathBuf {
    let c = CampaignConfig::parse(cfg).unwrap();
    let out = dir.join("results.json");
    assert_eq!(
        commands::search(&c, &out, false, &mut Vec::new()).unwrap(),
        Exit::Ok
    );
    out
}

fn post(dir: &Path, archive: &Path) -> FamiliesFile {
    let out = dir.join("families.json");
    commands::post(archive, &out, &mut Vec::new()).unwrap();
    FamiliesFile::parse(&std::fs::read_to_string(out).unwrap()).unwrap()
}

#[test]
fn archive_round_trip_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    let path = search(dir.path(), "n = 5\nlambda = 1 1\nworkers = 2\n");
    let text = std::fs::read_to_string(&path).unwrap();
    let a = ResultArchive::parse(&text).unwrap();
    assert_eq!(a.emit(), text);
    assert_eq!(a.status, SearchStatus::Complete);
    assert_eq!(
        a.prototiles.iter().map(|p| p.results.len()).sum::<usize>(),
        2016
    );
    let again = ResultArchive::parse(&a.emit()).unwrap();
    assert_eq!(again, a);
}

#[test]
fn corrupted_archives_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = search(dir.path(), "n = 5\nlambda = 0 1\n");
    let text = std::fs::read_to_string(&path).unwrap();
    let v2 = text.replacen("\"schema\": 1", "\"schema\": 2", 1);
    assert!(ResultArchive::parse(&v2).is_err());
    assert!(ResultArchive::parse(&text[..text.len() / 2]).is_err());
    let broken = write(dir.path(), "broken.json", &v2);
    assert!(commands::post(&broken, &dir.path().join("f.json"), &mut Vec::new()).is_err());
}

#[test]
fn sevenfold_post_finds_two_classes() {
    let dir = TempDir::new().unwrap();
    let path = search(dir.path(), "n = 7\nlambda = 1 1 0\nworkers = 4\n");
    let f = post(dir.path(), &path);
    assert_eq!(f.post.orientation_classes.len(), 2);
    assert_eq!(
        f.post
            .orientation_classes
            .iter()
            .filter(|c| c.standard)
            .count(),
        1
    );
    assert_eq!(f.post.graph.len(), f.post.results.len());
    let emitted = f.emit();
    assert_eq!(FamiliesFile::parse(&emitted).unwrap().emit(), emitted);
}

#[test]
fn lone_prototile_archive_gives_only_partial_results() {
    let dir = TempDir::new().unwrap();
    let path = search(dir.path(), "n = 7\nlambda = 1 1 0\n");
    let mut a = ResultArchive::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for p in &mut a.prototiles[1..] {
        p.results.clear();
    }
    let lone = write(dir.path(), "lone.json", &a.emit());
    let f = post(dir.path(), &lone);
    assert!(f.post.families.is_empty());
    assert!(f.post.results.iter().all(|r| r.status != Status::Complete));
    assert!(f.post.results.iter().any(|r| r.status == Status::Partial));
}

fn diag(n: u32, k: f64) -> f64 {
    (k * PI / f64::from(n)).sin() / (PI / f64::from(n)).sin()
}

#[test]
fn analysis_matches_float_oracle() {
    for (n, lambda) in [
        (5u32, vec![1u32, 1]),
        (7, vec![1, 1, 0]),
        (7, vec![0, 1, 1]),
        (11, vec![1, 0, 1, 0, 0]),
    ] {
        let c = CampaignConfig {
            lambda: lambda.clone(),
            ..CampaignConfig::parse(&format!("n = {n}\nlambda = {}", "1 ".repeat(lambda.len())))
                .unwrap()
        };
        let a = Analysis::new(&c.problem().unwrap()).unwrap();
        for (k, _, v) in &a.lengths {
            assert!((v - diag(n, *k as f64)).abs() < 1e-9);
        }
        let lam: f64 = lambda
            .iter()
            .enumerate()
            .map(|(i, &c)| f64::from(c) * diag(n, (i + 1) as f64))
            .sum();
        assert!((a.lambda_value - lam).abs() < 1e-9);
        // Area of T(k1,k2,k3) relative to T(1,1,n-2), from two sides and the included angle.
        let area = |k: [u32; 3]| {
            diag(n, f64::from(k[0]))
                * diag(n, f64::from(k[1]))
                * (f64::from(k[2]) * PI / f64::from(n)).sin()
        };
        let unit = area([1, 1, n - 2]);
        for (t, (_, _, v)) in c.prototiles.iter().zip(&a.areas) {
            assert!((v - area(*t) / unit).abs() < 1e-9, "{t:?}");
        }
        for (j, v) in a.class.conjugates.iter().enumerate() {
            let th = (2 * j + 1) as f64 * PI / f64::from(n);
            let want: f64 = lambda
                .iter()
                .enumerate()
                .map(|(i, &c)| f64::from(c) * ((i + 1) as f64 * th).sin() / th.sin())
                .sum();
            assert!((v - want).abs() < 1e-9);
        }
    }
}

#[test]
fn analyze_reports_sevenfold_classification() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "a.cfg", "n = 7\nlambda = 1 1 0\n");
    let out = bin()
        .args(["analyze", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("M = [[3,3,5],[1,4,3],[2,1,3]]"), "{text}");
    assert!(text.contains("lambda is not PV, unit"));
    assert!(text.contains("verdict: admissible"));
    let cfg = write(dir.path(), "b.cfg", "n = 7\nlambda = 0 1 1\n");
    let text = String::from_utf8(
        bin()
            .args(["analyze", "--config"])
            .arg(&cfg)
            .output()
            .unwrap()
            .stdout,
    )
    .unwrap();
    assert!(text.contains("lambda is PV, unit"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| {
        bin()
            .current_dir(d)
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
    };
    write(d, "nine.cfg", "n = 9\nlambda = 1 1 1 1\n");
    write(
        d,
        "narrow.cfg",
        "n = 7\nlambda = 0 1 0\nprototiles = 1 1 5, 1 2 4, 1 3 3\n",
    );
    write(d, "five.cfg", "n = 5\nlambda = 1 1\n");
    assert_eq!(code(&["analyze", "--config", "nine.cfg"]), Some(1));
    assert_eq!(code(&["analyze", "--config", "missing.cfg"]), Some(1));
    assert_eq!(code(&["analyze", "--config", "narrow.cfg"]), Some(2));
    assert_eq!(
        code(&["search", "--config", "narrow.cfg", "--out", "n.json"]),
        Some(2)
    );
    assert!(!d.join("n.json").exists());
    assert_eq!(
        code(&[
            "search",
            "--config",
            "narrow.cfg",
            "--out",
            "n.json",
            "--force"
        ]),
        Some(0)
    );
    let empty = ResultArchive::parse(&std::fs::read_to_string(d.join("n.json")).unwrap()).unwrap();
    assert_eq!(empty.status, SearchStatus::NoResults);
    assert!(empty.prototiles.iter().all(|p| p.results.is_empty()));
    assert_eq!(
        code(&[
            "search",
            "--config",
            "five.cfg",
            "--out",
            "t.json",
            "--max-results",
            "3"
        ]),
        Some(3)
    );
    let t = ResultArchive::parse(&std::fs::read_to_string(d.join("t.json")).unwrap()).unwrap();
    assert_eq!(t.status, SearchStatus::Truncated);
    assert_eq!(
        code(&[
            "search",
            "--config",
            "five.cfg",
            "--out",
            "s.json",
            "--starter-side",
            "3"
        ]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "search",
            "--config",
            "five.cfg",
            "--out",
            "s.json",
            "--workers",
            "0"
        ]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "search",
            "--config",
            "five.cfg",
            "--out",
            "s.json",
            "--no-orientation",
            "--workers",
            "2"
        ]),
        Some(0)
    );
    assert_eq!(code(&["post", "s.json"]), Some(0));
    assert!(d.join("s.families.json").exists());
    assert_eq!(code(&["render", "s.families.json", "--k", "30"]), Some(1));
    assert_eq!(code(&["render", "s.json", "--k", "1"]), Some(1));
}

#[test]
fn overrides_replace_config_values() {
    let mut c = CampaignConfig::parse("n = 5\nlambda = 1 1\n").unwrap();
    let o = Overrides {
        workers: Some(3),
        kill_threshold: Some(9),
        max_results: Some(4),
        max_nodes: Some(100),
        starter_side: Some(1),
        no_orientation: true,
    };
    o.apply(&mut c).unwrap();
    assert_eq!(
        (
            c.workers,
            c.kill_threshold,
            c.max_results,
            c.max_nodes,
            c.starter_side,
            c.orientation
        ),
        (3, Some(9), Some(4), Some(100), 1, false)
    );
    assert!(Overrides {
        workers: Some(0),
        ..Overrides::default()
    }
    .apply(&mut c)
    .is_err());
}

fn svg_counts(path: &Path) -> (usize, usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let count = |name: &str| doc.descendants().filter(|n| n.has_tag_name(name)).count();
    (count("polygon"), count("line"))
}

#[test]
fn render_outputs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let archive = search(d, "n = 7\nlambda = 1 1 0\n");
    let families = d.join("families.json");
    commands::post(&archive, &families, &mut Vec::new()).unwrap();

    let one = d.join("one.svg");
    let args = RenderArgs {
        k: Some(0),
        seed: Some(Seed::Prototile(2)),
        family: None,
    };
    commands::render(&families, &one, &args, &mut Vec::new()).unwrap();
    assert_eq!(svg_counts(&one), (1, 3));

    let two = d.join("two.svg");
    let args = RenderArgs {
        k: Some(2),
        seed: Some(Seed::Star),
        family: Some(0),
    };
    commands::render(&families, &two, &args, &mut Vec::new()).unwrap();
    let (tiles, arrows) = svg_counts(&two);
    // 14 copies of T(1,2,4); column 0 of M^2 is (22, 13, 13).
    assert_eq!(tiles, 14 * 48);
    assert_eq!(arrows, 3 * tiles);
    let again = d.join("again.svg");
    commands::render(&families, &again, &args, &mut Vec::new()).unwrap();
    assert_eq!(std::fs::read(&two).unwrap(), std::fs::read(&again).unwrap());

    let fam = d.join("fam.svg");
    commands::render(&families, &fam, &RenderArgs::default(), &mut Vec::new()).unwrap();
    assert_eq!(svg_counts(&fam).0, 6 + 8 + 11);

    let all = d.join("all.svg");
    commands::render(&archive, &all, &RenderArgs::default(), &mut Vec::new()).unwrap();
    assert!(svg_counts(&all).0 > 1000);

    let args = RenderArgs {
        k: Some(1),
        seed: None,
        family: Some(99),
    };
    assert!(commands::render(&families, &d.join("x.svg"), &args, &mut Vec::new()).is_err());
}
