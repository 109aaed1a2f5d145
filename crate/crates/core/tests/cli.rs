use std::path::Path;
use std::process::{Command, Output};

use ilerec::experiment::read_metrics_csv;
use tempfile::TempDir;

fn ilerec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilerec"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synth_ingest_train_recommend_evaluate() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(ilerec(
        d,
        &[
            "synth",
            "--users",
            "60",
            "--items",
            "40",
            "--interactions",
            "900",
            "-o",
            "data.tsv",
        ],
    ));
    let summary = ok(ilerec(
        d,
        &["ingest", "data.tsv", "--format", "pairs", "--groups", "groups.csv"],
    ));
    assert!(summary.contains("interactions  900"), "{summary}");
    assert!(summary.contains("group H       8 items"), "{summary}");
    assert_eq!(
        std::fs::read_to_string(d.join("groups.csv")).unwrap().lines().count(),
        41
    );

    std::fs::write(
        d.join("exp.cfg"),
        "# desk run\ndataset = data.tsv\nformat = pairs\npreset = desk\nepochs = 5\n",
    )
    .unwrap();
    let common = ["--config", "exp.cfg", "--out-dir", "out"];
    ok(ilerec(d, &[&["train"], &common[..]].concat()));
    let ckpt = "out/bpr_-_seed0_split0.ckpt";
    assert!(d.join(ckpt).exists());
    ok(ilerec(
        d,
        &[
            &["recommend"],
            &common[..],
            &[
                "--method",
                "cp",
                "--lambda",
                "0.5",
                "--checkpoint",
                ckpt,
                "-o",
                "recs.csv",
            ],
        ]
        .concat(),
    ));
    let table = ok(ilerec(
        d,
        &[
            &["evaluate"],
            &common[..],
            &[
                "--method",
                "cp",
                "--lambda",
                "0.5",
                "--recommendations",
                "recs.csv",
                "-o",
                "m.csv",
            ],
        ]
        .concat(),
    ));
    assert!(
        table.starts_with("method,params,ndcg,upd,ad,ee\nCP,lambda=0.5;N=100,"),
        "{table}"
    );
    assert_eq!(read_metrics_csv(d.join("m.csv")).unwrap()[0].method, "CP");
}

#[test]
fn run_and_sweep_with_overrides() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let row = ok(ilerec(
        d,
        &[
            "run",
            "--preset",
            "desk",
            "--epochs",
            "3",
            "--method",
            "ile",
            "--set",
            "lambda=0.25",
            "--set",
            "distance=MAD",
        ],
    ));
    assert!(row.contains("ILE,lambda=0.25;D=MAD,"), "{row}");
    assert!(d.join("runs/ile_lambda-0.25_D-MAD_seed0_split0.timing.csv").exists());

    let path = ok(ilerec(
        d,
        &[
            "sweep",
            "--preset",
            "desk",
            "--epochs",
            "3",
            "--method",
            "ile",
            "--lambdas",
            "0,0.1,0.2",
        ],
    ));
    let csv = std::fs::read_to_string(d.join(path.trim())).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = ilerec(d, &["run", "--method", "cp", "--lambda", "1.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("CP lambda must be <= 1"));

    let out = ilerec(d, &["run", "--set", "bogus=1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `bogus`"));

    std::fs::write(d.join("broken.txt"), "u1 i1 5\nu2\n").unwrap();
    let out = ilerec(d, &["ingest", "broken.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.txt:2"));
}
