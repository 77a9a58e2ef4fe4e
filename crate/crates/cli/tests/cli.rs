mod common;

use std::collections::HashMap;
use std::fs;

use common::*;
use pivotforge::align::read_bitext;
use serde_json::Value;

#[test]
fn enumerate_counts_new_pairs() {
    let o = pivotforge(&["pivot", "enumerate", "--existing", "21", "--new", "7"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "147\n");

    let o = pivotforge(&["pivot", "enumerate", "--existing", "en,fi", "--new", "uk", "--list"]);
    assert_eq!(stdout(&o), "2\nen\tuk\nfi\tuk\n");

    let o = pivotforge(&["pivot", "enumerate", "--existing", "en,fi", "--new", "fi"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = pivotforge(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn stats_exit_codes() {
    let o = pivotforge(&["stats", "--counts", "2167164,2160061,2138713"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_aligned"], 2138713);

    assert_eq!(pivotforge(&["stats", "--counts", "100,120,90"]).status.code(), Some(3));
    assert_eq!(pivotforge(&["stats", "--counts", "1,2"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("stats.json");
    fs::write(&bad, "{\"n_after_segmentation\": 1").unwrap();
    assert_eq!(pivotforge(&["stats", p(&bad)]).status.code(), Some(2));
}

#[test]
fn batch_build_writes_one_request_per_paragraph() {
    let dir = tempfile::tempdir().unwrap();
    let req = dir.path().join("req.jsonl");
    let man = dir.path().join("manifest.tsv");
    let o = pivotforge(&[
        "batch-build",
        p(&fixture("source.en.txt")),
        "--target-name",
        "Ukrainian",
        "--script",
        "Cyrl",
        "-o",
        p(&req),
        "--manifest",
        p(&man),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<Value> = fs::read_to_string(&req)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0]["custom_id"], "1/1");
    assert_eq!(lines[6]["custom_id"], "3/2");
    let prompt = lines[1]["body"]["messages"][0]["content"].as_str().unwrap();
    assert!(prompt.contains("Ukrainian") && prompt.contains("Cyrl"));
    assert!(prompt.ends_with("Dr. Jones has asked for a minute of silence. The House rose and observed a minute of silence."));
}

#[test]
fn ingest_reports_refusals_and_removes_refusal_lines() {
    let dir = tempfile::tempdir().unwrap();
    let man = dir.path().join("manifest.tsv");
    let out = dir.path().join("uk.jsonl");
    let report = dir.path().join("report.json");
    pivotforge(&[
        "batch-build",
        p(&fixture("source.en.txt")),
        "--target-name",
        "Ukrainian",
        "--script",
        "Cyrl",
        "-o",
        p(&dir.path().join("req.jsonl")),
        "--manifest",
        p(&man),
    ]);
    let o = pivotforge(&[
        "batch-ingest",
        "--source",
        p(&fixture("source.en.txt")),
        "--manifest",
        p(&man),
        "--responses",
        p(&fixture("responses.uk.jsonl")),
        "--target-lang",
        "uk",
        "-o",
        p(&out),
        "--report",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["requested"], 7);
    assert_eq!(r["translated"], 6);
    assert_eq!(r["refused"], serde_json::json!(["3/2"]));
    assert_eq!(r["refusal_lines_removed"], 1);
    assert!(!fs::read_to_string(&out).unwrap().contains("2023"));
}

#[test]
fn pipeline_run_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline_workspace(dir.path());
    let o = pivotforge(&["run", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_after_segmentation"], 15);
    assert_eq!(v["n_after_langid"], 14);
    assert_eq!(v["n_aligned"], 13);
    let out = dir.path().join("out");
    for name in pivotforge_cli::pipeline::OUTPUT_FILES {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert!(fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".partial")));
    let dropped = fs::read_to_string(out.join("langid_dropped.tsv")).unwrap();
    assert!(dropped.contains("It is a balanced text."));
    let o = pivotforge(&["stats", p(&out.join("stats.json"))]);
    assert!(o.status.success());
}

#[test]
fn config_from_environment_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline_workspace(dir.path());
    let alt = dir.path().join("alt");
    let o = bin()
        .args(["run", "--output-dir", p(&alt)])
        .env("PIVOTFORGE_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(alt.join("bitext.tsv").is_file());
    assert!(!dir.path().join("out").exists());

    // Without the profiles flag the file's value applies; an explicit
    // missing path on the command line wins and fails as a usage error.
    let o = pivotforge(&["run", "--config", p(&cfg), "--langid-profiles", "/nonexistent/profiles.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("profiles"));
}

#[test]
fn config_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline_workspace(dir.path());
    let text = fs::read_to_string(&cfg).unwrap() + "target_lnag = \"uk\"\n";
    fs::write(&cfg, text).unwrap();
    let o = pivotforge(&["run", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_responses_give_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline_workspace(dir.path());
    fs::write(dir.path().join("responses.uk.jsonl"), "").unwrap();
    let o = pivotforge(&["run", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_after_segmentation"], 0);
    assert_eq!(v["n_after_langid"], 0);
    assert_eq!(v["n_aligned"], 0);
}

#[test]
fn malformed_response_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline_workspace(dir.path());
    fs::write(dir.path().join("responses.uk.jsonl"), "{\"custom_id\": \"1/1\"\n").unwrap();
    let o = pivotforge(&["run", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out/stats.json").exists());
}

fn tagged(dir: &std::path::Path, name: &str, lang: &str, body: &str) -> std::path::PathBuf {
    let txt = dir.join(format!("{name}.txt"));
    let jsonl = dir.join(format!("{name}.jsonl"));
    fs::write(&txt, body).unwrap();
    let o = pivotforge(&["parse", p(&txt), "--lang", lang, "--segment", "-o", p(&jsonl)]);
    assert!(o.status.success(), "{}", stderr(&o));
    jsonl
}

#[test]
fn pivot_project_matches_join_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let en = tagged(d, "en", "en", "<CHAPTER ID=5>\nOne is here. Two is there. Three is gone. Four stays.\n");
    let fi = tagged(d, "fi", "fi", "<CHAPTER ID=5>\nYksi on tässä. Kaksi on tuolla. Kolme on poissa. Neljä jää.\n");
    let uk = tagged(d, "uk", "uk", "<CHAPTER ID=5>\nОдин тут. Два там. Ще там. Три зник. Чотири лишається.\n");
    let fi_align = d.join("fi.align");
    let uk_align = d.join("uk.align");
    fs::write(&fi_align, "5\t1\t1.1\t1.1\n5\t1\t1.2\t1.2\n5\t1\t1.3\t1.3\n5\t1\t1.4\t1.4\n").unwrap();
    fs::write(&uk_align, "5\t1\t1.1\t1.1\n5\t1\t1.2\t1.2,1.3\n5\t1\t1.3\t1.4\n5\t1\t1.4\t1.5\n").unwrap();
    let out = d.join("fi-uk.tsv");
    let o = pivotforge(&[
        "pivot", "project", "--pivot", p(&en), "--x-lang", "fi", "--x-align", p(&fi_align), "--x-corpus", p(&fi),
        "--y-lang", "uk", "--y-align", p(&uk_align), "--y-corpus", p(&uk), "-o", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got = read_bitext(fs::read_to_string(&out).unwrap().as_bytes()).unwrap();

    // With one side aligned one-to-one, every Y bead maps through the pivot
    // to the X sentences sharing its pivot IDs.
    let fi_of: HashMap<&str, &str> = [("1.1", "1.1"), ("1.2", "1.2"), ("1.3", "1.3"), ("1.4", "1.4")].into();
    let uk_beads = [(vec!["1.1"], vec!["1.1"]), (vec!["1.2"], vec!["1.2", "1.3"]), (vec!["1.3"], vec!["1.4"]), (vec!["1.4"], vec!["1.5"])];
    let expected: Vec<(Vec<&str>, Vec<&str>)> =
        uk_beads.iter().map(|(piv, y)| (piv.iter().map(|i| fi_of[i]).collect(), y.clone())).collect();
    assert_eq!(got.len(), expected.len());
    for (rec, (x, y)) in got.iter().zip(&expected) {
        assert_eq!(rec.doc_id, "5");
        assert_eq!(&rec.src_ids, x);
        assert_eq!(&rec.tgt_ids, y);
    }
    assert_eq!(got[1].src_text, "Kaksi on tuolla.");
    assert_eq!(got[1].tgt_text, "Два там. Ще там.");
}

#[test]
fn chrf_command_prints_signature() {
    let dir = tempfile::tempdir().unwrap();
    let hyp = dir.path().join("hyp.txt");
    let reference = dir.path().join("ref.txt");
    fs::write(&hyp, "abcd\n").unwrap();
    fs::write(&reference, "abce\n").unwrap();
    let o = pivotforge(&["chrf", "--hyp", p(&hyp), "--ref", p(&reference)]);
    assert!(o.status.success());
    let want = 100.0 * (0.75 + 2.0 / 3.0 + 0.5 + 0.0) / 4.0;
    assert_eq!(stdout(&o), format!("chrF2|nrefs:1|case:mixed|eff:yes|nc:6|nw:0|space:no = {want:.4}\n"));
}

#[test]
fn iaa_command() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.tsv");
    fs::write(&m, "item_id\ta\tb\n1\t10\t20\n2\t50\t60\n3\t90\t\n4\t70\t85\n").unwrap();
    let o = pivotforge(&["iaa", p(&m)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["annotators"], 2);
    assert_eq!(v["items"], 4);
    assert!(v["alpha"].as_f64().unwrap() > 0.8);
}

#[test]
fn subset_is_a_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline_workspace(dir.path());
    assert!(pivotforge(&["run", "--config", p(&cfg)]).status.success());
    let bitext = dir.path().join("out/bitext.tsv");
    let half = dir.path().join("half.tsv");
    let o = pivotforge(&["subset", p(&bitext), "--fraction", "0.5", "-o", p(&half)]);
    assert!(o.status.success());
    let all = fs::read_to_string(&bitext).unwrap();
    let part = fs::read_to_string(&half).unwrap();
    assert_eq!(part.lines().count(), 7);
    assert!(all.starts_with(&part));
    assert_eq!(pivotforge(&["subset", p(&bitext), "--fraction", "1.5"]).status.code(), Some(1));
}
