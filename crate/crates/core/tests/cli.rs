use std::path::Path;
use std::process::Command;

use chemlm::formats::{self, FileDocument};
use chemlm::metrics::{crystal_structural_validity, molecule_validity, ValenceTable};
use chemlm::structure::Structure;

fn chemlm(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_chemlm"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CHEMLM_OUT")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let (code, text) = chemlm(args, cwd);
    assert_eq!(code, 0, "{args:?}: {text}");
    text
}

fn parse_dir(dir: &Path, ext: &str) -> Vec<Structure> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| formats::parse(&FileDocument::read(p).unwrap()).unwrap())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn synth_perovskites_have_five_valid_sites() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", "--kind", "perovskite", "--n", "10", "--seed", "3", "--out", "p"], tmp.path());
    let crystals = parse_dir(&tmp.path().join("p"), "cif");
    assert_eq!(crystals.len(), 10);
    for s in &crystals {
        let c = s.as_crystal().unwrap();
        assert_eq!(c.sites.len(), 5);
        assert!(crystal_structural_validity(c).unwrap().valid);
    }
}

#[test]
fn synth_molecules_pass_validity_after_writing() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", "--kind", "molecule", "--n", "300", "--seed", "4", "--out", "m"], tmp.path());
    let mols = parse_dir(&tmp.path().join("m"), "xyz");
    let valid = mols
        .iter()
        .filter(|s| molecule_validity(s.as_molecule().unwrap(), ValenceTable::standard()).unwrap().valid)
        .count();
    assert!(valid as f64 >= 0.99 * mols.len() as f64, "{valid} of {}", mols.len());
}

#[test]
fn synth_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&["synth", "--kind", "pocket", "--n", "5", "--seed", "9", "--out", out], tmp.path());
    }
    for f in ["pocket_00000.pdb", "pocket_00004.pdb", "manifest.json"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(f)).unwrap(),
            std::fs::read(tmp.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn usage_and_input_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(chemlm(&["frobnicate"], dir).0, 1);
    assert_eq!(chemlm(&["synth", "--n", "3", "--out", "s"], dir).0, 1);
    assert_eq!(chemlm(&["synth", "--kind", "molecule", "--n", "0", "--out", "s"], dir).0, 1);
    assert_eq!(chemlm(&["prepare", "--input", "missing", "--out", "x"], dir).0, 1);
    assert_eq!(manifest(&dir.join("x"))["status"], "error");
    assert_eq!(chemlm(&["--help"], dir).0, 0);

    std::fs::create_dir(dir.join("mixed")).unwrap();
    std::fs::write(dir.join("mixed/a.xyz"), "1\n\nC 0 0 0\n").unwrap();
    std::fs::write(dir.join("mixed/b.cif"), "data_x\n").unwrap();
    let (code, text) = chemlm(&["prepare", "--input", "mixed", "--out", "y"], dir);
    assert_eq!(code, 1);
    assert!(text.contains("mixes formats"), "{text}");

    std::fs::create_dir(dir.join("junk")).unwrap();
    std::fs::write(dir.join("junk/a.xyz"), "nonsense\n").unwrap();
    assert_eq!(chemlm(&["prepare", "--input", "junk", "--out", "z"], dir).0, 1);
    assert!(std::fs::read_to_string(dir.join("z/failures.csv")).unwrap().contains("a.xyz"));

    let (code, _) = chemlm(&["train", "--corpus", "nowhere", "--out", "t"], dir);
    assert_eq!(code, 1);
}

#[test]
fn corrupt_files_are_listed_and_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["synth", "--kind", "molecule", "--n", "6", "--out", "m"], dir);
    std::fs::write(dir.join("m/zz_broken.xyz"), "3\n\nC 0 0\n").unwrap();
    ok(&["prepare", "--input", "m", "--out", "c"], dir);
    let m = manifest(&dir.join("c"));
    assert_eq!(m["n_structures"], 6);
    assert_eq!(m["n_failures"], 1);
    let failures = std::fs::read_to_string(dir.join("c/failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 2);
    assert!(failures.contains("zz_broken.xyz"));
    let sequences = std::fs::read_to_string(dir.join("c/sequences.txt")).unwrap();
    assert_eq!(sequences.lines().count(), 6);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("run.conf"), "# synth settings\nkind = molecule\nn = 4\nseed = 1\n").unwrap();
    ok(&["synth", "--config", "run.conf", "--out", "a"], dir);
    ok(&["synth", "--config", "run.conf", "--n", "2", "--out", "b"], dir);
    assert_eq!(manifest(&dir.join("a"))["n_files"], 4);
    assert_eq!(manifest(&dir.join("b"))["n_files"], 2);
    std::fs::write(dir.join("bad.conf"), "kindd = molecule\n").unwrap();
    assert_eq!(chemlm(&["synth", "--config", "bad.conf", "--out", "c"], dir).0, 1);
}

#[test]
fn output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_chemlm"))
        .args(["synth", "--kind", "perovskite", "--n", "1"])
        .current_dir(tmp.path())
        .env("CHEMLM_OUT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("root/synth/perovskite_00000.cif").is_file());
}

#[test]
fn pockets_are_pruned_toward_the_target_window() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        &["synth", "--kind", "pocket", "--n", "6", "--seed", "2", "--set", "min_residues=40", "--set", "max_residues=50", "--out", "p"],
        dir,
    );
    ok(&["prepare", "--input", "p", "--set", "prune_min=150", "--set", "prune_max=200", "--out", "c"], dir);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("c/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["prune"]["in_range"].as_u64().unwrap() + stats["prune"]["overshot"].as_u64().unwrap(), 6);
    let bundle = chemlm::pipeline::CorpusBundle::load(&dir.join("c")).unwrap();
    for s in &bundle.structures {
        assert!(s.atom_count() <= 200);
    }
    assert!(bundle.structures.iter().filter(|s| s.atom_count() >= 150).count() >= 4);
}

#[test]
fn report_rejects_unknown_schema_and_renders_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["synth", "--kind", "perovskite", "--n", "40", "--out", "p"], dir);
    ok(&["prepare", "--input", "p", "--precision", "3", "--out", "c"], dir);
    // the training set scored against itself
    ok(&["evaluate", "--input", "p", "--train", "c", "--out", "e"], dir);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("e/report.json")).unwrap()).unwrap();
    assert_eq!(report["valid_pct"], report["train_valid_pct"]);
    assert!(report["emd"]["density"].as_f64().is_some());
    assert!(report["emd"]["n_elem"].as_f64().is_some());
    assert!(report["train_half_emd"]["density"].as_f64().unwrap() > 0.0);
    assert!(report["qed"].is_null());

    let table = ok(&["report", "--input", "e,e/report.json", "--names", "first,second", "--out", "r"], dir);
    let header = table.lines().next().unwrap();
    assert!(header.contains("first") && header.contains("second"), "{table}");
    assert!(table.lines().any(|l| l.starts_with("SA") && l.matches('—').count() == 2));
    assert!(std::fs::read_to_string(dir.join("r/histograms.csv")).unwrap().contains("density"));

    let mut bad = report.clone();
    bad["schema_version"] = serde_json::json!(99);
    std::fs::write(dir.join("bad.json"), bad.to_string()).unwrap();
    let (code, text) = chemlm(&["report", "--input", "bad.json", "--out", "r2"], dir);
    assert_eq!(code, 1);
    assert!(text.contains("schema version"), "{text}");
}

fn run_pipeline(dir: &Path) {
    ok(&["synth", "--kind", "molecule", "--n", "24", "--seed", "5", "--out", "s"], dir);
    ok(&["prepare", "--input", "s", "--precision", "1", "--out", "c"], dir);
    ok(
        &["train", "--corpus", "c", "--steps", "15", "--batch-size", "4", "--set", "augment=on", "--set", "d_model=32", "--set", "d_ff=64", "--seed", "2", "--out", "t"],
        dir,
    );
    ok(&["sample", "--checkpoint", "t/model.ckpt", "--samples", "16", "--seed", "3", "--out", "g"], dir);
    ok(&["evaluate", "--input", "g", "--train", "c", "--out", "e"], dir);
    ok(&["report", "--input", "e", "--out", "r"], dir);
}

#[test]
fn pipeline_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(a.path());
    run_pipeline(b.path());
    let files = [
        "s/manifest.json",
        "c/manifest.json",
        "c/structures.json",
        "t/manifest.json",
        "t/model.ckpt",
        "t/loss.csv",
        "g/manifest.json",
        "g/samples.txt",
        "e/manifest.json",
        "e/report.json",
        "r/manifest.json",
        "r/table.txt",
    ];
    for f in files {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let sample = manifest(&a.path().join("g"));
    assert!(sample["truncation_rate"].as_f64().is_some());
}

#[test]
fn prepared_pockets_decode_to_stored_structures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir(dir.join("p")).unwrap();
    std::fs::copy(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/gly_ala.pdb"),
        dir.join("p/a.pdb"),
    )
    .unwrap();
    std::fs::write(
        dir.join("p/b.pdb"),
        "ATOM 1 N GLY 10 0.0 0.0 0.0\nATOM 2 C GLY 10 1.4 0.0 0.0\nATOM 3 C GLY 10 2.1 1.2 0.0\n\
         ATOM 4 O GLY 10 1.5 2.3 0.0\nATOM 5 N GLY 12 3.4 1.1 0.0\nATOM 6 C GLY 12 4.2 2.3 0.0\n\
         ATOM 7 C GLY 12 5.6 1.9 0.0\nATOM 8 O GLY 12 6.0 0.7 0.0\nEND\n",
    )
    .unwrap();
    ok(&["prepare", "--input", "p", "--precision", "2", "--set", "prune=false", "--out", "c"], dir);
    let bundle = chemlm::pipeline::CorpusBundle::load(&dir.join("c")).unwrap();
    let vocab = chemlm::tokenizer::Vocabulary::load(&dir.join("c/vocab.txt")).unwrap();
    let lines = std::fs::read_to_string(dir.join("c/sequences.txt")).unwrap();
    for (line, s) in lines.lines().zip(&bundle.structures) {
        let ids: Vec<u32> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(&chemlm::tokenizer::decode(&ids, &vocab).unwrap(), s);
    }
    let b = bundle.structures[1].as_pocket().unwrap();
    assert_eq!(b.atoms[4].label.residue_index, 2);
}
