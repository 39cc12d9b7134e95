//! End-to-end tests of the command-line front-end: exit codes, stderr
//! messages, and artifact determinism.

use std::path::Path;
use std::process::{Command, Output};

fn chemclip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemclip"))
        .args(args)
        .output()
        .expect("spawn chemclip")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no exit code")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_config(path: &Path, data_dir: &Path, out_dir: &Path) {
    let config = format!(
        r#"{{
  "data": {{
    "organic": "{data}/organic.csv",
    "inorganic": "{data}/inorganic.csv",
    "cell_map": "{data}/cell_lines.csv"
  }},
  "train": {{ "epochs": 2, "batch_size": 16 }},
  "classifier": {{ "epochs": 3, "batch_size": 32 }},
  "output": {{ "directory": "{out}" }}
}}
"#,
        data = data_dir.display(),
        out = out_dir.display()
    );
    std::fs::write(path, config).unwrap();
}

#[test]
fn help_lists_all_subcommands() {
    let out = chemclip(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "ingest",
        "split",
        "train",
        "embed",
        "import-embeddings",
        "eval-align",
        "train-clf",
        "eval-clf",
        "project",
        "synth",
        "fp",
    ] {
        assert!(text.contains(sub), "help is missing `{sub}`");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let out = chemclip(&["no-such-command"]);
    assert_eq!(exit_code(&out), 1);

    let out = chemclip(&["ingest"]); // missing --config
    assert_eq!(exit_code(&out), 1);

    let out = chemclip(&["project", "--config", "x.json", "--method", "umap", "--out", "f.svg"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn fp_prints_distinct_count_and_bits() {
    let out = chemclip(&["fp", "--smiles", "CCO"]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("n_distinct 6"));
    let bits: Vec<usize> = lines.map(|l| l.parse().unwrap()).collect();
    assert_eq!(bits.len(), 6);
    assert!(bits.windows(2).all(|w| w[0] < w[1]), "bits not sorted: {bits:?}");
    assert!(bits.iter().all(|&b| b < 2048));

    let out = chemclip(&["fp", "--smiles", "CC("]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("error"));
}

#[test]
fn data_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("run.json");

    // Config file that does not exist.
    let out = chemclip(&["ingest", "--config", config_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    // Config pointing at data files that do not exist.
    write_config(&config_path, &tmp.path().join("nowhere"), &tmp.path().join("run"));
    let out = chemclip(&["ingest", "--config", config_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    // Config with an unknown key.
    std::fs::write(
        &config_path,
        r#"{"data": {"organic": "o", "inorganic": "i", "cell_map": "m"},
            "output": {"directory": "out"}, "mystery": true}"#,
    )
    .unwrap();
    let out = chemclip(&["split", "--config", config_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("mystery"));
}

#[test]
fn pipeline_runs_end_to_end_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("corpus");
    let out_dir = tmp.path().join("run");
    let config_path = tmp.path().join("run.json");

    let out = chemclip(&[
        "synth",
        "--seed",
        "7",
        "--out",
        data_dir.to_str().unwrap(),
        "--n-organic",
        "24",
        "--n-inorganic",
        "12",
        "--cell-lines",
        "4",
        "--signal",
        "1.0",
        "--noise",
        "0.0",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    assert!(data_dir.join("organic.csv").exists());

    write_config(&config_path, &data_dir, &out_dir);
    let cfg = config_path.to_str().unwrap();

    // Ordering is enforced: train before ingest is a data error that
    // names the missing artifact.
    let out = chemclip(&["train", "--config", cfg]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("MissingInput"), "{}", stderr_text(&out));

    for stage in ["ingest", "split", "train", "embed", "eval-align", "train-clf", "eval-clf"] {
        let out = chemclip(&[stage, "--config", cfg]);
        assert_eq!(exit_code(&out), 0, "{stage}: {}", stderr_text(&out));
    }
    assert!(out_dir.join("records.csv").exists());
    assert!(out_dir.join("split.csv").exists());
    assert!(out_dir.join("best.cclp").exists());
    assert!(out_dir.join("embeddings.csv").exists());
    assert!(out_dir.join("alignment.json").exists());
    assert!(out_dir.join("classification.json").exists());
    assert!(out_dir.join("config.resolved.json").exists());

    // Re-running embed must reproduce the embeddings byte for byte.
    let first = std::fs::read(out_dir.join("embeddings.csv")).unwrap();
    let out = chemclip(&["embed", "--config", cfg]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(std::fs::read(out_dir.join("embeddings.csv")).unwrap(), first);

    // Projection renders both methods; repeated PCA renders identical bytes.
    let svg = out_dir.join("fig.svg");
    let coords = out_dir.join("coords.csv");
    let out = chemclip(&[
        "project", "--config", cfg,
        "--method", "pca",
        "--out", svg.to_str().unwrap(),
        "--coords", coords.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let first_svg = std::fs::read(&svg).unwrap();
    assert!(first_svg.starts_with(b"<svg "));
    let coord_text = std::fs::read_to_string(&coords).unwrap();
    assert!(coord_text.starts_with("record_id,x,y,domain,active\n"));
    assert_eq!(coord_text.lines().count(), 145);

    let out = chemclip(&[
        "project", "--config", cfg,
        "--method", "pca",
        "--out", svg.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(std::fs::read(&svg).unwrap(), first_svg);

    let tsne_svg = out_dir.join("fig_tsne.svg");
    let out = chemclip(&[
        "project", "--config", cfg,
        "--method", "tsne",
        "--perplexity", "8",
        "--iterations", "40",
        "--out", tsne_svg.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    assert!(tsne_svg.exists());
}

#[test]
fn import_embeddings_installs_external_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let config_path = tmp.path().join("run.json");
    write_config(&config_path, &tmp.path().join("unused"), &out_dir);

    let external = tmp.path().join("external.csv");
    std::fs::write(
        &external,
        "record_id,compound_id,cell_line,domain,active,e0,e1\n\
         r1,c1,A,organic,true,3,4\n\
         r2,c2,A,inorganic,false,1,0\n",
    )
    .unwrap();

    let out = chemclip(&[
        "import-embeddings",
        "--config",
        config_path.to_str().unwrap(),
        "--in",
        external.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let installed = std::fs::read_to_string(out_dir.join("embeddings.csv")).unwrap();
    assert!(installed.contains("0.6,0.8"), "rows were not renormalized: {installed}");

    // Alignment on imported embeddings without a split table falls back
    // to all records, but here every group needs at least one member.
    let report = std::fs::read_to_string(out_dir.join("import_report.json")).unwrap();
    assert!(report.contains("\"rows\": 2"));
}
