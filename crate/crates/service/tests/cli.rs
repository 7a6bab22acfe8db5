use std::io::Cursor;

use clap::Parser;

use repolicy_service::cli::{run, Cli};

fn run_cli(args: &[&str], input: &str) -> Result<String, String> {
    let cli = Cli::try_parse_from(std::iter::once("repolicy").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    run(cli, &mut Cursor::new(input.as_bytes().to_vec()), &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

#[test]
fn decide_prints_condition_sets() {
    let dir = tempfile::tempdir().unwrap();
    let facts = dir.path().join("consent.facts");
    std::fs::write(
        &facts,
        "@dataset ds1\nferpa_datasetInScope(ds1).\nferpa_identifiable(ds1).\nferpa_allConsented(ds1).\n",
    )
    .unwrap();
    let out = run_cli(&["decide", "release", "--facts", facts.to_str().unwrap()], "").unwrap();
    assert!(out.contains("PERMITTED, CS={general_license_IRBApproval, general_license_minimumPersonnel}"), "{out}");

    std::fs::write(&facts, "@dataset ds1\nferpa_datasetInScope(ds1).\nferpa_identifiable(ds1).\n").unwrap();
    let out = run_cli(&["decide", "release", "--facts", facts.to_str().unwrap()], "").unwrap();
    assert!(out.trim_end().ends_with("DENIED"), "{out}");
}

#[test]
fn terminal_interview_then_license_render() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("repolicy.toml");
    std::fs::write(&config, format!("data_dir = {:?}\n", dir.path().join("data"))).unwrap();
    let config = config.to_str().unwrap();
    // scope, identifiable, consent, studies, then the five study values.
    let answers = "yes\nyes\nno\nyes\nliteracy research\n2020-01-01\n2021-01-01\nreading\nscores\nyes\n";
    let out = run_cli(&["--config", config, "interview", "--terminal", "--user", "researcher"], answers).unwrap();
    assert!(out.contains("PERMIT"), "{out}");
    assert!(out.contains("literacy research"), "{out}");
    let session = out.lines().next().unwrap().strip_prefix("session ").unwrap().to_string();

    let rendered = run_cli(&["--config", config, "license", "render", "--session", &session], "").unwrap();
    assert!(rendered.contains("literacy research"));
    let replay = run_cli(&["--config", config, "replay"], "").unwrap();
    assert!(replay.contains("1 decision(s) replayed, 0 differ"), "{replay}");
}

#[test]
fn domain_check_and_audit() {
    let out = run_cli(&["domain", "check", "ferpa"], "").unwrap();
    assert!(out.ends_with("ok\n"));
    let out = run_cli(&["audit", "contradictions", "--bound", "2"], "").unwrap();
    assert!(out.starts_with("0 contradiction(s)"), "{out}");
    assert!(run_cli(&["domain", "check", "no-such-domain"], "").is_err());
}
