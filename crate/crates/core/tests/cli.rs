use std::io::Write;
use std::process::{Command, Output};

fn splitjet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitjet")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn split_json_contract() {
    let out = splitjet(&["split", "--field", "q", "--vars", "x,y", "--precision", "4", "--format", "json", "x^2 + x*y^2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for key in ["rank", "field", "precision", "quad", "residual", "change", "verified", "schema"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["residual"], "-1/4*y^4");
    assert_eq!(v["schema"], 1);
}

#[test]
fn quadform_text_report() {
    let out = splitjet(&["quadform", "--field", "fp:2", "--vars", "x1,x2,x3", "x1^2+x1*x2+x2^2+x3^2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("l: 1"));
    assert!(text.contains("d: (1)"));
    assert!(text.contains("solvable reduction: absent"));
}

#[test]
fn milnor_json() {
    let out = splitjet(&["milnor", "--field", "q", "--vars", "x,y", "--format", "json", "x^2+y^2"]);
    let v = json(&out);
    assert_eq!(v["mu"], 1);
    assert_eq!(v["bound"], 2);
    assert_eq!(v["max_degree_searched"], 12);
}

#[test]
fn exit_codes() {
    assert_eq!(splitjet(&["split", "--vars", "x", "x^2 + z"]).status.code(), Some(2));
    assert_eq!(splitjet(&["split", "--field", "fp:4", "--vars", "x", "x^2"]).status.code(), Some(2));
    assert_eq!(splitjet(&["split", "--vars", "x", "--precision", "1", "x^2"]).status.code(), Some(2));
    assert_eq!(splitjet(&["verify", "--vars", "x", "x^2", "x^3", "x"]).status.code(), Some(1));
    assert_eq!(splitjet(&["verify", "--vars", "x", "x^2", "x^2 + 2*x^3 + x^4", "x + x^2"]).status.code(), Some(0));
    let mismatch = splitjet(&["transport", "--vars", "x,y", "x^2 + y^3", "x^2 + 2*y^3", "x; y"]);
    assert_eq!(mismatch.status.code(), Some(1));
    assert_eq!(splitjet(&["milnor", "--vars", "x,y", "--max-degree", "5", "x^2"]).status.code(), Some(1));
}

#[test]
fn reads_inputs_from_files() {
    let dir = std::env::temp_dir().join(format!("splitjet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f.txt");
    std::fs::File::create(&path).unwrap().write_all(b"x1*x2\n  + x1*x3^2\n").unwrap();
    let arg = format!("@{}", path.display());
    let out = splitjet(&["split", "--field", "fp:2", "--vars", "x1,x2,x3", "--precision", "4", "--format", "json", &arg]);
    assert_eq!(json(&out)["rank"], 2);
    assert_eq!(json(&out)["residual"], "0");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn ift_and_norm() {
    let out = splitjet(&["ift", "--vars", "x,y", "--split-vars", "y", "--precision", "5", "--format", "json", "y - x - y^2"]);
    assert_eq!(json(&out)["solution"]["y"], "x + x^2 + 2*x^3 + 5*x^4 + 14*x^5");
    let out = splitjet(&["norm", "--vars", "x", "--valuation", "padic:2", "--format", "json", "12*x"]);
    assert_eq!(json(&out)["norm"], "1/4");
}
