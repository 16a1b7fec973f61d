use std::path::PathBuf;

use bvtp_core::{fixtures, load_problem, read_problem_spec};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn shipped_files_match_builtin_fixtures() {
    for (file, spec) in [("p0.toml", fixtures::p0()), ("p1.toml", fixtures::p1()), ("p2.toml", fixtures::p2())] {
        assert_eq!(read_problem_spec(fixture(file)).unwrap(), spec, "{file}");
        load_problem(fixture(file)).unwrap();
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let err = load_problem(fixture("does_not_exist.toml")).unwrap_err();
    assert!(err.is_input_error());
}
