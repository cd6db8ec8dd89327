use delay_lyap::benchmarks::{generate_example, heat_exchanger};
use delay_lyap::io::{load_manifest, write_manifest};
use delay_lyap::{DelaySystem, Error};

#[test]
fn dense_manifest_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hx.toml");
    let s = heat_exchanger::<f64>();
    let written = write_manifest(&s, &path).unwrap();
    assert_eq!(written, vec![path.clone()]);
    let back: DelaySystem<f64> = load_manifest(&path).unwrap();
    assert_eq!(back, s);
}

#[test]
fn sparse_matrices_go_to_matrix_market_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pde.toml");
    let s = generate_example::<f64>("pde2", Some(300)).unwrap();
    let written = write_manifest(&s, &path).unwrap();
    assert_eq!(written.len(), 3);
    assert!(written[1].ends_with("pde.A0.mtx"));
    let back: DelaySystem<f64> = load_manifest(&path).unwrap();
    assert_eq!(back, s);
}

#[test]
fn missing_sidecar_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "n = 1\nm = 1\ndelays = [1]\nA0 = -1\nA1 = \"nope.mtx\"\nB = 1\nC = 1\n").unwrap();
    match load_manifest::<f64>(&path) {
        Err(Error::Parse(msg)) => assert!(msg.contains(":5:") && msg.contains("A1"), "{msg}"),
        other => panic!("{other:?}"),
    }
}
