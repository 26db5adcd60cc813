use std::time::Instant;

use priceopt::gen::{generate, GenConfig};
use priceopt::io::{read_instance, write_instance};
use priceopt::model;

#[test]
fn validation_handles_ten_thousand_products() {
    let mut cfg = GenConfig::new(10_000, 3);
    cfg.allow_mixed_signs = true;
    let inst = generate(&cfg).unwrap();
    let start = Instant::now();
    let v = model::validate(&inst);
    assert!(v.a1_positive_definite && v.pd_exact);
    assert!(v.a4_positive_delta && v.bounds_consistent);
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn large_instance_file_round_trip() {
    let inst = generate(&GenConfig::new(100_000, 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    let start = Instant::now();
    write_instance(&inst, &path).unwrap();
    let back = read_instance(&path).unwrap();
    let took = start.elapsed();
    assert_eq!(back.d(), inst.d());
    assert_eq!(back.a(), inst.a());
    assert_eq!(back.c(), inst.c());
    assert_eq!(back.p0(), inst.p0());
    assert_eq!(back.delta(), inst.delta());
    assert!(took.as_secs() < 10, "round trip took {took:?}");
}
