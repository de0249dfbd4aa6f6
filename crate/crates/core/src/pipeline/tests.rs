use super::*;
use crate::synthfix::{generate, Distortion, FixtureSpec, HeaderStyle};

fn run_fixture(spec: &FixtureSpec, cfg: &PipelineConfig) -> (InvoiceExtraction, GroundTruth) {
    let (img, truth) = generate(spec).unwrap();
    let engine = MockEngine::new(truth.clone());
    let out = Pipeline::new(cfg.clone())
        .unwrap()
        .run_image(&img, "fixture.png", &engine, &StageDumper::disabled())
        .unwrap();
    (out, truth)
}

#[test]
fn clean_fixture_round_trips() {
    for style in HeaderStyle::ALL {
        let (out, truth) = run_fixture(&FixtureSpec::new(5, style, 4), &PipelineConfig::default());
        assert_eq!(out.header, truth.header_kv, "{style:?}\n{}", out.to_json().unwrap());
        assert_eq!(out.line_items, truth.line_items, "{style:?}");
        assert!(!out.diagnostics.degraded, "{style:?}: {:?}", out.diagnostics.degraded_stages);
    }
}

#[test]
fn distorted_fixture_round_trips() {
    let mut spec = FixtureSpec::new(9, HeaderStyle::Ruled, 4);
    spec.distortion = Distortion::bundle(9, spec.page_width, spec.page_height);
    let (out, truth) = run_fixture(&spec, &PipelineConfig::default());
    assert_eq!(out.diagnostics.geometry.warp, WarpOutcome::Applied);
    assert_eq!(out.header, truth.header_kv, "{}", out.to_json().unwrap());
    assert_eq!(out.line_items, truth.line_items);
    let kinds: Vec<_> = out.diagnostics.removed.iter().map(|r| r.kind).collect();
    assert!(kinds.contains(&crate::cleanup::ArtifactKind::PenMark));
    assert!(kinds.contains(&crate::cleanup::ArtifactKind::Barcode));
}

#[test]
#[ignore]
fn debug_dump() {
    let mut spec = FixtureSpec::new(9, HeaderStyle::Ruled, 4);
    spec.distortion = Distortion::bundle(9, spec.page_width, spec.page_height);
    let (img, truth) = generate(&spec).unwrap();
    let engine = MockEngine::new(truth.clone());
    let d = StageDumper::new(Some(Path::new("/tmp/dump"))).unwrap();
    let out = Pipeline::new(PipelineConfig::default()).unwrap().run_image(&img, "x", &engine, &d).unwrap();
    println!("{}", out.to_json().unwrap());
}
