use std::path::Path;

use pigment_core::bundle::Provenance;
use pigment_core::edit::{copy_paste, PasteMode, PixelMask};
use pigment_core::synthetic::synthetic_scene;
use pigment_core::{DecompositionBundle, PigmentDictionary, RenderContext, SolverConfig, WavelengthGrid};
use pigment_io::{load_bundle, save_bundle, sha256_hex, IoError};

fn fixture() -> DecompositionBundle {
    let dict = PigmentDictionary::bundled();
    let grid = WavelengthGrid::Bands8;
    let scene = synthetic_scene(&dict, &["cadmium_red", "cobalt_blue", "titanium_white"], grid, 12, 9, 5).unwrap();
    let ctx = RenderContext::standard(grid)
        .with_substrate(vec![0.9, 0.91, 0.93, 0.95, 0.97, 0.96, 0.94, 0.9])
        .unwrap()
        .with_thickness(1.25)
        .unwrap();
    DecompositionBundle::new(12, 9, scene.palette, scene.weights, ctx)
        .unwrap()
        .with_provenance(Provenance {
            source_sha256: Some(sha256_hex(b"source")),
            config: Some(SolverConfig::default()),
        })
}

fn with_layer(b: &DecompositionBundle) -> DecompositionBundle {
    let mask = PixelMask::rect(12, 9, 1, 1, 4, 3);
    copy_paste(b, &mask, &[0, 2], (5, 4), PasteMode::Layer { thickness: 0.7 }).unwrap()
}

fn saved(b: &DecompositionBundle) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    save_bundle(b, dir.path()).unwrap();
    dir
}

fn is_corrupt(dir: &Path) -> bool {
    matches!(load_bundle(dir), Err(IoError::CorruptBundle(_)))
}

fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let path = dir.join("manifest.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn round_trip_is_exact() {
    for b in [fixture(), with_layer(&fixture())] {
        let dir = saved(&b);
        let back = load_bundle(dir.path()).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.render(), b.render());
        // Saving again reproduces the files byte for byte.
        let again = saved(&back);
        for name in ["manifest.json", "weights.f32", "palette.f32"] {
            assert_eq!(
                std::fs::read(dir.path().join(name)).unwrap(),
                std::fs::read(again.path().join(name)).unwrap()
            );
        }
    }
}

#[test]
fn payload_sizes_follow_the_shape() {
    let dir = saved(&fixture());
    let len = |n: &str| std::fs::metadata(dir.path().join(n)).unwrap().len();
    assert_eq!(len("weights.f32"), 4 * 108 * 3);
    assert_eq!(len("palette.f32"), 4 * 3 * 2 * 8);
    assert!(!dir.path().join("layers.bin").exists());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"version\": 1"));
}

#[test]
fn overwriting_drops_stale_layers() {
    let dir = saved(&with_layer(&fixture()));
    assert!(dir.path().join("layers.bin").exists());
    save_bundle(&fixture(), dir.path()).unwrap();
    assert!(!dir.path().join("layers.bin").exists());
    assert_eq!(load_bundle(dir.path()).unwrap(), fixture());
}

#[test]
fn truncated_payloads_are_corrupt() {
    for name in ["weights.f32", "palette.f32", "layers.bin"] {
        let dir = saved(&with_layer(&fixture()));
        let path = dir.path().join(name);
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(is_corrupt(dir.path()), "{name}");
    }
    let dir = saved(&fixture());
    std::fs::remove_file(dir.path().join("palette.f32")).unwrap();
    assert!(is_corrupt(dir.path()));
}

#[test]
fn altered_payload_is_corrupt() {
    let dir = saved(&fixture());
    let path = dir.path().join("weights.f32");
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[7] ^= 0x40;
    std::fs::write(&path, bytes).unwrap();
    assert!(is_corrupt(dir.path()));
}

#[test]
fn manifest_disagreements_are_corrupt() {
    let dir = saved(&fixture());
    edit_manifest(dir.path(), |v| v["pigments"] = 4.into());
    assert!(is_corrupt(dir.path()));

    let dir = saved(&fixture());
    edit_manifest(dir.path(), |v| v["version"] = 2.into());
    assert!(is_corrupt(dir.path()));

    let dir = saved(&fixture());
    edit_manifest(dir.path(), |v| v["weights"]["bytes"] = 12.into());
    assert!(is_corrupt(dir.path()));

    let dir = saved(&fixture());
    edit_manifest(dir.path(), |v| v["wavelengths"] = 3.into());
    assert!(is_corrupt(dir.path()));

    let dir = saved(&fixture());
    edit_manifest(dir.path(), |v| v["weights"]["file"] = "../weights.f32".into());
    assert!(is_corrupt(dir.path()));

    let dir = saved(&fixture());
    std::fs::write(dir.path().join("manifest.json"), "{ not json").unwrap();
    assert!(is_corrupt(dir.path()));
}

#[test]
fn missing_manifest_is_a_file_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_bundle(dir.path()), Err(IoError::File { .. })));
}
