//! The scene files under `scenes/` must describe exactly what the builders
//! produce. Run with `REGENERATE_SCENES=1` to rewrite them.

use std::path::PathBuf;

use stereoportal::scene::{build_test_scene, four_room_scene, transition_scene};
use stereoportal::{validate_impossible_space, Scene};

fn scenes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn check(name: &str, built: &Scene) {
    let path = scenes_dir().join(name);
    if std::env::var_os("REGENERATE_SCENES").is_some() {
        std::fs::write(&path, built.to_toml()).unwrap();
    }
    let loaded = Scene::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(loaded.to_document(), built.to_document(), "{name} is out of date");
    assert_eq!(loaded.meshes, built.meshes);
    assert_eq!(loaded.portals, built.portals);
    assert_eq!(loaded.rig, built.rig);
}

#[test]
fn test_scene_files_match_builder() {
    for pairs in 0..=3 {
        check(&format!("test_scene_{pairs}.toml"), &build_test_scene(pairs).unwrap());
    }
}

#[test]
fn four_room_file_matches_builder_and_validates() {
    let scene = four_room_scene();
    check("four_rooms.toml", &scene);
    assert!(validate_impossible_space(&scene).is_valid());
}

#[test]
fn transition_file_matches_builder() {
    check("transition.toml", &transition_scene().0);
}
