use std::path::PathBuf;

use fiberqed::config::{parse_config, ConfigFile, UnitPreset};
use fiberqed::langevin::NoiseMode;
use fiberqed::modes::ModeFamily;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn caption_config_resolves() {
    let run = parse_config(config("caption.toml")).unwrap();
    assert_eq!(run.preset, UnitPreset::Natural);
    assert_eq!(run.drive.profile.label, "IG_o_5_5");
    assert_eq!(run.drive.profile.family, ModeFamily::Ince);
    assert_eq!(run.drive.profile.waist, 10.0);
    assert_eq!(run.integrator.noise_mode, NoiseMode::PaperCompat);
    assert_eq!(run.integrator.steps(), 30_000);
    assert_eq!(run.atom.mass, 2.27369);
    assert_eq!(run.fiber.bulk_gamma_f, Some(37.6991));
    assert_eq!(run.sweep.as_ref().unwrap().values.len(), 6);
    assert_eq!(run.sweep_integrator().core_exit_radius, 18.0);
    assert!(run.warnings.is_empty());
}

#[test]
fn canonical_json_round_trip_is_lossless() {
    for name in ["caption.toml", "threshold.toml"] {
        let text = std::fs::read_to_string(config(name)).unwrap();
        let file = ConfigFile::from_toml(&text).unwrap();
        let json = file.canonical_json().unwrap();
        let back = ConfigFile::from_json(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.canonical_json().unwrap(), json);
    }
}

#[test]
fn threshold_config_builds_a_branch() {
    let run = parse_config(config("threshold.toml")).unwrap();
    assert_eq!(run.units.c, 1.0);
    assert_eq!(run.atom.omega_a, 1.0);
    assert_eq!(run.fiber.branches.len(), 1);
    let model = fiberqed::cli::force_model(&run).unwrap();
    assert_eq!(model.spectral.threshold_branches().count(), 1);
}

#[test]
fn unreadable_file_is_an_io_error() {
    let err = parse_config("/nonexistent/run.toml").unwrap_err();
    assert_eq!(err.kind(), "io");
}
