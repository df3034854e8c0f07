//! The `configs/` directory at the repository root must stay loadable and,
//! for the bundled scenarios, byte-compatible with the library fixtures
//! (`configs/siN.toml` is the output of `fdsic scenarios show SIN`).

use fdsic::frontend::Nonlinearity;
use fdsic::harness::{scenario_library, ExperimentConfig};
use std::path::PathBuf;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    let path = config_dir().join(name);
    ExperimentConfig::from_file(&path)
        .unwrap_or_else(|e| panic!("{} failed to load: {e}", path.display()))
}

#[test]
fn scenario_configs_match_library() {
    for (i, expected) in scenario_library().iter().enumerate() {
        let cfg = load(&format!("si{}.toml", i + 1));
        assert_eq!(&cfg, expected, "configs/si{}.toml drifted", i + 1);
        assert_eq!(
            cfg.to_toml_string(),
            expected.to_toml_string(),
            "canonical TOML echo drifted for si{}",
            i + 1
        );
    }
}

#[test]
fn soi_config_is_valid() {
    let cfg = load("si1_soi.toml");
    cfg.validate().unwrap();
    let soi = cfg.scenario.soi.expect("si1_soi.toml must carry an SOI");
    assert_eq!(soi.power_db, -15.0);
    assert_eq!(soi.baud_rate_hz, 1e9);
    assert_eq!(cfg.scenario.antennas.len(), 2);
}

#[test]
fn depth_vs_baud_config_is_valid() {
    let cfg = load("depth_vs_baud.toml");
    cfg.validate().unwrap();
    assert_eq!(cfg.scenario.snr_db, Some(10.0));
    assert_eq!(
        cfg.frontend.nonlinearity,
        Nonlinearity::Sinusoidal {
            modulation_index: 0.6
        }
    );
    let sweep = cfg.sweep.as_ref().expect("sweep section required");
    assert_eq!(sweep.param, "baud_rate_hz");
    assert_eq!(sweep.values, vec![1e8, 2.5e8, 5e8, 1e9, 2e9]);
}
