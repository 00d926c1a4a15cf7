use std::path::PathBuf;

use epimacro::config::RunConfig;
use epimacro::io::load_config;
use epimacro::ModelParams;

#[test]
fn shipped_default_config_matches_built_in_defaults() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../config/default.json");
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg, RunConfig::documented_default());
    assert_eq!(
        cfg.params_over(ModelParams::default()),
        ModelParams::default()
    );
    let p = cfg.params_over(ModelParams::default());
    assert_eq!(
        (p.log_k1, p.k2, p.log_q1, p.q2),
        (12.561, 0.717, 3.677, 0.238)
    );
    assert_eq!((p.b0, p.r, p.g_daily), (2.041e-11, 0.02099, 3.55e-5));
}
