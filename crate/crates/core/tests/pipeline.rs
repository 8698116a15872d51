use mci::config::{parse, ScenarioConfig};
use mci::forward::{apply_forward, KernelParams};
use mci::io::{read_fieldmap, FieldFile};
use mci::scenario::two_trace;
use mci::sweep::run_sweep;

fn small_config() -> ScenarioConfig {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/two_trace.cfg"))
        .unwrap()
        .replace("n = 128", "n = 32")
        .replace("dx = 2e-6", "dx = 8e-6")
        .lines()
        .map(|l| match l.split('=').next().map(str::trim) {
            Some("standoffs") => "standoffs = 5e-6, 10e-6".to_string(),
            Some("noise_sigmas") => "noise_sigmas = 1e-6".to_string(),
            Some("seeds") => "seeds = 1, 2".to_string(),
            Some("max_outer_iters") => "max_outer_iters = 300".to_string(),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n");
    parse(&text).unwrap()
}

#[test]
fn sweep_output_does_not_depend_on_worker_count() {
    let cfg = small_config();
    assert_eq!(cfg.scenario.grid.n(), 32);
    let serial = run_sweep(&cfg, 1).unwrap();
    let parallel = run_sweep(&cfg, 2).unwrap();
    assert_eq!(serial.rows.len(), 2 * 2 * 2);
    assert_eq!(serial.to_csv(false), parallel.to_csv(false));
    assert_eq!(serial.to_csv(false), run_sweep(&cfg, 1).unwrap().to_csv(false));
}

#[test]
fn bundled_sample_matches_the_simulation() {
    let FieldFile::B(b) = read_fieldmap(concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_trace_b_z5um.fmap")).unwrap() else {
        panic!("sample is not a field map");
    };
    assert_eq!(b.grid.n(), 128);
    assert!((b.z - 5e-6).abs() < 1e-18);
    let sc = two_trace(128).unwrap();
    let truth = sc.simulate().unwrap().current;
    let want = apply_forward(&truth, &KernelParams::new(b.z, b.d).unwrap());
    let scale = want.norm_sq().sqrt();
    assert!(b.dist_sq(&want).sqrt() <= 1e-10 * scale);
}

#[test]
fn bundled_configs_parse() {
    for name in ["two_trace", "l_bend", "qdm_pcb"] {
        let cfg = ScenarioConfig::load(format!("{}/configs/{name}.cfg", env!("CARGO_MANIFEST_DIR"))).unwrap();
        cfg.validate().unwrap();
    }
    assert!(parse("[grid]\nn = 48\n").is_err());
}
