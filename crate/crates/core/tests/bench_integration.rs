use cpa::aot::Normalization;
use cpa::bench::{
    load_csv, emit_csv, sweep, Backend, Evaluator, Grids, PiSettings, Point, SweepSpec,
};
use cpa::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn evaluator() -> Evaluator {
    Evaluator::new(SystemConfig::default(), Normalization::Eq5, PiSettings::default())
}

fn point(antennas: usize, alpha: f64, beta: f64) -> Point {
    Point {
        antennas,
        coherence: 64,
        code_rate: 1.0,
        pilots: 4,
        alpha,
        beta,
    }
}

#[test]
fn simulation_reproduces_and_or_prediction() {
    let ev = evaluator();
    let p = point(400, 1.1, 1.0);
    let aot = ev.cpa_aot(&p).unwrap();
    let sim = ev.cpa_sim(&p, 200).unwrap();
    let rel = (sim.gamma - aot.gamma).abs() / aot.gamma;
    assert!(rel <= 0.05, "sim {} vs aot {}", sim.gamma, aot.gamma);
}

#[test]
fn backends_agree_on_random_grid_points() {
    let ev = evaluator();
    let grids = Grids::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    let mut worst = (0.0, String::new());
    for _ in 0..10 {
        let m = [50, 100, 200, 400, 1024][rng.random_range(0..5)];
        let alpha = grids.alphas[rng.random_range(0..grids.alphas.len())];
        let beta = grids.betas[rng.random_range(0..grids.betas.len())];
        let p = point(m, alpha, beta);
        let aot = ev.cpa_aot(&p).unwrap();
        let sim = ev.cpa_sim(&p, 100).unwrap();
        let rel = (aot.gamma - sim.gamma).abs() / sim.gamma;
        println!("M={m} alpha={alpha:.2} beta={beta:.2} aot={:.4} sim={:.4} rel={rel:.4}", aot.gamma, sim.gamma);
        if rel > worst.0 {
            worst = (rel, format!("M={m} alpha={alpha} beta={beta}"));
        }
    }
    assert!(worst.0 <= 0.05, "worst disagreement {:.3} at {}", worst.0, worst.1);
}

fn small_spec(backend: Backend) -> SweepSpec {
    SweepSpec {
        alphas: vec![0.8, 1.1],
        betas: vec![0.5, 1.5],
        pilots: vec![4],
        antennas: vec![100],
        rates: vec![1.0],
        backend,
        trials: 6,
        output: None,
    }
}

#[test]
fn serial_and_parallel_sweeps_are_identical() {
    let ev = evaluator();
    let spec = small_spec(Backend::Both);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep(&ev, &spec).unwrap())
    };
    let serial = run(1);
    let parallel = run(4);
    assert_eq!(serial, parallel);
    assert_eq!(serial.len(), 8);
}

#[test]
fn rows_reevaluate_bit_identically_after_csv() {
    let ev = evaluator();
    let report = sweep(&ev, &small_spec(Backend::Both)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    emit_csv(&report, &path).unwrap();
    let loaded = load_csv(&path).unwrap();
    assert_eq!(loaded, report);
    let fresh = evaluator();
    for row in &loaded {
        assert_eq!(&fresh.reevaluate(row).unwrap(), row);
    }
}
