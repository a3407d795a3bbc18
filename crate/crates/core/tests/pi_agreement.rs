use cpa::pi::{pi_frame, pi_micro_table, MicroModel, PiEstimate};
use cpa::sic::SimOptions;
use cpa::SystemConfig;

#[test]
fn micro_and_frame_estimates_agree_for_low_degrees() {
    let (alpha, beta) = (1.1, 1.0);
    let cfg = SystemConfig::default().with_scheme(alpha, beta, 4);
    let micro = pi_micro_table(&cfg, 4, 10_000, MicroModel::random_access(beta, 4)).unwrap();
    let frame = pi_frame(&cfg, &SimOptions::default(), 400).unwrap();
    for j in 1..=4 {
        let m = micro.get(j).unwrap();
        let f = frame.get(j).unwrap();
        let se = (m.stderr.powi(2) + f.stderr.powi(2)).sqrt();
        assert!(
            (m.estimate - f.estimate).abs() <= 3.0 * se,
            "j={j}: micro {:.4}±{:.4}, frame {:.4}±{:.4} (n={})",
            m.estimate,
            m.stderr,
            f.estimate,
            f.stderr,
            f.trials
        );
    }
}

#[test]
fn estimates_survive_csv() {
    let cfg = SystemConfig::default().with_scheme(1.1, 1.0, 4);
    let est = pi_micro_table(&cfg, 3, 500, MicroModel::random_access(1.0, 4)).unwrap();
    let mut buf = Vec::new();
    est.write_csv(&mut buf).unwrap();
    let back = PiEstimate::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, est);
    let table = back.to_table().unwrap();
    assert!(table.get(1) >= table.get(3));
}
