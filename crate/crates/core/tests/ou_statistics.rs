use asg_core::limit_verify::empirical_autocov_se;
use asg_core::ou::{ou_autocov, simulate_ou_grid, OUParams};
use asg_core::RngStream;

#[test]
fn autocovariance_matches_closed_form() {
    let p = OUParams::stationary(1.0, 2.0).unwrap();
    let lags = [0.5, 1.0, 2.0];
    let paths: Vec<_> = (0..20_000u64)
        .map(|r| simulate_ou_grid(&p, 0.5, 3.0, &mut RngStream::new(51, r).rng()).unwrap())
        .collect();
    for e in empirical_autocov_se(&paths, &lags, 1.0).unwrap() {
        let exact = ou_autocov(&p, e.lag).unwrap();
        assert!(
            (e.value - exact).abs() < 3.0 * e.se,
            "lag {}: {} vs {exact}",
            e.lag,
            e.value
        );
    }
}
